"""Monte Carlo calibration, test decisions and power/risk estimation.

Replicate ``j`` of a run keyed by ``key`` draws from its own generator,
``SeedSequence(seed, spawn_key=key + (j,))``, so results depend only on the
seed and the key, never on scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import samplers
from .model import CouplingMatrix, SignalVector, make_signal
from .samplers import GlauberConfig
from .statistics import StatisticKind, evaluate_statistic

# leading spawn-key tags keep the streams of different stages disjoint
CALIBRATION_STREAM = 0
POWER_STREAM = 1
TYPE_ONE_STREAM = 2


def replicate_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """A coupling together with the sampler used to draw from it.

    ``placement`` governs where alternative signals go; by default signals
    sit on the first ``s`` sites for Curie-Weiss (exchangeable, so placement
    does not matter) and on a fresh uniformly random support per replicate
    otherwise.
    """

    Q: CouplingMatrix
    sampler: str = "auto"
    glauber: Optional[GlauberConfig] = None
    placement: Optional[str] = None

    def __post_init__(self):
        if self.sampler not in samplers.SAMPLERS:
            raise ValueError(f"unknown sampler {self.sampler!r}")

    @property
    def backend(self) -> str:
        return samplers.designated_sampler(self.Q) if self.sampler == "auto" else self.sampler

    @property
    def signal_placement(self) -> str:
        if self.placement is not None:
            return self.placement
        return "prefix" if self.Q.kind == "curie_weiss" else "uniform_random"


@dataclass(frozen=True, eq=False)
class CriticalValue:
    stat_kind: str
    alpha: float
    m_null: int
    value: float
    seed: int
    null_sample: np.ndarray = field(default=None, repr=False)


@dataclass(frozen=True)
class PowerEstimate:
    rejections: int
    replicates: int

    @property
    def p_hat(self) -> float:
        return self.rejections / self.replicates

    @property
    def ci_halfwidth(self) -> float:
        p = self.p_hat
        return 1.96 * math.sqrt(p * (1 - p) / self.replicates)

    @property
    def standard_error(self) -> float:
        p = self.p_hat
        return math.sqrt(p * (1 - p) / self.replicates)


@dataclass(frozen=True)
class RiskEstimate:
    type_one: float
    type_two: float

    @property
    def risk(self) -> float:
        return self.type_one + self.type_two


def order_statistic_index(alpha: float, m: int) -> int:
    """1-based rank ``ceil((1 - alpha) m)`` of the critical order statistic."""
    # round first so that e.g. 0.95 * 500 is not pushed to 476 by representation error
    return max(1, math.ceil(round((1.0 - alpha) * m, 9)))


def draw_replicates(
    model: ModelSpec,
    s: int,
    B: float,
    count: int,
    seed: int,
    key: Sequence[int],
) -> np.ndarray:
    """``(count, n)`` spins; replicate ``j`` uses only ``replicate_rng(seed, *key, j)``."""
    Q = model.Q
    n = Q.n
    rngs = [replicate_rng(seed, *key, j) for j in range(count)]
    null = s == 0 or B == 0
    placement = model.signal_placement
    if null:
        signals = [None] * count
    elif placement == "prefix":
        shared = make_signal(n, s, B, "prefix")
        signals = [shared] * count
    else:
        signals = [make_signal(n, s, B, placement, rng=r) for r in rngs]

    backend = model.backend
    if backend == "glauber":
        fields = None
        if not null:
            fields = np.stack([sig.values for sig in signals])
        return samplers.sample_glauber(Q, fields, model.glauber, rngs, size=count)

    cache: dict = {}
    out = np.empty((count, n), dtype=np.int8)
    for j, (r, sig) in enumerate(zip(rngs, signals)):
        support = () if sig is None else sig.support
        if backend == "curie_weiss":
            if Q.theta == 0:
                x = samplers.sample_curie_weiss(n, 0.0, sig, r, size=1)
            else:
                if support not in cache:
                    cache[support] = samplers.build_aux_grid(n, Q.theta, sig)
                x = samplers.sample_curie_weiss(n, Q.theta, sig, r, size=1, grid=cache[support])
        elif backend == "cycle":
            if support not in cache:
                cache[support] = samplers.cycle_tables(n, Q.theta, sig)
            x = samplers.sample_cycle(n, Q.theta, sig, r, size=1, tables=cache[support])
        elif backend == "exact":
            if support not in cache:
                cache[support] = samplers.enumerate_model(Q, sig)
            x = samplers.sample_from_exact(cache[support], r, size=1)
        elif backend == "independent":
            x = samplers.sample_independent(n, sig, r, size=1)
        else:
            raise ValueError(f"unknown sampler {backend!r}")
        out[j] = x[0]
    return out


def null_statistics(model: ModelSpec, kind: StatisticKind, count: int, seed: int, key: Sequence[int]) -> np.ndarray:
    x = draw_replicates(model, 0, 0.0, count, seed, key)
    return np.atleast_1d(evaluate_statistic(kind, x))


def calibrate(
    model: ModelSpec,
    kind: StatisticKind,
    alpha: float,
    m_null: int,
    seed: int,
    key: Sequence[int] = (CALIBRATION_STREAM,),
) -> CriticalValue:
    """Monte Carlo critical value: the ``ceil((1 - alpha) m_null)``-th smallest null statistic."""
    if not 0 < alpha <= 0.5:
        raise ValueError("alpha must lie in (0, 0.5]")
    if m_null < 100:
        raise ValueError("need at least 100 null replicates")
    stats = np.sort(null_statistics(model, kind, m_null, seed, key))
    value = float(stats[order_statistic_index(alpha, m_null) - 1])
    return CriticalValue(stat_kind=kind.tag, alpha=alpha, m_null=m_null, value=value, seed=seed, null_sample=stats)


def run_test(x, kind: StatisticKind, crit: CriticalValue) -> bool:
    """True when the test rejects, i.e. the statistic is at least the critical value."""
    if kind.tag != crit.stat_kind:
        raise ValueError(f"statistic {kind.tag!r} does not match critical value for {crit.stat_kind!r}")
    return bool(evaluate_statistic(kind, x) >= crit.value)


def estimate_power(
    model: ModelSpec,
    s: int,
    B: float,
    kind: StatisticKind,
    crit: CriticalValue,
    replicates: int,
    seed: int,
    key: Sequence[int] = (POWER_STREAM,),
) -> PowerEstimate:
    """Rejection frequency over fresh draws with ``B`` on ``s`` sites."""
    if replicates < 1:
        raise ValueError("need at least one replicate")
    if kind.tag != crit.stat_kind:
        raise ValueError(f"statistic {kind.tag!r} does not match critical value for {crit.stat_kind!r}")
    x = draw_replicates(model, s, B, replicates, seed, key)
    stats = np.atleast_1d(evaluate_statistic(kind, x))
    return PowerEstimate(rejections=int(np.count_nonzero(stats >= crit.value)), replicates=replicates)


def estimate_risk(
    model: ModelSpec,
    s: int,
    B: float,
    kind: StatisticKind,
    alpha: float,
    m_null: int,
    replicates: int,
    seed: int,
) -> RiskEstimate:
    """Type I error on fresh null draws plus miss rate at the ``B``-on-``s``-sites alternative.

    The miss rate is taken at one signal pattern rather than the worst case
    over all supports; the two agree for exchangeable models.
    """
    crit = calibrate(model, kind, alpha, m_null, seed)
    type_one = estimate_power(model, 0, 0.0, kind, crit, replicates, seed, key=(TYPE_ONE_STREAM,))
    power = estimate_power(model, s, B, kind, crit, replicates, seed)
    return RiskEstimate(type_one=type_one.p_hat, type_two=1.0 - power.p_hat)
