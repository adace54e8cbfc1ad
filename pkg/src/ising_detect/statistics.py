"""Test statistics evaluated on spin configurations.

All functions accept one configuration or a ``(draws, n)`` batch and return a
float or an array accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import CouplingMatrix, SignalVector, as_spins

VARIANTS = ("sqrt_n_mean", "quarter_root_mean", "cond_centered")


@dataclass(frozen=True, eq=False)
class StatisticKind:
    """Which statistic to compute; ``cond_centered`` carries its coupling."""

    variant: str
    Q: Optional[CouplingMatrix] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown statistic {self.variant!r}; expected one of {VARIANTS}")
        if self.variant == "cond_centered" and self.Q is None:
            raise ValueError("cond_centered needs a coupling matrix")

    @property
    def tag(self) -> str:
        return self.variant


def _batch(x):
    x = np.asarray(as_spins(x), dtype=float)
    if x.shape[-1] == 0:
        raise ValueError("empty configuration")
    return x


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def total_magnetization(x):
    return _out(_batch(x).mean(axis=-1))


def _null_fields(Q: CouplingMatrix, x: np.ndarray) -> np.ndarray:
    if x.shape[-1] != Q.n:
        raise ValueError(f"configuration length {x.shape[-1]} does not match n={Q.n}")
    if Q.kind == "curie_weiss":
        # leave-one-out field theta / n * sum_{j != i} x_j
        return (Q.theta / Q.n) * (x.sum(axis=-1, keepdims=True) - x)
    return x @ Q.entries


def evaluate_statistic(kind: StatisticKind, x):
    """Scaled statistic used by the tests.

    ``sqrt_n_mean`` is ``sqrt(n) * mean``, ``quarter_root_mean`` is
    ``n**(1/4) * mean`` and ``cond_centered`` is
    ``sqrt(n) * mean(x_i - tanh(m_i(x)))`` with the null local fields.
    """
    x = _batch(x)
    n = x.shape[-1]
    if kind.variant == "sqrt_n_mean":
        return _out(np.sqrt(n) * x.mean(axis=-1))
    if kind.variant == "quarter_root_mean":
        return _out(n**0.25 * x.mean(axis=-1))
    centered = x - np.tanh(_null_fields(kind.Q, x))
    return _out(np.sqrt(n) * centered.mean(axis=-1))


def f_statistic(x, Q: CouplingMatrix, mu=None):
    """Mean of ``x_i - tanh(m_i(x) + mu_i)``: spins minus their conditional means."""
    x = _batch(x)
    if mu is None:
        h = 0.0
    else:
        h = mu.values if isinstance(mu, SignalVector) else np.asarray(mu, dtype=float)
        if np.shape(h) != (x.shape[-1],):
            raise ValueError("signal length does not match configuration")
    return _out((x - np.tanh(_null_fields(Q, x) + h)).mean(axis=-1))
