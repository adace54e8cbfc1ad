"""Samplers for the Ising model ``P(x) ~ exp(x'Qx / 2 + mu'x)``.

Every sampler takes a ``numpy.random.Generator`` and an optional ``size``.
With ``size=None`` a single :class:`SpinConfiguration` is returned; otherwise
an ``int8`` array of shape ``(size, n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp
from scipy import optimize

from .model import CouplingMatrix, SignalVector, SpinConfiguration
from .theory import aux_potential

MAX_ENUMERATION_N = 20
AUX_GRID_POINTS = 4096
AUX_TAIL_GAP = 40.0

SAMPLERS = ("auto", "exact", "curie_weiss", "cycle", "glauber", "independent")


def _field(mu, n: int) -> np.ndarray:
    if mu is None:
        return np.zeros(n)
    vals = mu.values if isinstance(mu, SignalVector) else np.asarray(mu, dtype=float)
    if vals.shape != (n,):
        raise ValueError(f"signal of length {vals.shape} does not match n={n}")
    return vals


def _wrap(x: np.ndarray, size):
    return SpinConfiguration(x[0]) if size is None else x


def _spins_from_probs(p_plus: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(p_plus.shape)
    return np.where(u < p_plus, 1, -1).astype(np.int8)


# -- exact enumeration --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExactModel:
    """All ``2**n`` configurations of a small model.

    Configuration ``c`` has spin ``i`` equal to +1 iff bit ``i`` of ``c`` is set.
    ``magnetization_pmf`` maps total spin ``2k - n`` to its probability.
    """

    n: int
    log_partition: float
    magnetization_pmf: dict
    mean_total_spin: float
    var_total_spin: float
    log_probs: np.ndarray

    def pmf_vector(self) -> np.ndarray:
        """Probabilities of ``k = 0..n`` plus spins."""
        return np.array([self.magnetization_pmf[2 * k - self.n] for k in range(self.n + 1)])

    def expectation(self, fn) -> float:
        """``E fn(X)`` for a function of a ``(configs, n)`` spin batch."""
        total = 0.0
        for start, x in _config_blocks(self.n):
            p = np.exp(self.log_probs[start : start + len(x)])
            total += float(np.dot(p, fn(x)))
        return total


def _config_blocks(n: int, block: int = 1 << 16):
    bits = np.arange(n)
    for start in range(0, 1 << n, block):
        codes = np.arange(start, min(start + block, 1 << n))
        x = np.where((codes[:, None] >> bits) & 1, 1, -1).astype(np.int8)
        yield start, x


def enumerate_model(Q: CouplingMatrix, mu=None) -> ExactModel:
    """Exact law of a model with ``n <= 20`` by summing over all configurations."""
    n = Q.n
    if n > MAX_ENUMERATION_N:
        raise ValueError(f"enumeration covers n <= {MAX_ENUMERATION_N}; got n={n} (2**n configurations)")
    h = _field(mu, n)
    logw = np.empty(1 << n)
    totals = np.empty(1 << n, dtype=np.int64)
    for start, x in _config_blocks(n):
        xf = x.astype(float)
        logw[start : start + len(x)] = 0.5 * np.einsum("ci,ij,cj->c", xf, Q.entries, xf) + xf @ h
        totals[start : start + len(x)] = x.sum(axis=1)
    log_z = float(logsumexp(logw))
    log_probs = logw - log_z
    probs = np.exp(log_probs)
    k = (totals + n) // 2
    pmf_k = np.bincount(k, weights=probs, minlength=n + 1)
    values = 2 * np.arange(n + 1) - n
    mean = float(np.dot(values, pmf_k))
    var = float(np.dot(values**2, pmf_k) - mean**2)
    return ExactModel(
        n=n,
        log_partition=log_z,
        magnetization_pmf={int(v): float(p) for v, p in zip(values, pmf_k)},
        mean_total_spin=mean,
        var_total_spin=var,
        log_probs=log_probs,
    )


def sample_from_exact(model: ExactModel, rng: np.random.Generator, size: Optional[int] = None):
    """Inverse-cdf draw from the enumerated table."""
    cdf = np.cumsum(np.exp(model.log_probs))
    u = rng.random(1 if size is None else size) * cdf[-1]
    codes = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
    x = np.where((codes[:, None] >> np.arange(model.n)) & 1, 1, -1).astype(np.int8)
    return _wrap(x, size)


# -- Curie-Weiss via the auxiliary Gaussian variable ---------------------------


@dataclass(frozen=True, eq=False)
class AuxGrid:
    """Tabulated inverse cdf of the auxiliary variable with density ``exp(-potential)``."""

    z_lo: float
    z_hi: float
    z_values: np.ndarray
    potential: np.ndarray
    cdf: np.ndarray
    f_min: float = 0.0

    def sample(self, rng: np.random.Generator, size=None):
        u = rng.random(size)
        return np.interp(u, self.cdf, self.z_values)


def _tail_edge(pot, inside: float, direction: float, target: float) -> float:
    """First point past ``inside`` (outward) where the potential reaches ``target``."""
    step = 1e-3
    while pot(inside + direction * step) < target:
        step *= 2.0
    lo, hi = 0.0, step
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if pot(inside + direction * mid) < target:
            lo = mid
        else:
            hi = mid
    return inside + direction * hi


def build_aux_grid(n: int, theta: float, mu=None, points: int = AUX_GRID_POINTS) -> AuxGrid:
    """Grid for the auxiliary variable of the Curie-Weiss model.

    All minima of the potential lie in ``[-1, 1]``. Each endpoint is the
    nearest point outside the sublevel set ``{potential < min + 40}``, so the
    mass cut off on either side is below ``exp(-40)`` relative to the mode.
    """
    if theta <= 0:
        raise ValueError("the auxiliary variable needs theta > 0")
    h = _field(mu, n)

    def pot(z):
        return aux_potential(z, n, theta, h)

    coarse = np.linspace(-1.0, 1.0, 4001)
    fc = pot(coarse)
    i = int(np.argmin(fc))
    lo_b, hi_b = coarse[max(i - 1, 0)], coarse[min(i + 1, coarse.size - 1)]
    polished = optimize.minimize_scalar(lambda v: float(pot(v)), bounds=(lo_b, hi_b), method="bounded", options={"xatol": 1e-12})
    f_min = min(float(fc[i]), float(polished.fun))
    target = f_min + AUX_TAIL_GAP
    low = coarse[fc < target]
    z_lo = _tail_edge(pot, float(low.min()), -1.0, target)
    z_hi = _tail_edge(pot, float(low.max()), 1.0, target)
    z = np.linspace(z_lo, z_hi, points)
    f = pot(z)
    shifted = f - f.min()
    w = np.exp(-shifted)
    increments = 0.5 * (w[1:] + w[:-1]) * np.diff(z)
    cdf = np.concatenate([[0.0], np.cumsum(increments)])
    cdf /= cdf[-1]
    return AuxGrid(z_lo=float(z_lo), z_hi=float(z_hi), z_values=z, potential=f, cdf=cdf, f_min=f_min)


def sample_aux_z(
    n: int,
    theta: float,
    mu,
    rng: np.random.Generator,
    size: Optional[int] = None,
    grid: Optional[AuxGrid] = None,
):
    """Draw the auxiliary variable whose density is ``exp(-aux_potential)``."""
    if theta <= 0:
        raise ValueError("the auxiliary variable needs theta > 0")
    if grid is None:
        grid = build_aux_grid(n, theta, mu)
    z = grid.sample(rng, size)
    return float(z) if size is None else z


def sample_curie_weiss(
    n: int,
    theta: float,
    mu,
    rng: np.random.Generator,
    size: Optional[int] = None,
    grid: Optional[AuxGrid] = None,
    return_z: bool = False,
):
    """Exact Curie-Weiss draw: auxiliary ``z`` first, then independent spins.

    ``theta == 0`` gives independent tilted spins. Negative ``theta`` has no
    auxiliary representation; use :func:`sample_glauber` instead.
    """
    if theta < 0:
        raise ValueError("Curie-Weiss auxiliary sampling needs theta >= 0; use sample_glauber for theta < 0")
    h = _field(mu, n)
    m = 1 if size is None else size
    if theta == 0:
        z = np.zeros(m)
    else:
        if grid is None:
            grid = build_aux_grid(n, theta, h)
        z = grid.sample(rng, m)
    p_plus = 0.5 * (1.0 + np.tanh(h[None, :] + theta * z[:, None]))
    x = _spins_from_probs(p_plus, rng)
    out = _wrap(x, size)
    if return_z:
        return out, (float(z[0]) if size is None else z)
    return out


def sample_independent(n: int, mu, rng: np.random.Generator, size: Optional[int] = None):
    h = _field(mu, n)
    x = _spins_from_probs(np.broadcast_to(0.5 * (1 + np.tanh(h)), (1 if size is None else size, n)), rng)
    return _wrap(x, size)


# -- ring ---------------------------------------------------------------------


def _cycle_messages(n: int, J: float, h: np.ndarray):
    """Forward log messages of the open chain ``1..n-1`` for each value of spin 0.

    ``alpha[a, i, y]`` is the log weight of the chain ``x_1..x_i`` ending in
    ``x_i = s[y]`` given ``x_0 = s[a]``, with ``s = (-1, +1)``.
    """
    s = np.array([-1.0, 1.0])
    alpha = np.empty((2, n, 2))
    alpha[:, 0, :] = np.nan
    # x_1 couples to x_0
    alpha[:, 1, :] = J * s[:, None] * s[None, :] + h[1] * s[None, :]
    pair = J * s[:, None] * s[None, :]  # [x_i, x_{i+1}]
    for i in range(1, n - 1):
        prev = alpha[:, i, :]  # (a, x_i)
        alpha[:, i + 1, :] = logsumexp(prev[:, :, None] + pair[None, :, :], axis=1) + h[i + 1] * s[None, :]
    return alpha


@dataclass(frozen=True, eq=False)
class CycleTables:
    coupling: float
    alpha: np.ndarray
    p_first_plus: float


def cycle_tables(n: int, theta: float, mu) -> CycleTables:
    """Messages for :func:`sample_cycle`; reusable across draws with the same field."""
    if n < 3:
        raise ValueError("ring sampler needs n >= 3")
    h = _field(mu, n)
    J = 0.5 * theta
    s = np.array([-1.0, 1.0])
    alpha = _cycle_messages(n, J, h)
    # closing edge (n-1, 0)
    close = J * s[:, None] * s[None, :]  # [a, x_{n-1}]
    log_first = h[0] * s + logsumexp(alpha[:, n - 1, :] + close, axis=1)
    p0 = math.exp(log_first[1] - np.logaddexp(log_first[0], log_first[1]))
    return CycleTables(coupling=J, alpha=alpha, p_first_plus=p0)


def sample_cycle(
    n: int,
    theta: float,
    mu,
    rng: np.random.Generator,
    size: Optional[int] = None,
    tables: Optional[CycleTables] = None,
):
    """Exact draw on the ring with ``Q_ij = theta / 2`` between neighbours.

    Conditions on spin 0 through the two pinned-chain partition functions,
    then samples spins ``n-1, ..., 1`` backward through log-domain transfer
    messages. The per-edge interaction in ``exp(x'Qx / 2)`` is ``theta / 2``.
    """
    if n < 3:
        raise ValueError("ring sampler needs n >= 3")
    if tables is None:
        tables = cycle_tables(n, theta, mu)
    J, alpha = tables.coupling, tables.alpha
    s = np.array([-1.0, 1.0])
    m = 1 if size is None else size
    a = (rng.random(m) < tables.p_first_plus).astype(np.intp)
    x = np.empty((m, n), dtype=np.int8)
    x[:, 0] = 2 * a - 1
    nxt = a  # the already-sampled neighbour; spin 0 closes the ring for site n-1
    for i in range(n - 1, 0, -1):
        logits = alpha[a, i, :] + J * s[None, :] * s[nxt][:, None]
        p_plus = 1.0 / (1.0 + np.exp(logits[:, 0] - logits[:, 1]))
        b = (rng.random(m) < p_plus).astype(np.intp)
        x[:, i] = 2 * b - 1
        nxt = b
    return _wrap(x, size)


# -- Glauber dynamics ----------------------------------------------------------


def _heat_bath(threshold: np.ndarray, field: np.ndarray) -> np.ndarray:
    # arithmetic on the boolean is several times faster than np.where here
    return (threshold < field) * 2.0 - 1.0


def default_burn_in(n: int) -> int:
    return max(200, 20 * math.ceil(math.log2(n)))


@dataclass(frozen=True)
class GlauberConfig:
    burn_in_sweeps: int = 200
    scan: str = "systematic"
    seed: Optional[int] = None

    def __post_init__(self):
        if self.burn_in_sweeps < 1:
            raise ValueError("burn_in_sweeps must be at least 1")
        if self.scan not in ("systematic", "random"):
            raise ValueError("scan must be 'systematic' or 'random'")

    @classmethod
    def for_size(cls, n: int, **kw) -> "GlauberConfig":
        return cls(burn_in_sweeps=default_burn_in(n), **kw)


def _uniforms(rng, n: int, m: int) -> np.ndarray:
    """``(n, m)`` uniforms; column ``c`` comes from ``rng[c]`` when given one stream per chain."""
    if isinstance(rng, np.random.Generator):
        return rng.random((n, m))
    return np.stack([r.random(n) for r in rng], axis=1)


def _sites(rng, n: int, m: int) -> np.ndarray:
    if isinstance(rng, np.random.Generator):
        return rng.integers(0, n, size=(n, m))
    return np.stack([r.integers(0, n, size=n) for r in rng], axis=1)


def sample_glauber(
    Q: CouplingMatrix,
    mu,
    cfg: Optional[GlauberConfig] = None,
    rng=None,
    size: Optional[int] = None,
):
    """Heat-bath Glauber chains started from uniform spins.

    Runs ``cfg.burn_in_sweeps`` sweeps of ``n`` single-site updates with
    ``P(X_i = +1 | rest) = (1 + tanh(m_i(x) + mu_i)) / 2`` and returns the
    final states. Approximate: the output law is the chain's law after the
    burn-in, not the stationary law.

    Parameters
    ----------
    Q : CouplingMatrix
        couplings; Curie-Weiss uses the running spin total for local fields
    mu : SignalVector, array or None
        field shared by all chains, or a ``(chains, n)`` array of per-chain fields
    cfg : GlauberConfig, optional
        defaults to ``GlauberConfig.for_size(n)``
    rng : Generator or sequence of Generators
        a list runs one chain per generator, so each chain's path depends only
        on its own stream
    size : int, optional
        number of chains when ``rng`` is a single generator
    """
    n = Q.n
    if cfg is None:
        cfg = GlauberConfig.for_size(n)
    if rng is None:
        if cfg.seed is None:
            raise ValueError("pass an rng or set GlauberConfig.seed")
        rng = np.random.default_rng(cfg.seed)
    if isinstance(rng, np.random.Generator):
        m = 1 if size is None else size
    else:
        rng = list(rng)
        m = len(rng)
        if size is not None and size != m:
            raise ValueError("size must match the number of generators")
        size = m
    if mu is not None and np.ndim(getattr(mu, "values", mu)) == 2:
        h = np.asarray(mu, dtype=float).T
        if h.shape != (n, m):
            raise ValueError("per-chain fields must have shape (chains, n)")
    else:
        h = _field(mu, n)[:, None]
    # site-major layout: row i holds spin i of every chain
    x = np.where(_uniforms(rng, n, m) < 0.5, 1.0, -1.0)
    cols = np.arange(m)
    systematic = cfg.scan == "systematic"
    if Q.kind == "curie_weiss":
        c = Q.theta / n
        total = x.sum(axis=0)
        for _ in range(cfg.burn_in_sweeps):
            # u < (1 + tanh(a)) / 2  <=>  atanh(2u - 1) < a
            g = np.arctanh(2.0 * _uniforms(rng, n, m) - 1.0)
            order = None if systematic else _sites(rng, n, m)
            for step in range(n):
                if systematic:
                    i = step
                    old = x[i].copy()
                    x[i] = _heat_bath(g[step], c * (total - old) + h[i])
                    total += x[i] - old
                else:
                    i = order[step]
                    old = x[i, cols]
                    new = _heat_bath(g[step], c * (total - old) + h[i, cols if h.shape[1] > 1 else 0])
                    x[i, cols] = new
                    total += new - old
    else:
        q = Q.entries
        fields = q @ x
        rows = np.arange(n)[:, None]
        neighbours = [np.nonzero(q[i])[0] for i in range(n)]
        for _ in range(cfg.burn_in_sweeps):
            g = np.arctanh(2.0 * _uniforms(rng, n, m) - 1.0)
            order = None if systematic else _sites(rng, n, m)
            for step in range(n):
                if systematic:
                    i = step
                    old = x[i].copy()
                    x[i] = _heat_bath(g[step], fields[i] + h[i])
                    nb = neighbours[i]
                    if nb.size:
                        fields[nb] += q[nb, i][:, None] * (x[i] - old)[None, :]
                else:
                    i = order[step]
                    old = x[i, cols]
                    new = _heat_bath(g[step], fields[i, cols] + h[i, cols if h.shape[1] > 1 else 0])
                    x[i, cols] = new
                    fields += q[rows, i[None, :]] * (new - old)[None, :]
    return _wrap(np.ascontiguousarray(x.T).astype(np.int8), size)


# -- dispatch -------------------------------------------------------------------


def designated_sampler(Q: CouplingMatrix) -> str:
    """Backend used when ``sampler='auto'``."""
    if Q.kind == "curie_weiss" and Q.theta >= 0:
        return "curie_weiss"
    if Q.kind == "cycle" and Q.n >= 3:
        return "cycle"
    if not np.any(Q.entries):
        return "independent"
    return "glauber"


def draw(
    Q: CouplingMatrix,
    mu,
    rng: np.random.Generator,
    size: Optional[int] = None,
    sampler: str = "auto",
    glauber: Optional[GlauberConfig] = None,
    exact: Optional[ExactModel] = None,
    grid: Optional[AuxGrid] = None,
):
    """Draw from ``P_{Q, mu}`` with the named backend."""
    if sampler == "auto":
        sampler = designated_sampler(Q)
    if sampler == "curie_weiss":
        if Q.kind != "curie_weiss":
            raise ValueError("curie_weiss sampler needs a Curie-Weiss coupling")
        return sample_curie_weiss(Q.n, Q.theta, mu, rng, size=size, grid=grid)
    if sampler == "cycle":
        if Q.kind != "cycle":
            raise ValueError("cycle sampler needs a ring coupling")
        return sample_cycle(Q.n, Q.theta, mu, rng, size=size)
    if sampler == "glauber":
        return sample_glauber(Q, mu, glauber, rng, size=size)
    if sampler == "exact":
        if exact is None:
            exact = enumerate_model(Q, mu)
        return sample_from_exact(exact, rng, size=size)
    if sampler == "independent":
        if np.any(Q.entries):
            raise ValueError("independent sampler needs a zero coupling")
        return sample_independent(Q.n, mu, rng, size=size)
    raise ValueError(f"unknown sampler {sampler!r}; expected one of {SAMPLERS}")
