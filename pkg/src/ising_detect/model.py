"""Coupling matrices, sparse signals and spin configurations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

KINDS = ("curie_weiss", "cycle", "regular_circulant", "erdos_renyi", "custom")
PLACEMENTS = ("prefix", "uniform_random")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Symmetric hollow interaction matrix of an Ising model.

    Attributes
    ----------
    n : int
        number of vertices
    entries : np.ndarray
        read-only ``(n, n)`` float array with zero diagonal
    kind : str
        one of ``KINDS``
    theta : float
        overall coupling strength used by the constructor
    gen_seed : int, optional
        seed of the random graph (Erdos-Renyi only)
    degree : int, optional
        vertex degree (regular circulant only)
    p : float, optional
        edge probability (Erdos-Renyi only)
    """

    n: int
    entries: np.ndarray = field(repr=False)
    kind: str = "custom"
    theta: float = 0.0
    gen_seed: Optional[int] = None
    degree: Optional[int] = None
    p: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown coupling kind {self.kind!r}; expected one of {KINDS}")
        q = np.asarray(self.entries, dtype=float)
        if q.shape != (self.n, self.n):
            raise ValueError(f"entries must have shape ({self.n}, {self.n}), got {q.shape}")
        if not np.all(np.isfinite(q)):
            raise ValueError("entries must be finite")
        if not np.array_equal(q, q.T):
            raise ValueError("coupling matrix must be symmetric")
        if np.any(np.diag(q) != 0):
            raise ValueError("coupling matrix must be hollow (zero diagonal)")
        object.__setattr__(self, "entries", _frozen(q))

    @classmethod
    def from_array(cls, entries, theta: float = 0.0) -> "CouplingMatrix":
        q = np.asarray(entries, dtype=float)
        return cls(n=q.shape[0], entries=q, kind="custom", theta=theta)

    def scaled(self, c: float) -> "CouplingMatrix":
        return CouplingMatrix(n=self.n, entries=c * self.entries, kind="custom", theta=c * self.theta)

    def to_csv(self) -> str:
        return "\n".join(",".join(repr(float(v)) for v in row) for row in self.entries) + "\n"


@dataclass(frozen=True)
class ConditionReport:
    """Norms of a coupling matrix that enter the optimality conditions."""

    inf_norm: float
    frob_sq: float
    rowsum_dispersion: float
    rho_star: float


@dataclass(frozen=True)
class SignalVector:
    """External field equal to ``strength`` on ``support`` and zero elsewhere."""

    n: int
    support: tuple
    strength: float

    def __post_init__(self):
        support = tuple(sorted(int(i) for i in self.support))
        if len(set(support)) != len(support):
            raise ValueError("support indices must be distinct")
        if support and (support[0] < 0 or support[-1] >= self.n):
            raise ValueError("support indices must lie in [0, n)")
        if self.strength < 0 or not np.isfinite(self.strength):
            raise ValueError("signal strength must be finite and nonnegative")
        object.__setattr__(self, "support", support)

    @classmethod
    def null(cls, n: int) -> "SignalVector":
        return cls(n=n, support=(), strength=0.0)

    @property
    def s(self) -> int:
        return len(self.support)

    @property
    def values(self) -> np.ndarray:
        mu = np.zeros(self.n)
        mu[list(self.support)] = self.strength
        return mu

    @property
    def signal_mass(self) -> float:
        """Average of ``tanh(mu_i)``, i.e. ``(s / n) * tanh(B)``."""
        return self.s / self.n * float(np.tanh(self.strength))

    @property
    def is_null(self) -> bool:
        return self.s == 0 or self.strength == 0


@dataclass(frozen=True, eq=False)
class SpinConfiguration:
    spins: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.spins)
        if x.ndim != 1 or x.size == 0:
            raise ValueError("a configuration is a nonempty 1-d sequence")
        if not np.all((x == 1) | (x == -1)):
            raise ValueError("spins must be exactly -1 or +1")
        object.__setattr__(self, "spins", _frozen(x.astype(np.int8)))

    def __len__(self):
        return self.spins.size

    def __eq__(self, other):
        return isinstance(other, SpinConfiguration) and np.array_equal(self.spins, other.spins)

    def __hash__(self):
        return hash(self.spins.tobytes())


def as_spins(x) -> np.ndarray:
    """Return the spin array behind a configuration or array-like."""
    if isinstance(x, SpinConfiguration):
        return x.spins
    return np.asarray(x)


def build_coupling(
    kind: str,
    n: int,
    theta: float,
    p: Optional[float] = None,
    seed: Optional[int] = None,
    degree: Optional[int] = None,
) -> CouplingMatrix:
    """Construct one of the standard coupling matrices.

    Parameters
    ----------
    kind : str
        ``curie_weiss`` (theta / n on every pair), ``cycle`` (theta / 2 between
        ring neighbours), ``regular_circulant`` (theta / degree between the
        ``degree / 2`` nearest ring neighbours on each side) or ``erdos_renyi``
        (theta / (n p) on the edges of a G(n, p) graph).
    n : int
        number of vertices, at least 2
    theta : float
        coupling strength
    p : float, optional
        edge probability, required for ``erdos_renyi``
    seed : int, optional
        graph seed, required for ``erdos_renyi``
    degree : int, optional
        even degree below n, required for ``regular_circulant``
    """
    if n < 2:
        raise ValueError("need at least 2 vertices")
    theta = float(theta)
    q = np.zeros((n, n))
    if kind == "curie_weiss":
        q[:] = theta / n
        np.fill_diagonal(q, 0.0)
        return CouplingMatrix(n=n, entries=q, kind=kind, theta=theta)
    if kind == "cycle":
        idx = np.arange(n)
        q[idx, (idx + 1) % n] = theta / 2
        q[(idx + 1) % n, idx] = theta / 2
        return CouplingMatrix(n=n, entries=q, kind=kind, theta=theta)
    if kind == "regular_circulant":
        if degree is None or degree % 2 or not 0 < degree < n:
            raise ValueError("regular_circulant needs an even degree d with 0 < d < n")
        idx = np.arange(n)
        for k in range(1, degree // 2 + 1):
            q[idx, (idx + k) % n] = theta / degree
            q[(idx + k) % n, idx] = theta / degree
        return CouplingMatrix(n=n, entries=q, kind=kind, theta=theta, degree=degree)
    if kind == "erdos_renyi":
        if p is None or seed is None:
            raise ValueError("erdos_renyi needs both an edge probability p and a seed")
        if not 0 < p <= 1:
            raise ValueError("edge probability must lie in (0, 1]")
        rng = np.random.default_rng(seed)
        iu = np.triu_indices(n, k=1)
        edges = rng.random(iu[0].size) < p
        q[iu] = np.where(edges, theta / (n * p), 0.0)
        q = q + q.T
        return CouplingMatrix(n=n, entries=q, kind=kind, theta=theta, gen_seed=seed, p=p)
    raise ValueError(f"unknown coupling kind {kind!r}")


def condition_report(Q: CouplingMatrix) -> ConditionReport:
    q = Q.entries
    rows = q.sum(axis=1)
    rho_star = float(rows.sum() / Q.n)
    return ConditionReport(
        inf_norm=float(np.abs(q).sum(axis=1).max()),
        frob_sq=float(np.sum(q * q)),
        rowsum_dispersion=float(np.sum((rows - rho_star) ** 2)),
        rho_star=rho_star,
    )


def local_fields(Q: CouplingMatrix, x) -> np.ndarray:
    """Local fields ``m_i(x) = sum_j Q_ij x_j``.

    Accepts a single configuration or a ``(draws, n)`` batch.
    """
    x = as_spins(x)
    if x.shape[-1] != Q.n:
        raise ValueError(f"configuration length {x.shape[-1]} does not match n={Q.n}")
    return x.astype(float) @ Q.entries


def make_signal(
    n: int,
    s: int,
    B: float,
    placement: str = "prefix",
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> SignalVector:
    """Sparse signal with ``s`` sites of strength ``B``.

    ``uniform_random`` placement draws the support from ``rng`` if given,
    otherwise from a generator seeded with ``seed``.
    """
    if not 0 <= s <= n:
        raise ValueError(f"sparsity s={s} must lie in [0, n={n}]")
    if B < 0:
        raise ValueError("signal strength must be nonnegative")
    if placement == "prefix":
        support: Sequence[int] = range(s)
    elif placement == "uniform_random":
        if rng is None:
            if seed is None:
                raise ValueError("uniform_random placement needs a seed")
            rng = np.random.default_rng(seed)
        support = rng.choice(n, size=s, replace=False)
    else:
        raise ValueError(f"unknown placement {placement!r}; expected one of {PLACEMENTS}")
    return SignalVector(n=n, support=tuple(support), strength=float(B))
