"""Reference quantities: fixed points, detection boundaries and limit laws."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import interpolate, special, stats

from .model import CouplingMatrix, SignalVector, condition_report

RESIDUAL_TOL = 1e-12

# Support of the quartic law used for quadrature; tail mass beyond is ~exp(-108).
QUARTIC_HALF_WIDTH = 6.0


@dataclass(frozen=True)
class FixedPointResult:
    root: float
    residual: float
    iterations: int


def _bisect(g: Callable[[float], float], lo: float, hi: float, max_iter: int = 2000):
    """Root of ``g`` on ``[lo, hi]`` given ``g(lo) <= 0 <= g(hi)``.

    Runs until the bracket stops shrinking, so the returned point is the
    closest double to the root the arithmetic allows.
    """
    glo, ghi = g(lo), g(hi)
    if glo > 0 or ghi < 0:
        raise ValueError("root is not bracketed")
    it = 0
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        gm = g(mid)
        if gm == 0:
            lo = hi = mid
            break
        if gm < 0:
            lo = mid
        else:
            hi = mid
    root = lo if abs(g(lo)) <= abs(g(hi)) else hi
    return root, it


def solve_spontaneous_magnetization(theta: float) -> FixedPointResult:
    """Positive root of ``z = tanh(theta z)``; zero when ``theta <= 1``."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    if theta <= 1:
        return FixedPointResult(root=0.0, residual=0.0, iterations=0)

    def g(z):
        return z - math.tanh(theta * z)

    # g < 0 just right of 0 since theta > 1; g(1) > 0
    lo = 1e-300
    while g(lo) >= 0:
        lo *= 2
    root, it = _bisect(g, lo, 1.0)
    return FixedPointResult(root=root, residual=g(root), iterations=it)


def magnetization(theta: float) -> float:
    return solve_spontaneous_magnetization(theta).root


def solve_tilted_fixed_point(theta: float, p: float, B: float) -> FixedPointResult:
    """Largest nonnegative root of ``z = p tanh(theta z + B) + (1 - p) tanh(theta z)``."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    if B < 0:
        raise ValueError("B must be nonnegative")
    if p == 0 or B == 0:
        return solve_spontaneous_magnetization(theta)

    def g(z):
        return z - p * math.tanh(theta * z + B) - (1 - p) * math.tanh(theta * z)

    # g(0) < 0 and g(1) > 0. Scan down from 1 to the first sign change so the
    # largest root is bracketed even when g has several.
    grid = np.linspace(1.0, 0.0, 4097)
    vals = np.array([g(z) for z in grid])
    k = int(np.argmax(vals <= 0))
    root, it = _bisect(g, float(grid[k]), float(grid[k - 1]))
    return FixedPointResult(root=root, residual=g(root), iterations=it)


def detection_boundary(theta: float, a: float) -> Optional[float]:
    """Critical signal exponent ``r`` for sparsity exponent ``a``.

    Returns ``None`` when no signal strength makes detection possible.
    """
    if not 0 < a < 1:
        raise ValueError("sparsity exponent must lie in (0, 1)")
    r = boundary_line(theta, a)
    return r if r > 0 else None


def boundary_line(theta: float, a):
    """The line ``r = 1/2 - a`` (or ``3/4 - a`` at ``theta == 1``), unclipped."""
    return (0.75 if theta == 1 else 0.5) - a


# -- limit laws -------------------------------------------------------------


def _simpson(f, a, b, fa, fm, fb):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = 1e-14, depth: int = 60) -> float:
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = _simpson(f, a, b, fa, fm, fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = _simpson(f, a, m, fa, flm, fm)
        right = _simpson(f, m, b, fm, frm, fb)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15 * tol:
            return left + right + delta / 15.0
        return recurse(a, m, fa, flm, fm, left, tol / 2, depth - 1) + recurse(
            m, b, fm, frm, fb, right, tol / 2, depth - 1
        )

    return recurse(a, b, fa, fm, fb, whole, tol, depth)


def quartic_density_unnormalized(x):
    return np.exp(-np.asarray(x, dtype=float) ** 4 / 12.0)


class QuarticLaw:
    """Law with density proportional to ``exp(-x**4 / 12)``."""

    def __init__(self, knots: int = 1201):
        f = lambda x: math.exp(-x**4 / 12.0)
        h = QUARTIC_HALF_WIDTH
        xs = np.linspace(-h, h, knots)
        pieces = [adaptive_simpson(f, xs[i], xs[i + 1], tol=1e-15) for i in range(knots - 1)]
        cum = np.concatenate([[0.0], np.cumsum(pieces)])
        self.normalizer = float(cum[-1])
        self._xs = xs
        self._cum = cum / self.normalizer
        self._f = f
        # inverse cdf on the interior; Newton polish in quantile()
        keep = np.concatenate([[True], np.diff(self._cum) > 1e-300])
        self._inv = interpolate.PchipInterpolator(self._cum[keep], xs[keep])

    def pdf(self, x):
        return quartic_density_unnormalized(x) / self.normalizer

    def _cdf_scalar(self, x: float) -> float:
        h = QUARTIC_HALF_WIDTH
        if x <= -h:
            return 0.0
        if x >= h:
            return 1.0
        k = min(int(np.searchsorted(self._xs, x, side="right")) - 1, len(self._xs) - 2)
        extra = adaptive_simpson(self._f, float(self._xs[k]), x, tol=1e-16) if x > self._xs[k] else 0.0
        return float(self._cum[k] + extra / self.normalizer)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.vectorize(self._cdf_scalar, otypes=[float])(x)
        return out if out.ndim else float(out)

    def _quantile_scalar(self, p: float) -> float:
        if not 0 < p < 1:
            raise ValueError("probability must lie in (0, 1)")
        if p > 0.5:
            return -self._quantile_scalar(1.0 - p)
        x = float(self._inv(p))
        for _ in range(50):
            err = self._cdf_scalar(x) - p
            if abs(err) < 1e-15:
                break
            step = err / float(self.pdf(x))
            x -= step
            if abs(step) < 1e-15 * max(1.0, abs(x)):
                break
        return x

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        out = np.vectorize(self._quantile_scalar, otypes=[float])(p)
        return out if out.ndim else float(out)

    ppf = quantile


@lru_cache(maxsize=1)
def quartic_law() -> QuarticLaw:
    return QuarticLaw()


def ellis_newman_variance(theta: float) -> float:
    m = magnetization(theta)
    return (1 - m * m) / (1 - theta * (1 - m * m))


def displayed_low_temperature_variance(theta: float) -> float:
    """Variance ``1 / (1 - theta (1 - m^2))`` as printed alongside the other limits."""
    m = magnetization(theta)
    return 1 / (1 - theta * (1 - m * m))


@dataclass(frozen=True)
class LimitDistribution:
    """Null limit law of the scaled magnetization.

    ``variant`` is ``normal`` (for ``sqrt(n) * mean``), ``quartic_w`` (for
    ``n**(1/4) * mean``) or ``conditional_normal`` (for
    ``sqrt(n) * (mean - center)`` given a positive mean).
    """

    variant: str
    variance: float = float("nan")
    center: float = 0.0
    normalizer: float = float("nan")
    _law: object = field(default=None, repr=False, compare=False)

    def cdf(self, x):
        return self._law.cdf(x)

    def quantile(self, p):
        return self._law.ppf(p)

    ppf = quantile


def null_limit(theta: float, variance_form: str = "ellis_newman") -> LimitDistribution:
    """Limit law of the null magnetization at coupling ``theta``.

    ``variance_form`` only matters for ``theta > 1``: ``ellis_newman`` uses
    ``(1 - m^2) / (1 - theta (1 - m^2))`` and ``display`` uses
    ``1 / (1 - theta (1 - m^2))``.
    """
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    if theta < 1:
        var = 1.0 / (1.0 - theta)
        return LimitDistribution("normal", variance=var, _law=stats.norm(0.0, math.sqrt(var)))
    if theta == 1:
        law = quartic_law()
        return LimitDistribution("quartic_w", normalizer=law.normalizer, _law=law)
    if variance_form == "ellis_newman":
        var = ellis_newman_variance(theta)
    elif variance_form == "display":
        var = displayed_low_temperature_variance(theta)
    else:
        raise ValueError(f"unknown variance form {variance_form!r}")
    return LimitDistribution(
        "conditional_normal",
        variance=var,
        center=magnetization(theta),
        _law=stats.norm(0.0, math.sqrt(var)),
    )


# -- concentration ----------------------------------------------------------


def concentration_bound(Q: CouplingMatrix, t: float, inf_norm: Optional[float] = None) -> float:
    """Tail bound ``2 exp(-n t^2 / (4 (1 + |Q|_inf)^2))`` on ``|f| >= t``, capped at 1."""
    if t <= 0:
        raise ValueError("t must be positive")
    if inf_norm is None:
        inf_norm = condition_report(Q).inf_norm
    return min(1.0, 2.0 * math.exp(-Q.n * t * t / (4.0 * (1.0 + inf_norm) ** 2)))


# -- cycle graph ------------------------------------------------------------


def cycle_eigenvalues(coupling: float, h):
    """Eigenvalues of the ring transfer matrix, scaled by ``2 cosh(coupling)``.

    ``coupling`` is the per-edge interaction ``J`` in ``exp(J x_i x_{i+1})``;
    ``h`` is the uniform field. At ``h = 0`` they equal ``1`` and ``tanh(J)``.
    """
    h = np.asarray(h, dtype=float)
    e, ei = math.exp(coupling), math.exp(-coupling)
    root = np.sqrt(e * e * np.sinh(h) ** 2 + ei * ei)
    norm = e + ei
    return (e * np.cosh(h) + root) / norm, (e * np.cosh(h) - root) / norm


def _log_eigen_power_sum(coupling: float, h, n: int):
    """``log(lambda1^n + lambda2^n)`` without overflow; lambda2 may be negative."""
    l1, l2 = cycle_eigenvalues(coupling, h)
    ratio = l2 / l1
    return n * np.log(l1) + np.log1p(ratio**n)


def cycle_mgf(theta: float, t, n: int):
    """Null moment generating function ``E exp(t / sqrt(n) * sum_i X_i)`` on the ring.

    The ring with ``Q_ij = theta / 2`` between neighbours has per-edge
    interaction ``theta / 2`` in ``exp(x'Qx / 2)``. The result is the ratio of
    partition functions, i.e. the eigenvalue power sum at ``t / sqrt(n)``
    divided by its value at 0.
    """
    if n < 3:
        raise ValueError("ring needs n >= 3")
    J = theta / 2.0
    h = np.asarray(t, dtype=float) / math.sqrt(n)
    out = np.exp(_log_eigen_power_sum(J, h, n) - _log_eigen_power_sum(J, 0.0, n))
    return out if out.ndim else float(out)


def cycle_log_partition(theta: float, n: int, h: float = 0.0) -> float:
    """``log Z`` of the ring with uniform field ``h``."""
    J = theta / 2.0
    return float(n * math.log(2 * math.cosh(J)) + _log_eigen_power_sum(J, h, n))


# -- auxiliary variable potential --------------------------------------------


def _log_cosh(x):
    x = np.abs(x)
    return x + np.log1p(np.exp(-2.0 * x)) - math.log(2.0)


def _field_levels(mu):
    """Distinct field values and their multiplicities."""
    vals = mu.values if isinstance(mu, SignalVector) else np.asarray(mu, dtype=float)
    return np.unique(vals, return_counts=True)


def aux_potential(z, n: int, theta: float, mu) -> np.ndarray:
    """``n theta z^2 / 2 - sum_i log cosh(theta z + mu_i)``."""
    z = np.asarray(z, dtype=float)
    levels, counts = _field_levels(mu)
    if counts.sum() != n:
        raise ValueError("signal length does not match n")
    lc = sum(c * _log_cosh(theta * z + v) for v, c in zip(levels, counts))
    out = 0.5 * n * theta * z * z - lc
    return out if out.ndim else float(out)


def aux_potential_derivative(z, n: int, theta: float, mu):
    z = np.asarray(z, dtype=float)
    levels, counts = _field_levels(mu)
    out = n * theta * z - theta * sum(c * np.tanh(theta * z + v) for v, c in zip(levels, counts))
    return out if out.ndim else float(out)


def aux_potential_second_derivative(z, n: int, theta: float, mu):
    z = np.asarray(z, dtype=float)
    levels, counts = _field_levels(mu)
    sech2 = sum(c * (1.0 - np.tanh(theta * z + v) ** 2) for v, c in zip(levels, counts))
    out = n * theta - theta * theta * sech2
    return out if out.ndim else float(out)


def solve_aux_mode(n: int, mu, theta: float = 1.0) -> FixedPointResult:
    """Minimizer of the critical auxiliary potential over ``(0, 1]``.

    Only defined at ``theta == 1``, where the potential is convex. A signal
    with no positive entry has its minimum at 0.
    """
    if theta != 1:
        raise ValueError("the mode solver covers theta == 1 only")
    levels, counts = _field_levels(mu)
    if counts.sum() != n:
        raise ValueError("signal length does not match n")
    if np.any(levels < 0):
        raise ValueError("signal must be nonnegative")
    if not np.any(levels > 0):
        return FixedPointResult(root=0.0, residual=0.0, iterations=0)

    def g(z):
        return aux_potential_derivative(z, n, 1.0, mu) / n

    root, it = _bisect(g, 0.0, 1.0)
    return FixedPointResult(root=root, residual=g(root), iterations=it)


# -- likelihood ratio under the uniform-support prior ------------------------


def likelihood_ratio_profile(n: int, s: int, B: float, log: bool = False) -> np.ndarray:
    """Likelihood ratio of the uniform-support mixture as a function of ``k``.

    Entry ``k`` is ``sum_j P(J = j) exp(B (2 j - s))`` with ``J`` hypergeometric
    (population ``n``, ``k`` successes, ``s`` draws): the ratio for any
    configuration with ``k`` plus spins. With ``log=True`` the natural log is
    returned, which stays finite when ``s * B`` exceeds the float range.
    """
    if not 0 <= s <= n:
        raise ValueError("need 0 <= s <= n")
    if B < 0:
        raise ValueError("B must be nonnegative")
    k = np.arange(n + 1)[:, None]
    j = np.arange(s + 1)[None, :]
    with np.errstate(divide="ignore"):
        logpmf = stats.hypergeom.logpmf(j, n, k, s)
    out = special.logsumexp(logpmf + B * (2 * j - s), axis=1)
    return out if log else np.exp(out)
