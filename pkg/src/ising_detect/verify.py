"""Self-check report: closed-form identities, oracle comparisons and limit laws.

``quick`` keeps to identities and small-n oracle checks; ``full`` adds the
goodness-of-fit and concentration sweeps at n = 1000 and n = 200.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, List

import numpy as np
from scipy import stats

from . import samplers, theory
from .model import build_coupling, condition_report, make_signal
from .statistics import f_statistic


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: float
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name},{status},{self.measured:.6g},{self.threshold:.6g},{self.seconds:.1f}"


def magnetization_tv(x: np.ndarray, exact: samplers.ExactModel) -> float:
    n = x.shape[1]
    k = (x.sum(axis=1).astype(int) + n) // 2
    emp = np.bincount(k, minlength=n + 1) / x.shape[0]
    return 0.5 * float(np.abs(emp - exact.pmf_vector()).sum())


def oracle_battery(n: int):
    """(label, coupling, signal, backends) for the small-n oracle comparisons."""
    signal = make_signal(n, max(1, n // 4), 0.6)
    battery = []
    for theta in (0.5, 1.0, 1.5):
        Q = build_coupling("curie_weiss", n, theta)
        battery.append((f"cw{theta}", Q, None, ("curie_weiss", "glauber")))
        battery.append((f"cw{theta}+mu", Q, signal, ("curie_weiss",)))
    for theta in (0.8, 1.5):
        Q = build_coupling("cycle", n, theta)
        battery.append((f"cycle{theta}", Q, None, ("cycle", "glauber")))
        battery.append((f"cycle{theta}+mu", Q, signal, ("cycle",)))
    battery.append(("circulant0.6", build_coupling("regular_circulant", n, 0.6, degree=2 if n <= 4 else 4), signal, ("glauber",)))
    battery.append(("er0.8", build_coupling("erdos_renyi", n, 0.8, p=0.5, seed=11), signal, ("glauber",)))
    return battery


def _timed(name: str, threshold: float, fn: Callable[[], float], le: bool = True) -> CheckResult:
    t = time.perf_counter()
    v = float(fn())
    ok = v <= threshold if le else v >= threshold
    return CheckResult(name, bool(ok), v, threshold, time.perf_counter() - t)


def tanh_pairs(rng, size: int = 10_000):
    """``x`` anywhere on the real line, ``y > 0``."""
    return rng.normal(scale=3.0, size=size), rng.exponential(scale=2.0, size=size)


def tanh_increment_gaps(x: np.ndarray, y: np.ndarray) -> dict:
    """Slack in the lower bounds on ``tanh(x + y) - tanh(x)``.

    ``lower_bound`` is ``[1 - tanh x] tanh y`` over all pairs; it is only valid
    for ``x >= 0``, which ``lower_bound_x_nonneg`` restricts to. ``abs_bound``
    uses ``[1 - |tanh x|] tanh y``, valid everywhere. ``identity`` is the
    relative error of the closed form against ``sinh y / (cosh x cosh(x + y))``.
    """
    tx, ty = np.tanh(x), np.tanh(y)
    inc = np.tanh(x + y) - tx
    exact = np.sinh(y) / (np.cosh(x) * np.cosh(x + y))
    closed = ty / (np.cosh(x) ** 2 * (1 + tx * ty))
    lower = inc - (1 - tx) * ty
    return {
        "lower_bound": lower,
        "lower_bound_x_nonneg": lower[x >= 0],
        "abs_bound": inc - (1 - np.abs(tx)) * ty,
        "identity": closed / exact - 1,
    }


def aux_second_moment(n: int, theta: float, mu, draws: int, rng) -> tuple:
    """Mean and standard error of ``(sum_i [X_i - tanh(mu_i + theta Z)])^2``."""
    x, z = samplers.sample_curie_weiss(n, theta, mu, rng, size=draws, return_z=True)
    h = np.zeros(n) if mu is None else mu.values
    dev = (x - np.tanh(h[None, :] + theta * np.asarray(z)[:, None])).sum(axis=1) ** 2
    return float(dev.mean()), float(dev.std(ddof=1) / math.sqrt(draws))


def second_moment_battery(n: int = 100):
    return [(theta, mu) for theta in (0.5, 1.0, 1.5) for mu in (None, make_signal(n, 10, 1.0))]


def _identity_checks() -> List[CheckResult]:
    out = []
    rng = np.random.default_rng(2024)

    def cw_partition():
        Z = math.exp(samplers.enumerate_model(build_coupling("curie_weiss", 2, 1.0)).log_partition)
        return abs(Z - 4 * math.cosh(0.5))

    out.append(_timed("enumeration_cw_n2_partition", 1e-12, cw_partition))

    def cycle_mgf_err():
        worst = 0.0
        for n in range(3, 11):
            for theta in (0.2, 0.8, 1.5):
                ex = samplers.enumerate_model(build_coupling("cycle", n, theta))
                for t in np.linspace(-2, 2, 9):
                    ref = ex.expectation(lambda x: np.exp(t / math.sqrt(n) * x.sum(axis=1)))
                    worst = max(worst, abs(theory.cycle_mgf(theta, t, n) / ref - 1))
        return worst

    out.append(_timed("cycle_mgf_vs_enumeration", 1e-10, cycle_mgf_err))
    out.append(_timed("fixed_point_residual_theta1.5", 1e-12, lambda: abs(theory.solve_spontaneous_magnetization(1.5).residual)))
    out.append(_timed("tilted_fixed_point_residual", 1e-12, lambda: abs(theory.solve_tilted_fixed_point(1.0, 0.01, 1.0).residual)))

    def lr_monotone():
        worst = np.inf
        for n, s, B in [(2, 1, 0.5), (20, 3, 1.0), (100, 10, 0.3), (500, 40, 2.0)]:
            worst = min(worst, float(np.diff(theory.likelihood_ratio_profile(n, s, B, log=True)).min()))
        return worst

    out.append(_timed("likelihood_ratio_strictly_increasing", 0.0, lr_monotone, le=False))

    x, y = tanh_pairs(rng)
    gaps = tanh_increment_gaps(x, y)
    for name in ("lower_bound", "lower_bound_x_nonneg", "abs_bound"):
        out.append(_timed(f"tanh_increment_{name}", -1e-15, lambda: gaps[name].min(), le=False))
    out.append(_timed("tanh_increment_identity", 1e-9, lambda: np.abs(gaps["identity"]).max()))
    out.append(
        _timed(
            "quartic_normalizer",
            1e-10,
            lambda: abs(theory.quartic_law().normalizer - 12**0.25 / 2 * math.gamma(0.25)),
        )
    )

    def bound_identity():
        Q = build_coupling("cycle", 50, 0.7)
        t = 2 * (1 + condition_report(Q).inf_norm) / math.sqrt(50)
        return abs(theory.concentration_bound(Q, t) - 2 * math.exp(-1))

    out.append(_timed("concentration_bound_identity", 1e-14, bound_identity))

    def partition_monotone():
        worst = np.inf
        for Q in (build_coupling("curie_weiss", 8, 1.2), build_coupling("cycle", 8, 0.8)):
            logz = [
                samplers.enumerate_model(Q, np.full(8, t / math.sqrt(8))).log_partition for t in np.linspace(0, 3, 13)
            ]
            worst = min(worst, float(np.diff(logz).min()))
        return worst

    out.append(_timed("partition_nondecreasing_in_field", 0.0, partition_monotone, le=False))

    def mode_ratio():
        mu = make_signal(1000, 100, 1.0)
        m = theory.solve_aux_mode(1000, mu).root
        return m**3 / mu.signal_mass

    def second_moment_excess():
        n, worst = 100, -np.inf
        for theta, mu in second_moment_battery(n):
            mean, se = aux_second_moment(n, theta, mu, 20_000, rng)
            worst = max(worst, mean / (n * (1 + 3 * se / n)))
        return worst

    out.append(_timed("aux_second_moment_over_bound", 1.0, second_moment_excess))

    r = _timed("aux_mode_cube_over_signal_mass", 10.0, mode_ratio)
    out.append(CheckResult(r.name, 0.1 <= r.measured <= 10.0, r.measured, r.threshold, r.seconds))
    return out


def _oracle_checks(draws: int, tol: float) -> List[CheckResult]:
    out = []
    stream = 0
    for n in (4, 8, 12):
        for label, Q, mu, backends in oracle_battery(n):
            exact = samplers.enumerate_model(Q, mu)
            for backend in backends:
                stream += 1
                rng = np.random.default_rng([n, stream])

                def tv():
                    x = samplers.draw(Q, mu, rng, size=draws, sampler=backend)
                    return magnetization_tv(x, exact)

                out.append(_timed(f"tv_{backend}_{label}_n{n}", tol, tv))
    return out


def ks_statistic(sample: np.ndarray, cdf) -> float:
    return float(stats.kstest(sample, cdf).statistic)


def _limit_law_checks(draws: int = 2000, seed: int = 7) -> List[CheckResult]:
    out = []
    n = 1000
    rng = np.random.default_rng(seed)

    def normal_high():
        x = samplers.sample_curie_weiss(n, 0.5, None, rng, size=draws)
        return ks_statistic(math.sqrt(n) * x.mean(axis=1), theory.null_limit(0.5).cdf)

    def quartic():
        x = samplers.sample_curie_weiss(n, 1.0, None, rng, size=draws)
        return ks_statistic(n**0.25 * x.mean(axis=1), theory.null_limit(1.0).cdf)

    def conditional_low():
        law = theory.null_limit(1.5)
        x = samplers.sample_curie_weiss(n, 1.5, None, rng, size=2 * draws)
        xbar = x.mean(axis=1)
        xbar = xbar[xbar > 0]
        return ks_statistic(math.sqrt(n) * (xbar - law.center), law.cdf)

    out.append(_timed("ks_sqrt_n_mean_theta0.5", 0.06, normal_high))
    out.append(_timed("ks_quarter_root_mean_theta1", 0.06, quartic))
    out.append(_timed("ks_conditional_theta1.5", 0.08, conditional_low))
    return out


def concentration_battery(n: int = 200):
    return [
        ("cw0.5", build_coupling("curie_weiss", n, 0.5)),
        ("cw1.5", build_coupling("curie_weiss", n, 1.5)),
        ("cycle0.8", build_coupling("cycle", n, 0.8)),
    ]


def concentration_violations(Q, draws: int, rng) -> tuple:
    """Count of grid points where the empirical tail of ``|f|`` exceeds its bound."""
    x = samplers.draw(Q, None, rng, size=draws)
    f = np.abs(f_statistic(x, Q))
    norm = condition_report(Q).inf_norm
    scale = 2 * (1 + norm) / math.sqrt(Q.n)
    violations, worst = 0, -np.inf
    for c in np.linspace(0.25, 2.5, 10):
        t = c * scale
        freq = float(np.mean(f >= t))
        bound = theory.concentration_bound(Q, t, inf_norm=norm)
        violations += freq > bound
        worst = max(worst, freq - bound)
    return violations, worst


def _concentration_checks(draws: int = 100_000, seed: int = 4) -> List[CheckResult]:
    out = []
    for label, Q in concentration_battery():
        rng = np.random.default_rng(seed)
        out.append(_timed(f"concentration_violations_{label}", 0, lambda: concentration_violations(Q, draws, rng)[0]))
    return out


def verify_suite(scale: str = "quick") -> List[CheckResult]:
    if scale not in ("quick", "full"):
        raise ValueError("scale must be 'quick' or 'full'")
    results = _identity_checks()
    results += _oracle_checks(draws=20_000 if scale == "quick" else 100_000, tol=0.03)
    if scale == "full":
        results += _limit_law_checks()
        results += _concentration_checks()
    return results


def format_report(results: List[CheckResult]) -> str:
    lines = ["check,status,measured,threshold,seconds"] + [r.line() for r in results]
    passed = sum(r.passed for r in results)
    lines.append(f"# {passed}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
