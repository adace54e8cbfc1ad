import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ising_detect import samplers, theory
from ising_detect.model import CouplingMatrix, build_coupling, make_signal
from ising_detect.samplers import GlauberConfig
from ising_detect.verify import magnetization_tv

# direct 8-term sum for the 3-cycle at theta = 0.5 (edge coupling 0.25)
CYCLE3_PARTITION = 8.906804731653779


def brute_force(Q, mu):
    """Independent oracle: explicit loop over {-1, +1}^n."""
    n = Q.n
    h = np.zeros(n) if mu is None else np.asarray(mu.values if hasattr(mu, "values") else mu)
    weights, totals = [], []
    for x in itertools.product((-1, 1), repeat=n):
        x = np.array(x, dtype=float)
        weights.append(math.exp(0.5 * x @ Q.entries @ x + h @ x))
        totals.append(int(x.sum()))
    Z = sum(weights)
    pmf = {}
    for w, t in zip(weights, totals):
        pmf[t] = pmf.get(t, 0.0) + w / Z
    return Z, pmf


class TestEnumeration:
    def test_independent_pair(self):
        ex = samplers.enumerate_model(CouplingMatrix.from_array(np.zeros((2, 2))))
        assert math.exp(ex.log_partition) == pytest.approx(4.0, rel=1e-15)
        assert ex.magnetization_pmf[0] == pytest.approx(0.5, rel=1e-15)

    def test_curie_weiss_pair(self):
        ex = samplers.enumerate_model(build_coupling("curie_weiss", 2, 1.0))
        assert math.exp(ex.log_partition) == pytest.approx(4 * math.cosh(0.5), rel=1e-14)

    def test_cycle_triangle(self):
        ex = samplers.enumerate_model(build_coupling("cycle", 3, 0.5))
        assert math.exp(ex.log_partition) == pytest.approx(CYCLE3_PARTITION, rel=1e-14)

    @settings(max_examples=25, deadline=None)
    @given(n=st.integers(2, 7), seed=st.integers(0, 10_000))
    def test_matches_brute_force(self, n, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(scale=0.6, size=(n, n))
        a = np.triu(a, 1)
        Q = CouplingMatrix.from_array(a + a.T)
        mu = rng.normal(size=n)
        ex = samplers.enumerate_model(Q, mu)
        Z, pmf = brute_force(Q, mu)
        assert ex.log_partition == pytest.approx(math.log(Z), rel=1e-12)
        for t, p in pmf.items():
            assert ex.magnetization_pmf[t] == pytest.approx(p, rel=1e-10, abs=1e-15)

    def test_moments_consistent(self):
        ex = samplers.enumerate_model(build_coupling("cycle", 6, 0.9), make_signal(6, 2, 0.7))
        ks = np.arange(7)
        totals = 2 * ks - 6
        p = ex.pmf_vector()
        assert p.sum() == pytest.approx(1.0, abs=1e-14)
        assert ex.mean_total_spin == pytest.approx(float(p @ totals), abs=1e-13)
        assert ex.var_total_spin == pytest.approx(float(p @ totals**2) - ex.mean_total_spin**2, abs=1e-12)

    def test_refuses_large_n(self):
        with pytest.raises(ValueError):
            samplers.enumerate_model(build_coupling("curie_weiss", samplers.MAX_ENUMERATION_N + 1, 1.0))

    def test_field_monotonicity_of_mean(self):
        # stochastic monotonicity in B at fixed support
        Q = build_coupling("cycle", 8, 1.0)
        means = [samplers.enumerate_model(Q, make_signal(8, 3, B)).mean_total_spin for B in (0, 0.5, 1, 2)]
        assert np.all(np.diff(means) >= 0)

    def test_partition_nondecreasing_in_uniform_field(self):
        for Q in (build_coupling("curie_weiss", 8, 1.2), build_coupling("cycle", 8, 0.8)):
            logz = [samplers.enumerate_model(Q, np.full(8, t / math.sqrt(8))).log_partition for t in np.linspace(0, 3, 13)]
            assert np.all(np.diff(logz) >= 0)


class TestExactSampler:
    def test_tv_curie_weiss_low_temperature(self):
        Q = build_coupling("curie_weiss", 10, 1.5)
        ex = samplers.enumerate_model(Q)
        x = samplers.sample_from_exact(ex, np.random.default_rng(0), size=100_000)
        assert magnetization_tv(x, ex) < 0.02

    def test_independent_tilted(self):
        Q = CouplingMatrix.from_array(np.zeros((5, 5)))
        ex = samplers.enumerate_model(Q, np.full(5, 0.8))
        x = samplers.sample_from_exact(ex, np.random.default_rng(1), size=50_000)
        p = math.exp(0.8) / (2 * math.cosh(0.8))
        assert np.all(np.abs((x == 1).mean(axis=0) - p) < 4 * math.sqrt(p * (1 - p) / 50_000))

    def test_single_draw_is_configuration(self):
        ex = samplers.enumerate_model(build_coupling("cycle", 4, 1.0))
        cfg = samplers.sample_from_exact(ex, np.random.default_rng(2))
        assert len(cfg) == 4


class TestAuxiliaryVariable:
    @pytest.mark.parametrize("theta,mu", [(0.5, None), (1.0, None), (1.5, None), (1.0, (100, 10, 1.0)), (2.5, (50, 5, 0.3))])
    def test_grid_cdf(self, theta, mu):
        n = 100 if mu is None else mu[0]
        sig = None if mu is None else make_signal(*mu)
        grid = samplers.build_aux_grid(n, theta, sig)
        assert np.all(np.diff(grid.cdf) >= 0)
        assert grid.cdf[-1] == pytest.approx(1.0, abs=1e-12)
        assert grid.f_min <= grid.potential.min()
        gap = grid.potential[[0, -1]] - grid.f_min
        assert np.all(gap >= samplers.AUX_TAIL_GAP - 1e-9)

    def test_symmetric_mean_high_temperature(self):
        z = samplers.sample_aux_z(200, 0.5, None, np.random.default_rng(3), size=20_000)
        assert abs(z.mean()) < 4 * z.std() / math.sqrt(z.size)

    def test_concentrates_at_spontaneous_magnetization(self):
        z = samplers.sample_aux_z(500, 1.5, None, np.random.default_rng(4), size=20_000)
        assert np.mean(np.abs(np.abs(z) - theory.magnetization(1.5)) < 0.1) > 0.95

    def test_critical_quartic_law(self):
        from scipy import stats

        z = samplers.sample_aux_z(1000, 1.0, None, np.random.default_rng(5), size=5000)
        assert stats.kstest(1000**0.25 * z, theory.quartic_law().cdf).statistic < 0.05

    def test_conditional_mean_given_z(self):
        mu = make_signal(40, 5, 0.9)
        x, z = samplers.sample_curie_weiss(40, 1.2, mu, np.random.default_rng(6), size=40_000, return_z=True)
        # regress the spins on tanh(mu_i + theta z): residuals must average to zero
        resid = x - np.tanh(mu.values[None, :] + 1.2 * z[:, None])
        assert np.all(np.abs(resid.mean(axis=0)) < 5 / math.sqrt(40_000))

    @pytest.mark.parametrize("theta", [0.5, 1.0, 1.5])
    @pytest.mark.parametrize("n", [4, 8, 12])
    def test_tv_against_enumeration(self, n, theta):
        Q = build_coupling("curie_weiss", n, theta)
        ex = samplers.enumerate_model(Q)
        x = samplers.sample_curie_weiss(n, theta, None, np.random.default_rng(n), size=100_000)
        assert magnetization_tv(x, ex) < 0.02

    def test_theta_zero_independent(self):
        x = samplers.sample_curie_weiss(20, 0.0, None, np.random.default_rng(7), size=10_000)
        assert abs(x.mean()) < 0.01

    def test_negative_theta_rejected(self):
        with pytest.raises(ValueError):
            samplers.sample_curie_weiss(10, -0.5, None, np.random.default_rng(0))
        with pytest.raises(ValueError):
            samplers.sample_aux_z(10, 0.0, None, np.random.default_rng(0))


class TestCycleSampler:
    def test_theta_zero_independent(self):
        mu = make_signal(12, 4, 1.1)
        x = samplers.sample_cycle(12, 0.0, mu, np.random.default_rng(8), size=60_000)
        p = (1 + np.tanh(mu.values)) / 2
        assert np.all(np.abs((x == 1).mean(axis=0) - p) < 4 * np.sqrt(p * (1 - p) / 60_000))

    @pytest.mark.parametrize("n", [4, 8, 12])
    def test_tv_against_enumeration(self, n):
        ex = samplers.enumerate_model(build_coupling("cycle", n, 0.8))
        x = samplers.sample_cycle(n, 0.8, None, np.random.default_rng(n), size=100_000)
        assert magnetization_tv(x, ex) < 0.02

    def test_neighbour_correlation(self):
        n = 10
        ex = samplers.enumerate_model(build_coupling("cycle", n, 0.8))
        exact = ex.expectation(lambda x: x[:, 0] * x[:, 1])
        x = samplers.sample_cycle(n, 0.8, None, np.random.default_rng(9), size=50_000)
        prod = x[:, 0].astype(float) * x[:, 1]
        assert abs(prod.mean() - exact) < 3 * prod.std() / math.sqrt(prod.size)

    def test_large_n_finite(self):
        x = samplers.sample_cycle(5000, 1.5, make_signal(5000, 50, 2.0), np.random.default_rng(10), size=3)
        assert x.shape == (3, 5000) and set(np.unique(x)) <= {-1, 1}


class TestGlauber:
    def test_zero_coupling_one_sweep_exact(self):
        Q = CouplingMatrix.from_array(np.zeros((6, 6)))
        mu = np.full(6, 0.4)
        x = samplers.sample_glauber(Q, mu, GlauberConfig(burn_in_sweeps=1), np.random.default_rng(11), size=50_000)
        p = math.exp(0.4) / (2 * math.cosh(0.4))
        assert np.all(np.abs((x == 1).mean(axis=0) - p) < 4 * math.sqrt(p * (1 - p) / 50_000))

    def test_heat_bath_half_at_zero_field(self):
        u = np.random.default_rng(12).random(200_000)
        out = samplers._heat_bath(np.arctanh(2 * u - 1), np.zeros_like(u))
        assert abs(out.mean()) < 4 / math.sqrt(u.size)

    def test_curie_weiss_tv(self):
        Q = build_coupling("curie_weiss", 10, 0.5)
        ex = samplers.enumerate_model(Q)
        x = samplers.sample_glauber(Q, None, GlauberConfig(burn_in_sweeps=500), np.random.default_rng(13), size=100_000)
        assert magnetization_tv(x, ex) < 0.03

    @pytest.mark.parametrize("scan", ["systematic", "random"])
    def test_erdos_renyi_tv(self, scan):
        Q = build_coupling("erdos_renyi", 8, 0.8, p=0.5, seed=11)
        mu = make_signal(8, 2, 0.6)
        ex = samplers.enumerate_model(Q, mu)
        x = samplers.sample_glauber(Q, mu, GlauberConfig(scan=scan), np.random.default_rng(14), size=50_000)
        assert magnetization_tv(x, ex) < 0.03

    def test_per_chain_generators_independent_of_batch(self):
        Q = build_coupling("cycle", 6, 0.9)
        cfg = GlauberConfig(burn_in_sweeps=20)
        seeds = [np.random.SeedSequence(5, spawn_key=(j,)) for j in range(4)]
        together = samplers.sample_glauber(Q, None, cfg, [np.random.default_rng(s) for s in seeds], size=4)
        alone = samplers.sample_glauber(Q, None, cfg, [np.random.default_rng(seeds[2])], size=1)
        np.testing.assert_array_equal(together[2], alone[0])

    def test_config_validation(self):
        with pytest.raises(ValueError):
            GlauberConfig(burn_in_sweeps=0)
        with pytest.raises(ValueError):
            GlauberConfig(scan="checkerboard")
        assert GlauberConfig.for_size(2**20).burn_in_sweeps == 400


class TestDispatch:
    @pytest.mark.parametrize(
        "Q,expected",
        [
            (build_coupling("curie_weiss", 5, 1.0), "curie_weiss"),
            (build_coupling("cycle", 5, 1.0), "cycle"),
            (CouplingMatrix.from_array(np.zeros((3, 3))), "independent"),
            (build_coupling("erdos_renyi", 5, 1.0, p=0.5, seed=1), "glauber"),
            (build_coupling("curie_weiss", 5, -1.0), "glauber"),
        ],
    )
    def test_designated(self, Q, expected):
        assert samplers.designated_sampler(Q) == expected

    @pytest.mark.parametrize("backend", ["curie_weiss", "cycle", "glauber", "exact", "independent"])
    def test_deterministic(self, backend):
        Q = {
            "curie_weiss": build_coupling("curie_weiss", 6, 1.2),
            "cycle": build_coupling("cycle", 6, 1.2),
            "independent": CouplingMatrix.from_array(np.zeros((6, 6))),
        }.get(backend, build_coupling("regular_circulant", 6, 0.7, degree=2))
        a = samplers.draw(Q, None, np.random.default_rng(99), size=50, sampler=backend)
        b = samplers.draw(Q, None, np.random.default_rng(99), size=50, sampler=backend)
        np.testing.assert_array_equal(a, b)

    def test_wrong_backend(self):
        with pytest.raises(ValueError):
            samplers.draw(build_coupling("cycle", 5, 1.0), None, np.random.default_rng(0), sampler="curie_weiss")
        with pytest.raises(ValueError):
            samplers.draw(build_coupling("cycle", 5, 1.0), None, np.random.default_rng(0), sampler="gibbs")
