import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ising_detect.model import (
    CouplingMatrix,
    SignalVector,
    SpinConfiguration,
    build_coupling,
    condition_report,
    local_fields,
    make_signal,
)


def _any_coupling(kind, n, theta):
    if kind == "erdos_renyi":
        return build_coupling(kind, n, theta, p=0.4, seed=n)
    if kind == "regular_circulant":
        return build_coupling(kind, n, theta, degree=2 if n <= 4 else 4)
    return build_coupling(kind, n, theta)


class TestBuildCoupling:
    def test_curie_weiss_entries(self):
        Q = build_coupling("curie_weiss", 4, 1.0)
        off = Q.entries[~np.eye(4, dtype=bool)]
        assert np.all(off == 0.25)
        assert np.all(np.diag(Q.entries) == 0)

    def test_cycle_row(self):
        Q = build_coupling("cycle", 5, 0.8)
        np.testing.assert_array_equal(Q.entries[0], [0, 0.4, 0, 0, 0.4])

    def test_cycle_entries_exactly_at_ring_distance_one(self):
        n = 7
        Q = build_coupling("cycle", n, 1.3)
        i, j = np.indices((n, n))
        ring = ((i - j) % n == 1) | ((j - i) % n == 1)
        np.testing.assert_array_equal(Q.entries, np.where(ring, 0.65, 0.0))

    def test_erdos_renyi_full_graph_matches_complete_graph(self):
        Q = build_coupling("erdos_renyi", 6, 0.5, p=1.0, seed=7)
        expected = np.full((6, 6), 0.5 / 6)
        np.fill_diagonal(expected, 0)
        np.testing.assert_array_equal(Q.entries, expected)

    def test_erdos_renyi_reproducible(self):
        a = build_coupling("erdos_renyi", 30, 0.8, p=0.3, seed=5)
        b = build_coupling("erdos_renyi", 30, 0.8, p=0.3, seed=5)
        assert a.entries.tobytes() == b.entries.tobytes()

    def test_circulant_degree(self):
        Q = build_coupling("regular_circulant", 10, 0.6, degree=4)
        assert np.all((Q.entries > 0).sum(axis=1) == 4)
        np.testing.assert_allclose(Q.entries.sum(axis=1), 0.6)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(kind="curie_weiss", n=1, theta=1.0),
            dict(kind="erdos_renyi", n=5, theta=1.0),
            dict(kind="erdos_renyi", n=5, theta=1.0, p=0.0, seed=1),
            dict(kind="regular_circulant", n=5, theta=1.0, degree=3),
            dict(kind="regular_circulant", n=4, theta=1.0, degree=4),
            dict(kind="torus", n=5, theta=1.0),
        ],
    )
    def test_rejects_bad_arguments(self, kwargs):
        with pytest.raises(ValueError):
            build_coupling(**kwargs)

    def test_entries_read_only(self):
        Q = build_coupling("cycle", 5, 1.0)
        with pytest.raises(ValueError):
            Q.entries[0, 1] = 3.0


class TestCouplingMatrixValidation:
    def test_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            CouplingMatrix.from_array([[0, 1], [0.5, 0]])

    def test_nonzero_diagonal(self):
        with pytest.raises(ValueError, match="hollow"):
            CouplingMatrix.from_array([[1, 0], [0, 0]])

    def test_nonfinite(self):
        with pytest.raises(ValueError):
            CouplingMatrix.from_array([[0, np.inf], [np.inf, 0]])

    def test_csv_round_trip(self):
        Q = build_coupling("erdos_renyi", 6, 0.7, p=0.5, seed=3)
        back = np.array([[float(v) for v in line.split(",")] for line in Q.to_csv().splitlines()])
        np.testing.assert_array_equal(back, Q.entries)


@settings(max_examples=40, deadline=None)
@given(
    kind=st.sampled_from(["curie_weiss", "cycle", "regular_circulant", "erdos_renyi"]),
    n=st.integers(3, 25),
    theta=st.floats(-2, 2, allow_nan=False),
)
def test_constructed_matrices_symmetric_and_hollow(kind, n, theta):
    Q = _any_coupling(kind, n, theta)
    assert np.array_equal(Q.entries, Q.entries.T)
    assert not np.any(np.diag(Q.entries))


class TestConditionReport:
    def test_cycle_norm(self):
        assert condition_report(build_coupling("cycle", 9, -1.4)).inf_norm == pytest.approx(1.4, abs=1e-15)

    def test_curie_weiss(self):
        rep = condition_report(build_coupling("curie_weiss", 10, 0.5))
        assert rep.inf_norm == pytest.approx(0.5 * 9 / 10, abs=1e-15)
        assert rep.rowsum_dispersion == pytest.approx(0.0, abs=1e-28)
        assert rep.frob_sq == pytest.approx(0.225, rel=1e-13)

    def test_circulant_rows_identical(self):
        rep = condition_report(build_coupling("regular_circulant", 12, 0.9, degree=6))
        assert rep.rowsum_dispersion < 1e-28
        assert rep.rho_star == pytest.approx(0.9)

    @settings(max_examples=30, deadline=None)
    @given(c=st.floats(-5, 5, allow_nan=False), seed=st.integers(0, 1000))
    def test_norm_homogeneous(self, c, seed):
        Q = build_coupling("erdos_renyi", 12, 1.0, p=0.5, seed=seed)
        assert condition_report(Q.scaled(c)).inf_norm == pytest.approx(abs(c) * condition_report(Q).inf_norm, rel=1e-12, abs=1e-15)


class TestLocalFields:
    def test_zero_matrix(self):
        Q = CouplingMatrix.from_array(np.zeros((4, 4)))
        np.testing.assert_array_equal(local_fields(Q, [1, -1, 1, 1]), 0)

    def test_cycle_all_plus(self):
        np.testing.assert_allclose(local_fields(build_coupling("cycle", 8, 0.7), np.ones(8)), 0.7)

    def test_curie_weiss_all_plus(self):
        np.testing.assert_allclose(local_fields(build_coupling("curie_weiss", 8, 1.2), np.ones(8)), 1.2 * 7 / 8)

    def test_batch_and_mismatch(self):
        Q = build_coupling("cycle", 5, 1.0)
        x = np.array([[1, 1, 1, 1, 1], [-1, -1, -1, -1, -1]])
        assert local_fields(Q, x).shape == (2, 5)
        with pytest.raises(ValueError):
            local_fields(Q, np.ones(4))


class TestSignal:
    def test_empty(self):
        mu = make_signal(10, 0, 5.0)
        assert mu.support == () and mu.signal_mass == 0 and mu.is_null

    def test_prefix(self):
        mu = make_signal(8, 3, 1.0)
        assert mu.support == (0, 1, 2)
        assert mu.signal_mass == pytest.approx(3 / 8 * np.tanh(1.0))
        np.testing.assert_array_equal(mu.values, [1, 1, 1, 0, 0, 0, 0, 0])

    def test_uniform_random_reproducible(self):
        a = make_signal(100, 10, 0.5, "uniform_random", seed=1)
        b = make_signal(100, 10, 0.5, "uniform_random", seed=1)
        assert a.support == b.support and len(set(a.support)) == 10

    def test_uniform_random_needs_seed(self):
        with pytest.raises(ValueError):
            make_signal(10, 2, 1.0, "uniform_random")

    @pytest.mark.parametrize("args", [(5, 6, 1.0), (5, -1, 1.0), (5, 2, -0.1)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            make_signal(*args)

    def test_vector_validation(self):
        with pytest.raises(ValueError):
            SignalVector(n=4, support=(1, 1), strength=1.0)
        with pytest.raises(ValueError):
            SignalVector(n=4, support=(4,), strength=1.0)

    @settings(max_examples=50, deadline=None)
    @given(n=st.integers(1, 200), data=st.data())
    def test_mass_monotone(self, n, data):
        s1 = data.draw(st.integers(0, n))
        s2 = data.draw(st.integers(s1, n))
        b1 = data.draw(st.floats(0, 10))
        b2 = data.draw(st.floats(b1, 10))
        assert make_signal(n, s1, b1).signal_mass <= make_signal(n, s1, b2).signal_mass
        assert make_signal(n, s1, b1).signal_mass <= make_signal(n, s2, b1).signal_mass


class TestSpinConfiguration:
    def test_rejects_non_spins(self):
        with pytest.raises(ValueError):
            SpinConfiguration(np.array([1, 0, -1]))
        with pytest.raises(ValueError):
            SpinConfiguration(np.array([], dtype=int))

    def test_equality_and_hash(self):
        a = SpinConfiguration([1, -1, 1])
        assert a == SpinConfiguration(np.array([1, -1, 1], dtype=np.int64))
        assert hash(a) == hash(SpinConfiguration([1, -1, 1]))
        assert len(a) == 3
