import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from cvforge.hyperbolicity import (
    NonPositiveInput,
    NotIrreducible,
    ZeroMatrix,
    bound_k0,
    bound_k1,
    real_orthonormal_frame,
    rho,
    sample_nilpotent_cone,
    write_histogram,
)

NILPOTENT_2 = np.array([[1, 1j], [1j, -1]])


@pytest.fixture(scope="module")
def sg_estimate(sg_unfolded):
    return bound_k0(sg_unfolded, count=200, seed=0)


class TestRho:
    @pytest.mark.parametrize(
        "A,expected",
        [(NILPOTENT_2, -2.0), (np.eye(2), 0.0), (np.diag([1.0, -1.0]), 0.0)],
    )
    def test_hand_values(self, A, expected):
        assert rho(A) == pytest.approx(expected, abs=1e-14)

    def test_zero(self):
        with pytest.raises(ZeroMatrix):
            rho(np.zeros((2, 2)))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.floats(1e-3, 1e3))
    def test_scale_invariant(self, seed, lam):
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        assert abs(rho(lam * A) - rho(A)) < 1e-10

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_normal_matrices_vanish(self, seed):
        rng = np.random.default_rng(seed)
        U = unitary_group.rvs(3, random_state=rng)
        D = np.diag(rng.standard_normal(3) + 1j * rng.standard_normal(3))
        assert abs(rho(U @ D @ U.conj().T)) < 1e-12

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_nonnormal_negative(self, seed):
        rng = np.random.default_rng(seed)
        A = np.triu(rng.standard_normal((3, 3)), 1) + 1e-3
        assert rho(A) < 0

    def test_hermitian_weight(self):
        # with h(a, b) = a^T H conj(b) the adjoint changes, and so does normality
        H = np.diag([1.0, 4.0])
        A = np.array([[0, 4.0], [1.0, 0]])
        assert abs(rho(A, H)) < 1e-14
        assert rho(A) < -0.1


class TestSampling:
    def test_two_by_two_single_orbit(self):
        for s in sample_nilpotent_cone(2, 50, seed=3):
            A = s.matrix
            assert s.symmetry_residual < 1e-12
            assert np.linalg.norm(A) == pytest.approx(1.0)
            assert abs(A[0, 0] + A[1, 1]) < 1e-8 and abs(A[0, 0] ** 2 + A[0, 1] ** 2) < 1e-8
            assert s.rho == pytest.approx(-2.0, abs=1e-8)

    def test_empty(self):
        assert sample_nilpotent_cone(2, 0) == []

    def test_rejects_rank1(self):
        with pytest.raises(ValueError):
            sample_nilpotent_cone(1, 3)

    def test_three_by_three_strictly_negative(self):
        samples = sample_nilpotent_cone(3, 500, seed=0)
        assert len(samples) == 500
        assert max(s.nilpotency_residual for s in samples) < 1e-8
        assert max(s.rho for s in samples) < 0

    def test_deterministic(self):
        a, b = sample_nilpotent_cone(3, 5, seed=9), sample_nilpotent_cone(3, 5, seed=9)
        assert all(np.array_equal(x.matrix, y.matrix) for x, y in zip(a, b))


class TestFrame:
    def test_orthonormal_and_real(self, sg_unfolded):
        T = real_orthonormal_frame(sg_unfolded)
        H, G, K = (M.constant_term for M in (sg_unfolded.h, sg_unfolded.g, sg_unfolded.kappa))
        assert np.allclose(T.T @ H @ T.conj(), np.eye(2))
        assert np.allclose(T.T @ G @ T, np.eye(2))
        assert np.allclose(K @ T.conj(), T)


class TestBoundK0:
    def test_positive_and_matches_exhaustive(self, sg_estimate):
        # the maximal ideal is spanned by d_2 and R^sect(d_2) = -2.3012
        assert sg_estimate.k0 == pytest.approx(2.301194, rel=1e-5)
        assert np.all(sg_estimate.sectional_values < 0)

    def test_stable_in_count(self, sg_unfolded, sg_estimate):
        big = bound_k0(sg_unfolded, count=2000, seed=0)
        assert abs(big.k0 - sg_estimate.k0) <= 0.2 * sg_estimate.k0

    def test_monotone_in_count(self, sg_unfolded):
        assert bound_k0(sg_unfolded, count=1000, seed=4).k0 <= bound_k0(sg_unfolded, count=1, seed=4).k0 + 1e-12

    def test_refine_never_loosens(self, sg_unfolded, sg_estimate):
        assert bound_k0(sg_unfolded, count=20, refine=True).k0 <= sg_estimate.k0 + 1e-9

    def test_semisimple_refused(self, e2):
        with pytest.raises(NotIrreducible):
            bound_k0(e2)

    def test_thread_count_does_not_matter(self, sg_unfolded, monkeypatch):
        docs = []
        for threads in ("1", "4"):
            monkeypatch.setenv("CVFORGE_THREADS", threads)
            docs.append(json.dumps(bound_k0(sg_unfolded, count=100, seed=2).to_dict(), sort_keys=True))
        assert docs[0] == docs[1]

    def test_skipped_samples_reported(self, sg_estimate):
        # the 2x2 cone is two lines and only one of them lies in F at the base point
        d = sg_estimate.to_dict()
        assert d["count"] == 200 and 0 < d["evaluated"] < 200

    def test_statistics(self, sg_estimate):
        stats = sg_estimate.statistics()
        assert stats["rho"]["max"] == pytest.approx(-2.0)
        assert stats["rho"]["histogram"]["counts"].count(200) == 1
        assert sum(stats["sectional"]["histogram"]["counts"]) == sg_estimate.sectional_values.size

    def test_histogram_file(self, sg_estimate, tmp_path):
        pytest.importorskip("matplotlib")
        out = tmp_path / "k0.png"
        write_histogram(sg_estimate, str(out))
        assert out.stat().st_size > 0


class TestBoundK1:
    @pytest.mark.parametrize("k0,lam,expected", [(2, 1, 2), (0.5, 2, 2), (3, 1e-6, 3e-12)])
    def test_values(self, k0, lam, expected):
        assert bound_k1(k0, lam) == pytest.approx(expected)

    @pytest.mark.parametrize("k0,lam", [(0, 1), (1, 0), (-1, 2), (2, -0.5)])
    def test_nonpositive(self, k0, lam):
        with pytest.raises(NonPositiveInput):
            bound_k1(k0, lam)
