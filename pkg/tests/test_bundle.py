import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from cvforge.bundle import (
    ChartBundle,
    DegenerateMetric,
    MissingTensor,
    VectorFieldJet,
    chern_connection,
    curvature,
    dual_frame,
    h_adjoint,
    lie_bracket,
    lie_derivative_g,
    lie_derivative_h,
)
from cvforge.jets import Jet, MatrixJet, context, random_matrix_jet
from cvforge.unfolding import build_frobenius

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def rank1_metric(ctx):
    t, tb = Jet.coordinate(ctx, 0), Jet.coordinate(ctx, 0, conjugate=True)
    return MatrixJet.from_entries([[1 + t * tb]])


def random_hermitian(ctx, rng, n, scale=0.3):
    M = random_matrix_jet(ctx, rng, n, scale=scale)
    return (M + M.H) * 0.5 + MatrixJet.identity(ctx, n) * 2.0


def zero_forms(ctx, n):
    return [MatrixJet.zeros(ctx, n)] * ctx.m


class TestChernConnection:
    def test_flat_identity(self):
        ctx = context(2, 3)
        assert all(A.norm() == 0 for A in chern_connection(MatrixJet.identity(ctx, 2)))

    def test_rank1_by_hand(self):
        ctx = context(1, 4)
        A = chern_connection(rank1_metric(ctx))[0].entry(0, 0)
        t, tb = Jet.coordinate(ctx, 0), Jet.coordinate(ctx, 0, conjugate=True)
        expected = tb * (1 - t * tb)
        assert_allclose(A.truncate(3).c, expected.truncate(3).c, atol=1e-14)

    def test_block_diagonal(self, rng):
        ctx = context(1, 3)
        H1, H2 = random_hermitian(ctx, rng, 1), random_hermitian(ctx, rng, 1)
        H = MatrixJet.from_entries([[H1.entry(0, 0), 0.0], [0.0, H2.entry(0, 0)]])
        A = chern_connection(H)[0]
        assert A.entry(0, 1).norm() == 0 and A.entry(1, 0).norm() == 0

    def test_degenerate(self):
        ctx = context(1, 3)
        with pytest.raises(DegenerateMetric):
            chern_connection(MatrixJet.zeros(ctx, 2))

    @settings(max_examples=15, deadline=None)
    @given(seeds)
    def test_metric_parallel(self, seed):
        ctx = context(2, 3)
        H = random_hermitian(ctx, np.random.default_rng(seed), 2)
        for i, A in enumerate(chern_connection(H)):
            R = H.d(i) - A.T @ H
            assert R.norm(ctx.d - 1) < 1e-12


class TestCurvature:
    def test_flat(self):
        ctx = context(2, 3)
        R = curvature(chern_connection(MatrixJet.identity(ctx, 2)), zero_forms(ctx, 2))
        assert all(M.norm() == 0 for row in R for M in row)

    def test_rank1_unit_magnitude(self):
        ctx = context(1, 4)
        R = curvature(chern_connection(rank1_metric(ctx)), zero_forms(ctx, 1))
        assert abs(R[0][0].constant_term[0, 0]) == pytest.approx(1.0)

    def test_direct_sum(self, rng):
        ctx = context(1, 4)
        h1, h2 = random_hermitian(ctx, rng, 1), random_hermitian(ctx, rng, 1)
        H = MatrixJet.from_entries([[h1.entry(0, 0), 0.0], [0.0, h2.entry(0, 0)]])
        R = curvature(chern_connection(H), zero_forms(ctx, 2))[0][0]
        R1 = curvature(chern_connection(h1), zero_forms(ctx, 1))[0][0]
        assert_allclose(R.entry(0, 0).c, R1.entry(0, 0).c, atol=1e-13)

    @settings(max_examples=10, deadline=None)
    @given(seeds)
    def test_index_swap_adjoint(self, seed):
        # the curvature 2-form is antihermitian; on coordinate components this reads
        # h(R(d_i, dbar_j) a, b) = h(a, R(d_j, dbar_i) b)
        ctx = context(2, 4)
        H = random_hermitian(ctx, np.random.default_rng(seed), 2)
        R = curvature(chern_connection(H), zero_forms(ctx, 2))
        for i in range(2):
            for j in range(2):
                res = R[i][j].T @ H - H @ R[j][i].conj()
                assert res.norm(ctx.d - 2) < 1e-11

    def test_plus_sign_fails_in_rank_one(self):
        ctx = context(1, 4)
        H = rank1_metric(ctx)
        R = curvature(chern_connection(H), zero_forms(ctx, 1))[0][0]
        assert abs((R.T @ H + H @ R.conj()).constant_term[0, 0]) == pytest.approx(2.0)

    def test_finite_difference(self, rng):
        ctx = context(1, 5)
        H = random_hermitian(ctx, rng, 2)
        A = chern_connection(H)[0]
        R = curvature([A], zero_forms(ctx, 2))[0][0]
        step = 1e-4
        for _ in range(5):
            p = 1e-2 * (rng.standard_normal() + 1j * rng.standard_normal())
            dx = (A.evaluate([p + step]) - A.evaluate([p - step])) / (2 * step)
            dy = (A.evaluate([p + 1j * step]) - A.evaluate([p - 1j * step])) / (2 * step)
            fd = -0.5 * (dx + 1j * dy)  # R = -dbar A when the (0,1)-part vanishes
            exact = R.evaluate([p])
            assert np.max(np.abs(fd - exact)) < 1e-6 * max(1.0, np.max(np.abs(exact)))


class TestLieBracket:
    def test_coordinate_fields_commute(self):
        ctx = context(2, 3)
        X, Y = VectorFieldJet.coordinate(ctx, 0), VectorFieldJet.coordinate(ctx, 1)
        assert lie_bracket(X, Y).norm() == 0

    def test_euler_with_translation(self):
        ctx = context(1, 3)
        t = Jet.coordinate(ctx, 0)
        X = VectorFieldJet((t,))
        Y = VectorFieldJet.coordinate(ctx, 0)
        B = lie_bracket(X, Y)
        assert_allclose(B.components[0].c, -Y.components[0].c)

    def test_euler_and_unit(self):
        ctx = context(2, 3)
        t1, t2 = Jet.coordinate(ctx, 0), Jet.coordinate(ctx, 1)
        E = VectorFieldJet((t1, t2 * 0.5))
        e = VectorFieldJet.coordinate(ctx, 0)
        B = lie_bracket(E, e)
        assert_allclose(B.components[0].c, -e.components[0].c)
        assert B.components[1].norm() == 0


class TestLieDerivatives:
    def test_constant_h_along_coordinate(self):
        ctx = context(2, 3)
        H = MatrixJet.constant(ctx, np.diag([1.0, 2.0]))
        e = VectorFieldJet.coordinate(ctx, 0)
        assert lie_derivative_h(e, H).norm() == 0
        assert lie_derivative_h(e, H, antiholomorphic=True).norm() == 0

    def test_constant_g_along_vanishing_field(self):
        ctx = context(1, 3)
        E = VectorFieldJet((Jet.coordinate(ctx, 0),))
        G = MatrixJet.identity(ctx, 1)
        # one-dimensional: L_{t d_t} g = 2 g for constant g
        assert_allclose(lie_derivative_g(E, G).constant_term, [[2.0]])

    def test_euler_conformal_on_frobenius_fixture(self, f2):
        f, gM, _ = build_frobenius(f2, 0)
        d = f.notes["fitted_d"]
        res = lie_derivative_g(f.E, gM) - gM * (2.0 - d)
        assert res.norm(f2.ctx.d - 1) < 1e-9


class TestDualFrame:
    def test_identity(self):
        ctx = context(1, 2)
        assert_allclose(dual_frame(MatrixJet.identity(ctx, 2)).c, MatrixJet.identity(ctx, 2).c)

    def test_diagonal(self):
        ctx = context(1, 2)
        D = dual_frame(MatrixJet.constant(ctx, np.diag([2.0, 1.0])))
        assert D.constant_term[0, 0] == pytest.approx(0.5)

    def test_rank1(self):
        ctx = context(1, 4)
        H = rank1_metric(ctx)
        D = dual_frame(H)
        assert_allclose((D.entry(0, 0) * H.entry(0, 0)).c, Jet.constant(ctx, 1.0).c, atol=1e-14)

    @settings(max_examples=10, deadline=None)
    @given(seeds)
    def test_pairing_is_kronecker(self, seed):
        ctx = context(1, 3)
        H = random_hermitian(ctx, np.random.default_rng(seed), 3)
        P = H @ dual_frame(H).conj()  # h(e_i, e_j^*) with the frame as identity
        assert (P - MatrixJet.identity(ctx, 3)).norm() < 1e-12


class TestAdjoint:
    @settings(max_examples=10, deadline=None)
    @given(seeds)
    def test_flat_is_adjoint(self, seed):
        rng = np.random.default_rng(seed)
        ctx = context(1, 2)
        H = random_hermitian(ctx, rng, 2)
        M = random_matrix_jet(ctx, rng, 2)
        Mf = h_adjoint(M, H)
        a, b = rng.standard_normal(2) + 1j * rng.standard_normal(2), rng.standard_normal(2)
        H0, M0, F0 = H.constant_term, M.constant_term, Mf.constant_term
        assert (M0 @ a) @ H0 @ b.conj() == pytest.approx(a @ H0 @ np.conj(F0 @ b))


class TestChartBundle:
    def test_require(self, e1):
        with pytest.raises(MissingTensor):
            ChartBundle(ctx=e1.ctx, n=1).require("h")

    def test_invariants_clean(self, e1, sg):
        assert e1.invariant_violations() == []
        assert sg.invariant_violations() == []

    def test_nonhermitian_h_named(self, e1):
        t = Jet.coordinate(e1.ctx, 0)
        b = e1.replace(h=e1.h + MatrixJet.from_entries([[t]]))
        assert "h hermitian" in b.invariant_violations()

    def test_nonholomorphic_C_named(self, e1):
        tb = Jet.coordinate(e1.ctx, 0, conjugate=True)
        b = e1.replace(C=[e1.C[0] + MatrixJet.from_entries([[tb]])])
        assert "C holomorphic" in b.invariant_violations()
