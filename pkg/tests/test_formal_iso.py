from math import factorial

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvforge import fixtures as fx
from cvforge.bundle import h_adjoint
from cvforge.formal_iso import (
    OrderTooLow,
    SharedDataMismatch,
    check_harmonic,
    extract_potential,
    shared_data_residual,
    solve_formal_iso,
)
from cvforge.jets import Jet, MatrixJet


def perturbed_Q(b, eps=1e-2):
    return b.replace(Q=b.Q + MatrixJet.constant(b.ctx, [[0, 1], [1, 0]]) * eps)


def harmonic_pair(seed):
    saito = fx.example_frobenius2()
    At = fx.seeded_potential(saito, seed)
    return saito, fx.harmonic_pair_from_potential(saito, At), At


class TestSolve:
    @pytest.mark.parametrize("name", ["e1", "e2"])
    def test_full_order_on_self_pair(self, name):
        b = fx.FIXTURES[name]()
        iso = solve_formal_iso(b, b)
        assert iso.achieved_order == iso.K == b.zorder
        assert all(entry["passed"] for entry in iso.log)

    def test_rank1_coefficients_are_exponential(self, e1):
        iso = solve_formal_iso(e1, e1)
        for k, A in enumerate(iso.A[:4], start=1):
            expected = {((0,), (k,)): 1 / factorial(k)} if k <= e1.ctx.d else {}
            assert A.entry(0, 0).coefficients == pytest.approx(expected)

    def test_requested_order_respected(self, e2):
        assert solve_formal_iso(e2, e2, K=2).K == 2

    def test_perturbed_Q_stops_at_zero(self, e2):
        assert solve_formal_iso(e2, perturbed_Q(e2)).achieved_order == 0

    def test_shared_data_mismatch(self, e2):
        with pytest.raises(SharedDataMismatch):
            solve_formal_iso(e2, e2.replace(U=e2.U * 2))

    def test_shared_residual_zero_on_self(self, sg):
        assert shared_data_residual(sg, sg) == 0

    def test_gauge_covariance(self, e2):
        t = Jet.coordinate(e2.ctx, 0)
        T = MatrixJet.identity(e2.ctx, 2) + MatrixJet.constant(e2.ctx, [[0, 1], [0, 0]]) * t * 0.3
        moved = fx.frame_change(e2, T)
        base, iso = solve_formal_iso(e2, e2, K=3), solve_formal_iso(moved, moved, K=3)
        assert iso.achieved_order == base.achieved_order
        Ti = T.inv()
        for A0, A1 in zip(base.A, iso.A):
            assert (Ti @ A0 @ T - A1).norm() < 1e-11

    def test_report_serializable(self, e1):
        d = solve_formal_iso(e1, e1, K=2).to_dict()
        assert d["achieved_order"] == 2 and len(d["orders"]) == 2


class TestPotential:
    @settings(max_examples=3, deadline=None)
    @given(st.integers(0, 10_000))
    def test_manufactured_pair_recovers_potential(self, seed):
        saito, cv, At = harmonic_pair(seed)
        iso = solve_formal_iso(saito, cv)
        assert iso.achieved_order >= 1
        A = extract_potential(iso, cv)
        assert (A - h_adjoint(At, cv.h)).norm() < 1e-8
        assert check_harmonic(saito, cv, A).passed

    def test_rank1_potential(self, e1):
        A = extract_potential(solve_formal_iso(e1, e1), e1)
        assert A.entry(0, 0).coefficients == pytest.approx({((1,), (0,)): -1})

    def test_order_too_low(self, e2):
        iso = solve_formal_iso(e2, perturbed_Q(e2))
        with pytest.raises(OrderTooLow):
            extract_potential(iso, e2)


class TestHarmonic:
    def test_rank1_linear_potential(self, e1):
        u = Jet.coordinate(e1.ctx, 0)
        rep = check_harmonic(e1, e1, MatrixJet.from_entries([[-u]]))
        assert rep.passed and rep.max_residual() == 0

    def test_mixed_term_breaks_dbar_relation(self, e1):
        u, ub = Jet.coordinate(e1.ctx, 0), Jet.coordinate(e1.ctx, 0, conjugate=True)
        rep = check_harmonic(e1, e1, MatrixJet.from_entries([[-u + 1e-2 * u * ub]]))
        assert rep.failures() == ["dbar_potential"]
