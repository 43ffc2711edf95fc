import numpy as np
import pytest
from numpy.testing import assert_allclose

from cvforge import fixtures as fx
from cvforge.axioms import check_cv, check_higgs_pair, check_saito
from cvforge.bundle import chern_connection, curvature, g_adjoint
from cvforge.chartfile import dumps_chart
from cvforge.jets import Jet, MatrixJet
from cvforge.unfolding import check_f_manifold, classify_point, induce_f_structure


def at_point(f, point):
    ctx = f.ctx
    m = f.m
    return np.array([[[Jet(ctx, f.c[k, i, j]).evaluate(point) for j in range(m)] for i in range(m)] for k in range(m)])


class TestRank1:
    def test_tensors(self, e1):
        assert e1.m == e1.n == 1
        assert_allclose(e1.C[0].constant_term, [[-1]])
        assert e1.U.entry(0, 0).coefficients == {((1,), (0,)): 1}
        assert e1.V.norm() == e1.Q.norm() == 0

    @pytest.mark.parametrize("w", [0, 1, 2, 3, 5])
    def test_twisted_pairing_phase(self, w):
        b = fx.example_rank1(w, twisted_pairing=True)
        assert b.g.constant_term[0, 0] == pytest.approx(1j**w)
        assert check_saito(b).passed and check_cv(b).passed

    def test_exponential_metric_variant(self):
        b = fx.example_rank1_exp_metric()
        assert b.g.entry(0, 0).coefficients[((1,), (0,))] == pytest.approx(1.0)


class TestSemisimple:
    @pytest.mark.parametrize("n", [2, 3])
    def test_passes(self, n):
        b = fx.example_semisimple(n, tuple(range(n)))
        assert check_saito(b).passed and check_cv(b).passed
        assert classify_point(induce_f_structure(b)) == "semisimple"

    def test_duplicate_offsets(self):
        with pytest.raises(fx.DuplicateEigenvalues):
            fx.example_semisimple(2, (1.0, 1.0))

    def test_F_is_diagonal(self, e2):
        for Ci in e2.C:
            M = Ci.constant_term
            assert np.count_nonzero(M - np.diag(np.diag(M))) == 0


class TestFrobenius2:
    def test_certified(self, f2):
        assert check_saito(f2).max_residual() < 1e-9
        assert check_f_manifold(induce_f_structure(f2)).passed

    def test_nilpotent_origin_semisimple_elsewhere(self, f2):
        f = induce_f_structure(f2)
        assert classify_point(f) == "irreducible"
        vals = np.linalg.eigvals(at_point(f, [0.0, 0.5])[:, 1, :])
        assert abs(vals[0] - vals[1]) > 0.1

    def test_square_of_second_field(self, f2):
        f = induce_f_structure(f2)
        assert abs(at_point(f, [0.0, 0.5])[0, 1, 1]) > 0.1
        assert abs(at_point(f, [0.0, 0.0])[0, 1, 1]) < 1e-14
        assert_allclose(f.e.column().constant_term.ravel(), [1, 0])


class TestSinhGordon:
    def test_cv_residual(self, sg):
        assert check_cv(sg).max_residual() < 1e-8

    def test_curved(self, sg):
        A = chern_connection(sg.h)
        R = curvature(A, [MatrixJet.zeros(sg.ctx, 2)])[0][0]
        assert R.norm() > 1e-3

    def test_metric_shape(self, sg):
        H = sg.h.constant_term
        assert H[0, 1] == 0 and H[0, 0] * H[1, 1] == pytest.approx(1.0)

    def test_unfolded_passes(self, sg_unfolded):
        assert check_cv(sg_unfolded).passed


class TestCompletion:
    def test_rank1_nothing_to_solve(self, e1):
        assert (fx.complete_cv_jet(e1).h - e1.h).norm() == 0

    def test_recovers_sinh_gordon_metric(self, sg):
        partial = sg.replace(h=MatrixJet(sg.ctx, sg.h.c * (sg.ctx.degree == 0)))
        assert (fx.complete_cv_jet(partial, unknowns=("h",)).h - sg.h).norm() < 1e-9

    def test_higgs_violation_at_degree_zero(self):
        e2 = fx.FIXTURES["e2"]()
        bad = e2.replace(U=e2.U + MatrixJet.constant(e2.ctx, [[0, 1], [1, 0]]))
        with pytest.raises(fx.Inconsistent) as info:
            fx.complete_cv_jet(bad)
        assert info.value.degree == 0

    def test_unknown_selector(self, e1):
        with pytest.raises(ValueError):
            fx.complete_cv_jet(e1, unknowns=("g",))


class TestHelpers:
    def test_twelve_perturbations_each_breaks_saito(self):
        cases = fx.single_axiom_perturbations()
        assert len(cases) == 12 and len({label for label, _ in cases}) == 12
        assert not any(check_saito(b).passed for _, b in cases)

    def test_direct_sum_block_structure(self):
        b = fx.direct_sum(fx.example_rank1(), fx.example_frobenius2())
        assert (b.m, b.n) == (3, 3)
        assert check_higgs_pair(b).passed
        assert b.C[0].entry(1, 0).norm() == 0

    def test_seeded_potential_g_symmetric(self, f2):
        A = fx.seeded_potential(f2, seed=5)
        assert (A - g_adjoint(A, f2.g)).norm() < 1e-14
        assert A.norm() > 0

    @pytest.mark.parametrize("name", sorted(fx.FIXTURES))
    def test_deterministic_bytes(self, name):
        assert dumps_chart(fx.FIXTURES[name]()) == dumps_chart(fx.FIXTURES[name]())
