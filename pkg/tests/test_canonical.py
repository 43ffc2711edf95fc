import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from cvforge import fixtures as fx
from cvforge.bundle import VectorFieldJet
from cvforge.canonical import (
    DegenerateInducedMetric,
    NotPositiveDefinite,
    OnDiscriminant,
    SectionalEvaluator,
    Subbundle,
    ZeroVector,
    canonical_data,
    check_canonical_props,
    compare_curvatures,
    curvature_F,
    sectional_curvature,
    twisted_metrics,
)
from cvforge.jets import MatrixJet, context, random_matrix_jet

CURVED = ["e1", "e2", "sg-unfolded"]


def random_directions(rng, m, count):
    return rng.standard_normal((count, m)) + 1j * rng.standard_normal((count, m))


def random_subbundle(seed, n=3, k=2):
    rng = np.random.default_rng(seed)
    ctx = context(2, 4)
    M = random_matrix_jet(ctx, rng, n, scale=0.3)
    H = (M + M.H) * 0.5 + MatrixJet.identity(ctx, n) * 2.0
    S = MatrixJet(ctx, random_matrix_jet(ctx, rng, n).c[:, :k] * (ctx.anti_degree == 0))
    return Subbundle(H, S)


@pytest.fixture(scope="module")
def sg_data(sg_unfolded):
    return canonical_data(sg_unfolded)


class TestCanonicalData:
    def test_rank1(self, e1):
        cd = canonical_data(e1)
        assert_allclose(cd.hM.constant_term, [[1]])
        assert_allclose(cd.gM.constant_term, [[1]])
        assert cd.QM.norm() == 0

    def test_semisimple_identity(self, e2):
        cd = canonical_data(e2)
        assert_allclose(cd.hM.c, MatrixJet.identity(e2.ctx, 2).c, atol=1e-14)
        assert_allclose(cd.gM.c, MatrixJet.identity(e2.ctx, 2).c, atol=1e-14)

    def test_section_independence(self, e2):
        a, b = canonical_data(e2), canonical_data(e2, np.array([1.0, 2.0]))
        for x, y in [(a.hM, b.hM), (a.gM, b.gM), (a.QM, b.QM)]:
            assert (x - y).norm() < 1e-12

    def test_trace_form_degenerate_at_nilpotent_point(self, sg_data):
        # g^M(X, Y) = tr(C_X C_Y) and d_2 acts nilpotently
        assert_allclose(sg_data.gM.constant_term, [[2, 0], [0, 0]], atol=1e-14)

    @pytest.mark.parametrize("name", ["e1", "e2"])
    def test_properties_pass(self, name):
        rep = check_canonical_props(canonical_data(fx.FIXTURES[name]()))
        assert rep.passed, rep.failures()

    def test_properties_on_sg_unfolded(self, sg_data):
        # F is not kappa-stable there, so g^end(A^F C_X, C_Y) survives and g^M is not
        # parallel; the identity with that defect term holds
        rep = check_canonical_props(sg_data)
        assert rep.failures() == ["gM_parallel"]
        assert rep["gM_derivative_defect"].residual < 1e-12

    def test_Q_perturbation_detected(self, sg_unfolded):
        Q = sg_unfolded.Q + MatrixJet.constant(sg_unfolded.ctx, np.diag([1.0, -1.0])) * 1e-3
        rep = check_canonical_props(canonical_data(sg_unfolded.replace(Q=Q)))
        assert not rep["U_Q_projected"].passed

    def test_serializable(self, sg_data):
        d = sg_data.to_dict()
        assert set(d) >= {"hM_at_base", "gM_at_base", "QM_at_base"}


class TestCurvatureOfF:
    @pytest.mark.parametrize("name", CURVED)
    def test_two_ways_agree_on_fixtures(self, name):
        b = fx.FIXTURES[name]()
        assert curvature_F(b).relative_discrepancy < 1e-8

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_two_ways_agree_on_random_subbundles(self, seed):
        assert compare_curvatures(random_subbundle(seed)).relative_discrepancy < 1e-8

    def test_degenerate_subbundle(self):
        ctx = context(1, 3)
        S = MatrixJet.constant(ctx, [[1, 1], [0, 0], [0, 0]])
        with pytest.raises(DegenerateInducedMetric):
            Subbundle(MatrixJet.identity(ctx, 3), S)


class TestSectionalCurvature:
    @pytest.mark.parametrize("name", CURVED)
    def test_unit_direction_is_flat(self, name):
        cd = canonical_data(fx.FIXTURES[name]())
        e = cd.f.e.column().constant_term.ravel()
        assert abs(sectional_curvature(cd, e).value) < 1e-9

    @pytest.mark.parametrize("name", CURVED)
    def test_nonpositive(self, name, rng):
        cd = canonical_data(fx.FIXTURES[name]())
        ev = SectionalEvaluator(cd)
        for X in random_directions(rng, cd.m, 100):
            r = ev(X)
            assert r.value <= 1e-9
            assert r.discrepancy < 1e-8

    def test_semisimple_vanishes(self, e2, rng):
        ev = SectionalEvaluator(canonical_data(e2))
        assert all(abs(ev(X).value) < 1e-12 for X in random_directions(rng, 2, 20))

    def test_nilpotent_direction(self, sg_data):
        r = sectional_curvature(sg_data, [0, 1])
        assert r.value == pytest.approx(-2.301194, abs=1e-6)
        assert r.discrepancy < 1e-8

    @pytest.mark.parametrize("scale", [1e-3, 2.0, 1j])
    def test_scale_invariant(self, sg_data, scale):
        X = np.array([0.3, 1.0 - 0.2j])
        assert sectional_curvature(sg_data, X * scale).value == pytest.approx(sectional_curvature(sg_data, X).value)

    def test_zero_vector(self, sg_data):
        with pytest.raises(ZeroVector):
            sectional_curvature(sg_data, [0, 0])

    def test_wrong_length(self, sg_data):
        with pytest.raises(ValueError):
            sectional_curvature(sg_data, [1, 0, 0])

    def test_indefinite_metric_refused(self, sg_data):
        with pytest.raises(NotPositiveDefinite):
            sectional_curvature(dataclasses.replace(sg_data, hM=-sg_data.hM), [0, 1])


class TestTwistedMetrics:
    def test_semisimple_rescales_by_eigenvalues(self, e2):
        cd = canonical_data(e2)
        hD, hK = twisted_metrics(cd)
        assert_allclose(hD.constant_term, np.diag([1.0, 0.25]), atol=1e-14)
        assert hK is hD

    def test_discriminant(self):
        # offsets (0, 1) put the base point where E o is singular
        with pytest.raises(OnDiscriminant):
            twisted_metrics(canonical_data(fx.FIXTURES["e2"]()))

    def test_unit_operator_is_identity_twist(self, e2):
        cd = canonical_data(e2)
        _, hK = twisted_metrics(cd, cd.f.e)
        assert (hK - cd.hM).norm() < 1e-12

    def test_custom_operator(self, e2):
        cd = canonical_data(e2)
        Hop = VectorFieldJet.from_column(MatrixJet.constant(cd.ctx, [[2.0], [1.0]]))
        _, hK = twisted_metrics(cd, Hop)
        assert_allclose(hK.constant_term, np.diag([0.25, 1.0]), atol=1e-14)
