import numpy as np
import pytest

from cvforge import fixtures as fx
from cvforge.axioms import AxiomFailure, check_saito, check_tep
from cvforge.correspondences import build_cv_connection, build_saito_connection, extract_k_data
from cvforge.jets import Jet

PERTURBATIONS = fx.single_axiom_perturbations()


def flatness(b):
    conn, P = build_saito_connection(b, validate=False)
    rep = check_tep(conn, P, b.w, scale=b.input_scale())
    return max(rep["flat"].residual, rep["pairing_flat"].residual)


def scalar(M):
    return complex(M.constant_term[0, 0])


class TestSaitoConnection:
    @pytest.mark.parametrize("w", [0, 1, 2])
    def test_rank1_coefficients(self, w):
        b = fx.example_rank1(w, twisted_pairing=True)
        conn, P = build_saito_connection(b)
        u = Jet.coordinate(b.ctx, 0)
        assert scalar(conn.A[0].coeff(-1)) == -1
        assert conn.A[0].coeff(0).norm() == 0
        assert np.array_equal(conn.Az.coeff(-1).c[0, 0], u.c)
        assert scalar(conn.Az.coeff(0)) == w / 2
        assert scalar(P.coeff(w)) == pytest.approx(1j**w)

    def test_block_diagonal_on_semisimple(self, e2):
        conn, _ = build_saito_connection(e2)
        for A in conn.A + [conn.Az]:
            for k in A.powers():
                M = A.coeff(k)
                assert M.entry(0, 1).norm() == 0 and M.entry(1, 0).norm() == 0

    def test_rejects_invalid(self):
        _, b = PERTURBATIONS[0]
        with pytest.raises(AxiomFailure):
            build_saito_connection(b)


class TestFlatnessIffAxioms:
    @pytest.mark.parametrize("name", ["e1", "e2", "f2"])
    def test_valid_is_flat(self, name):
        assert flatness(fx.FIXTURES[name]()) < 1e-9

    @pytest.mark.parametrize("label,b", PERTURBATIONS, ids=[p[0] for p in PERTURBATIONS])
    def test_perturbation_detected(self, label, b):
        assert not check_saito(b).passed
        assert flatness(b) >= 1e-3


class TestCVConnection:
    def test_rank1_coefficients(self, e1):
        conn, _ = build_cv_connection(e1, w=1)
        ub = Jet.coordinate(e1.ctx, 0, conjugate=True)
        assert scalar(conn.A[0].coeff(-1)) == -1
        assert scalar(conn.Abar[0].coeff(1)) == -1
        assert scalar(conn.Az.coeff(0)) == 0.5
        # the z term carries -kappa U kappa = -ubar
        assert np.allclose(conn.Az.coeff(1).c[0, 0], -ub.c)

    @pytest.mark.parametrize("name", ["e1", "e2", "sg"])
    def test_flat(self, name):
        b = fx.FIXTURES[name]()
        conn, P = build_cv_connection(b)
        assert check_tep(conn, P, b.w)["flat"].residual < 1e-8

    def test_holomorphic_structure_at_z0(self, sg):
        conn, _ = build_cv_connection(sg)
        assert all(A.coeff(0).norm() == 0 for A in conn.Abar)
        assert all(A.coeff(-1).norm() == 0 for A in conn.Abar)


class TestExtract:
    @pytest.mark.parametrize("name", ["e1", "e2", "f2"])
    def test_round_trip(self, name):
        b = fx.FIXTURES[name]()
        conn, P = build_saito_connection(b)
        C, U, g = extract_k_data(conn, P, b.w)
        assert all(np.array_equal(a.c, c.c) for a, c in zip(C, b.C))
        assert np.array_equal(U.c, b.U.c) and np.array_equal(g.c, b.g.c)

    @pytest.mark.parametrize("w", [0, 1, 3])
    def test_rank1_pairing_phase(self, w):
        b = fx.example_rank1(w, twisted_pairing=True)
        C, U, g = extract_k_data(*build_saito_connection(b), w)
        assert scalar(C[0]) == -1
        assert scalar(g) == pytest.approx(1j**w)

    def test_semisimple_diagonal(self, e2):
        C, U, _ = extract_k_data(*build_saito_connection(e2), e2.w)
        assert U.entry(0, 1).norm() == 0
        assert np.allclose(np.diag(U.constant_term), [1.0, 2.0])
        assert all(np.count_nonzero(Ci.constant_term - np.diag(np.diag(Ci.constant_term))) == 0 for Ci in C)

    def test_rejects_nonflat(self):
        _, b = PERTURBATIONS[1]
        conn, P = build_saito_connection(b, validate=False)
        with pytest.raises(AxiomFailure):
            extract_k_data(conn, P, b.w)
