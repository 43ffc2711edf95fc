"""Meromorphic connections and pairings built from Saito or CV chart data, and back."""

from __future__ import annotations

from .axioms import DEFAULT_TOL, AxiomFailure, TEPConnection, check_cv, check_saito, check_tep
from .bundle import ChartBundle, chern_connection, kappa_conjugate
from .jets import LaurentJet, MatrixJet

__all__ = ["build_saito_connection", "build_cv_connection", "extract_k_data", "cv_tilde_data"]


def _laurent(terms: dict[int, MatrixJet]) -> LaurentJet:
    return LaurentJet.from_terms(terms)


def _weight(b: ChartBundle, w: int | None) -> int:
    return b.w if w is None else int(w)


def build_saito_connection(b: ChartBundle, w: int | None = None, validate: bool = True,
                           tol: float = DEFAULT_TOL) -> tuple[TEPConnection, LaurentJet]:
    """A_i = Gamma_i + C_i/z, A_z = U/z - V + w/2, P = z^w g."""
    w = _weight(b, w)
    if validate:
        rep = check_saito(b, tol)
        if not rep.passed:
            raise AxiomFailure(rep)
    b.require("C", "U", "V", "g")
    ctx, n = b.ctx, b.n
    zero = MatrixJet.zeros(ctx, n)
    gam = b.gamma10 or [zero] * b.m
    A = [_laurent({-1: b.C[i], 0: gam[i]}) for i in range(b.m)]
    Az = _laurent({-1: b.U, 0: -b.V + MatrixJet.identity(ctx, n) * (w / 2)})
    P = _laurent({w: b.g})
    return TEPConnection(A=A, Az=Az), P


def cv_tilde_data(b: ChartBundle) -> tuple[list[MatrixJet], MatrixJet]:
    """kappa C kappa and kappa U kappa, honouring explicit overrides on the record."""
    Ct = b.ctilde if b.ctilde is not None else [kappa_conjugate(Ci, b.kappa) for Ci in b.C]
    Ut = b.utilde if b.utilde is not None else kappa_conjugate(b.U, b.kappa)
    return Ct, Ut


def build_cv_connection(b: ChartBundle, w: int | None = None, validate: bool = True,
                        tol: float = DEFAULT_TOL) -> tuple[TEPConnection, LaurentJet]:
    """Mixed-type connection D + C/z + z kCk with z-part U/z - Q + w/2 - z kUk.

    The sign of the z kUk term is the one that makes the connection flat under the
    frame conventions of :mod:`cvforge.bundle`.
    """
    w = _weight(b, w)
    if validate:
        rep = check_cv(b, tol)
        if not rep.passed:
            raise AxiomFailure(rep)
    b.require("C", "U", "g", "Q")
    ctx, n, m = b.ctx, b.n, b.m
    if b.gamma10 is not None:
        g10 = b.gamma10
        g01 = b.gamma01 or [MatrixJet.zeros(ctx, n)] * m
    else:
        g10 = chern_connection(b.h)
        g01 = [MatrixJet.zeros(ctx, n)] * m
    Ct, Ut = cv_tilde_data(b)
    A = [_laurent({-1: b.C[i], 0: g10[i]}) for i in range(m)]
    Abar = [_laurent({0: g01[j], 1: Ct[j]}) for j in range(m)]
    Az = _laurent({-1: b.U, 0: -b.Q + MatrixJet.identity(ctx, n) * (w / 2), 1: -Ut})
    P = _laurent({w: b.g})
    return TEPConnection(A=A, Az=Az, Abar=Abar), P


def extract_k_data(conn: TEPConnection, P: LaurentJet, w: int, validate: bool = True,
                   tol: float = DEFAULT_TOL) -> tuple[list[MatrixJet], MatrixJet, MatrixJet]:
    """(C, U, g): residues of A_i and A_z and the leading coefficient of z^-w P."""
    if validate:
        rep = check_tep(conn, P, w, tol)
        if not rep.passed:
            raise AxiomFailure(rep)
    C = [A.coeff(-1) for A in conn.A]
    U = conn.Az.coeff(-1)
    g = P.coeff(w)
    return C, U, g
