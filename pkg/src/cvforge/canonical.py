"""The endomorphism-bundle metric, the subbundle F = {C_X}, and the canonical data on TM.

End(K) is handled through row-major vectorisation: ``vec(A)[(i, a)] = A[i, a]``.
Then ``h^end(A, B) = vec(A)^T (H kron H^-T) conj(vec(B))``, the Chern connection acts
by ``Gamma kron 1 - 1 kron Gamma^T`` and its curvature by ``R kron 1 - 1 kron R^T``.

:class:`Subbundle` implements the general holomorphic-subbundle calculus (projection,
second fundamental form and the two curvature formulas) for any hermitian bundle given
by a Gram jet; the CV case is one instance of it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .axioms import DEFAULT_TOL, StructureReport, residual
from .bundle import (
    ChartBundle,
    VectorFieldJet,
    chern_connection,
    curvature,
    lie_derivative_h,
)
from .jets import Jet, JetContext, MatrixJet, NonUnit, hstack, invert_matrix, max_abs
from .unfolding import FStructure, induce_f_structure

__all__ = [
    "DegenerateInducedMetric",
    "NotPositiveDefinite",
    "ZeroVector",
    "OnDiscriminant",
    "OnCaustic",
    "EndPairings",
    "end_pairings",
    "Subbundle",
    "project_F",
    "second_fundamental_form",
    "curvature_F",
    "compare_curvatures",
    "CurvatureComparison",
    "CanonicalData",
    "canonical_data",
    "check_canonical_props",
    "SectionalCurvature",
    "sectional_curvature",
    "twisted_metrics",
    "kron",
]


class DegenerateInducedMetric(ArithmeticError):
    """The Gram matrix of the subbundle frame is singular at the base point."""


class NotPositiveDefinite(ValueError):
    """A metric expected to be positive definite at the base point is not."""


class ZeroVector(ValueError):
    """A direction of zero length."""


class OnDiscriminant(ArithmeticError):
    """E o is singular at the base point."""


class OnCaustic(ArithmeticError):
    """H^op o is singular at the base point."""


def kron(A: MatrixJet, B: MatrixJet) -> MatrixJet:
    """Kronecker product of matrix jets, row-major block order."""
    ctx = A.ctx
    r1, c1 = A.shape
    r2, c2 = B.shape
    prod = ctx.mul_arrays(A.c[:, None, :, None, :], B.c[None, :, None, :, :])
    return MatrixJet(ctx, prod.reshape(r1 * r2, c1 * c2, ctx.N))


def _vec(M: MatrixJet) -> MatrixJet:
    r, c = M.shape
    return MatrixJet(M.ctx, M.c.reshape(r * c, 1, M.ctx.N))


def _unvec(v: MatrixJet, n: int) -> MatrixJet:
    return MatrixJet(v.ctx, v.c.reshape(n, n, v.ctx.N))


@dataclass
class EndPairings:
    """Evaluators for h^end and g^end on n x n matrix jets."""

    H: MatrixJet
    G: MatrixJet | None
    Hinv: MatrixJet
    Ginv: MatrixJet | None

    def h_end(self, A: MatrixJet, B: MatrixJet) -> Jet:
        return (A.T @ self.H @ B.conj() @ self.Hinv).trace()

    def g_end(self, A: MatrixJet, B: MatrixJet) -> Jet:
        if self.G is None:
            raise ValueError("no bilinear form on this record")
        return (A.T @ self.G @ B @ self.Ginv).trace()

    def h_gram(self) -> MatrixJet:
        """Ambient Gram of h^end on vec coordinates."""
        return kron(self.H, self.Hinv.T)

    def g_gram(self) -> MatrixJet:
        return kron(self.G, self.Ginv.T)


def end_pairings(b: ChartBundle) -> EndPairings:
    from .bundle import DegenerateMetric

    b.require("h")
    try:
        Hinv = invert_matrix(b.h)
        Ginv = invert_matrix(b.g) if b.g is not None else None
    except NonUnit as exc:
        raise DegenerateMetric(str(exc)) from exc
    return EndPairings(b.h, b.g, Hinv, Ginv)


class Subbundle:
    """Holomorphic subbundle spanned by the columns of S in a hermitian bundle (H_V).

    ``AV`` (per-coordinate connection matrices) and ``RV`` (curvature R[i][j]) of the
    ambient bundle default to those of the Chern connection of ``HV``.
    """

    def __init__(self, HV: MatrixJet, S: MatrixJet, AV: Sequence[MatrixJet] | None = None,
                 RV: Sequence[Sequence[MatrixJet]] | None = None):
        self.ctx = HV.ctx
        self.m = self.ctx.m
        self.HV, self.S = HV, S
        self.AV = list(AV) if AV is not None else chern_connection(HV)
        self._RV = RV
        self.gram = S.T @ HV @ S.conj()
        s = np.linalg.svd(self.gram.constant_term, compute_uv=False)
        if s[-1] <= 1e-12 * max(1.0, s[0]):
            raise DegenerateInducedMetric(f"subbundle Gram singular (smallest singular value {s[-1]:.3e})")
        self.gram_inv = invert_matrix(self.gram)
        self._gram_inv_T = self.gram_inv.T
        self._SH_HVT = S.conj().T @ HV.T
        self._AF = None

    @property
    def RV(self):
        if self._RV is None:
            zero = [MatrixJet.zeros(self.ctx, self.HV.rows)] * self.m
            self._RV = curvature(self.AV, zero)
        return self._RV

    def coefficients(self, V: MatrixJet) -> MatrixJet:
        """lambda with pr^F(V) = S lambda (columnwise)."""
        return self._gram_inv_T @ self._SH_HVT @ V

    def project(self, V: MatrixJet) -> MatrixJet:
        return self.S @ self.coefficients(V)

    def normal(self, V: MatrixJet) -> MatrixJet:
        return V - self.project(V)

    def derivative(self, i: int) -> MatrixJet:
        """D_i applied to each frame section."""
        return self.S.d(i) + self.AV[i] @ self.S

    @property
    def second_fundamental_form(self) -> list[MatrixJet]:
        if self._AF is None:
            self._AF = [self.normal(self.derivative(i)) for i in range(self.m)]
        return self._AF

    def connection(self) -> list[MatrixJet]:
        """Connection matrices of D^F = pr^F D on the frame."""
        return [self.coefficients(self.derivative(i)) for i in range(self.m)]

    def adjoint_sff(self, j: int, nu: MatrixJet) -> MatrixJet:
        """Frame coefficients of (A^F_j)^flat applied to the columns of nu."""
        AF = self.second_fundamental_form[j]
        R = AF.T @ self.HV @ nu.conj()
        return (self.gram_inv @ R).conj()

    def curvature_intrinsic(self) -> list[list[MatrixJet]]:
        zero = [MatrixJet.zeros(self.ctx, self.gram.rows)] * self.m
        return curvature(chern_connection(self.gram), zero)

    def curvature_from_ambient(self) -> list[list[MatrixJet]]:
        AF = self.second_fundamental_form
        RV = self.RV
        return [
            [self.coefficients(RV[i][j] @ self.S) - self.adjoint_sff(j, AF[i]) for j in range(self.m)]
            for i in range(self.m)
        ]


def _cv_subbundle(b: ChartBundle) -> Subbundle:
    b.require("C", "h")
    P = end_pairings(b)
    n = b.n
    A = chern_connection(b.h)
    eye = MatrixJet.identity(b.ctx, n)
    AV = [kron(Ai, eye) - kron(eye, Ai.T) for Ai in A]
    zero = [MatrixJet.zeros(b.ctx, n)] * b.m
    R = curvature(A, zero)
    RV = [[kron(R[i][j], eye) - kron(eye, R[i][j].T) for j in range(b.m)] for i in range(b.m)]
    S = hstack([_vec(Ci) for Ci in b.C])
    return Subbundle(P.h_gram(), S, AV, RV)


def project_F(b: ChartBundle, B: MatrixJet, sub: Subbundle | None = None):
    """(lambda as m Jets, tangential part, normal part) of an endomorphism jet B."""
    sub = _cv_subbundle(b) if sub is None else sub
    v = _vec(B)
    lam = sub.coefficients(v)
    tang = _unvec(sub.S @ lam, b.n)
    return [lam.entry(a, 0) for a in range(lam.rows)], tang, B - tang


def second_fundamental_form(b: ChartBundle, sub: Subbundle | None = None) -> list[list[MatrixJet]]:
    """AF[i][j] = A^F_i(C_j) as n x n matrix jets."""
    sub = _cv_subbundle(b) if sub is None else sub
    return [[_unvec(AFi.col(j), b.n) for j in range(b.m)] for AFi in sub.second_fundamental_form]


@dataclass
class CurvatureComparison:
    intrinsic: list[list[MatrixJet]]
    from_ambient: list[list[MatrixJet]]
    discrepancy: float
    scale: float

    @property
    def relative_discrepancy(self) -> float:
        return self.discrepancy / max(1.0, self.scale)


def compare_curvatures(sub: Subbundle) -> CurvatureComparison:
    ctx = sub.ctx
    Ri = sub.curvature_intrinsic()
    Ra = sub.curvature_from_ambient()
    diffs = [Ri[i][j] - Ra[i][j] for i in range(sub.m) for j in range(sub.m)]
    scale = max(max_abs(M.c, ctx, ctx.d - 2) for row in Ri for M in row)
    return CurvatureComparison(Ri, Ra, residual(diffs, ctx, 2), scale)


def curvature_F(b: ChartBundle, sub: Subbundle | None = None) -> CurvatureComparison:
    """Curvature of h^F computed intrinsically and through the subbundle formula."""
    return compare_curvatures(_cv_subbundle(b) if sub is None else sub)


@dataclass
class CanonicalData:
    """h^M, g^M and Q^M on the coordinate frame of TM, with the induced F-structure."""

    bundle: ChartBundle
    f: FStructure
    hM: MatrixJet
    gM: MatrixJet | None
    QM: MatrixJet | None
    sub: Subbundle = field(repr=False)

    @property
    def ctx(self) -> JetContext:
        return self.hM.ctx

    @property
    def m(self) -> int:
        return self.hM.rows

    def connection(self) -> list[MatrixJet]:
        return chern_connection(self.hM)

    def curvature(self) -> list[list[MatrixJet]]:
        return curvature(self.connection(), [MatrixJet.zeros(self.ctx, self.m)] * self.m)

    def to_dict(self) -> dict:
        def const(M):
            if M is None:
                return None
            c = M.constant_term
            return {"re": np.round(c.real, 12).tolist(), "im": np.round(c.imag, 12).tolist()}

        return {"hM_at_base": const(self.hM), "gM_at_base": const(self.gM), "QM_at_base": const(self.QM)}


def canonical_data(b: ChartBundle, zeta=None) -> CanonicalData:
    b.require("C", "h")
    f = induce_f_structure(b, zeta)
    sub = _cv_subbundle(b)
    hM = sub.gram
    gM = None
    if b.g is not None:
        P = end_pairings(b)
        S = sub.S
        gM = S.T @ P.g_gram() @ S
    QM = None
    if b.Q is not None:
        cols = [_vec(b.Q.comm(Ci)) for Ci in b.C]
        QM = sub.coefficients(hstack(cols))
    return CanonicalData(b, f, hM, gM, QM, sub)


def check_canonical_props(cd: CanonicalData, tol: float = DEFAULT_TOL) -> StructureReport:
    """Subbundle and canonical-data identities on TM."""
    b, sub, f = cd.bundle, cd.sub, cd.f
    ctx, m, n = cd.ctx, cd.m, b.n
    thr = tol * (1.0 + b.input_scale())
    rep = StructureReport("canonical")
    AF = sub.second_fundamental_form  # AF[i] columns j: A^F_i(C_j) as vec
    rep.add("sff_symmetric", residual([AF[i].col(j) - AF[j].col(i) for i in range(m) for j in range(m)], ctx, 1), thr)
    e, E = f.e, f.E
    rep.add("sff_unit", residual(e.contract(AF), ctx, 1), thr)

    # higgs field of F and its covariant derivative
    Cm = [_vec(Ci) for Ci in b.C]
    DF = sub.connection()

    def DF_apply(i, V):
        # D^F_i on a section V = S lambda of F
        return sub.project(V.d(i) + sub.AV[i] @ V)

    changed = []
    for x in range(m):
        for y in range(m):
            if x >= y:
                continue
            for z in range(m):
                CyCz = _vec(b.C[y] @ b.C[z])
                CxCz = _vec(b.C[x] @ b.C[z])
                Dx_Cz = DF_apply(x, Cm[z])
                Dy_Cz = DF_apply(y, Cm[z])
                lhs = (DF_apply(x, CyCz) - _vec(b.C[y] @ _unvec(Dx_Cz, n))
                       - DF_apply(y, CxCz) + _vec(b.C[x] @ _unvec(Dy_Cz, n)))
                Azx = _unvec(AF[z].col(x), n)
                Azy = _unvec(AF[z].col(y), n)
                rhs = sub.project(_vec(b.C[y] @ Azx - b.C[x] @ Azy))
                changed.append(lhs - rhs)
    rep.add("higgs_derivative_formula", residual(changed, ctx, 1) if changed else 0.0, thr)

    hM, gM, QM = cd.hM, cd.gM, cd.QM
    GM = DF  # connection matrices of D^M on the coordinate frame
    if gM is not None:
        DgM = [gM.d(i) - GM[i].T @ gM - gM @ GM[i] for i in range(m)]
        rep.add("gM_parallel", residual(DgM, ctx, 1), thr)
        # what D^M g^M actually equals: g^end pairs normal parts with F
        Gg = end_pairings(b).g_gram()
        cross = [AF[i].T @ Gg @ sub.S for i in range(m)]
        rep.add("gM_derivative_defect", residual([DgM[i] - cross[i] - cross[i].T for i in range(m)], ctx, 1), thr)
    rep.add("connection_is_chern", residual([GM[i] - cd.connection()[i] for i in range(m)], ctx, 1), thr)
    if QM is not None and b.U is not None:
        U4 = [sub.project(_vec(b.U).d(i) + sub.AV[i] @ _vec(b.U)) + sub.project(_vec(b.Q.comm(b.C[i]))) + Cm[i]
              for i in range(m)]
        rep.add("U_Q_projected", residual(U4, ctx, 1), thr)
        DQ = [QM.d(i) + GM[i].comm(QM) for i in range(m)]
        rep.add("DQ_symmetric", residual([DQ[i].col(j) - DQ[j].col(i) for i in range(m) for j in range(m)], ctx, 1), thr)
        Ecol = E.column()
        eye = MatrixJet.identity(ctx, m)
        rep.add("euler_derivative", residual([Ecol.d(i) + GM[i] @ Ecol - QM.col(i) - eye.col(i) for i in range(m)], ctx, 1), thr)
        rep.add("QM_hM_hermitian", residual(QM.T @ hM - hM @ QM.conj(), ctx, 0), thr)
        if gM is not None:
            P = end_pairings(b)
            lhs = QM.T @ gM + gM @ QM
            Gg = P.g_gram()
            perp = [sub.normal(_vec(b.Q.comm(Ci))) for Ci in b.C]
            Nperp = hstack(perp)
            rhs = -(Nperp.T @ Gg @ sub.S) - (Nperp.T @ Gg @ sub.S).T
            rep.add("Q_g_skew_defect", residual(lhs - rhs, ctx, 0), thr)
            rep.notes["Q_g_skew_defect_size"] = float(lhs.norm())
    rep.add("hM_unit_invariant", residual(lie_derivative_h(e, hM), ctx, 1), thr)
    rep.add("hM_unit_bar_invariant", residual(lie_derivative_h(e, hM, antiholomorphic=True), ctx, 1), thr)
    rep.add("hM_euler_flow_invariant", residual(lie_derivative_h(E, hM) - lie_derivative_h(E, hM, antiholomorphic=True), ctx, 1), thr)
    return rep


@dataclass(frozen=True)
class SectionalCurvature:
    value: float
    from_higgs: float
    discrepancy: float


class SectionalEvaluator:
    """Base-point data for fast repeated sectional-curvature evaluation."""

    def __init__(self, cd: CanonicalData):
        b = cd.bundle
        self.m, self.n = cd.m, b.n
        self.hM0 = cd.hM.constant_term
        ev = np.linalg.eigvalsh(0.5 * (self.hM0 + self.hM0.conj().T))
        if ev[0] <= 0:
            raise NotPositiveDefinite(f"h^M at base point has eigenvalue {ev[0]:.3e}")
        R = cd.curvature()
        self.R0 = np.array([[R[i][j].constant_term for j in range(self.m)] for i in range(self.m)])
        self.C0 = np.array([Ci.constant_term for Ci in b.C])
        self.H0 = b.h.constant_term
        self.H0inv = np.linalg.inv(self.H0)
        AF = cd.sub.second_fundamental_form
        self.AF0 = np.array([[AF[i].col(j).constant_term[:, 0] for j in range(self.m)] for i in range(self.m)])
        self.HV0 = cd.sub.HV.constant_term

    def h_end(self, A: np.ndarray, B: np.ndarray) -> complex:
        return np.trace(A.T @ self.H0 @ B.conj() @ self.H0inv)

    def flat(self, A: np.ndarray) -> np.ndarray:
        return np.conj(self.H0inv @ A.T @ self.H0)

    def hM_norm2(self, X: np.ndarray) -> float:
        return float(np.real(X @ self.hM0 @ X.conj()))

    def intrinsic(self, X: np.ndarray) -> float:
        nrm = self.hM_norm2(X)
        RX = np.einsum("i,j,ijab->ab", X, X.conj(), self.R0)
        return float(np.real((RX @ X) @ self.hM0 @ X.conj())) / nrm**2

    def from_higgs(self, X: np.ndarray) -> float:
        nrm = self.hM_norm2(X)
        CX = np.einsum("i,iab->ab", X, self.C0)
        K = CX @ self.flat(CX) - self.flat(CX) @ CX
        a = np.einsum("i,j,ijv->v", X, X, self.AF0)
        term1 = np.real(self.h_end(K, K))
        term2 = np.real(a @ self.HV0 @ a.conj())
        return float(-(term1 + term2)) / nrm**2

    def __call__(self, X) -> SectionalCurvature:
        X = np.asarray(X, dtype=complex).ravel()
        if X.shape != (self.m,):
            raise ValueError(f"direction must have {self.m} components")
        if self.hM_norm2(X) <= 1e-300:
            raise ZeroVector("zero direction")
        v1 = self.intrinsic(X)
        v2 = self.from_higgs(X)
        return SectionalCurvature(v1, v2, abs(v1 - v2))


def sectional_curvature(cd: CanonicalData, X) -> SectionalCurvature:
    """Holomorphic sectional curvature of h^M at the base point, two ways."""
    return SectionalEvaluator(cd)(X)


def _mult_inverse(f: FStructure, X: VectorFieldJet, err) -> MatrixJet:
    Mop = f.operator(X)
    s = np.linalg.svd(Mop.constant_term, compute_uv=False)
    if s[-1] <= 1e-12 * max(1.0, s[0]):
        raise err("multiplication operator singular at base point")
    return invert_matrix(Mop)


def twisted_metrics(cd: CanonicalData, Hop: VectorFieldJet | None = None) -> tuple[MatrixJet, MatrixJet]:
    """Pullbacks of h^M through (E o)^-1 and (H^op o)^-1."""
    f = cd.f
    PD = _mult_inverse(f, f.E, OnDiscriminant)
    hD = PD.T @ cd.hM @ PD.conj()
    if Hop is None:
        return hD, hD
    PK = _mult_inverse(f, Hop, OnCaustic)
    hK = PK.T @ cd.hM @ PK.conj()
    return hD, hK
