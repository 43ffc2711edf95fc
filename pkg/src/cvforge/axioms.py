"""Residual-based checkers for the Higgs, Saito, CV and TEP axiom systems.

A residual that involves k derivatives of the input is exact only up to total
degree d - k, so it is measured on that range.  An axiom passes when its residual
is below ``tol * (1 + largest input coefficient)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .bundle import ChartBundle, chern_connection, curvature, kappa_conjugate
from .jets import BadLaurentRange, JetContext, LaurentJet, MatrixJet, max_abs

__all__ = [
    "DEFAULT_TOL",
    "AxiomResult",
    "StructureReport",
    "AxiomFailure",
    "check_higgs_pair",
    "check_saito",
    "check_cv",
    "check_tep",
    "TEPConnection",
]

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class AxiomResult:
    tag: str
    residual: float
    threshold: float
    passed: bool
    mode: str = "max"  # "min" marks nondegeneracy checks where large is good

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "residual": float(self.residual),
            "threshold": float(self.threshold),
            "passed": bool(self.passed),
            "mode": self.mode,
        }


@dataclass
class StructureReport:
    """Per-axiom residuals with an overall verdict."""

    name: str
    results: list[AxiomResult] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __bool__(self) -> bool:
        return self.passed

    def __getitem__(self, tag: str) -> AxiomResult:
        for r in self.results:
            if r.tag == tag:
                return r
        raise KeyError(tag)

    def __contains__(self, tag: str) -> bool:
        return any(r.tag == tag for r in self.results)

    @property
    def tags(self) -> list[str]:
        return [r.tag for r in self.results]

    def failures(self) -> list[str]:
        return [r.tag for r in self.results if not r.passed]

    def max_residual(self, tags: Iterable[str] | None = None) -> float:
        sel = [r for r in self.results if r.mode == "max" and (tags is None or r.tag in tags)]
        return max((r.residual for r in sel), default=0.0)

    def add(self, tag: str, residual: float, threshold: float, mode: str = "max") -> AxiomResult:
        residual = float(residual)
        ok = residual > threshold if mode == "min" else residual < threshold
        r = AxiomResult(tag, residual, float(threshold), bool(ok), mode)
        self.results.append(r)
        return r

    def extend(self, other: "StructureReport", prefix: str = "") -> None:
        for r in other.results:
            self.results.append(AxiomResult(prefix + r.tag, r.residual, r.threshold, r.passed, r.mode))

    def to_dict(self) -> dict:
        out = {"name": self.name, "passed": self.passed, "axioms": [r.to_dict() for r in self.results]}
        if self.notes:
            out["notes"] = self.notes
        return out

    def to_text(self) -> str:
        lines = [f"{self.name}: {'PASS' if self.passed else 'FAIL'}"]
        for r in self.results:
            cmp = ">" if r.mode == "min" else "<"
            lines.append(
                f"  [{'ok' if r.passed else 'FAIL'}] {r.tag}: {r.residual:.3e} (need {cmp} {r.threshold:.3e})"
            )
        for k in sorted(self.notes):
            lines.append(f"  note {k}: {json.dumps(self.notes[k], sort_keys=True)}")
        return "\n".join(lines)


class AxiomFailure(ValueError):
    """Input failed its axiom check; the report is attached."""

    def __init__(self, report: StructureReport):
        super().__init__(f"{report.name} failed: {', '.join(report.failures())}")
        self.report = report


def residual(items, ctx: JetContext, derivatives: int = 0) -> float:
    """Max coefficient magnitude over degrees <= d - derivatives."""
    if isinstance(items, (MatrixJet, LaurentJet)):
        items = [items]
    top = ctx.d - derivatives
    return max((max_abs(M.c, ctx, top) for M in items), default=0.0)


def _threshold(tol: float, scale: float) -> float:
    return tol * (1.0 + scale)


def _pairs(m: int):
    return [(i, j) for i in range(m) for j in range(m) if i < j]


def _higgs_terms(b: ChartBundle) -> dict[str, tuple[list[MatrixJet], int]]:
    b.require("C", "U", "g")
    m = b.m
    C, U, G = b.C, b.U, b.g
    return {
        "C_commute": ([C[i].comm(C[j]) for i, j in _pairs(m)], 0),
        "C_U_commute": ([Ci.comm(U) for Ci in C], 0),
        "C_g_symmetric": ([G @ Ci - Ci.T @ G for Ci in C], 0),
        "U_g_symmetric": ([G @ U - U.T @ G], 0),
    }


def _emit(report: StructureReport, terms: dict, ctx: JetContext, thr: float) -> None:
    for tag, (mats, order) in terms.items():
        report.add(tag, residual(mats, ctx, order), thr)


def check_higgs_pair(b: ChartBundle, tol: float = DEFAULT_TOL) -> StructureReport:
    """Commuting Higgs field, [C, U] = 0 and g-symmetry of C and U."""
    rep = StructureReport("higgs")
    _emit(rep, _higgs_terms(b), b.ctx, _threshold(tol, b.input_scale()))
    return rep


def _holomorphy(mats: Sequence[MatrixJet]) -> float:
    return max((M.antiholomorphic_part_norm() for M in mats), default=0.0)


def check_saito(b: ChartBundle, tol: float = DEFAULT_TOL) -> StructureReport:
    """Flat holomorphic connection nabla^r = d + Gamma with the Saito compatibilities."""
    b.require("C", "U", "V", "g")
    ctx, m = b.ctx, b.m
    Gam = b.gamma10 if b.gamma10 is not None else [MatrixJet.zeros(ctx, b.n) for _ in range(m)]
    thr = _threshold(tol, b.input_scale())
    rep = StructureReport("saito")
    _emit(rep, _higgs_terms(b), ctx, thr)
    C, U, V, G = b.C, b.U, b.V, b.g

    def nab(M, i):
        return M.d(i) + Gam[i].comm(M)

    terms = {
        "connection_flat": ([Gam[j].d(i) - Gam[i].d(j) + Gam[i].comm(Gam[j]) for i, j in _pairs(m)], 1),
        "V_parallel": ([nab(V, i) for i in range(m)], 1),
        "potentiality": ([nab(C[j], i) - nab(C[i], j) for i, j in _pairs(m)], 1),
        "U_C_V_compatible": ([nab(U, i) - C[i].comm(V) + C[i] for i in range(m)], 1),
        "g_parallel": ([G.d(i) - Gam[i].T @ G - G @ Gam[i] for i in range(m)], 1),
        "V_g_skew": ([G @ V + V.T @ G], 0),
    }
    _emit(rep, terms, ctx, thr)
    gam01 = b.gamma01 or []
    rep.add("connection_holomorphic", max(_holomorphy(Gam), residual(gam01, ctx) if gam01 else 0.0), thr)
    rep.add("data_holomorphic", _holomorphy(list(C) + [U, V, G]), thr)
    return rep


def check_cv(b: ChartBundle, tol: float = DEFAULT_TOL) -> StructureReport:
    """CV axioms with D recomputed as the Chern connection of h."""
    b.require("C", "U", "g", "h", "kappa", "Q")
    ctx, m, n = b.ctx, b.m, b.n
    C, U, G, H, k, Q = b.C, b.U, b.g, b.h, b.kappa, b.Q
    thr = _threshold(tol, b.input_scale())
    rep = StructureReport("cv")
    _emit(rep, _higgs_terms(b), ctx, thr)
    A = chern_connection(H)
    zero = [MatrixJet.zeros(ctx, n) for _ in range(m)]
    R = curvature(A, zero)
    kC = [kappa_conjugate(Ci, k) for Ci in C]
    kUk = kappa_conjugate(U, k)
    eye = MatrixJet.identity(ctx, n)

    def D(M, i):
        return M.d(i) + A[i].comm(M)

    terms = {
        "data_holomorphic": ([M - M for M in C], 0),
        "kappa_real": ([k.T @ G @ k - G.conj()], 0),
        "kappa_involutive": ([k @ k.conj() - eye], 0),
        "h_hermitian": ([H - H.H], 0),
        "h_g_kappa_compatible": ([H - G @ k], 0),
        "kappa_parallel": ([k.d(i) + A[i] @ k for i in range(m)] + [k.dbar(i) - k @ A[i].conj() for i in range(m)], 1),
        "C_parallel": ([D(C[j], i) - D(C[i], j) for i, j in _pairs(m)], 1),
        "tt_star": ([R[i][j] + C[i].comm(kC[j]) for i in range(m) for j in range(m)], 2),
        "Q_g_skew": ([G @ Q + Q.T @ G], 0),
        "U_Q_compatible": ([D(U, i) - C[i].comm(Q) + C[i] for i in range(m)], 1),
        "Q_parallel": ([D(Q, i) + C[i].comm(kUk) for i in range(m)], 1),
        "Q_h_hermitian": ([Q.T @ H - H @ Q.conj()], 0),
    }
    del terms["data_holomorphic"]
    _emit(rep, terms, ctx, thr)
    rep.add("data_holomorphic", _holomorphy(list(C) + [U, G]), thr)
    return rep


@dataclass
class TEPConnection:
    """nabla_i = d_i + A[i](z), nabla_{z d_z} = z d_z + Az(z), optional (0,1) part Abar[j](z)."""

    A: list[LaurentJet]
    Az: LaurentJet
    Abar: list[LaurentJet] | None = None

    @property
    def ctx(self) -> JetContext:
        return self.Az.ctx

    def all_forms(self) -> list[LaurentJet]:
        return list(self.A) + [self.Az] + list(self.Abar or [])


def _validate_tep(conn: TEPConnection, P: LaurentJet, w: int) -> None:
    ctx = conn.ctx
    forms = conn.all_forms()
    if len(conn.A) != ctx.m or (conn.Abar is not None and len(conn.Abar) != ctx.m):
        raise BadLaurentRange("need one connection form per coordinate")
    shape = conn.Az.shape
    for F in forms + [P]:
        if F.ctx != ctx:
            raise BadLaurentRange("Laurent data in different jet contexts")
        if F.shape != shape or shape[0] != shape[1]:
            raise BadLaurentRange(f"inconsistent matrix shape {F.shape} vs {shape}")
    if P.high < w:
        raise BadLaurentRange(f"pairing stored up to z^{P.high} but weight is {w}")


def check_tep(conn: TEPConnection, P: LaurentJet, w: int, tol: float = DEFAULT_TOL,
              scale: float | None = None) -> StructureReport:
    """Pole order, flatness in (z, t), and the pairing laws of weight w."""
    _validate_tep(conn, P, w)
    ctx, m = conn.ctx, conn.ctx.m
    if scale is None:
        scale = max([F.norm() for F in conn.all_forms()] + [P.norm()])
    thr = _threshold(tol, scale)
    rep = StructureReport("tep")

    # Poincare rank 1
    low = 0.0
    for F in conn.all_forms()[: m + 1]:
        for k in F.powers():
            if k < -1:
                low = max(low, F.coeff(k).norm())
    for F in conn.Abar or []:
        for k in F.powers():
            if k < 0:
                low = max(low, F.coeff(k).norm())
    rep.add("pole_order", low, thr)

    A, Az, Ab = conn.A, conn.Az, conn.Abar
    flat = []
    for i, j in _pairs(m):
        flat.append(A[j].d(i) - A[i].d(j) + A[i].comm(A[j]))
    for i in range(m):
        flat.append(Az.d(i) - A[i].z_dz() + A[i].comm(Az))
    if Ab is None:
        # holomorphic structure: dbar annihilates everything
        flat.extend(F.dbar(j) for F in A + [Az] for j in range(m))
    else:
        for i in range(m):
            for j in range(m):
                flat.append(Ab[j].d(i) - A[i].dbar(j) + A[i].comm(Ab[j]))
        for i, j in _pairs(m):
            flat.append(Ab[j].dbar(i) - Ab[i].dbar(j) + Ab[i].comm(Ab[j]))
        for j in range(m):
            flat.append(Az.dbar(j) - Ab[j].z_dz() + Ab[j].comm(Az))
    rep.add("flat", residual(flat, ctx, 1), thr)

    sym = 0.0
    for k in P.powers():
        Pk = P.coeff(k)
        sym = max(sym, (Pk.T - Pk * float((-1) ** ((w + k) % 2))).norm())
    rep.add("pairing_symmetric", sym, thr)
    below = max([P.coeff(k).norm() for k in P.powers() if k < w], default=0.0)
    rep.add("pairing_order", below, thr)
    Pw0 = P.coeff(w).constant_term
    smin = float(np.linalg.svd(Pw0, compute_uv=False)[-1])
    rep.add("pairing_nondegenerate", smin, thr, mode="min")

    pflat = []
    for i in range(m):
        pflat.append(P.d(i) - A[i].T @ P - P @ A[i].negate_z())
    pflat.append(P.z_dz() - Az.T @ P - P @ Az.negate_z())
    if Ab is not None:
        for j in range(m):
            pflat.append(P.dbar(j) - Ab[j].T @ P - P @ Ab[j].negate_z())
    rep.add("pairing_flat", residual(pflat, ctx, 1), thr)
    return rep
