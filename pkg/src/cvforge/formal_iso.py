"""Order-by-order formal gauge equivalence Psi = Id + z A_1 + z^2 A_2 + ...

Psi intertwines the Saito-side connection (A_i = Gamma_i + C_i/z, A_z = U/z - V + w/2)
with the CV-side mixed-type connection (D_i + C_i/z, Dbar_j + z Ct_j, U/z - Q + w/2 - z Ut).
Comparing powers of z gives, at order k, the linear equations

    [C_i, A_k]        = -(d_i A_{k-1} + D_i A_{k-1} - A_{k-1} Gamma_i)
    [U, A_k]          = -((k-1) A_{k-1} - Q A_{k-1} + A_{k-1} V - Ut A_{k-2})
    dbar_j A_k + Gb_j A_k = -Ct_j A_{k-1}
    sum_{a+b=k} (-1)^b A_a^T G A_b = 0.

The kernel of this system is fixed by requiring that the next U-equation can be
solved, i.e. by its projection onto the cokernel of [U, .].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .axioms import DEFAULT_TOL, StructureReport, check_cv, check_saito, residual
from .bundle import ChartBundle, chern_connection, g_adjoint, h_adjoint
from .correspondences import cv_tilde_data
from .jets import JetContext, MatrixJet

__all__ = [
    "SharedDataMismatch",
    "OrderTooLow",
    "FormalIso",
    "shared_data_residual",
    "solve_formal_iso",
    "extract_potential",
    "check_harmonic",
]

RANK_RTOL = 1e-10


class SharedDataMismatch(ValueError):
    """The two records do not share (C, U, g)."""


class OrderTooLow(ValueError):
    """The isomorphism was not solved to the order an operation needs."""


@dataclass
class FormalIso:
    A: list[MatrixJet]
    achieved_order: int
    log: list[dict] = field(default_factory=list)

    @property
    def K(self) -> int:
        return len(self.log)

    def to_dict(self) -> dict:
        return {"achieved_order": self.achieved_order, "requested_order": self.K, "orders": self.log}


class _Ops:
    """Linear operators on vec(X) for n x n matrix jets X, row-major (r, c, monomial)."""

    def __init__(self, ctx: JetContext, n: int):
        self.ctx, self.n = ctx, n
        self.size = n * n * ctx.N
        self.eye_n = np.eye(n)
        deg = np.broadcast_to(ctx.degree, (n, n, ctx.N)).ravel()
        self.row_degree = deg
        idx = np.arange(self.size).reshape(n, n, ctx.N)
        self.transpose_perm = np.transpose(idx, (1, 0, 2)).ravel()

    def left(self, M: MatrixJet) -> np.ndarray:
        op = self.ctx.mult_operator(M.c)  # (r, l, a, b)
        return np.einsum("rlab,cC->rcalCb", op, self.eye_n).reshape(self.size, self.size)

    def right(self, M: MatrixJet) -> np.ndarray:
        op = self.ctx.mult_operator(M.c)  # (l, c, a, b)
        return np.einsum("lcab,rR->rcaRlb", op, self.eye_n).reshape(self.size, self.size)

    def ad(self, M: MatrixJet) -> np.ndarray:
        return self.left(M) - self.right(M)

    def dbar(self, j: int) -> np.ndarray:
        return np.kron(np.eye(self.n * self.n), self.ctx.deriv_operator(j, holomorphic=False))

    def transpose(self) -> np.ndarray:
        P = np.zeros((self.size, self.size))
        P[np.arange(self.size), self.transpose_perm] = 1.0
        return P

    def mask(self, lag: int) -> np.ndarray:
        return self.row_degree <= self.ctx.d - lag

    def vec(self, M: MatrixJet) -> np.ndarray:
        return M.c.ravel()

    def mat(self, x: np.ndarray) -> MatrixJet:
        return MatrixJet(self.ctx, x.reshape(self.n, self.n, self.ctx.N))


def shared_data_residual(saito: ChartBundle, cv: ChartBundle) -> float:
    """Max discrepancy of (C, U, g) between the two records (the order -1 condition)."""
    saito.require("C", "U", "g")
    cv.require("C", "U", "g")
    if saito.ctx != cv.ctx or saito.n != cv.n:
        return float("inf")
    diffs = [a - b for a, b in zip(saito.C, cv.C)] + [saito.U - cv.U, saito.g - cv.g]
    return residual(diffs, saito.ctx)


def _cv_connection(cv: ChartBundle):
    ctx, n, m = cv.ctx, cv.n, cv.m
    if cv.gamma10 is not None:
        g10 = list(cv.gamma10)
        g01 = list(cv.gamma01) if cv.gamma01 is not None else [MatrixJet.zeros(ctx, n)] * m
        lag = 0
    else:
        cv.require("h")
        g10 = chern_connection(cv.h)
        g01 = [MatrixJet.zeros(ctx, n)] * m
        lag = 1
    return g10, g01, lag


def _null_space(M: np.ndarray, rtol: float = RANK_RTOL):
    if M.shape[0] == 0:
        return np.eye(M.shape[1]), 0
    u, s, vh = np.linalg.svd(M, full_matrices=True)
    smax = s[0] if s.size else 0.0
    r = int(np.sum(s > rtol * max(smax, 1.0)))
    return vh[r:].conj().T, r


def _left_null(M: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    u, s, vh = np.linalg.svd(M, full_matrices=True)
    smax = s[0] if s.size else 0.0
    r = int(np.sum(s > rtol * max(smax, 1.0)))
    return u[:, r:]


def solve_formal_iso(saito: ChartBundle, cv: ChartBundle, K: int | None = None, tol: float = DEFAULT_TOL,
                     strict: bool = False) -> FormalIso:
    """Solve for A_1..A_K, stopping at the first order whose system is inconsistent.

    ``strict`` additionally requires both records to pass their own axiom checks.
    """
    K = saito.zorder if K is None else int(K)
    scale = 1.0 + max(saito.input_scale(), cv.input_scale())
    thr = tol * scale
    shared = shared_data_residual(saito, cv)
    if not shared < thr:
        raise SharedDataMismatch(f"(C, U, g) differ by {shared:.3e}")
    if strict:
        for rep in (check_saito(saito, tol), check_cv(cv, tol)):
            if not rep.passed:
                raise SharedDataMismatch(f"{rep.name} axioms fail: {rep.failures()}")
    saito.require("V")
    cv.require("Q")
    ctx, n, m = saito.ctx, saito.n, saito.m
    ops = _Ops(ctx, n)
    C, U, V, G = saito.C, saito.U, saito.V, saito.g
    Gam = saito.gamma10 or [MatrixJet.zeros(ctx, n)] * m
    D, Db, conn_lag = _cv_connection(cv)
    Ct, Ut = cv_tilde_data(cv)
    Q = cv.Q

    adC = [ops.ad(Ci) for Ci in C]
    adU = ops.ad(U)
    dbar_ops = [ops.dbar(j) + ops.left(Db[j]) for j in range(m)]
    Tr = ops.transpose()
    GT = ops.right(G) @ Tr
    GL = ops.left(G)
    W = _left_null(adU)
    WH = W.conj().T
    look_base = -ops.left(Q) + ops.right(V)
    lag_t = 1 + conn_lag

    eye = MatrixJet.identity(ctx, n)
    zero = MatrixJet.zeros(ctx, n)
    A = [eye]
    log = []
    achieved = 0
    failed = False
    for k in range(1, K + 1):
        Ak1 = A[k - 1]
        Ak2 = A[k - 2] if k >= 2 else zero
        blocks, rhs, tags = [], [], []

        def add(tag, op, r, lag):
            msk = ops.mask(lag)
            blocks.append(op[msk])
            rhs.append(r[msk])
            tags.append((tag, int(msk.sum())))

        for i in range(m):
            r = -(Ak1.d(i) + D[i] @ Ak1 - Ak1 @ Gam[i])
            add(f"t{i}", adC[i], ops.vec(r), lag_t)
        r = -((k - 1) * Ak1 - Q @ Ak1 + Ak1 @ V - Ut @ Ak2)
        add("U", adU, ops.vec(r), 0)
        for j in range(m):
            add(f"tbar{j}", dbar_ops[j], ops.vec(-(Ct[j] @ Ak1)), 1 + conn_lag)
        pr = zero
        for a in range(1, k):
            pr = pr + (A[a].T @ G @ A[k - a]) * float((-1) ** (k - a))
        add("pairing", GT + float((-1) ** k) * GL, ops.vec(-pr), 0)

        B = np.vstack(blocks)
        beta = np.concatenate(rhs)
        Z, rank_base = _null_space(B)
        x_p, *_ = np.linalg.lstsq(B, beta, rcond=None)
        look_op = WH @ (k * np.eye(ops.size) + look_base)
        look_rhs = WH @ ops.vec(Ut @ Ak1)
        x = x_p
        if Z.shape[1]:
            y, *_ = np.linalg.lstsq(look_op @ Z, look_rhs - look_op @ x_p, rcond=None)
            x = x_p + Z @ y
        res = float(np.max(np.abs(B @ x - beta))) if beta.size else 0.0
        look_res = float(np.max(np.abs(look_op @ x - look_rhs))) if look_rhs.size else 0.0
        full = np.vstack([B, look_op])
        s = np.linalg.svd(full, compute_uv=False)
        rank = int(np.sum(s > RANK_RTOL * max(s[0] if s.size else 0.0, 1.0)))
        parts = {}
        off = 0
        for (tag, cnt) in tags:
            parts[tag] = float(np.max(np.abs((B @ x - beta)[off : off + cnt]))) if cnt else 0.0
            off += cnt
        ok = res < thr
        log.append({
            "order": k,
            "residual": res,
            "lookahead_residual": look_res,
            "threshold": thr,
            "passed": bool(ok),
            "unknowns": ops.size,
            "rank": rank,
            "base_rank": rank_base,
            "kernel_dim": ops.size - rank,
            "equation_residuals": parts,
        })
        A.append(ops.mat(x))
        if not ok:
            failed = True
            break
        achieved = k
    del failed
    return FormalIso(A=A[1:], achieved_order=achieved, log=log)


def extract_potential(iso: FormalIso, cv: ChartBundle) -> MatrixJet:
    """g-symmetric part of -A_1^flat."""
    if iso.achieved_order < 1:
        raise OrderTooLow("need achieved order >= 1")
    cv.require("h", "g")
    B = -h_adjoint(iso.A[0], cv.h)
    return (B + g_adjoint(B, cv.g)) * 0.5


def check_harmonic(saito: ChartBundle, cv: ChartBundle, A: MatrixJet, tol: float = DEFAULT_TOL) -> StructureReport:
    """The three relations tying the Saito and CV connections through A^flat."""
    ctx, m = saito.ctx, saito.m
    scale = max(saito.input_scale(), cv.input_scale(), A.norm())
    thr = tol * (1.0 + scale)
    rep = StructureReport("harmonic")
    Af = h_adjoint(A, cv.h)
    rep.add("potential_g_symmetric", residual(A - g_adjoint(A, cv.g), ctx), thr)
    Gam = saito.gamma10 or [MatrixJet.zeros(ctx, saito.n)] * m
    D, Db, lag = _cv_connection(cv)
    Ct, _ = cv_tilde_data(cv)
    rep.add("connection_shift", residual([D[i] - Gam[i] + Af.comm(saito.C[i]) for i in range(m)], ctx, lag), thr)
    rep.add("Q_shift", residual(cv.Q - saito.V + saito.U.comm(Af), ctx), thr)
    rep.add("dbar_potential", residual([Af.dbar(j) + Db[j].comm(Af) - Ct[j] for j in range(m)], ctx, 1 + lag), thr)
    return rep
