"""Deterministic worked examples and a degree-by-degree CV completion utility.

* ``example_rank1``      rank 1 over a line: C = -1, U = u.
* ``example_semisimple`` diagonal join of rank-1 copies.
* ``example_frobenius2`` two-dimensional Frobenius chart with potential
  t1^2 t2 / 2 + t2^4 / 24 (nilpotent multiplication at the origin).
* ``sinh_gordon_jet``    rank 2 over a line, h = diag(e^phi, e^-phi) with phi solving
  dd^bar phi = e^{2 phi} - |t|^2 e^{-2 phi} order by order.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .axioms import DEFAULT_TOL, AxiomFailure, check_cv, check_saito
from .bundle import ChartBundle, frame_change, kappa_conjugate
from .jets import Jet, JetContext, MatrixJet, context

__all__ = [
    "DuplicateEigenvalues",
    "Inconsistent",
    "InconsistentOrder",
    "example_rank1",
    "example_rank1_exp_metric",
    "example_semisimple",
    "example_frobenius2",
    "sinh_gordon_phi",
    "sinh_gordon_jet",
    "sinh_gordon_unfolded",
    "complete_cv_jet",
    "direct_sum",
    "frame_change",
    "single_axiom_perturbations",
    "seeded_potential",
    "harmonic_pair_from_potential",
    "FIXTURES",
]

DEFAULT_DEGREE = 4
SG_PHI0 = 0.2


class DuplicateEigenvalues(ValueError):
    """Eigenvalue offsets of a semisimple join must be pairwise distinct."""


class Inconsistent(ArithmeticError):
    """Completion failed at a given degree."""

    def __init__(self, degree: int, residual: float):
        super().__init__(f"inconsistent at degree {degree} (residual {residual:.3e})")
        self.degree = degree
        self.residual = residual


InconsistentOrder = Inconsistent


def _const(ctx, mat) -> MatrixJet:
    return MatrixJet.constant(ctx, np.asarray(mat, dtype=complex))


def _certify(b: ChartBundle, saito: bool, cv: bool, tol: float = DEFAULT_TOL) -> ChartBundle:
    if saito:
        rep = check_saito(b, tol)
        if not rep.passed:
            raise AxiomFailure(rep)
    if cv:
        rep = check_cv(b, tol)
        if not rep.passed:
            raise AxiomFailure(rep)
    return b


def example_rank1(w: int = 0, d: int = DEFAULT_DEGREE, zorder: int = 6,
                  twisted_pairing: bool = False) -> ChartBundle:
    """Rank 1 over the u-line: C = -1, U = u, V = 0, g = h = 1, kappa = conj, Q = 0.

    With ``twisted_pairing`` the pairing is g = i^w and kappa = i^-w conj, so that
    P(s, s) = i^w z^w while h stays 1.
    """
    ctx = context(1, d)
    one = _const(ctx, [[1.0]])
    zero = _const(ctx, [[0.0]])
    u = Jet.coordinate(ctx, 0)
    phase = 1j ** (w % 4) if twisted_pairing else 1.0
    b = ChartBundle(
        ctx=ctx, n=1, w=w, zorder=zorder, name="e1",
        C=[-one], U=one * u, V=zero, Q=zero, g=one * phase, h=one, kappa=one * np.conj(phase),
        gamma10=[zero], gamma01=[zero],
    )
    return _certify(b, True, True)


def example_rank1_exp_metric(w: int = 0, d: int = DEFAULT_DEGREE) -> ChartBundle:
    """Rank-1 tangent data with g = e^u, h = e^{(u+ubar)/2}, kappa = e^{(ubar-u)/2}.

    Used for the tangent-bundle equivalence chain, where every member is nonzero.
    """
    ctx = context(1, d)
    u = Jet.coordinate(ctx, 0)
    ub = Jet.coordinate(ctx, 0, conjugate=True)
    one = _const(ctx, [[1.0]])
    zero = _const(ctx, [[0.0]])
    return ChartBundle(
        ctx=ctx, n=1, w=w, name="e1-exp",
        C=[-one], U=one * u, V=zero, Q=zero,
        g=one * u.exp(), h=one * ((u + ub) * 0.5).exp(), kappa=one * ((ub - u) * 0.5).exp(),
        gamma10=[one * 0.5], gamma01=[zero],
    )


def example_semisimple(n: int = 2, offsets: Sequence[float] | None = None, w: int = 0,
                       d: int = DEFAULT_DEGREE, zorder: int = 6) -> ChartBundle:
    """Diagonal join of n rank-1 copies with U = diag(u_i + offset_i)."""
    offsets = list(range(n)) if offsets is None else [complex(o) for o in offsets]
    if len(offsets) != n:
        raise ValueError("need one offset per summand")
    if len(set(offsets)) != n:
        raise DuplicateEigenvalues(f"offsets {offsets} repeat")
    ctx = context(n, d)
    C = []
    for i in range(n):
        E = np.zeros((n, n))
        E[i, i] = -1.0
        C.append(_const(ctx, E))
    Uc = np.zeros((n, n, ctx.N), dtype=complex)
    for i in range(n):
        Uc[i, i] = (Jet.coordinate(ctx, i) + offsets[i]).c
    eye = MatrixJet.identity(ctx, n)
    zero = MatrixJet.zeros(ctx, n)
    b = ChartBundle(
        ctx=ctx, n=n, w=w, zorder=zorder, name="e2",
        C=C, U=MatrixJet(ctx, Uc), V=zero, Q=zero, g=eye, h=eye, kappa=eye,
        gamma10=[zero] * n, gamma01=[zero] * n,
    )
    return _certify(b, True, True)


F2_WEIGHT_D = 1.0 / 3.0


def example_frobenius2(w: int = 0, d: int = DEFAULT_DEGREE, zorder: int = 6, verify: bool = True) -> ChartBundle:
    """Saito data of the potential t1^2 t2/2 + t2^4/24 in flat coordinates.

    g = antidiag(1, 1), C_1 = -Id, C_2 = -[[0, t2], [1, 0]],
    E = t1 d1 + (2/3) t2 d2, V = diag(1/6, -1/6), Gamma = 0, d = 1/3.
    """
    ctx = context(2, d)
    t1, t2 = Jet.coordinate(ctx, 0), Jet.coordinate(ctx, 1)
    N = MatrixJet.from_entries([[0.0, t2], [1.0, 0.0]], ctx)
    eye = MatrixJet.identity(ctx, 2)
    zero = MatrixJet.zeros(ctx, 2)
    V = _const(ctx, np.diag([1.0 / 6.0, -1.0 / 6.0]))
    b = ChartBundle(
        ctx=ctx, n=2, w=w, zorder=zorder, name="f2",
        C=[-eye, -N], U=eye * t1 + N * (t2 * (2.0 / 3.0)), V=V,
        g=_const(ctx, [[0.0, 1.0], [1.0, 0.0]]), gamma10=[zero, zero], gamma01=[zero, zero],
    )
    _certify(b, True, False)
    if verify:
        from .unfolding import build_frobenius, check_frobenius

        f, gM, gamM = build_frobenius(b, zeta=0, d=F2_WEIGHT_D)
        rep = check_frobenius(f, gM, F2_WEIGHT_D, gamM)
        if not rep.passed:
            raise AxiomFailure(rep)
    return b


def sinh_gordon_phi(ctx: JetContext, order: int, phi0: float = SG_PHI0, var: int = 0) -> Jet:
    """Radial real solution of dd^bar phi = e^{2 phi} - |t|^2 e^{-2 phi} to total degree ``order``.

    Free boundary data phi(t, 0) and phi(0, tbar) are fixed to the constant phi0.
    """
    if order > ctx.d:
        raise ValueError("order must not exceed the context degree")
    t = Jet.coordinate(ctx, var)
    tb = Jet.coordinate(ctx, var, conjugate=True)
    phi = Jet.constant(ctx, phi0)
    mons = ctx.monomials
    other = np.delete(np.arange(2 * ctx.m), [var, var + ctx.m])
    for s in range(0, order - 1):
        rhs = (phi * 2.0).exp() - t * tb * (phi * -2.0).exp()
        for k in np.flatnonzero(ctx.degree == s):
            row = mons[k]
            if other.size and np.any(row[other]):
                continue
            a, b_ = row[var], row[var + ctx.m]
            tgt = row.copy()
            tgt[var] += 1
            tgt[var + ctx.m] += 1
            phi.c[ctx.index[tuple(int(x) for x in tgt)]] = rhs.c[k] / ((a + 1) * (b_ + 1))
    return phi


def _sg_tensors(ctx: JetContext, var: int, phi: Jet):
    t = Jet.coordinate(ctx, var)
    N = MatrixJet.from_entries([[0.0, 1.0], [t, 0.0]], ctx)
    ep, em = phi.exp(), (-phi).exp()
    H = MatrixJet.from_entries([[ep, 0.0], [0.0, em]], ctx)
    k = MatrixJet.from_entries([[0.0, em], [ep, 0.0]], ctx)
    q = t * phi.d(var) * (2.0 / 3.0) - 1.0 / 6.0
    Q = MatrixJet.from_entries([[q, 0.0], [0.0, -q]], ctx)
    G = _const(ctx, [[0.0, 1.0], [1.0, 0.0]])
    return N, H, k, Q, G, t


def sinh_gordon_jet(order: int = 6, d: int | None = None, phi0: float = SG_PHI0, w: int = 0,
                    verify: bool = True) -> ChartBundle:
    """Rank-2 CV data over a line with nilpotent-at-origin Higgs field N = [[0, 1], [t, 0]]."""
    d = order if d is None else d
    ctx = context(1, d)
    phi = sinh_gordon_phi(ctx, order, phi0)
    N, H, k, Q, G, t = _sg_tensors(ctx, 0, phi)
    b = ChartBundle(ctx=ctx, n=2, w=w, name="sg", C=[-N], U=N * (t * (2.0 / 3.0)), Q=Q, g=G, h=H, kappa=k)
    return _certify(b, False, verify)


def sinh_gordon_unfolded(order: int = 4, d: int | None = None, phi0: float = SG_PHI0, w: int = 0,
                         verify: bool = True) -> ChartBundle:
    """Two-parameter extension of SG: t1 acts by -C_1 = Id and U gains t1 Id; h ignores t1."""
    d = order if d is None else d
    ctx = context(2, d)
    phi = sinh_gordon_phi(ctx, order, phi0, var=1)
    N, H, k, Q, G, t2 = _sg_tensors(ctx, 1, phi)
    eye = MatrixJet.identity(ctx, 2)
    t1 = Jet.coordinate(ctx, 0)
    b = ChartBundle(
        ctx=ctx, n=2, w=w, name="sg-unfolded",
        C=[-eye, -N], U=eye * t1 + N * (t2 * (2.0 / 3.0)), Q=Q, g=G, h=H, kappa=k,
    )
    return _certify(b, False, verify)


# -- completion ---------------------------------------------------------------

_CV_ORDERS = {
    "kappa_real": 0, "kappa_involutive": 0, "h_hermitian": 0, "h_g_kappa_compatible": 0,
    "kappa_parallel": 1, "C_parallel": 1, "tt_star": 2, "Q_g_skew": 1, "U_Q_compatible": 1,
    "Q_parallel": 2, "Q_h_hermitian": 1,
}


def _cv_residual_vector(b: ChartBundle, top: int, skip: tuple[str, ...] = ()) -> np.ndarray:
    """Raw CV residual coefficients, each axiom truncated at top - its lag."""
    from .bundle import chern_connection, curvature

    ctx, m, n = b.ctx, b.m, b.n
    C, U, G, H, k, Q = b.C, b.U, b.g, b.h, b.kappa, b.Q
    A = chern_connection(H)
    R = curvature(A, [MatrixJet.zeros(ctx, n)] * m)
    kC = [kappa_conjugate(Ci, k) for Ci in C]
    kUk = kappa_conjugate(U, k)
    eye = MatrixJet.identity(ctx, n)

    def D(M, i):
        return M.d(i) + A[i].comm(M)

    terms = {
        "kappa_real": [k.T @ G @ k - G.conj()],
        "kappa_involutive": [k @ k.conj() - eye],
        "h_hermitian": [H - H.H],
        "kappa_parallel": [k.d(i) + A[i] @ k for i in range(m)] + [k.dbar(i) - k @ A[i].conj() for i in range(m)],
        "tt_star": [R[i][j] + C[i].comm(kC[j]) for i in range(m) for j in range(m)],
        "Q_g_skew": [G @ Q + Q.T @ G],
        "U_Q_compatible": [D(U, i) - C[i].comm(Q) + C[i] for i in range(m)],
        "Q_parallel": [D(Q, i) + C[i].comm(kUk) for i in range(m)],
        "Q_h_hermitian": [Q.T @ H - H @ Q.conj()],
    }
    parts = []
    for tag, mats in terms.items():
        if tag in skip:
            continue
        mask = ctx.degree_mask(top - _CV_ORDERS[tag])
        for M in mats:
            sel = M.c[..., mask].ravel()
            parts.append(sel.real)
            parts.append(sel.imag)
    return np.concatenate(parts) if parts else np.zeros(0)


def complete_cv_jet(partial: ChartBundle, unknowns: Iterable[str] = ("h", "Q"),
                    tol: float = DEFAULT_TOL) -> ChartBundle:
    """Fill in the higher jet coefficients of h and/or Q so the CV axioms hold to degree d.

    Only the constant terms of the selected tensors are read; kappa is kept equal to
    g^-1 h throughout.  Each degree is an affine least-squares problem in the new
    coefficients, solved with minimum norm.
    """
    unknowns = tuple(unknowns)
    bad = set(unknowns) - {"h", "Q"}
    if bad:
        raise ValueError(f"cannot complete {sorted(bad)}; choose from h, Q")
    partial.require("C", "U", "g", "h", "Q")
    ctx, n = partial.ctx, partial.n
    Ginv = partial.g.inv()
    b = partial.copy()
    mask0 = ctx.degree == 0
    if "h" in unknowns:
        b.h = MatrixJet(ctx, np.where(mask0, partial.h.c, 0))
    if "Q" in unknowns:
        b.Q = MatrixJet(ctx, np.where(mask0, partial.Q.c, 0))
    b.kappa = Ginv @ b.h
    scale = 1.0 + partial.input_scale()

    from .axioms import check_higgs_pair

    higgs = check_higgs_pair(b, tol)
    r0 = _cv_residual_vector(b, 0)
    r0n = max(float(np.max(np.abs(r0))) if r0.size else 0.0, higgs.max_residual())
    if r0n > tol * scale:
        raise Inconsistent(0, r0n)

    # the last pass fixes the top-degree Q coefficient from the axioms that do not
    # need h beyond degree d
    tail_skip = ("tt_star", "kappa_parallel", "U_Q_compatible")
    for deg in range(1, ctx.d + 2):
        skip = tail_skip if deg == ctx.d + 1 else ()
        slots = []  # (tensor name, monomial index set)
        if "h" in unknowns and deg <= ctx.d:
            slots.append(("h", np.flatnonzero(ctx.degree == deg)))
        if "Q" in unknowns:
            slots.append(("Q", np.flatnonzero(ctx.degree == deg - 1)))
        if not slots:
            break
        basis = []
        for nm, idx in slots:
            for r in range(n):
                for c in range(n):
                    for kk in idx:
                        for phase in (1.0, 1j):
                            basis.append((nm, r, c, kk, phase))

        def apply(x):
            trial = b.copy()
            for coef, (nm, r, c, kk, phase) in zip(x, basis):
                if coef == 0.0:
                    continue
                getattr(trial, nm).c[r, c, kk] += coef * phase
            trial.kappa = Ginv @ trial.h
            return trial

        base_r = _cv_residual_vector(apply(np.zeros(len(basis))), deg, skip)
        J = np.empty((base_r.size, len(basis)))
        for col in range(len(basis)):
            e = np.zeros(len(basis))
            e[col] = 1.0
            J[:, col] = _cv_residual_vector(apply(e), deg, skip) - base_r
        x, *_ = np.linalg.lstsq(J, -base_r, rcond=None)
        x[np.abs(x) < 1e-15] = 0.0
        b = apply(x)
        res = _cv_residual_vector(b, deg, skip)
        rn = float(np.max(np.abs(res))) if res.size else 0.0
        if rn > tol * scale:
            raise Inconsistent(deg, rn)
    b.kappa = Ginv @ b.h
    return b


# -- structural helpers ---------------------------------------------------------

def _embed(M: MatrixJet, ctx: JetContext, offset: int) -> MatrixJet:
    """Reinterpret a jet in fewer variables as a jet in ctx, shifting variable indices."""
    src = M.ctx
    out = np.zeros(M.c.shape[:2] + (ctx.N,), dtype=complex)
    for k, row in enumerate(src.monomials):
        full = np.zeros(2 * ctx.m, dtype=np.int64)
        full[offset : offset + src.m] = row[: src.m]
        full[ctx.m + offset : ctx.m + offset + src.m] = row[src.m :]
        if full.sum() <= ctx.d:
            out[..., ctx.index[tuple(int(x) for x in full)]] = M.c[..., k]
    return MatrixJet(ctx, out)


def direct_sum(*parts: ChartBundle, name: str = "") -> ChartBundle:
    """Join charts over the product of their bases (the bundle is the block sum)."""
    d = min(p.ctx.d for p in parts)
    m = sum(p.m for p in parts)
    n = sum(p.n for p in parts)
    ctx = context(m, d)
    offs_m = np.cumsum([0] + [p.m for p in parts])
    offs_n = np.cumsum([0] + [p.n for p in parts])

    def block(get):
        out = np.zeros((n, n, ctx.N), dtype=complex)
        for p, om, on in zip(parts, offs_m, offs_n):
            M = get(p)
            if M is None:
                return None
            out[on : on + p.n, on : on + p.n] = _embed(M, ctx, om).c
        return MatrixJet(ctx, out)

    def per_coord(attr):
        mats = []
        for p, om, on in zip(parts, offs_m, offs_n):
            lst = getattr(p, attr)
            if lst is None:
                return None
            for M in lst:
                out = np.zeros((n, n, ctx.N), dtype=complex)
                out[on : on + p.n, on : on + p.n] = _embed(M, ctx, om).c
                mats.append(MatrixJet(ctx, out))
        return mats

    kw = {nm: block(lambda p, nm=nm: getattr(p, nm)) for nm in ("U", "V", "Q", "g", "h", "kappa", "utilde")}
    return ChartBundle(
        ctx=ctx, n=n, w=parts[0].w, zorder=min(p.zorder for p in parts),
        name=name or "+".join(p.name for p in parts),
        C=per_coord("C"), gamma10=per_coord("gamma10"), gamma01=per_coord("gamma01"),
        ctilde=per_coord("ctilde"), **kw,
    )


def single_axiom_perturbations(eps: float = 1e-2, d: int = DEFAULT_DEGREE) -> list[tuple[str, ChartBundle]]:
    """Twelve Saito records, each with one tensor shifted by eps * t1 * (fixed matrix)."""
    bases = [example_rank1(d=d), example_semisimple(2, (0.0, 1.0), d=d), example_frobenius2(d=d, verify=False)]
    out = []
    for b in bases:
        ctx, n = b.ctx, b.n
        t1 = Jet.coordinate(ctx, 0)
        bump = np.ones((n, n)) if n > 1 else np.ones((1, 1))
        if n > 1:
            bump[0, 1] = 2.0
        E = MatrixJet.constant(ctx, bump) * (t1 * eps)
        Esym = MatrixJet.constant(ctx, bump + bump.T) * (t1 * eps)
        choices = {
            "C": lambda b=b, E=E: b.replace(C=[b.C[0] + E] + list(b.C[1:])),
            "U": lambda b=b, E=E: b.replace(U=b.U + E),
            "V": lambda b=b, E=E: b.replace(V=b.V + E),
            "g": lambda b=b, E=Esym: b.replace(g=b.g + E),
            "Gamma": lambda b=b, E=E: b.replace(gamma10=[b.gamma10[0] + E] + list(b.gamma10[1:])),
        }
        picks = ("C", "U", "V", "g") if b.n == 1 else ("C", "U", "V", "Gamma")
        for key in picks:
            out.append((f"{b.name}:{key}", choices[key]()))
    return out


def seeded_potential(b: ChartBundle, seed: int = 0, scale: float = 0.1) -> MatrixJet:
    """A g-symmetric endomorphism jet with both t and tbar dependence."""
    rng = np.random.default_rng(seed)
    ctx, n = b.ctx, b.n
    coeffs = np.zeros((n, n, ctx.N), dtype=complex)
    low = np.flatnonzero(ctx.degree <= 2)
    coeffs[..., low] = scale * (rng.standard_normal((n, n, low.size)) + 1j * rng.standard_normal((n, n, low.size)))
    B = MatrixJet(ctx, coeffs)
    Ginv = b.g.inv()
    return (B + Ginv @ B.T @ b.g) * 0.5


def harmonic_pair_from_potential(saito: ChartBundle, At: MatrixJet) -> ChartBundle:
    """Record whose mixed-type connection is the Saito connection gauged by exp(-z At).

    With A_1 = -At and A_2 = At^2 / 2 the record carries the (1,0) forms Gamma - [At, C],
    Q = V - [U, At], the (0,1) data dbar At, and the z-coefficient of the U-direction
    implied by the gauge.  h = Id and kappa = antidiag(1, 1) complete a record whose
    (C, U, g) agree with the Saito side; it is not a full CV structure.
    """
    ctx, n, m = saito.ctx, saito.n, saito.m
    C, U, V = saito.C, saito.U, saito.V
    gam = saito.gamma10 or [MatrixJet.zeros(ctx, n)] * m
    A1 = -At
    A2 = At @ At * 0.5
    Q = V - U.comm(At)
    utilde = A1 + U.comm(A2) - Q @ A1 + A1 @ V
    k = _const(ctx, np.fliplr(np.eye(n)))
    return ChartBundle(
        ctx=ctx, n=n, w=saito.w, zorder=saito.zorder, name=saito.name + "-harmonic",
        C=list(C), U=U, V=V, g=saito.g, Q=Q, h=MatrixJet.identity(ctx, n), kappa=k,
        gamma10=[gam[i] - At.comm(C[i]) for i in range(m)],
        gamma01=[MatrixJet.zeros(ctx, n)] * m,
        ctilde=[At.dbar(j) for j in range(m)], utilde=utilde,
    )


FIXTURES = {
    "e1": example_rank1,
    "e2": lambda **kw: example_semisimple(2, (0.0, 1.0), **kw),
    "f2": example_frobenius2,
    "sg": sinh_gordon_jet,
    "sg-unfolded": sinh_gordon_unfolded,
}
