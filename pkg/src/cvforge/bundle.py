"""Chart-level bundle records and the differential-geometry primitives on them.

Conventions, fixed once:

* Endomorphisms act on coefficient columns; ``A @ s`` is the image of the section ``s``.
* Hermitian forms are linear in the first slot: ``h(a, b) = a^T H conj(b)``, with ``H^T = conj(H)``.
* A connection is ``D_i s = d_i s + A_i s`` and ``D_jbar s = dbar_j s + Abar_j s``.
  The Chern connection of ``h`` has ``Abar = 0`` and ``A_i = (d_i H . H^-1)^T``.
* Curvature is ``R(d_i, dbar_j) = [D_i, D_jbar]``.
* The antilinear map is ``kappa(s) = k conj(s)``, so ``kappa M kappa`` has the matrix
  ``k conj(M) conj(k)``.
"""

from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .jets import Jet, JetContext, MatrixJet, NonUnit, invert_matrix

__all__ = [
    "DegenerateMetric",
    "MissingTensor",
    "ChartBundle",
    "VectorFieldJet",
    "chern_connection",
    "curvature",
    "lie_bracket",
    "lie_derivative_h",
    "lie_derivative_g",
    "dual_frame",
    "h_adjoint",
    "g_adjoint",
    "kappa_conjugate",
    "covariant_end",
    "is_hermitian_residual",
    "frame_change",
]


class DegenerateMetric(ArithmeticError):
    """A metric whose constant term is singular."""


class MissingTensor(KeyError):
    """A checker needed a tensor the chart does not carry."""


TENSOR_NAMES = ("U", "V", "Q", "g", "h", "kappa")
LIST_TENSOR_NAMES = ("C", "gamma10", "gamma01", "ctilde")
EXTRA_NAMES = ("utilde",)


@dataclass
class ChartBundle:
    """All tensors of one chart, in the holomorphic frame of K.

    ``C``, ``gamma10`` and ``gamma01`` hold one matrix per coordinate.  ``ctilde`` and
    ``utilde`` optionally override ``kappa C kappa`` and ``kappa U kappa``; they let a
    caller describe the (0,1)-part of a connection directly.
    """

    ctx: JetContext
    n: int
    w: int = 0
    zorder: int = 6
    C: list[MatrixJet] | None = None
    U: MatrixJet | None = None
    V: MatrixJet | None = None
    Q: MatrixJet | None = None
    g: MatrixJet | None = None
    h: MatrixJet | None = None
    kappa: MatrixJet | None = None
    gamma10: list[MatrixJet] | None = None
    gamma01: list[MatrixJet] | None = None
    ctilde: list[MatrixJet] | None = None
    utilde: MatrixJet | None = None
    name: str = ""

    @property
    def m(self) -> int:
        return self.ctx.m

    def require(self, *names: str) -> None:
        missing = [nm for nm in names if getattr(self, nm) is None]
        if missing:
            raise MissingTensor(f"chart lacks tensor(s): {', '.join(missing)}")

    def replace(self, **changes) -> "ChartBundle":
        return dataclasses.replace(self, **changes)

    def copy(self) -> "ChartBundle":
        return copy.deepcopy(self)

    def tensors(self) -> dict[str, MatrixJet | list[MatrixJet]]:
        out = {}
        for nm in LIST_TENSOR_NAMES + TENSOR_NAMES + EXTRA_NAMES:
            val = getattr(self, nm)
            if val is not None:
                out[nm] = val
        return out

    def input_scale(self) -> float:
        """Largest coefficient magnitude among the stored tensors."""
        best = 0.0
        for val in self.tensors().values():
            for M in val if isinstance(val, list) else [val]:
                best = max(best, M.norm())
        return best

    def connection(self) -> tuple[list[MatrixJet], list[MatrixJet]]:
        """Chern connection of h (the only connection a CV check trusts)."""
        self.require("h")
        return chern_connection(self.h), [MatrixJet.zeros(self.ctx, self.n) for _ in range(self.m)]

    def kck(self, M: MatrixJet) -> MatrixJet:
        self.require("kappa")
        return kappa_conjugate(M, self.kappa)

    def invariant_violations(self, tol: float = 1e-9) -> list[str]:
        """Names of violated record invariants (holomorphy, symmetry, hermitian, kappa)."""
        bad = []
        scale = 1.0 + self.input_scale()
        thr = tol * scale
        for nm in ("g", "U", "V"):
            M = getattr(self, nm)
            if M is not None and M.antiholomorphic_part_norm() > thr:
                bad.append(f"{nm} holomorphic")
        if self.C is not None:
            if len(self.C) != self.m:
                bad.append("C has one matrix per coordinate")
            elif any(M.antiholomorphic_part_norm() > thr for M in self.C):
                bad.append("C holomorphic")
        if self.g is not None and (self.g - self.g.T).norm() > thr:
            bad.append("g symmetric")
        if self.h is not None and is_hermitian_residual(self.h) > thr:
            bad.append("h hermitian")
        if self.kappa is not None:
            inv = (self.kappa @ self.kappa.conj() - MatrixJet.identity(self.ctx, self.n)).norm()
            if inv > thr:
                bad.append("kappa involutive")
            if self.g is not None and self.h is not None:
                if (self.h - self.g @ self.kappa).norm() > thr:
                    bad.append("h = g(., kappa .)")
        for nm, val in self.tensors().items():
            for M in val if isinstance(val, list) else [val]:
                if M.ctx != self.ctx or M.shape != (self.n, self.n):
                    bad.append(f"{nm} shape/context")
                    break
        return bad


@dataclass(frozen=True)
class VectorFieldJet:
    """Holomorphic-index vector field sum_i X^i d_i with jet coefficients."""

    components: tuple[Jet, ...]

    def __init__(self, components: Sequence[Jet]):
        object.__setattr__(self, "components", tuple(components))
        ctx = self.components[0].ctx
        if any(c.ctx != ctx for c in self.components):
            raise ValueError("components must share one context")

    @property
    def ctx(self) -> JetContext:
        return self.components[0].ctx

    @property
    def m(self) -> int:
        return len(self.components)

    @classmethod
    def coordinate(cls, ctx: JetContext, i: int) -> "VectorFieldJet":
        comps = [Jet.constant(ctx, 1.0 if k == i else 0.0) for k in range(ctx.m)]
        return cls(comps)

    @classmethod
    def constant(cls, ctx: JetContext, vec) -> "VectorFieldJet":
        return cls([Jet.constant(ctx, complex(v)) for v in np.asarray(vec).ravel()])

    @classmethod
    def from_column(cls, col: MatrixJet) -> "VectorFieldJet":
        return cls([col.entry(i, 0) for i in range(col.rows)])

    def column(self) -> MatrixJet:
        return MatrixJet(self.ctx, np.stack([c.c for c in self.components])[:, None, :])

    def __add__(self, other: "VectorFieldJet") -> "VectorFieldJet":
        return VectorFieldJet([a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other: "VectorFieldJet") -> "VectorFieldJet":
        return VectorFieldJet([a - b for a, b in zip(self.components, other.components)])

    def __mul__(self, s) -> "VectorFieldJet":
        return VectorFieldJet([a * s for a in self.components])

    __rmul__ = __mul__

    def apply(self, f):
        """Derivative X(f) of a Jet or MatrixJet."""
        acc = None
        for i, Xi in enumerate(self.components):
            term = f.d(i) * Xi
            acc = term if acc is None else acc + term
        return acc

    def apply_conjugate(self, f):
        """Derivative Xbar(f) = sum conj(X^i) dbar_i f."""
        acc = None
        for i, Xi in enumerate(self.components):
            term = f.dbar(i) * Xi.conj()
            acc = term if acc is None else acc + term
        return acc

    def jacobian(self) -> MatrixJet:
        """(J)_ab = d_b X^a."""
        m = self.m
        c = np.zeros((m, m, self.ctx.N), dtype=complex)
        for a in range(m):
            for b in range(m):
                c[a, b] = self.components[a].d(b).c
        return MatrixJet(self.ctx, c)

    def evaluate(self, point) -> np.ndarray:
        return np.array([c.evaluate(point) for c in self.components])

    def norm(self, max_degree: int | None = None) -> float:
        return max(c.norm(max_degree) for c in self.components)

    def contract(self, mats: Sequence[MatrixJet]) -> MatrixJet:
        """sum_i X^i M_i."""
        acc = None
        for Xi, M in zip(self.components, mats):
            term = M * Xi
            acc = term if acc is None else acc + term
        return acc


def _safe_inverse(H: MatrixJet) -> MatrixJet:
    try:
        return invert_matrix(H)
    except NonUnit as exc:
        raise DegenerateMetric(str(exc)) from exc


def chern_connection(h: MatrixJet) -> list[MatrixJet]:
    """(1,0) connection matrices A_i of the Chern connection; the (0,1) part is zero."""
    Hinv = _safe_inverse(h)
    return [(h.d(i) @ Hinv).T for i in range(h.ctx.m)]


def curvature(gamma10: Sequence[MatrixJet], gamma01: Sequence[MatrixJet]) -> list[list[MatrixJet]]:
    """R[i][j] = R(d_i, dbar_j) = d_i Abar_j - dbar_j A_i + [A_i, Abar_j]."""
    m = len(gamma10)
    return [
        [gamma01[j].d(i) - gamma10[i].dbar(j) + gamma10[i].comm(gamma01[j]) for j in range(m)]
        for i in range(m)
    ]


def lie_bracket(X: VectorFieldJet, Y: VectorFieldJet) -> VectorFieldJet:
    return VectorFieldJet([X.apply(Yk) - Y.apply(Xk) for Xk, Yk in zip(X.components, Y.components)])


def lie_derivative_h(X: VectorFieldJet, H: MatrixJet, antiholomorphic: bool = False) -> MatrixJet:
    """Lie derivative of a sesquilinear Gram on the coordinate frame of TM.

    ``(L_X h)(a, b) = X h(a, b) - h([X, a], b) - h(a, [Xbar, b])``; with ``antiholomorphic``
    the roles of X and Xbar are swapped (L_Xbar).
    """
    J = X.jacobian()
    if antiholomorphic:
        return X.apply_conjugate(H) + H @ J.conj()
    return X.apply(H) + J.T @ H


def lie_derivative_g(X: VectorFieldJet, G: MatrixJet) -> MatrixJet:
    """Bilinear two-slot Lie derivative on the coordinate frame."""
    J = X.jacobian()
    return X.apply(G) + J.T @ G + G @ J


def dual_frame(h: MatrixJet) -> MatrixJet:
    """Columns e_j^* with h(e_i, e_j^*) = delta_ij, i.e. conj(H^-1)."""
    return _safe_inverse(h).conj()


def h_adjoint(M: MatrixJet, H: MatrixJet, Hinv: MatrixJet | None = None) -> MatrixJet:
    """M^flat with h(M a, b) = h(a, M^flat b)."""
    Hinv = _safe_inverse(H) if Hinv is None else Hinv
    return (Hinv @ M.T @ H).conj()


def g_adjoint(M: MatrixJet, G: MatrixJet, Ginv: MatrixJet | None = None) -> MatrixJet:
    """M^* with g(M a, b) = g(a, M^* b)."""
    Ginv = _safe_inverse(G) if Ginv is None else Ginv
    return Ginv @ M.T @ G


def kappa_conjugate(M: MatrixJet, k: MatrixJet) -> MatrixJet:
    """Frame matrix of the linear map kappa M kappa."""
    return k @ M.conj() @ k.conj()


def covariant_end(M: MatrixJet, A: MatrixJet, var: int, holomorphic: bool = True) -> MatrixJet:
    """D(M) = dM + [A, M] for an endomorphism-valued jet."""
    return M.differentiate(var, holomorphic) + A.comm(M)


def is_hermitian_residual(H: MatrixJet) -> float:
    return (H - H.H).norm()


def frame_change(b: ChartBundle, T: MatrixJet) -> ChartBundle:
    """Express b in the frame s = T s' for a holomorphic invertible T."""
    Ti = T.inv()

    def conj_end(M):
        return None if M is None else Ti @ M @ T

    def conn(lst, holomorphic):
        if lst is None:
            return None
        out = []
        for i, M in enumerate(lst):
            dT = T.d(i) if holomorphic else T.dbar(i)
            out.append(Ti @ dT + Ti @ M @ T)
        return out

    return b.replace(
        C=[conj_end(M) for M in b.C] if b.C is not None else None,
        U=conj_end(b.U), V=conj_end(b.V), Q=conj_end(b.Q), utilde=conj_end(b.utilde),
        ctilde=[conj_end(M) for M in b.ctilde] if b.ctilde is not None else None,
        g=None if b.g is None else T.T @ b.g @ T,
        h=None if b.h is None else T.T @ b.h @ T.conj(),
        kappa=None if b.kappa is None else Ti @ b.kappa @ T.conj(),
        gamma10=conn(b.gamma10, True), gamma01=conn(b.gamma01, False),
        name=b.name + "-gauged",
    )
