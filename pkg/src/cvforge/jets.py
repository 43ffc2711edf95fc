"""Truncated power series in t_1..t_m and their conjugates, plus z-Laurent stacks.

Every jet lives in a :class:`JetContext` (m coordinates, total degree bound d).
Coefficients are stored densely along the context's monomial table; the table is
small for the dimensions used here and dense storage keeps products vectorised.
A sparse exponent-keyed view is available through ``Jet.coefficients``.
"""

from __future__ import annotations

import functools
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "ContextMismatch",
    "NonUnit",
    "JetContext",
    "context",
    "Jet",
    "MatrixJet",
    "LaurentJet",
    "BadLaurentRange",
]

SINGULAR_RTOL = 1e-12


class ContextMismatch(ValueError):
    """Operands live in different jet contexts."""


class NonUnit(ArithmeticError):
    """Constant term (or constant matrix) is not invertible."""


class BadLaurentRange(ValueError):
    """Laurent data with an unusable z-range."""


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class JetContext:
    """Monomial table and multiplication/derivative tables for (m, d)."""

    def __init__(self, m: int, d: int):
        if m < 1:
            raise ValueError("need m >= 1")
        if d < 2:
            raise ValueError("need d >= 2: curvature uses two derivatives")
        self.m = int(m)
        self.d = int(d)
        mons = []
        for deg in range(self.d + 1):
            mons.extend(_compositions(deg, 2 * self.m))
        self.monomials = np.array(mons, dtype=np.int64).reshape(-1, 2 * self.m)
        self.N = len(mons)
        self.degree = self.monomials.sum(axis=1)
        self.index = {tuple(int(x) for x in row): k for k, row in enumerate(self.monomials)}
        self.holo_degree = self.monomials[:, : self.m].sum(axis=1)
        self.anti_degree = self.monomials[:, self.m :].sum(axis=1)

        I, J, K = [], [], []
        for a in range(self.N):
            da = self.degree[a]
            ma = self.monomials[a]
            for b in range(self.N):
                if da + self.degree[b] > self.d:
                    continue
                I.append(a)
                J.append(b)
                K.append(self.index[tuple(int(x) for x in ma + self.monomials[b])])
        self.pair_i = np.array(I, dtype=np.int64)
        self.pair_j = np.array(J, dtype=np.int64)
        self.pair_k = np.array(K, dtype=np.int64)
        P = len(I)
        self._scatter = sp.csr_matrix(
            (np.ones(P), (self.pair_k, np.arange(P))), shape=(self.N, P)
        )
        self._scatter_op = sp.csr_matrix(
            (np.ones(P), (np.arange(P), self.pair_k * self.N + self.pair_j)),
            shape=(P, self.N * self.N),
        )

        swap = np.concatenate([self.monomials[:, self.m :], self.monomials[:, : self.m]], axis=1)
        self.conj_perm = np.array([self.index[tuple(int(x) for x in r)] for r in swap])

        # derivative tables, variable v in 0..2m-1 (v >= m means conjugate coordinate)
        self._deriv = []
        for v in range(2 * self.m):
            src, dst, fac = [], [], []
            for k, row in enumerate(self.monomials):
                if row[v] > 0:
                    r2 = row.copy()
                    r2[v] -= 1
                    src.append(k)
                    dst.append(self.index[tuple(int(x) for x in r2)])
                    fac.append(float(row[v]))
            self._deriv.append((np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64), np.array(fac)))

    def __eq__(self, other):
        return isinstance(other, JetContext) and (self.m, self.d) == (other.m, other.d)

    def __hash__(self):
        return hash((self.m, self.d))

    def __repr__(self):
        return f"JetContext(m={self.m}, d={self.d}, N={self.N})"

    # -- raw kernels on arrays whose last axis is the monomial axis --
    def mul_arrays(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Coefficientwise truncated product, broadcasting leading axes."""
        prod = a[..., self.pair_i] * b[..., self.pair_j]
        lead = prod.shape[:-1]
        flat = prod.reshape(-1, prod.shape[-1])
        out = (self._scatter @ flat.T).T
        return np.asarray(out).reshape(lead + (self.N,))

    def matmul_arrays(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Matrix product of (r, l, N) and (l, c, N) coefficient stacks."""
        prod = np.einsum("ilp,ljp->ijp", A[..., self.pair_i], B[..., self.pair_j])
        r, c = prod.shape[:2]
        out = (self._scatter @ prod.reshape(r * c, -1).T).T
        return np.asarray(out).reshape(r, c, self.N)

    def deriv_array(self, a: np.ndarray, var: int, holomorphic: bool = True) -> np.ndarray:
        if not 0 <= var < self.m:
            raise IndexError(f"coordinate index {var} out of range for m={self.m}")
        v = var if holomorphic else var + self.m
        src, dst, fac = self._deriv[v]
        out = np.zeros_like(a)
        out[..., dst] = a[..., src] * fac
        return out

    def conj_array(self, a: np.ndarray) -> np.ndarray:
        """Coefficients of the complex conjugate function."""
        return np.conj(a[..., self.conj_perm])

    def mult_operator(self, f: np.ndarray) -> np.ndarray:
        """Matrix M (N x N) with M @ x == coefficients of f * x; f may carry leading axes."""
        vals = f[..., self.pair_i]
        lead = vals.shape[:-1]
        flat = vals.reshape(-1, vals.shape[-1])
        out = np.asarray((self._scatter_op.T @ flat.T).T)
        return out.reshape(lead + (self.N, self.N))

    def deriv_operator(self, var: int, holomorphic: bool = True) -> np.ndarray:
        v = var if holomorphic else var + self.m
        src, dst, fac = self._deriv[v]
        D = np.zeros((self.N, self.N))
        D[dst, src] = fac
        return D

    def degree_mask(self, max_degree: int | None) -> np.ndarray:
        if max_degree is None:
            return np.ones(self.N, dtype=bool)
        return self.degree <= max_degree

    def monomial_values(self, point: Sequence[complex]) -> np.ndarray:
        t = np.asarray(point, dtype=complex).reshape(self.m)
        base = np.concatenate([t, np.conj(t)])
        return np.prod(base[None, :] ** self.monomials, axis=1)


@functools.lru_cache(maxsize=None)
def context(m: int, d: int) -> JetContext:
    """Shared (cached) context for (m, d)."""
    return JetContext(m, d)


def _check(a, b):
    if a.ctx != b.ctx:
        raise ContextMismatch(f"{a.ctx!r} vs {b.ctx!r}")


def max_abs(arr: np.ndarray, ctx: JetContext, max_degree: int | None = None) -> float:
    """Largest coefficient magnitude, optionally restricted to degree <= max_degree."""
    if max_degree is not None and max_degree < 0:
        return 0.0
    sel = arr[..., ctx.degree_mask(max_degree)]
    return float(np.max(np.abs(sel))) if sel.size else 0.0


class Jet:
    """Scalar truncated power series."""

    __slots__ = ("ctx", "c")
    __array_priority__ = 20

    def __init__(self, ctx: JetContext, coeffs: np.ndarray | None = None):
        self.ctx = ctx
        if coeffs is None:
            coeffs = np.zeros(ctx.N, dtype=complex)
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (ctx.N,):
            raise ValueError(f"expected {ctx.N} coefficients, got shape {coeffs.shape}")
        self.c = coeffs

    # construction
    @classmethod
    def constant(cls, ctx, value: complex) -> "Jet":
        c = np.zeros(ctx.N, dtype=complex)
        c[0] = value
        return cls(ctx, c)

    @classmethod
    def coordinate(cls, ctx, i: int, conjugate: bool = False) -> "Jet":
        e = [0] * (2 * ctx.m)
        e[i + (ctx.m if conjugate else 0)] = 1
        return cls.from_dict(ctx, {(tuple(e[: ctx.m]), tuple(e[ctx.m :])): 1.0})

    @classmethod
    def from_dict(cls, ctx, terms: Mapping) -> "Jet":
        """Terms keyed by (alpha, beta) tuples; terms above degree d are dropped."""
        c = np.zeros(ctx.N, dtype=complex)
        for (alpha, beta), val in terms.items():
            key = tuple(alpha) + tuple(beta)
            if len(key) != 2 * ctx.m:
                raise ValueError(f"exponent {key} does not match m={ctx.m}")
            if sum(key) > ctx.d:
                continue
            c[ctx.index[key]] += val
        return cls(ctx, c)

    @property
    def coefficients(self) -> dict:
        out = {}
        for k in np.flatnonzero(self.c):
            row = self.ctx.monomials[k]
            out[(tuple(int(x) for x in row[: self.ctx.m]), tuple(int(x) for x in row[self.ctx.m :]))] = complex(self.c[k])
        return out

    # ring operations
    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            _check(self, other)
            return other
        if np.isscalar(other):
            return Jet.constant(self.ctx, other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Jet(self.ctx, self.c + o.c)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Jet(self.ctx, self.c - o.c)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Jet(self.ctx, o.c - self.c)

    def __neg__(self):
        return Jet(self.ctx, -self.c)

    def __mul__(self, other):
        if isinstance(other, MatrixJet):
            return other.scale(self)
        if isinstance(other, Jet):
            _check(self, other)
            return Jet(self.ctx, self.ctx.mul_arrays(self.c, other.c))
        if np.isscalar(other):
            return Jet(self.ctx, self.c * other)
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return Jet(self.ctx, self.c * other)
        return NotImplemented

    def __truediv__(self, other):
        if np.isscalar(other):
            return Jet(self.ctx, self.c / other)
        if isinstance(other, Jet):
            return self * other.inv()
        return NotImplemented

    def __pow__(self, k: int):
        out = Jet.constant(self.ctx, 1.0)
        for _ in range(int(k)):
            out = out * self
        return out

    def d(self, i: int) -> "Jet":
        return Jet(self.ctx, self.ctx.deriv_array(self.c, i, True))

    def dbar(self, i: int) -> "Jet":
        return Jet(self.ctx, self.ctx.deriv_array(self.c, i, False))

    def differentiate(self, var: int, holomorphic: bool = True) -> "Jet":
        return self.d(var) if holomorphic else self.dbar(var)

    def conj(self) -> "Jet":
        return Jet(self.ctx, self.ctx.conj_array(self.c))

    def inv(self) -> "Jet":
        return invert_unit(self)

    def exp(self) -> "Jet":
        a0 = self.c[0]
        nil = Jet(self.ctx, self.c.copy())
        nil.c[0] = 0.0
        term = Jet.constant(self.ctx, 1.0)
        acc = Jet.constant(self.ctx, 1.0)
        for k in range(1, self.ctx.d + 1):
            term = term * nil / k
            acc = acc + term
        return acc * np.exp(a0)

    @property
    def constant_term(self) -> complex:
        return complex(self.c[0])

    def truncate(self, max_degree: int) -> "Jet":
        return Jet(self.ctx, np.where(self.ctx.degree_mask(max_degree), self.c, 0))

    def homogeneous(self, degree: int) -> "Jet":
        return Jet(self.ctx, np.where(self.ctx.degree == degree, self.c, 0))

    def evaluate(self, point) -> complex:
        return complex(self.c @ self.ctx.monomial_values(point))

    def is_holomorphic(self, tol: float = 1e-12) -> bool:
        anti = self.ctx.anti_degree > 0
        return bool(np.all(np.abs(self.c[anti]) <= tol))

    def norm(self, max_degree: int | None = None) -> float:
        return max_abs(self.c, self.ctx, max_degree)

    def __repr__(self):
        terms = ", ".join(f"{k}: {v:.6g}" for k, v in list(self.coefficients.items())[:6])
        return f"Jet({terms}{', ...' if len(self.coefficients) > 6 else ''})"


def invert_unit(a: Jet) -> Jet:
    """Multiplicative inverse; raises NonUnit when the constant term vanishes."""
    a0 = a.c[0]
    if abs(a0) <= SINGULAR_RTOL * max(1.0, float(np.max(np.abs(a.c)))):
        raise NonUnit("constant term is zero")
    nil = Jet(a.ctx, a.c / a0)
    nil.c[0] = 0.0
    acc = Jet.constant(a.ctx, 1.0)
    for _ in range(a.ctx.d):
        acc = 1.0 - nil * acc
    return acc / a0


class MatrixJet:
    """Matrix whose entries are jets in one shared context; stored as (rows, cols, N)."""

    __slots__ = ("ctx", "c")
    __array_priority__ = 20

    def __init__(self, ctx: JetContext, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim != 3 or coeffs.shape[2] != ctx.N:
            raise ValueError(f"expected (rows, cols, {ctx.N}) coefficients, got {coeffs.shape}")
        self.ctx = ctx
        self.c = coeffs

    @classmethod
    def zeros(cls, ctx, rows: int, cols: int | None = None) -> "MatrixJet":
        return cls(ctx, np.zeros((rows, rows if cols is None else cols, ctx.N), dtype=complex))

    @classmethod
    def identity(cls, ctx, n: int) -> "MatrixJet":
        return cls.constant(ctx, np.eye(n))

    @classmethod
    def constant(cls, ctx, mat) -> "MatrixJet":
        mat = np.atleast_2d(np.asarray(mat, dtype=complex))
        c = np.zeros(mat.shape + (ctx.N,), dtype=complex)
        c[..., 0] = mat
        return cls(ctx, c)

    @classmethod
    def from_entries(cls, entries: Sequence[Sequence[Jet | complex]], ctx: JetContext | None = None) -> "MatrixJet":
        if ctx is None:
            ctx = next(e.ctx for row in entries for e in row if isinstance(e, Jet))
        rows = len(entries)
        cols = len(entries[0])
        c = np.zeros((rows, cols, ctx.N), dtype=complex)
        for i, row in enumerate(entries):
            if len(row) != cols:
                raise ValueError("ragged matrix")
            for j, e in enumerate(row):
                if isinstance(e, Jet):
                    if e.ctx != ctx:
                        raise ContextMismatch("entries must share one context")
                    c[i, j] = e.c
                else:
                    c[i, j, 0] = e
        return cls(ctx, c)

    @property
    def shape(self):
        return self.c.shape[:2]

    @property
    def rows(self):
        return self.c.shape[0]

    @property
    def cols(self):
        return self.c.shape[1]

    def entry(self, i: int, j: int) -> Jet:
        return Jet(self.ctx, self.c[i, j].copy())

    def __getitem__(self, ij):
        i, j = ij
        return self.entry(i, j)

    @property
    def constant_term(self) -> np.ndarray:
        return self.c[..., 0].copy()

    def _like(self, arr):
        return MatrixJet(self.ctx, arr)

    def __add__(self, other):
        if isinstance(other, MatrixJet):
            _check(self, other)
            return self._like(self.c + other.c)
        if np.isscalar(other):
            return self + MatrixJet.constant(self.ctx, other * np.eye(self.rows))
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, MatrixJet):
            _check(self, other)
            return self._like(self.c - other.c)
        if np.isscalar(other):
            return self - MatrixJet.constant(self.ctx, other * np.eye(self.rows))
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return self._like(-self.c)

    def scale(self, f: Jet | complex) -> "MatrixJet":
        if isinstance(f, Jet):
            _check(self, f)
            return self._like(self.ctx.mul_arrays(self.c, f.c[None, None, :]))
        return self._like(self.c * f)

    def __mul__(self, other):
        if isinstance(other, (Jet,)) or np.isscalar(other):
            return self.scale(other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other):
            return self._like(self.c / other)
        return NotImplemented

    def __matmul__(self, other):
        if isinstance(other, MatrixJet):
            _check(self, other)
            if self.cols != other.rows:
                raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
            return self._like(self.ctx.matmul_arrays(self.c, other.c))
        if isinstance(other, np.ndarray):
            return self @ MatrixJet.constant(self.ctx, other)
        return NotImplemented

    def __rmatmul__(self, other):
        if isinstance(other, np.ndarray):
            return MatrixJet.constant(self.ctx, other) @ self
        return NotImplemented

    @property
    def T(self) -> "MatrixJet":
        return self._like(np.transpose(self.c, (1, 0, 2)).copy())

    def conj(self) -> "MatrixJet":
        return self._like(self.ctx.conj_array(self.c))

    @property
    def H(self) -> "MatrixJet":
        return self.conj().T

    def d(self, i: int) -> "MatrixJet":
        return self._like(self.ctx.deriv_array(self.c, i, True))

    def dbar(self, i: int) -> "MatrixJet":
        return self._like(self.ctx.deriv_array(self.c, i, False))

    def differentiate(self, var: int, holomorphic: bool = True) -> "MatrixJet":
        return self.d(var) if holomorphic else self.dbar(var)

    def trace(self) -> Jet:
        return Jet(self.ctx, np.einsum("iik->k", self.c))

    def inv(self) -> "MatrixJet":
        return invert_matrix(self)

    def comm(self, other: "MatrixJet") -> "MatrixJet":
        return self @ other - other @ self

    def truncate(self, max_degree: int) -> "MatrixJet":
        return self._like(np.where(self.ctx.degree_mask(max_degree), self.c, 0))

    def evaluate(self, point) -> np.ndarray:
        return self.c @ self.ctx.monomial_values(point)

    def is_holomorphic(self, tol: float = 1e-12) -> bool:
        anti = self.ctx.anti_degree > 0
        return bool(np.all(np.abs(self.c[..., anti]) <= tol))

    def antiholomorphic_part_norm(self) -> float:
        anti = self.ctx.anti_degree > 0
        sel = self.c[..., anti]
        return float(np.max(np.abs(sel))) if sel.size else 0.0

    def norm(self, max_degree: int | None = None) -> float:
        return max_abs(self.c, self.ctx, max_degree)

    def vec(self) -> np.ndarray:
        """Column vector (rows*cols, 1, N), row-major entry order."""
        r, c = self.shape
        return MatrixJet(self.ctx, self.c.reshape(r * c, 1, self.ctx.N))

    def col(self, j: int) -> "MatrixJet":
        return self._like(self.c[:, j : j + 1].copy())

    def __repr__(self):
        return f"MatrixJet(shape={self.shape}, const=\n{np.round(self.constant_term, 6)})"


def hstack(cols: Sequence[MatrixJet]) -> MatrixJet:
    ctx = cols[0].ctx
    for c in cols:
        _check(cols[0], c)
    return MatrixJet(ctx, np.concatenate([c.c for c in cols], axis=1))


def invert_matrix(A: MatrixJet) -> MatrixJet:
    """Inverse of a square matrix jet; raises NonUnit if the constant matrix is singular."""
    if A.rows != A.cols:
        raise ValueError("matrix must be square")
    A0 = A.constant_term
    s = np.linalg.svd(A0, compute_uv=False)
    if s.size == 0 or s[-1] <= SINGULAR_RTOL * max(1.0, s[0]):
        raise NonUnit(f"constant matrix singular (smallest singular value {s[-1] if s.size else 0:.3e})")
    A0inv = np.linalg.inv(A0)
    ctx = A.ctx
    n = A.rows
    nil = MatrixJet.constant(ctx, A0inv) @ A
    nil.c[..., 0] = 0.0
    eye = MatrixJet.identity(ctx, n)
    acc = eye
    for _ in range(ctx.d):
        acc = eye - nil @ acc
    return acc @ MatrixJet.constant(ctx, A0inv)


class LaurentJet:
    """Finite Laurent expansion sum_{k=low}^{high} z^k M_k with MatrixJet coefficients."""

    __slots__ = ("ctx", "low", "c")

    def __init__(self, ctx: JetContext, low: int, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim != 4 or coeffs.shape[-1] != ctx.N:
            raise BadLaurentRange(f"expected (L, rows, cols, {ctx.N}) coefficients, got {coeffs.shape}")
        if coeffs.shape[0] == 0:
            raise BadLaurentRange("empty Laurent range")
        self.ctx = ctx
        self.low = int(low)
        # pad so the highest stored power is at least 1
        high = self.low + coeffs.shape[0] - 1
        if high < 1:
            pad = np.zeros((1 - high,) + coeffs.shape[1:], dtype=complex)
            coeffs = np.concatenate([coeffs, pad], axis=0)
        self.c = coeffs

    @classmethod
    def from_terms(cls, terms: Mapping[int, MatrixJet], low: int | None = None, high: int | None = None) -> "LaurentJet":
        if not terms:
            raise BadLaurentRange("no terms")
        ks = sorted(terms)
        first = terms[ks[0]]
        lo = ks[0] if low is None else min(low, ks[0])
        hi = ks[-1] if high is None else max(high, ks[-1])
        arr = np.zeros((hi - lo + 1,) + first.c.shape, dtype=complex)
        for k, M in terms.items():
            _check(first, M)
            arr[k - lo] = M.c
        return cls(first.ctx, lo, arr)

    @property
    def high(self) -> int:
        return self.low + self.c.shape[0] - 1

    @property
    def shape(self):
        return self.c.shape[1:3]

    def coeff(self, k: int) -> MatrixJet:
        if self.low <= k <= self.high:
            return MatrixJet(self.ctx, self.c[k - self.low].copy())
        return MatrixJet.zeros(self.ctx, *self.shape)

    def powers(self) -> range:
        return range(self.low, self.high + 1)

    def _aligned(self, other: "LaurentJet"):
        _check(self, other)
        lo = min(self.low, other.low)
        hi = max(self.high, other.high)
        a = np.zeros((hi - lo + 1,) + self.c.shape[1:], dtype=complex)
        b = np.zeros((hi - lo + 1,) + other.c.shape[1:], dtype=complex)
        a[self.low - lo : self.low - lo + self.c.shape[0]] = self.c
        b[other.low - lo : other.low - lo + other.c.shape[0]] = other.c
        return lo, a, b

    def __add__(self, other):
        lo, a, b = self._aligned(other)
        return LaurentJet(self.ctx, lo, a + b)

    def __sub__(self, other):
        lo, a, b = self._aligned(other)
        return LaurentJet(self.ctx, lo, a - b)

    def __neg__(self):
        return LaurentJet(self.ctx, self.low, -self.c)

    def __mul__(self, s):
        if np.isscalar(s):
            return LaurentJet(self.ctx, self.low, self.c * s)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other: "LaurentJet") -> "LaurentJet":
        _check(self, other)
        L1, L2 = self.c.shape[0], other.c.shape[0]
        r, c = self.shape[0], other.shape[1]
        out = np.zeros((L1 + L2 - 1, r, c, self.ctx.N), dtype=complex)
        for a in range(L1):
            if not np.any(self.c[a]):
                continue
            for b in range(L2):
                if not np.any(other.c[b]):
                    continue
                out[a + b] += self.ctx.matmul_arrays(self.c[a], other.c[b])
        return LaurentJet(self.ctx, self.low + other.low, out)

    def comm(self, other: "LaurentJet") -> "LaurentJet":
        return self @ other - other @ self

    def d(self, i: int) -> "LaurentJet":
        return LaurentJet(self.ctx, self.low, self.ctx.deriv_array(self.c, i, True))

    def dbar(self, i: int) -> "LaurentJet":
        return LaurentJet(self.ctx, self.low, self.ctx.deriv_array(self.c, i, False))

    def z_dz(self) -> "LaurentJet":
        k = np.arange(self.low, self.high + 1).reshape(-1, 1, 1, 1)
        return LaurentJet(self.ctx, self.low, self.c * k)

    def negate_z(self) -> "LaurentJet":
        """Substitute z -> -z."""
        sign = np.array([(-1) ** (k % 2) for k in range(self.low, self.high + 1)]).reshape(-1, 1, 1, 1)
        return LaurentJet(self.ctx, self.low, self.c * sign)

    @property
    def T(self) -> "LaurentJet":
        return LaurentJet(self.ctx, self.low, np.transpose(self.c, (0, 2, 1, 3)).copy())

    def shift(self, k: int) -> "LaurentJet":
        """Multiply by z^k."""
        return LaurentJet(self.ctx, self.low + k, self.c.copy())

    def norm(self, max_degree: int | None = None) -> float:
        return max_abs(self.c, self.ctx, max_degree)

    def coefficient_norms(self, max_degree: int | None = None) -> dict[int, float]:
        return {k: max_abs(self.c[k - self.low], self.ctx, max_degree) for k in self.powers()}

    def __repr__(self):
        return f"LaurentJet(z^{self.low}..z^{self.high}, shape={self.shape})"


def laurent_from(ctx: JetContext, terms: Mapping[int, MatrixJet | np.ndarray | complex], shape=None) -> LaurentJet:
    """Convenience constructor accepting constants as coefficients."""
    conv = {}
    for k, v in terms.items():
        if isinstance(v, MatrixJet):
            conv[k] = v
        else:
            arr = np.asarray(v, dtype=complex)
            if arr.ndim == 0:
                arr = arr * np.eye(shape[0] if shape else 1)
            conv[k] = MatrixJet.constant(ctx, arr)
    return LaurentJet.from_terms(conv)


def ring_ops(a: Jet, b: Jet | complex, op: str) -> Jet:
    """Dispatch add/sub/mul/scalar-mul by name."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        if not isinstance(b, Jet):
            raise TypeError("mul expects two jets")
        return a * b
    if op == "scalar-mul":
        if isinstance(b, Jet):
            raise TypeError("scalar-mul expects a number")
        return a * b
    raise ValueError(f"unknown op {op!r}")


def differentiate(a: Jet | MatrixJet, var: int, holomorphic: bool = True):
    return a.differentiate(var, holomorphic)


def is_holomorphic(a: Jet | MatrixJet, tol: float = 1e-12) -> bool:
    return a.is_holomorphic(tol)


def random_jet(ctx: JetContext, rng: np.random.Generator, scale: float = 1.0, holomorphic: bool = False) -> Jet:
    c = scale * (rng.standard_normal(ctx.N) + 1j * rng.standard_normal(ctx.N))
    if holomorphic:
        c[ctx.anti_degree > 0] = 0
    return Jet(ctx, c)


def random_matrix_jet(ctx, rng, rows, cols=None, scale=1.0, holomorphic=False) -> MatrixJet:
    cols = rows if cols is None else cols
    c = scale * (rng.standard_normal((rows, cols, ctx.N)) + 1j * rng.standard_normal((rows, cols, ctx.N)))
    if holomorphic:
        c[..., ctx.anti_degree > 0] = 0
    return MatrixJet(ctx, c)
