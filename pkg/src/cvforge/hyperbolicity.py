"""The rho functional on symmetric nilpotent matrices and sampled estimates of the
negative upper bound -k0 for the sectional curvature of h^M on the maximal-ideal cone.

The estimates are statistics over samples (optionally refined by local ascent), not
certificates.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import minimize

from .bundle import ChartBundle
from .canonical import CanonicalData, NotPositiveDefinite, SectionalEvaluator, canonical_data
from .unfolding import classify_point

__all__ = [
    "ZeroMatrix",
    "ProjectionFailed",
    "NotIrreducible",
    "NonPositiveInput",
    "NotPositiveDefinite",
    "rho",
    "NilpotentSample",
    "sample_nilpotent_cone",
    "BoundEstimate",
    "bound_k0",
    "bound_k1",
    "write_histogram",
]

SYMMETRY_TOL = 1e-10
NILPOTENCY_TOL = 1e-8
RETRIES = 25


class ZeroMatrix(ValueError):
    pass


class ProjectionFailed(RuntimeError):
    """Newton projection onto the nilpotent cone did not converge within the retry budget."""


class NotIrreducible(ValueError):
    pass


class NonPositiveInput(ValueError):
    pass


def _flat(A: np.ndarray, H: np.ndarray | None) -> np.ndarray:
    if H is None:
        return A.conj().T
    return np.conj(np.linalg.solve(H, A.T @ H))


def _h_end(A: np.ndarray, B: np.ndarray, H: np.ndarray | None) -> float:
    if H is None:
        return float(np.real(np.vdot(B, A)))
    return float(np.real(np.trace(A.T @ H @ B.conj() @ np.linalg.inv(H))))


def rho(A, h=None) -> float:
    """-|[A, A^flat]|^2 / |A|^4 with norms and adjoint taken for h (identity by default)."""
    A = np.asarray(A, dtype=complex)
    H = None if h is None else np.asarray(h, dtype=complex)
    nrm = _h_end(A, A, H)
    if nrm <= 1e-300:
        raise ZeroMatrix("rho is undefined at A = 0")
    Af = _flat(A, H)
    K = A @ Af - Af @ A
    return -_h_end(K, K, H) / nrm**2


@dataclass(frozen=True)
class NilpotentSample:
    matrix: np.ndarray
    nilpotency_residual: float
    rho: float

    @property
    def symmetry_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.T)))


def _trace_powers(A: np.ndarray, n: int):
    vals, grads = [], []
    P = np.eye(n, dtype=complex)
    for k in range(1, n + 1):
        grads.append(k * P.T)  # d tr(A^k) = k tr(A^{k-1} dA)
        P = P @ A
        vals.append(np.trace(P))
    return np.array(vals), grads


def _project(A: np.ndarray, iters: int = 60) -> np.ndarray | None:
    n = A.shape[0]
    iu = np.triu_indices(n)
    for _ in range(iters):
        vals, grads = _trace_powers(A, n)
        if np.max(np.abs(vals)) < 1e-15:
            break
        J = np.array([(g + g.T - np.diag(np.diag(g)))[iu] for g in grads])  # dA symmetric
        step, *_ = np.linalg.lstsq(J, -vals, rcond=None)
        dA = np.zeros((n, n), dtype=complex)
        dA[iu] = step
        dA = dA + np.triu(dA, 1).T
        A = A + dA
    nrm = np.linalg.norm(A)
    if not np.isfinite(nrm) or nrm < 0.05:
        return None
    return A / nrm


def sample_nilpotent_cone(n: int, count: int, seed: int = 0) -> list[NilpotentSample]:
    """Unit-norm complex symmetric nilpotent n x n matrices."""
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(int(count)):
        for _attempt in range(RETRIES):
            B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            A0 = (B + B.T) / 2
            A = _project(A0 / np.linalg.norm(A0))
            if A is None:
                continue
            res = float(np.max(np.abs(_trace_powers(A, n)[0])))
            if res < NILPOTENCY_TOL:
                out.append(NilpotentSample(A, res, rho(A)))
                break
        else:
            raise ProjectionFailed(f"no nilpotent projection after {RETRIES} attempts")
    return out


def real_orthonormal_frame(b: ChartBundle) -> np.ndarray:
    """Columns: a kappa-real, h-orthonormal basis of the fibre at the base point.

    In this basis both h and g are the identity, so g-symmetric endomorphisms are
    symmetric matrices.
    """
    b.require("h", "g", "kappa")
    n = b.n
    k = b.kappa.constant_term
    H = b.h.constant_term
    G = b.g.constant_term
    # v = x + iy with k conj(v) = v, as a real linear system in (x, y)
    M = np.block([[k.real - np.eye(n), k.imag], [k.imag, -k.real - np.eye(n)]])
    Z = null_space(M)
    if Z.shape[1] != n:
        raise ValueError("kappa does not define a real structure at the base point")
    V = Z[:n] + 1j * Z[n:]
    Gram = V.T @ H @ V.conj()
    Gram = 0.5 * (Gram + Gram.conj().T)
    ev = np.linalg.eigvalsh(Gram)
    if ev[0] <= 0:
        raise NotPositiveDefinite(f"h at base point has eigenvalue {ev[0]:.3e}")
    # Gram is real symmetric on real vectors; orthonormalize with a real transform
    L = np.linalg.cholesky(Gram.real)
    T = V @ np.linalg.inv(L).T
    if np.max(np.abs(T.T @ G @ T - np.eye(n))) > 1e-8:
        raise ValueError("g and h are not related through kappa at the base point")
    return T


@dataclass
class BoundEstimate:
    k0: float
    argmax_direction: np.ndarray
    argmax_sample: NilpotentSample | None
    count: int
    sectional_values: np.ndarray = field(repr=False)
    rho_values: np.ndarray = field(repr=False)
    refined: bool = False

    def statistics(self, bins: int = 10) -> dict:
        def stats(v):
            if v.size == 0:
                return {}
            hist, edges = np.histogram(v, bins=bins, range=_hist_range(v, bins))
            return {
                "min": float(v.min()),
                "max": float(v.max()),
                "mean": float(v.mean()),
                "histogram": {"counts": hist.tolist(), "edges": [float(e) for e in edges]},
            }

        return {"rho": stats(self.rho_values), "sectional": stats(self.sectional_values)}

    def to_dict(self) -> dict:
        X = self.argmax_direction
        return {
            "k0": float(self.k0),
            "count": self.count,
            # samples whose projection to the maximal ideal vanishes are skipped
            "evaluated": int(self.sectional_values.size),
            "refined": self.refined,
            "argmax_direction": {"re": np.round(X.real, 12).tolist(), "im": np.round(X.imag, 12).tolist()},
            "statistics": self.statistics(),
        }


def _hist_range(v: np.ndarray, bins: int) -> tuple[float, float]:
    lo, hi = float(v.min()), float(v.max())
    if hi - lo < 1e-9 * (1.0 + abs(hi)):  # all samples agree: unit window, value mid-bin
        lo = 0.5 * (lo + hi) - (bins // 2 + 0.5) / bins
        hi = lo + 1.0
    return lo, hi


def _threads() -> int:
    cap = os.environ.get("CVFORGE_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


class _ConeMap:
    """Sends a symmetric matrix in the real orthonormal frame to a direction in the maximal ideal."""

    def __init__(self, cd: CanonicalData, ev: SectionalEvaluator):
        b = cd.bundle
        self.T = real_orthonormal_frame(b)
        self.Tinv = np.linalg.inv(self.T)
        self.ev = ev
        C0 = ev.C0
        m = ev.m
        # h^end on the base fibre, restricted to F
        gram = ev.hM0
        self.gram_inv_T = np.linalg.inv(gram).T
        self.C0 = C0
        # maximal ideal: kernel of X -> tr C_X(0), an h^M-orthonormal basis of it
        t = np.array([np.trace(C0[a]) for a in range(m)])
        basis = null_space(t[None, :])
        Lh = np.linalg.cholesky((basis.T @ gram @ basis.conj()).conj())
        self.ideal = basis @ np.linalg.inv(Lh).conj().T  # columns: orthonormal for h^M
        self.dim = self.ideal.shape[1]

    def direction(self, A: np.ndarray) -> np.ndarray:
        C = self.T @ A @ self.Tinv
        H0, Hinv = self.ev.H0, self.ev.H0inv
        r = np.array([np.trace(C.T @ H0 @ self.C0[a].conj() @ Hinv) for a in range(self.ev.m)])
        lam = self.gram_inv_T @ r
        return self.from_ideal(self.to_ideal(lam))

    def to_ideal(self, X: np.ndarray) -> np.ndarray:
        # h^M-orthogonal coordinates in the ideal
        return self.ideal.conj().T @ self.ev.hM0.T @ X

    def from_ideal(self, y: np.ndarray) -> np.ndarray:
        return self.ideal @ y


def bound_k0(b: ChartBundle, count: int = 200, seed: int = 0, refine: bool = False,
             cd: CanonicalData | None = None) -> BoundEstimate:
    """Sampled estimate of k0 with R^sect < -k0 on the maximal-ideal cone at the base point."""
    cd = canonical_data(b) if cd is None else cd
    if classify_point(cd.f, seed=seed) != "irreducible":
        raise NotIrreducible("bound_k0 needs an irreducible base point")
    ev = SectionalEvaluator(cd)
    cone = _ConeMap(cd, ev)
    samples = sample_nilpotent_cone(b.n, count, seed)

    def evaluate(s: NilpotentSample):
        X = cone.direction(s.matrix)
        if ev.hM_norm2(X) < 1e-24:
            return None, X
        return ev.intrinsic(X), X

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(evaluate, samples))
    vals = np.array([v for v, _ in results if v is not None])
    rhos = np.array([s.rho for s in samples])
    if vals.size == 0:
        X = cone.from_ideal(np.eye(cone.dim)[0])
        vals = np.array([ev.intrinsic(X)])
        best, best_sample = X, None
    else:
        kept = [(v, X, s) for (v, X), s in zip(results, samples) if v is not None]
        i = int(np.argmax([v for v, _, _ in kept]))
        _, best, best_sample = kept[i]
    top = float(vals.max())
    if refine and cone.dim > 0:
        y0 = cone.to_ideal(best)

        def neg(p):
            y = p[: cone.dim] + 1j * p[cone.dim:]
            if np.linalg.norm(y) < 1e-12:
                return 0.0
            return -ev.intrinsic(cone.from_ideal(y))

        res = minimize(neg, np.concatenate([y0.real, y0.imag]), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
        if -res.fun > top:
            top = float(-res.fun)
            best = cone.from_ideal(res.x[: cone.dim] + 1j * res.x[cone.dim:])
    return BoundEstimate(-top, best, best_sample, len(samples), vals, rhos, refine)


def bound_k1(k0: float, lam0: float) -> float:
    """k0 * lam0^2."""
    if not (k0 > 0 and lam0 > 0):
        raise NonPositiveInput("k0 and lambda0 must be positive")
    return float(k0) * float(lam0) ** 2


def write_histogram(est: BoundEstimate, path: str) -> None:
    """Histograms of rho and R^sect values; needs the optional matplotlib dependency."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:  # pragma: no cover
        raise RuntimeError("install the 'plot' extra for --figure") from exc
    fig, axes = plt.subplots(1, 2, figsize=(8, 3))
    axes[0].hist(est.rho_values, bins=30, range=_hist_range(est.rho_values, 30))
    axes[0].set_title("rho")
    axes[1].hist(est.sectional_values, bins=30, range=_hist_range(est.sectional_values, 30))
    axes[1].set_title("R^sect")
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None, "CreationDate": None} if str(path).endswith(".pdf") else {"Software": None})
    plt.close(fig)
