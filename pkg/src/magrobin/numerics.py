"""Numerical kernels shared by the rest of the package.

Symmetric tridiagonal eigenpairs are obtained by Sturm-sequence bisection
and inverse iteration (both compiled with numba).  Dense symmetric matrices
are reduced to tridiagonal form by Householder reflections and handed to the
same solver.  Root finding and scalar minimisation wrap scipy's Brent
implementations behind the contracts used throughout the package.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import optimize

EPS = np.finfo(float).eps

#: default tolerances, overridable per call
DEFAULTS = {
    "residual_rtol": 1e-10,
    "dense_residual_rtol": 1e-9,
    "symmetry_rtol": 1e-12,
    "cluster_rtol": 1e-10,
    "reorth_rtol": 1e-3,
    "inverse_iterations": 6,
    "inverse_restarts": 3,
    "seed": 20240611,
}


class ConvergenceError(RuntimeError):
    """Raised when an iterative kernel fails to converge.

    Attributes
    ----------
    index : int or None
        Offending eigenvalue index (1-based) for eigensolver failures.
    bracket : tuple or None
        Best bracket reached by a root finder.
    """

    def __init__(self, message, index=None, bracket=None):
        super().__init__(message)
        self.index = index
        self.bracket = bracket


@dataclass(frozen=True)
class SymTridiag:
    """Real symmetric tridiagonal matrix stored by its two diagonals."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        d = np.ascontiguousarray(self.diag, dtype=float)
        e = np.ascontiguousarray(self.offdiag, dtype=float)
        if d.ndim != 1 or e.ndim != 1:
            raise ValueError("diagonals must be one-dimensional")
        if d.size < 2:
            raise ValueError("SymTridiag needs N >= 2")
        if e.size != d.size - 1:
            raise ValueError(f"offdiag must have length {d.size - 1}, got {e.size}")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
            raise ValueError("non-finite entries in tridiagonal matrix")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def n(self) -> int:
        return self.diag.size

    def norm(self) -> float:
        """Gershgorin bound on the spectral radius (used as ||M||)."""
        return float(_gershgorin(self.diag, self.offdiag)[2])

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag[:, None] * v if v.ndim == 2 else self.diag * v
        if v.ndim == 2:
            out[:-1] += self.offdiag[:, None] * v[1:]
            out[1:] += self.offdiag[:, None] * v[:-1]
        else:
            out[:-1] += self.offdiag * v[1:]
            out[1:] += self.offdiag * v[:-1]
        return out

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


@dataclass(frozen=True)
class DenseSym:
    """Real symmetric dense matrix."""

    entries: np.ndarray
    rtol: float = field(default=DEFAULTS["symmetry_rtol"], compare=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("DenseSym needs a square matrix")
        if not np.all(np.isfinite(a)):
            raise ValueError("non-finite entries in dense matrix")
        scale = max(np.abs(a).max(), 1e-300)
        asym = np.abs(a - a.T).max()
        if asym > self.rtol * scale:
            raise ValueError(f"matrix is not symmetric (asymmetry {asym:.3e}, scale {scale:.3e})")
        object.__setattr__(self, "entries", 0.5 * (a + a.T))

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    kind: str

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if x.shape != w.shape:
            raise ValueError("nodes and weights differ in length")
        if np.any(np.diff(x) <= 0):
            raise ValueError("quadrature nodes must be strictly increasing")
        if np.any(w <= 0):
            raise ValueError("quadrature weights must be positive")
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, a: float, b: float, n: int, kind: str = "trapezoid") -> "QuadratureRule":
        """Composite rule on ``n`` equispaced nodes of ``[a, b]``."""
        x = np.linspace(a, b, n)
        dx = (b - a) / (n - 1)
        if kind == "trapezoid":
            w = np.full(n, dx)
            w[0] = w[-1] = 0.5 * dx
        elif kind == "simpson":
            if n % 2 == 0:
                raise ValueError("Simpson's rule needs an odd number of nodes")
            w = np.full(n, 2.0)
            w[1:-1:2] = 4.0
            w[0] = w[-1] = 1.0
            w *= dx / 3.0
        else:
            raise ValueError(f"unknown quadrature kind {kind!r}")
        return cls(x, w, kind)


# ---------------------------------------------------------------------------
# compiled tridiagonal kernels
# ---------------------------------------------------------------------------


@numba.njit(cache=True)
def _gershgorin(d, e):
    n = d.size
    lo = np.inf
    hi = -np.inf
    for i in range(n):
        r = 0.0
        if i > 0:
            r += abs(e[i - 1])
        if i < n - 1:
            r += abs(e[i])
        lo = min(lo, d[i] - r)
        hi = max(hi, d[i] + r)
    return lo, hi, max(abs(lo), abs(hi))


@numba.njit(cache=True)
def _sturm_count(d, e2, x, pivmin):
    """Number of eigenvalues strictly below ``x``."""
    count = 0
    q = d[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0.0:
        count += 1
    for i in range(1, d.size):
        q = d[i] - x - e2[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            count += 1
    return count


@numba.njit(cache=True)
def _bisect(d, e2, k_lo, k_hi, lo0, hi0, abstol, pivmin):
    out = np.empty(k_hi - k_lo + 1)
    for idx in range(k_lo, k_hi + 1):
        lo = lo0
        hi = hi0
        if idx > k_lo:
            lo = max(lo, out[idx - k_lo - 1])
        for _ in range(4000):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if hi - lo <= 2.0 * 2.220446049250313e-16 * max(abs(lo), abs(hi)) + abstol:
                break
            if _sturm_count(d, e2, mid, pivmin) >= idx:
                hi = mid
            else:
                lo = mid
        out[idx - k_lo] = 0.5 * (lo + hi)
    return out


@numba.njit(cache=True)
def _count_below(d, e2, xs, pivmin):
    out = np.empty(xs.size, dtype=np.int64)
    for i in range(xs.size):
        out[i] = _sturm_count(d, e2, xs[i], pivmin)
    return out


@numba.njit(cache=True)
def _tridiag_lu_solve(d, e, lam, b, tiny):
    """Solve ``(T - lam I) x = b`` by Gaussian elimination with partial pivoting."""
    n = d.size
    # rows of U: u0 diagonal, u1 first super, u2 second super (fill-in)
    u0 = d - lam
    u1 = np.zeros(n)
    u2 = np.zeros(n)
    lower = np.zeros(n)
    swap = np.zeros(n, dtype=np.bool_)
    for i in range(n - 1):
        u1[i] = e[i]
    sub = e.copy()
    diag_next = 0.0
    for i in range(n - 1):
        # candidate pivots: u0[i] (row i) and sub[i] (row i+1, column i)
        if abs(u0[i]) >= abs(sub[i]):
            if u0[i] == 0.0:
                u0[i] = tiny
            f = sub[i] / u0[i]
            lower[i] = f
            u0[i + 1] = u0[i + 1] - f * u1[i]
            # u2[i] stays zero
        else:
            swap[i] = True
            f = u0[i] / sub[i]
            lower[i] = f
            # new row i is old row i+1: [sub[i], u0[i+1], e[i+1]]
            a1 = u0[i + 1]
            a2 = e[i + 1] if i + 1 < n - 1 else 0.0
            old1 = u1[i]
            u0[i] = sub[i]
            u1[i] = a1
            u2[i] = a2
            # row i+1 becomes old row i minus f * new row i
            u0[i + 1] = old1 - f * a1
            if i + 1 < n - 1:
                u1[i + 1] = -f * a2
    if u0[n - 1] == 0.0:
        u0[n - 1] = tiny
    for i in range(n):
        if abs(u0[i]) < tiny:
            u0[i] = tiny if u0[i] >= 0.0 else -tiny
    x = b.copy()
    for i in range(n - 1):
        if swap[i]:
            t = x[i]
            x[i] = x[i + 1]
            x[i + 1] = t - lower[i] * x[i + 1]
        else:
            x[i + 1] = x[i + 1] - lower[i] * x[i]
    x[n - 1] = x[n - 1] / u0[n - 1]
    if n >= 2:
        x[n - 2] = (x[n - 2] - u1[n - 2] * x[n - 1]) / u0[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (x[i] - u1[i] * x[i + 1] - u2[i] * x[i + 2]) / u0[i]
    return x


@numba.njit(cache=True)
def _tridiag_residual(d, e, lam, v):
    n = d.size
    s = 0.0
    for i in range(n):
        r = (d[i] - lam) * v[i]
        if i > 0:
            r += e[i - 1] * v[i - 1]
        if i < n - 1:
            r += e[i] * v[i + 1]
        s += r * r
    return math.sqrt(s)


def _scaled(m: SymTridiag):
    """Diagonals divided by the Gershgorin norm, so that bisection is scale invariant."""
    nrm = float(_gershgorin(m.diag, m.offdiag)[2])
    if nrm == 0.0 or not math.isfinite(nrm):
        nrm = 1.0
    return m.diag / nrm, m.offdiag / nrm, nrm


def _pivmin(e: np.ndarray) -> float:
    e2max = float(np.max(e ** 2)) if e.size else 0.0
    return max(np.finfo(float).tiny, EPS * EPS * max(e2max, 1.0) * 1e-4)


def tridiag_count(m: SymTridiag, x) -> np.ndarray:
    """Sturm count: number of eigenvalues strictly below each entry of ``x``."""
    d, e, nrm = _scaled(m)
    xs = np.atleast_1d(np.asarray(x, dtype=float)) / nrm
    return _count_below(d, e ** 2, xs, _pivmin(e))


def tridiag_eigvals(m: SymTridiag, k_lo: int, k_hi: int) -> np.ndarray:
    """Eigenvalues ``k_lo..k_hi`` (1-based, ascending) by Sturm bisection."""
    n = m.n
    if not (1 <= k_lo <= k_hi <= n):
        raise ValueError(f"need 1 <= k_lo <= k_hi <= N={n}, got {k_lo}, {k_hi}")
    if not (np.any(m.diag) or np.any(m.offdiag)):
        return np.zeros(k_hi - k_lo + 1)
    d, e, nrm = _scaled(m)
    lo, hi, _ = _gershgorin(d, e)
    pad = 2.0 * EPS + np.finfo(float).tiny
    abstol = np.finfo(float).tiny + 1e-6 * EPS
    return nrm * _bisect(d, e ** 2, k_lo, k_hi, lo - pad, hi + pad, abstol, _pivmin(e))


def tridiag_eigs(m: SymTridiag, k_lo: int, k_hi: int, *, residual_rtol=None, seed=None,
                 cluster_rtol=None, max_iter=None, restarts=None):
    """Selected eigenpairs of a symmetric tridiagonal matrix.

    Parameters
    ----------
    m : SymTridiag
    k_lo, k_hi : int
        1-based inclusive index range of the wanted eigenvalues.

    Returns
    -------
    eigenvalues : ndarray, shape (k,)
    eigenvectors : ndarray, shape (N, k)
        Unit-norm columns; vectors of close eigenvalues are mutually orthogonalised.

    Raises
    ------
    ConvergenceError
        If inverse iteration does not reach the residual target for some index.
    """
    residual_rtol = DEFAULTS["residual_rtol"] if residual_rtol is None else residual_rtol
    cluster_rtol = DEFAULTS["cluster_rtol"] if cluster_rtol is None else cluster_rtol
    max_iter = DEFAULTS["inverse_iterations"] if max_iter is None else max_iter
    restarts = DEFAULTS["inverse_restarts"] if restarts is None else restarts
    seed = DEFAULTS["seed"] if seed is None else seed

    lam = tridiag_eigvals(m, k_lo, k_hi)
    n = m.n
    nrm = m.norm()
    if nrm == 0.0:
        nrm = 1.0  # zero matrix: every unit vector is an eigenvector
    tiny = EPS * nrm
    rng = np.random.default_rng(seed)
    vecs = np.empty((n, lam.size))
    cluster_start = 0
    group_start = 0
    for j in range(lam.size):
        if j > 0 and lam[j] - lam[j - 1] > cluster_rtol * nrm:
            cluster_start = j
        if j > 0 and lam[j] - lam[j - 1] > DEFAULTS["reorth_rtol"] * nrm:
            group_start = j
        ok = False
        for attempt in range(restarts + 1):
            x = rng.standard_normal(n)
            x /= np.linalg.norm(x)
            # separate members of a cluster by a tiny shift
            shift = lam[j] + (j - cluster_start) * 10.0 * EPS * nrm
            for _ in range(max_iter):
                x = _tridiag_lu_solve(m.diag, m.offdiag, shift, x, tiny)
                if j > cluster_start:
                    prev = vecs[:, cluster_start:j]
                    x -= prev @ (prev.T @ x)
                    x -= prev @ (prev.T @ x)
                s = np.linalg.norm(x)
                if not np.isfinite(s) or s == 0.0:
                    break
                x /= s
                if _tridiag_residual(m.diag, m.offdiag, lam[j], x) <= residual_rtol * nrm:
                    ok = True
                    break
            if ok:
                break
        if not ok:
            raise ConvergenceError(
                f"inverse iteration did not converge for eigenvalue index {k_lo + j}",
                index=k_lo + j,
            )
        if j > group_start:
            # near-degenerate neighbours: one more projection removes the
            # O(eps ||M|| / gap) overlap inverse iteration leaves behind
            prev = vecs[:, group_start:j]
            x -= prev @ (prev.T @ x)
            x /= np.linalg.norm(x)
        vecs[:, j] = x
    return lam, vecs


# ---------------------------------------------------------------------------
# dense symmetric
# ---------------------------------------------------------------------------


def householder_tridiagonalize(a: np.ndarray):
    """Reduce a symmetric matrix to tridiagonal form, ``a = Q T Q^T``.

    Returns
    -------
    SymTridiag, ndarray
        The tridiagonal factor and the orthogonal matrix ``Q``.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    q = np.eye(n)
    for k in range(n - 2):
        x = a[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        v = x.copy()
        v[0] += math.copysign(alpha, x[0])
        vn = np.linalg.norm(v)
        if vn == 0.0:
            continue
        v /= vn
        # A <- H A H with H = I - 2 v v^T acting on rows/cols k+1:
        sub = a[k + 1:, :]
        sub -= 2.0 * np.outer(v, v @ sub)
        sub = a[:, k + 1:]
        sub -= 2.0 * np.outer(sub @ v, v)
        qs = q[:, k + 1:]
        qs -= 2.0 * np.outer(qs @ v, v)
    return SymTridiag(np.diag(a).copy(), np.diag(a, 1).copy()), q


def dense_sym_eigs(m: DenseSym, *, residual_rtol=None):
    """Full ascending spectrum and orthonormal eigenvectors of a dense symmetric matrix.

    Householder tridiagonalization followed by :func:`tridiag_eigs`.
    """
    residual_rtol = DEFAULTS["dense_residual_rtol"] if residual_rtol is None else residual_rtol
    a = m.entries
    n = m.n
    if n == 1:
        return a[0].copy(), np.ones((1, 1))
    t, q = householder_tridiagonalize(a)
    lam, v = tridiag_eigs(t, 1, n)
    vecs = q @ v
    nrm = np.abs(a).sum(axis=1).max()
    if nrm == 0.0:
        return np.zeros(n), np.eye(n)
    res = np.linalg.norm(a @ vecs - vecs * lam, axis=0)
    bad = np.nonzero(res > residual_rtol * nrm)[0]
    if bad.size:
        raise ConvergenceError(f"dense eigenpair residual too large at index {bad[0] + 1}",
                               index=int(bad[0]) + 1)
    return lam, vecs


# ---------------------------------------------------------------------------
# scalar kernels
# ---------------------------------------------------------------------------


def brent_root(f, bracket, tol: float = 1e-12, maxiter: int = 200) -> float:
    """Root of ``f`` inside a sign-changing bracket (Brent's method)."""
    lo, hi = float(bracket[0]), float(bracket[1])
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if not flo * fhi < 0:
        raise ValueError(f"no sign change on [{lo}, {hi}]: f={flo:.3e}, {fhi:.3e}")
    try:
        x, info = optimize.brentq(f, lo, hi, xtol=tol, rtol=4 * EPS, maxiter=maxiter,
                                  full_output=True, disp=False)
    except RuntimeError as exc:  # pragma: no cover - scipy raises only with disp=True
        raise ConvergenceError(str(exc), bracket=(lo, hi)) from exc
    if not info.converged:
        raise ConvergenceError(f"brent_root did not converge: {info.flag}", bracket=(lo, hi))
    return float(x)


def minimize_1d(f, bracket, tol: float = 1e-10):
    """Minimiser of a unimodal ``f`` on ``[lo, hi]``; returns ``(argmin, min)``."""
    lo, hi = float(bracket[0]), float(bracket[1])
    if not hi > lo:
        raise ValueError(f"degenerate bracket [{lo}, {hi}]")
    res = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded",
                                   options={"xatol": tol, "maxiter": 500})
    if not res.success:
        raise ConvergenceError(f"minimize_1d failed: {res.message}", bracket=(lo, hi))
    return float(res.x), float(res.fun)


def integrate(f, rule: QuadratureRule) -> float:
    """Apply a quadrature rule to samples or to a callable."""
    if callable(f):
        y = np.asarray(f(rule.nodes), dtype=float)
    else:
        y = np.asarray(f, dtype=float)
    if y.shape[-1] != rule.nodes.size:
        raise ValueError(f"{y.shape[-1]} samples for a rule with {rule.nodes.size} nodes")
    return y @ rule.weights


def second_derivative(f, x: float, h0: float = 0.1) -> float:
    """Central second difference with one Richardson step (steps ``h0`` and ``h0/2``)."""
    fx = f(x)

    def d2(h):
        return (f(x + h) - 2.0 * fx + f(x - h)) / (h * h)

    coarse = d2(h0)
    fine = d2(0.5 * h0)
    return (4.0 * fine - coarse) / 3.0


def richardson(coarse, fine, order: int = 2):
    """Combine estimates at steps ``2d`` and ``d`` of a method with error ``O(d**order)``."""
    r = 2.0 ** order
    return (r * np.asarray(fine) - np.asarray(coarse)) / (r - 1.0)
