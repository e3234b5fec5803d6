"""The de Gennes operator ``-d^2/dt^2 + (t - sigma)^2`` on the half-line with a
Robin (``u'(0) = gamma u(0)``) or Dirichlet condition at ``t = 0``.

Eigenvalues ``mu_n(gamma, sigma)`` are computed by a second-order finite
difference scheme on ``[0, T]``.  The Robin row uses a ghost point and a half
cell at ``t = 0`` so the matrix stays symmetric tridiagonal; the half-cell
weight makes the discrete inner product the trapezoidal rule.  Every scalar
output (eigenvalue, Hellmann-Feynman slope, ``u(0)^2``, ``C_k``, moments) is
computed on the grid and on its two-fold coarsening and Richardson-combined.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from . import numerics
from .numerics import SymTridiag

DIRICHLET = "dirichlet"

#: Robin parameters below ``-GAMMA_BOUND`` are rejected
GAMMA_BOUND = 10.0
DEFAULT_DELTA = 20.0 / 8000
REGULAR_TOL = 1e-6
MONOTONE_FLOOR = 1e-9


class NonRegularWindow(ValueError):
    """The spectral window touches a Landau level or a critical value."""


class InvariantError(RuntimeError):
    """A computed quantity violates a property it must satisfy."""


def robin(value):
    """Normalise a Robin parameter: a float, or :data:`DIRICHLET` for ``gamma = +inf``."""
    if isinstance(value, str):
        v = value.strip().lower()
        if v in ("dirichlet", "dir", "inf", "+inf", "infinity"):
            return DIRICHLET
        value = float(v)
    if value == math.inf:
        return DIRICHLET
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"invalid Robin parameter {value!r}")
    if value < -GAMMA_BOUND:
        raise ValueError(f"Robin parameter {value} below the supported bound -{GAMMA_BOUND}")
    return value


def is_dirichlet(gamma) -> bool:
    return isinstance(gamma, str) and gamma == DIRICHLET


@dataclass(frozen=True)
class HalfLineGrid:
    """Uniform grid ``t_i = i * T / N`` on ``[0, T]`` with ``u(T) = 0``."""

    T: float = 20.0
    N: int = 8000

    def __post_init__(self):
        if self.N < 1000:
            raise ValueError(f"HalfLineGrid needs N >= 1000, got {self.N}")
        if self.T <= 0:
            raise ValueError("truncation T must be positive")

    @property
    def delta(self) -> float:
        return self.T / self.N

    def coarsened(self):
        """Two-fold coarsening used for Richardson combination, or ``None``."""
        if self.N % 2 or self.N // 2 < 1000:
            return None
        return HalfLineGrid(self.T, self.N // 2)

    @classmethod
    def for_sigma(cls, sigma: float, delta: float = DEFAULT_DELTA) -> "HalfLineGrid":
        """Default grid: ``T = max(20, |sigma| + 12)`` at fixed spacing."""
        T = max(20.0, abs(sigma) + 12.0)
        N = 2 * int(math.ceil(T / delta / 2.0))
        return cls(T, N)


def assemble(gamma, sigma: float, T: float, N: int):
    """Symmetric tridiagonal discretisation of ``H[gamma, sigma]``.

    Returns
    -------
    SymTridiag, ndarray, ndarray
        Matrix, nodes ``t`` and trapezoidal weights ``w``; an eigenvector
        ``y`` maps to grid values ``u = y / sqrt(w)``.
    """
    d = T / N
    inv = 1.0 / (d * d)
    if is_dirichlet(gamma):
        t = d * np.arange(1, N)
        diag = 2.0 * inv + (t - sigma) ** 2
        off = np.full(N - 2, -inv)
        w = np.full(N - 1, d)
    else:
        t = d * np.arange(0, N)
        diag = 2.0 * inv + (t - sigma) ** 2
        diag[0] += 2.0 * gamma / d
        off = np.full(N - 1, -inv)
        off[0] *= math.sqrt(2.0)
        w = np.full(N, d)
        w[0] = 0.5 * d
    return SymTridiag(diag, off), t, w


def _raw_eigenpairs(gamma, sigma, k_lo, k_hi, T, N):
    m, t, w = assemble(gamma, sigma, T, N)
    lam, y = numerics.tridiag_eigs(m, k_lo, k_hi)
    u = y / np.sqrt(w)[:, None]
    # sign convention: u(0) > 0, or u'(0) > 0 under Dirichlet
    s = np.sign(u[0])
    s[s == 0] = 1.0
    u *= s
    return lam, u, t, w


@lru_cache(maxsize=200_000)
def _level(gamma, sigma: float, k: int, T: float, N: int):
    """Scalar functionals of the k-th discrete eigenpair on one grid."""
    lam, u, t, w = _raw_eigenpairs(gamma, sigma, k, k, T, N)
    u = u[:, 0]
    p = w * u * u
    x = t - sigma
    dmu = -2.0 * float(p @ x)
    if is_dirichlet(gamma):
        u0 = 0.0
        du0 = u[0] / t[0]
    else:
        u0 = float(u[0])
        du0 = gamma * u0
    c_bulk = float(p @ (x * t * t - 2.0 * t * x * x))
    C = c_bulk + 0.5 * u0 * u0
    m1 = float(p @ x)
    m3 = float(p @ x ** 3)
    return float(lam[0]), dmu, u0 * u0, C, m1, m3, float(du0)


@dataclass(frozen=True)
class BranchPoint:
    """Richardson-combined functionals of ``u_k^{[gamma, sigma]}``."""

    sigma: float
    mu: float
    dmu: float
    u0sq: float
    C: float
    m1: float
    m3: float
    du0: float


def _grid(sigma, grid):
    return HalfLineGrid.for_sigma(sigma) if grid is None else grid


def branch_point(gamma, sigma: float, k: int = 1, grid: HalfLineGrid | None = None,
                 extrapolate: bool = True) -> BranchPoint:
    gamma = robin(gamma)
    sigma = float(sigma)
    if not math.isfinite(sigma):
        raise ValueError("sigma must be finite")
    g = _grid(sigma, grid)
    fine = np.array(_level(gamma, sigma, k, g.T, g.N))
    coarse = g.coarsened()
    if extrapolate and coarse is not None:
        vals = numerics.richardson(np.array(_level(gamma, sigma, k, coarse.T, coarse.N)), fine)
    else:
        vals = fine
    return BranchPoint(sigma, *map(float, vals))


@dataclass(frozen=True)
class EigenPair:
    n: int
    mu: float
    t: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)


def solve(gamma, sigma: float, n_max: int, grid: HalfLineGrid | None = None,
          extrapolate: bool = True) -> list[EigenPair]:
    """First ``n_max`` eigenpairs of ``H[gamma, sigma]``.

    Eigenvalues are Richardson-combined over grids ``N/2`` and ``N`` unless
    ``extrapolate=False``, in which case the raw ``O(delta^2)`` values of the
    ``N``-point scheme are returned.  Eigenfunctions are the ``N``-grid ones,
    normalised in the trapezoidal ``L^2`` norm with ``u(0) > 0``.
    """
    gamma = robin(gamma)
    sigma = float(sigma)
    if not math.isfinite(sigma):
        raise ValueError("sigma must be finite")
    g = _grid(sigma, grid)
    if n_max < 1 or n_max > g.N / 10:
        raise ValueError(f"n_max={n_max} outside [1, N/10] for N={g.N}")
    lam, u, t, _ = _raw_eigenpairs(gamma, sigma, 1, n_max, g.T, g.N)
    coarse = g.coarsened()
    if extrapolate and coarse is not None:
        m, _, _ = assemble(gamma, sigma, coarse.T, coarse.N)
        lam = numerics.richardson(numerics.tridiag_eigvals(m, 1, n_max), lam)
    return [EigenPair(j + 1, float(lam[j]), t, u[:, j]) for j in range(n_max)]


def mu(gamma, sigma: float, k: int = 1, grid: HalfLineGrid | None = None) -> float:
    return branch_point(gamma, sigma, k, grid).mu


# ---------------------------------------------------------------------------
# dispersion branches
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DispersionBranch:
    """Sampled dispersion curve ``sigma -> mu_n(gamma, sigma)`` with interpolants.

    ``mu`` is interpolated by a cubic Hermite spline using the exact
    Hellmann-Feynman slopes; ``C_n`` by a not-a-knot cubic spline.
    """

    gamma: object
    n: int
    sigma: np.ndarray
    mu: np.ndarray
    dmu: np.ndarray
    C: np.ndarray
    warnings: tuple = ()

    def __post_init__(self):
        if np.any(np.diff(self.sigma) <= 0):
            raise ValueError("sigma samples must be strictly increasing")
        object.__setattr__(self, "_mu_spline", CubicHermiteSpline(self.sigma, self.mu, self.dmu))
        object.__setattr__(self, "_c_spline", CubicSpline(self.sigma, self.C))

    @property
    def sigma_range(self):
        return float(self.sigma[0]), float(self.sigma[-1])

    def _check(self, s):
        s = np.asarray(s, dtype=float)
        lo, hi = self.sigma_range
        if np.any(s < lo - 1e-12) or np.any(s > hi + 1e-12):
            raise ValueError(f"sigma outside sampled range [{lo}, {hi}]")
        return s

    def mu_at(self, s, nu: int = 0):
        return self._mu_spline(self._check(s), nu)

    def C_at(self, s, nu: int = 0):
        return self._c_spline(self._check(s), nu)

    def midpoint_error(self, n_check: int = 5) -> float:
        """Largest interpolation error against direct solves at sample midpoints."""
        idx = np.linspace(0, self.sigma.size - 2, n_check).astype(int)
        mids = 0.5 * (self.sigma[idx] + self.sigma[idx + 1])
        direct = np.array([branch_point(self.gamma, s, self.n).mu for s in mids])
        return float(np.abs(direct - self.mu_at(mids)).max())


def dispersion_branch(gamma, n: int, sigma_range=(-2.0, 6.0), n_samples: int = 400,
                      grid: HalfLineGrid | None = None) -> DispersionBranch:
    """Sample ``mu_n(gamma, .)`` on a uniform sigma grid."""
    gamma = robin(gamma)
    lo, hi = map(float, sigma_range)
    if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
        raise ValueError(f"invalid sigma range {sigma_range}")
    s = np.linspace(lo, hi, n_samples)
    pts = [branch_point(gamma, x, n, grid) for x in s]
    mu_s = np.array([p.mu for p in pts])
    dmu = np.array([p.dmu for p in pts])
    C = np.array([p.C for p in pts])
    notes = []
    diff = np.diff(mu_s)
    # increments below solver accuracy carry no monotonicity information
    sign = np.sign(diff[np.abs(diff) > MONOTONE_FLOOR])
    if sign.size == 0:
        sign = np.ones(1)
    if is_dirichlet(gamma):
        if np.any(sign > 0):
            notes.append("Dirichlet branch not monotone decreasing on samples")
    else:
        changes = np.count_nonzero(np.diff(sign) != 0)
        if changes > 1 or (changes == 1 and sign[0] > 0):
            notes.append("sampled branch does not follow the decrease-then-increase pattern;"
                         " sampling may be too coarse")
    for msg in notes:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return DispersionBranch(gamma, n, s, mu_s, dmu, C, tuple(notes))


# ---------------------------------------------------------------------------
# minima and Appendix identities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BranchExtremum:
    n: int
    gamma: float
    xi: float
    theta: float
    mu2: float
    u0sq: float
    C: float
    m1: float
    m3: float

    def check(self, tol: float = 1e-6):
        n = self.n
        upper = 2 * n - 1
        lower = 2 * n - 3 if n >= 2 else -math.inf
        if not lower < self.theta < upper:
            raise InvariantError(f"Theta^[{n - 1}]={self.theta} outside ({lower}, {upper})")
        if not self.mu2 > 0:
            raise InvariantError(f"degenerate minimum: mu''={self.mu2}")
        if abs(self.theta - (self.xi ** 2 - self.gamma ** 2)) > tol:
            raise InvariantError("critical-value identity Theta = xi^2 - gamma^2 violated")
        return self

    def as_dict(self):
        return {k: getattr(self, k) for k in
                ("n", "gamma", "xi", "theta", "mu2", "u0sq", "C", "m1", "m3")}


def _bracket_minimum(gamma, n, grid):
    """Bracket ``[lo, hi]`` with ``mu' < 0`` at lo and ``mu' > 0`` at hi."""

    def slope(s):
        return branch_point(gamma, s, n, grid).dmu

    lo = -2.0
    while slope(lo) >= 0:
        lo -= 1.0
        if lo < -20:
            raise numerics.ConvergenceError("no decreasing region found", bracket=(lo, None))
    hi = lo + 1.0
    while slope(hi) <= 0:
        lo = hi
        hi += 1.0
        if hi > 20:
            raise numerics.ConvergenceError("no increasing region found (Dirichlet-like branch?)",
                                            bracket=(lo, hi))
    return lo, hi


def _level_at(gamma, s, n, g):
    return _level(gamma, float(s), n, g.T, g.N)


def _extremum_on_grid(gamma, n, g, guess):
    def slope(s):
        return _level_at(gamma, s, n, g)[1]

    a, b = guess - 0.05, guess + 0.05
    while slope(a) >= 0:
        a -= 0.1
    while slope(b) <= 0:
        b += 0.1
    xi = numerics.brent_root(slope, (a, b), tol=1e-13)
    mu_, dmu, u0sq, C, m1, m3, _ = _level_at(gamma, xi, n, g)
    mu2 = numerics.second_derivative(lambda s: _level_at(gamma, s, n, g)[0], xi, h0=0.1)
    return np.array([xi, mu_, mu2, u0sq, C, m1, m3])


@lru_cache(maxsize=4096)
def _find_minimum(gamma, n, T, N):
    g = HalfLineGrid(T, N)
    lo, hi = _bracket_minimum(gamma, n, g)
    guess, _ = numerics.minimize_1d(lambda s: branch_point(gamma, s, n, g).mu, (lo, hi), tol=1e-5)
    fine = _extremum_on_grid(gamma, n, g, guess)
    coarse_g = g.coarsened()
    vals = fine if coarse_g is None else numerics.richardson(
        _extremum_on_grid(gamma, n, coarse_g, guess), fine)
    xi, theta, mu2, u0sq, C, m1, m3 = map(float, vals)
    return BranchExtremum(n, gamma, xi, theta, mu2, u0sq, C, m1, m3)


def find_minimum(gamma, n: int = 1, grid: HalfLineGrid | None = None,
                 check: bool = True) -> BranchExtremum:
    """Minimum ``(xi_{n-1}(gamma), Theta^[n-1](gamma))`` of the n-th dispersion curve.

    The minimiser is the root of the Hellmann-Feynman slope on each grid
    level; curvature comes from :func:`numerics.second_derivative`.

    Raises
    ------
    ValueError
        For a Dirichlet condition, whose branches have no interior minimum.
    """
    gamma = robin(gamma)
    if is_dirichlet(gamma):
        raise ValueError("Dirichlet dispersion curves are decreasing: no interior minimum")
    g = grid or HalfLineGrid()
    ext = _find_minimum(gamma, int(n), g.T, g.N)
    return ext.check() if check else ext


def dauge_helffer_residual(gamma, n: int = 1) -> float:
    """Relative mismatch of ``mu'' = 2 xi u(0)^2`` at the minimum."""
    e = find_minimum(gamma, n)
    return abs(e.mu2 - 2.0 * e.xi * e.u0sq) / e.mu2


def moment_check(gamma, n: int = 1):
    """First moment and third-moment residual at the minimum.

    The third-moment identity is taken with the squared boundary value,
    ``int (t - xi)^3 u^2 = (1 + 2 gamma xi) u(0)^2 / 6``.
    """
    e = find_minimum(gamma, n)
    return abs(e.m1), abs(e.m3 - (1.0 + 2.0 * e.gamma * e.xi) * e.u0sq / 6.0)


def compute_C(gamma, sigma: float, k: int = 1, grid: HalfLineGrid | None = None) -> float:
    """Curvature coefficient ``C_k(sigma)``.

    ``C_k = int [(t - s) t^2 - 2 t (s - t)^2] u^2 dt + u(0)^2 / 2``, the last
    term being ``-<u', u>`` integrated exactly.
    """
    return branch_point(gamma, sigma, k, grid).C


def closed_form_C(ext: BranchExtremum) -> float:
    """``C_k`` at the minimum from ``(1 - gamma xi) u(0)^2 / 3``."""
    return (1.0 - ext.gamma * ext.xi) * ext.u0sq / 3.0


def gamma0_function(gamma: float, k: int = 1) -> float:
    """``1 - gamma sqrt(gamma^2 + Theta^[k-1](gamma))``; its root is the threshold."""
    theta = find_minimum(gamma, k).theta
    return 1.0 - gamma * math.sqrt(gamma * gamma + theta)


def _bracket_positive_root(f, start=0.5):
    lo, hi = 0.0, start
    flo = f(lo)
    if not flo > 0:
        raise numerics.ConvergenceError(f"f(0)={flo} is not positive", bracket=(lo, hi))
    fhi = f(hi)
    while fhi > 0:
        lo, hi = hi, 2.0 * hi
        if hi > GAMMA_BOUND:
            raise numerics.ConvergenceError(f"no sign change up to gamma={hi}; f={fhi}",
                                            bracket=(lo, hi))
        fhi = f(hi)
    return lo, hi


@lru_cache(maxsize=16)
def find_gamma0(k: int = 1, tol: float = 1e-10) -> float:
    """Robin threshold ``gamma_0^[k-1]`` where ``C_k(xi_{k-1}(gamma))`` changes sign."""
    if k < 1:
        raise ValueError("k >= 1 required")

    def f(g):
        return gamma0_function(g, k)

    return numerics.brent_root(f, _bracket_positive_root(f), tol=tol)


@lru_cache(maxsize=16)
def gamma0_from_C(k: int = 1, tol: float = 1e-10) -> float:
    """Same threshold located as the zero of the quadrature value of ``C_k`` at the minimum."""

    def f(g):
        e = find_minimum(g, k)
        return compute_C(g, e.xi, k)

    return numerics.brent_root(f, _bracket_positive_root(f), tol=tol)


# ---------------------------------------------------------------------------
# spectral windows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Component:
    """Connected component ``Sigma_{k,q}`` of ``mu_k^{-1}([a, b])``.

    ``monotone`` is ``"decreasing"``, ``"increasing"`` or ``None`` (contains
    the minimum).  ``alpha``/``beta`` are the preimages of ``a``/``b`` on a
    monotone component.
    """

    k: int
    q: int
    lo: float
    hi: float
    monotone: str | None
    alpha: float | None
    beta: float | None

    def as_dict(self):
        return dict(k=self.k, q=self.q, lo=self.lo, hi=self.hi, monotone=self.monotone,
                    alpha=self.alpha, beta=self.beta)


@dataclass(frozen=True)
class WindowDecomposition:
    window: tuple
    gamma: object
    n_target: int
    N_curves: int
    components: tuple
    minima: tuple  # (k, xi, theta) for real gamma

    def p(self, k: int) -> int:
        return sum(1 for c in self.components if c.k == k)

    def for_curve(self, k: int):
        return [c for c in self.components if c.k == k]

    @property
    def regular(self) -> bool:
        return all(c.monotone is not None for c in self.components)

    def xi(self, k: int):
        for kk, xi, _ in self.minima:
            if kk == k:
                return xi
        return None

    def hull(self, k: int | None = None):
        cs = self.components if k is None else self.for_curve(k)
        if not cs:
            return None
        return min(c.lo for c in cs), max(c.hi for c in cs)

    def as_dict(self):
        a, b = self.window
        return dict(window=[a if math.isfinite(a) else "-inf", b],
                    gamma=self.gamma if not is_dirichlet(self.gamma) else "dirichlet",
                    n_target=self.n_target, N_curves=self.N_curves,
                    p={str(k): self.p(k) for k in range(1, self.n_target + 1)},
                    components=[c.as_dict() for c in self.components],
                    minima=[dict(k=k, xi=x, theta=t) for k, x, t in self.minima])


def _solve_level(gamma, k, c, side, xi=None):
    """Preimage of ``c`` on the decreasing (``side='left'``) or increasing branch part."""

    def f(s):
        return branch_point(gamma, s, k).mu - c

    if side == "left":
        hi = xi if xi is not None else 0.0
        if xi is None:
            while f(hi) > 0:
                hi += 1.0
        lo = hi - 1.0
        while f(lo) < 0:
            lo -= 1.0
    else:
        lo = xi
        hi = lo + 1.0
        while f(hi) < 0:
            hi += 1.0
            if hi > 40:
                raise numerics.ConvergenceError(f"mu_{k} never reaches {c}", bracket=(lo, hi))
    return numerics.brent_root(f, (lo, hi), tol=1e-12)


def target_band(a: float, b: float) -> int:
    """Index ``n`` with ``[a, b]`` inside ``(2n - 3, 2n - 1)`` (``n = 1`` when ``b < 1``)."""
    if not b > a:
        raise ValueError(f"empty window [{a}, {b}]")
    n = 1 if b < 1 else int(math.floor((b + 3.0) / 2.0))
    if abs(b - (2 * n - 1)) < REGULAR_TOL or (n >= 2 and abs(a - (2 * n - 3)) < REGULAR_TOL):
        raise NonRegularWindow(f"window [{a}, {b}] touches a Landau level")
    if n >= 2 and not a > 2 * n - 3:
        raise NonRegularWindow(f"window [{a}, {b}] contains the Landau level {2 * n - 3}")
    return n


@lru_cache(maxsize=256)
def _window_decomposition(gamma, a, b):
    n = target_band(a, b)
    comps = []
    minima = []
    dirichlet = is_dirichlet(gamma)
    if not math.isfinite(a) and n != 1:
        raise ValueError("a = -inf is only allowed below the first Landau level")
    for k in range(1, n + 1):
        xi = None
        if not dirichlet:
            e = find_minimum(gamma, k)
            xi = e.xi
            minima.append((k, e.xi, e.theta))
            for end in (a, b):
                if math.isfinite(end) and abs(end - e.theta) < REGULAR_TOL:
                    raise NonRegularWindow(f"window endpoint {end} equals Theta^[{k - 1}]={e.theta}")
        if k < n:
            al = _solve_level(gamma, k, a, "left", xi)
            be = _solve_level(gamma, k, b, "left", xi)
            comps.append(Component(k, 1, be, al, "decreasing", al, be))
            continue
        if dirichlet:
            continue
        theta = e.theta
        if b < theta:
            continue
        if math.isfinite(a) and theta < a:
            al = _solve_level(gamma, k, a, "left", xi)
            be = _solve_level(gamma, k, b, "left", xi)
            comps.append(Component(k, 1, be, al, "decreasing", al, be))
            al = _solve_level(gamma, k, a, "right", xi)
            be = _solve_level(gamma, k, b, "right", xi)
            comps.append(Component(k, 2, al, be, "increasing", al, be))
        else:
            lo = _solve_level(gamma, k, b, "left", xi)
            hi = _solve_level(gamma, k, b, "right", xi)
            comps.append(Component(k, 1, lo, hi, None, None, None))
    n_curves = len({c.k for c in comps})
    return WindowDecomposition((a, b), gamma, n, n_curves, tuple(comps), tuple(minima))


def window_decomposition(gamma, a: float, b: float) -> WindowDecomposition:
    """Preimage components of ``[a, b]`` under all dispersion curves.

    Raises
    ------
    NonRegularWindow
        If an endpoint is within ``1e-6`` of a Landau level or of a critical
        value ``Theta^[k-1](gamma)``.
    """
    return _window_decomposition(robin(gamma), float(a), float(b))
