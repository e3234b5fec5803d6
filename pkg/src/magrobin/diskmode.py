"""Exact reference spectra of the magnetic Robin Laplacian on a disk.

With unit field, gauge ``A = (-x2, x1) / 2`` and ``psi = f(r) e^{i m phi}`` the
operator ``(-i h grad - A)^2`` acts on ``f`` as

    -h^2 (f'' + f'/r) + (h m / r - r / 2)^2 f,

and ``-n . grad psi = gamma h^{-1/2} psi`` becomes ``f'(R) = -gamma h^{-1/2} f(R)``.
With ``g = sqrt(r) f`` the weight ``r dr`` turns into ``dr``:

    -h^2 g'' + [(h m / r - r / 2)^2 - h^2 / (4 r^2)] g,   g'(R) = beta g(R),

where ``beta = 1 / (2R) - gamma / sqrt(h)``.  Near ``r = R`` the substitution
``r = R - sqrt(h) t`` gives ``h (t - sigma)^2`` with
``sigma = sqrt(h) (R / (2h) - m / R)``, so mode ``m`` pairs with the flux
index ``l = -m`` and radial index ``j`` with dispersion curve ``k = j``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import degennes, numerics, report

DEFAULT_NR = 4000
MIN_POINTS_PER_LAYER = 50


@dataclass(frozen=True)
class RadialProblem:
    R: float
    h: float
    gamma: object
    m: int
    N: int = DEFAULT_NR

    def __post_init__(self):
        if not (self.R > 0 and self.h > 0):
            raise ValueError("R and h must be positive")
        object.__setattr__(self, "gamma", degennes.robin(self.gamma))
        if self.N < 100:
            raise ValueError("radial mesh needs at least 100 points")

    @property
    def delta(self) -> float:
        return self.R / self.N

    @property
    def resolves_layer(self) -> bool:
        return math.sqrt(self.h) / self.delta >= MIN_POINTS_PER_LAYER

    @property
    def beta(self) -> float:
        return 0.5 / self.R - self.gamma / math.sqrt(self.h)

    def refined(self) -> "RadialProblem":
        return RadialProblem(self.R, self.h, self.gamma, self.m, 2 * self.N)

    def assemble(self):
        """Symmetric tridiagonal matrix, mesh ``r`` and the map ``y -> g`` (``g = scale * y``)."""
        if self.m == 0:
            return self._assemble_axial()
        d, h = self.delta, self.h
        c = h * h / (d * d)
        dirichlet = degennes.is_dirichlet(self.gamma)
        r = d * np.arange(1, self.N if dirichlet else self.N + 1)
        V = (h * self.m / r - 0.5 * r) ** 2 - h * h / (4.0 * r * r)
        diag = 2.0 * c + V
        off = np.full(r.size - 1, -c)
        w = np.full(r.size, d)
        if not dirichlet:
            diag[-1] = 2.0 * c * (1.0 - d * self.beta) + V[-1]
            off[-1] *= math.sqrt(2.0)
            w[-1] = 0.5 * d
        return numerics.SymTridiag(diag, off), r, 1.0 / np.sqrt(w)

    def _assemble_axial(self):
        # m = 0: f is smooth and nonzero at the axis, so g = sqrt(r) f is not.
        # Finite volumes on f with dual-cell masses int r dr keep the axis node free.
        d, h, R = self.delta, self.h, self.R
        dirichlet = degennes.is_dirichlet(self.gamma)
        n = self.N if dirichlet else self.N + 1
        r = d * np.arange(n)
        mass = r * d
        mass[0] = d * d / 8.0
        if not dirichlet:
            mass[-1] = 0.5 * R * d - d * d / 8.0
        flux = h * h * (r[:-1] + 0.5 * d) / d  # h^2 r_{i+1/2} / delta
        kdiag = np.concatenate([[0.0], flux]) + np.concatenate([flux, [0.0]])
        if dirichlet:
            kdiag[-1] += h * h * (R - 0.5 * d) / d  # link to the node f(R) = 0
        else:
            kdiag[-1] += h ** 1.5 * self.gamma * R
        kdiag += mass * (0.5 * r) ** 2
        sq = np.sqrt(mass)
        diag = kdiag / mass
        off = -flux / (sq[:-1] * sq[1:])
        return numerics.SymTridiag(diag, off), r, np.sqrt(r / mass)


def radial_eigs(p: RadialProblem, window, with_vectors: bool = True):
    """Radial eigenvalues in ``window = (lo, hi)`` (absolute units).

    Returns
    -------
    lam : ndarray
    j : ndarray
        Radial indices (1-based).
    g : ndarray or None
        ``sqrt(r) f`` on the mesh, normalised in ``L^2(dr)`` by the trapezoid rule.
    r : ndarray
    """
    lo, hi = window
    mat, r, scale = p.assemble()
    n_lo = int(numerics.tridiag_count(mat, lo)[0]) if math.isfinite(lo) else 0
    n_hi = int(numerics.tridiag_count(mat, hi)[0])
    if n_hi <= n_lo:
        return np.zeros(0), np.zeros(0, int), None, r
    if with_vectors:
        lam, y = numerics.tridiag_eigs(mat, n_lo + 1, n_hi)
        g = y * scale[:, None]
        g *= np.sign(g[-1] if not degennes.is_dirichlet(p.gamma) else -g[-1])
    else:
        lam, g = numerics.tridiag_eigvals(mat, n_lo + 1, n_hi), None
    return lam, np.arange(n_lo + 1, n_hi + 1), g, r


class RadialEntry(NamedTuple):
    m: int
    j: int
    lam: float


@dataclass(frozen=True)
class RadialSpectrum:
    entries: tuple
    R: float
    h: float
    gamma: object
    window: tuple
    m_range: tuple
    eigenfunctions: dict = field(default_factory=dict, repr=False)

    @property
    def values(self) -> np.ndarray:
        return np.array([e.lam for e in self.entries])

    def __len__(self):
        return len(self.entries)

    def as_dict(self):
        return dict(R=self.R, h=self.h, gamma=self.gamma, window=list(self.window),
                    m_range=list(self.m_range), count=len(self.entries),
                    entries=[e._asdict() for e in self.entries])

    def write_csv(self, path, meta=None):
        rows = [(e.m, e.j, e.lam / self.h) for e in self.entries]
        report.write_csv(path, ["m", "j", "lambda_over_h"], rows, meta)


def sigma_of_m(R: float, h: float, m) -> np.ndarray:
    return math.sqrt(h) * (R / (2.0 * h) - np.asarray(m) / R)


def m_of_sigma(R: float, h: float, sigma) -> np.ndarray:
    return R * (R / (2.0 * h) - np.asarray(sigma) / math.sqrt(h))


def predicted_m_range(R, h, gamma, a, b):
    """Angular momenta whose flux momentum lies in the inflated preimage hull."""
    dec = degennes.window_decomposition(gamma, a, b)
    hull = dec.hull()
    if hull is None:
        return None
    step = math.sqrt(h) / R
    lo, hi = hull[0] - 5 * step, hull[1] + 5 * step
    return int(math.floor(m_of_sigma(R, h, hi))), int(math.ceil(m_of_sigma(R, h, lo)))


def window_spectrum(R: float, h: float, gamma, window, m_hint=None, N: int = DEFAULT_NR,
                    keep_vectors: bool = False, max_doublings: int = 3) -> RadialSpectrum:
    """All disk eigenvalues in ``[h a, h b]``.

    The angular momentum sweep starts from the flux-relation prediction (or
    ``m_hint``) and is widened while a boundary mode of the sweep still has
    in-window eigenvalues.
    """
    gamma = degennes.robin(gamma)
    a, b = map(float, window)
    lo, hi = h * a, h * b
    # the in-window modes need not be contiguous in m (one block per component),
    # so a hint only ever extends the range predicted by the flux relation
    rng = predicted_m_range(R, h, gamma, a, b)
    if m_hint is not None:
        rng = tuple(m_hint) if rng is None else (min(rng[0], m_hint[0]), max(rng[1], m_hint[1]))
    if rng is None:
        return RadialSpectrum((), R, h, gamma, (a, b), (0, -1))
    m_lo, m_hi = rng
    cache = {}

    def solve(m):
        if m not in cache:
            p = RadialProblem(R, h, gamma, m, N)
            lam, j, g, r = radial_eigs(p, (lo, hi), with_vectors=keep_vectors)
            cache[m] = (lam, j, g, r)
        return cache[m]

    for attempt in range(max_doublings + 1):
        for m in range(m_lo, m_hi + 1):
            solve(m)
        edge_hit = cache[m_lo][0].size > 0 or cache[m_hi][0].size > 0
        if not edge_hit:
            break
        width = m_hi - m_lo + 1
        m_lo, m_hi = m_lo - width, m_hi + width
    else:
        raise numerics.ConvergenceError(
            f"angular momentum sweep still finds window eigenvalues at its ends [{m_lo}, {m_hi}]")
    entries, vecs = [], {}
    for m in range(m_lo, m_hi + 1):
        lam, j, g, r = cache[m]
        for i, (lv, jv) in enumerate(zip(lam, j)):
            entries.append(RadialEntry(m, int(jv), float(lv)))
            if keep_vectors:
                vecs[(m, int(jv))] = (r, g[:, i])
    entries.sort(key=lambda e: e.lam)
    return RadialSpectrum(tuple(entries), R, h, gamma, (a, b), (m_lo, m_hi), vecs)


def refinement_shift(R, h, gamma, m, window, N: int = DEFAULT_NR) -> float:
    """Largest change of in-window eigenvalues when the radial mesh is doubled."""
    p = RadialProblem(R, h, gamma, m, N)
    lo, hi = window
    pad = 0.01 * (hi - lo)
    l1 = radial_eigs(p, (lo - pad, hi + pad), False)[0]
    l2 = radial_eigs(p.refined(), (lo - pad, hi + pad), False)[0]
    if l1.size != l2.size:
        return math.inf
    return float(np.abs(l1 - l2).max()) if l1.size else 0.0


@dataclass(frozen=True)
class LocalizationProfile:
    h: float
    distances: np.ndarray
    fractions: np.ndarray
    alpha_hat: float

    def mass_fraction(self, d: float) -> float:
        """``L^2`` mass within distance ``d`` of the boundary."""
        return float(self._cum(d))

    def _cum(self, d):
        return np.interp(d, self.distances, self.fractions)

    def as_dict(self):
        return dict(h=self.h, alpha_hat=self.alpha_hat,
                    fraction_10=self.mass_fraction(10 * math.sqrt(self.h)))


def localization_profile(p: RadialProblem, g: np.ndarray, r: np.ndarray | None = None,
                         fit_range=(2.0, 6.0)) -> LocalizationProfile:
    """Cumulative boundary mass and tail decay rate of a radial eigenfunction.

    ``alpha_hat`` is minus half the slope of ``log(tail mass)`` against
    ``d / sqrt(h)`` over ``fit_range``, matching a decay ``exp(-2 alpha d / sqrt(h))``
    of ``|psi|^2``.
    """
    if r is None:
        r = p.delta * np.arange(1, g.size + 1)
    w = np.full(r.size, p.delta)
    if not degennes.is_dirichlet(p.gamma):
        w[-1] *= 0.5
    dens = w * g * g
    dens = dens / dens.sum()
    d = p.R - r
    order = np.argsort(d)
    d_sorted = d[order]
    cum = np.cumsum(dens[order])
    tau = d_sorted / math.sqrt(p.h)
    tail = 1.0 - cum
    sel = (tau >= fit_range[0]) & (tau <= fit_range[1]) & (tail > 1e-300)
    if sel.sum() >= 2:
        slope = np.polyfit(tau[sel], np.log(tail[sel]), 1)[0]
        alpha = -0.5 * slope
    else:
        alpha = math.nan
    return LocalizationProfile(p.h, d_sorted, cum, float(alpha))


def bulk_eigenfunction(R, h, m=0, N: int = DEFAULT_NR):
    """Lowest Dirichlet radial state of mode ``m`` (an interior Landau state)."""
    p = RadialProblem(R, h, degennes.DIRICHLET, m, N)
    mat, r, scale = p.assemble()
    lam, y = numerics.tridiag_eigs(mat, 1, 1)
    return p, float(lam[0]), y[:, 0] * scale, r


@dataclass(frozen=True)
class Comparison:
    """Exact disk spectrum against the two-term effective model in one window."""

    h: float
    gamma: object
    exact_count: int
    model_count: int
    weyl: object
    hausdorff: float
    matched: float

    def as_dict(self):
        return dict(h=self.h, gamma=self.gamma, exact_count=self.exact_count,
                    model_count=self.model_count,
                    weyl=None if self.weyl is None else self.weyl.as_dict(),
                    hausdorff=self.hausdorff, hausdorff_over_h2=self.hausdorff / self.h ** 2,
                    matched=self.matched, matched_over_h2=self.matched / self.h ** 2)


def compare_with_model(R: float, h: float, gamma, window, margin: float = 0.05,
                       N: int = DEFAULT_NR) -> Comparison:
    """Distances between exact and model spectra in ``[h a, h b]``.

    ``hausdorff`` matches the in-window points of either set against the
    other set collected in the window widened by ``margin h`` on each side,
    so that pairs straddling an endpoint are not torn apart.  ``matched``
    compares each exact eigenvalue with the model value of the same labels
    (``l = -m``, ``k = j``).
    """
    from . import effective
    from .geometry import disk

    a, b = map(float, window)
    cfg = effective.SemiclassicalConfig(h, gamma, (a, b), disk(R))
    model = effective.leading_spectrum(cfg)
    wide = window_spectrum(R, h, gamma, (a - margin, b + margin), N=N)
    wide_model = effective.leading_spectrum(
        effective.SemiclassicalConfig(h, gamma, (a - margin, b + margin), disk(R)))
    lo, hi = h * a, h * b
    hd = effective.windowed_hausdorff(wide.values, wide_model.values, lo, hi, margin * h)
    inside = [e for e in wide.entries if lo <= e.lam <= hi]
    matched = 0.0
    for e in inside:
        model_val = effective.two_term(cfg, e.j, [cfg.sigma(-e.m)])[0]
        matched = max(matched, abs(e.lam - model_val))
    try:
        weyl = effective.weyl_count(cfg)
    except degennes.NonRegularWindow:
        weyl = None
    return Comparison(h, cfg.gamma, len(inside), len(model), weyl, hd, matched)


def mode_eigenvalue(R: float, h: float, gamma, m: int, j: int = 1, N: int = DEFAULT_NR) -> float:
    """``j``-th radial eigenvalue of angular mode ``m``."""
    mat, _, _ = RadialProblem(R, h, gamma, m, N).assemble()
    return float(numerics.tridiag_eigvals(mat, j, j)[0])
