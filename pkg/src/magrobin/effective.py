"""Effective boundary model for the magnetic Robin Laplacian in the semiclassical limit.

Near the boundary the spectrum in ``[ha, hb]`` is described, up to ``O(h^2)``,
by the operators ``h m_k^W`` on the boundary circle of length ``2L`` whose
Weyl symbols are ``mu_k(sigma) - hbar kappa(s) C_k(sigma)`` with
``hbar = h^{1/2}``.  Periodicity with the flux ``theta = |Omega| / (2 L h)``
quantises the momentum on ``sigma_l = hbar (pi l / L + theta)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import degennes, numerics, report
from .degennes import NonRegularWindow
from .geometry import DomainGeometry, curvature_extremum

TABLE_STEP = 0.01
MAX_H = 0.25
EDGE_MASS_TOL = 1e-8
GAMMA0_EXCLUSION = 1e-4


@lru_cache(maxsize=64)
def _table(gamma, k, lo, hi):
    n = int(round((hi - lo) / TABLE_STEP)) + 1
    return degennes.dispersion_branch(gamma, k, (lo, hi), n)


def branch_table(gamma, k: int, lo: float, hi: float) -> degennes.DispersionBranch:
    """Cached spline table of ``mu_k`` and ``C_k`` covering ``[lo, hi]`` (padded to integers)."""
    return _table(degennes.robin(gamma), int(k), float(math.floor(lo) - 1), float(math.ceil(hi) + 1))


@dataclass(frozen=True)
class SemiclassicalConfig:
    """Parameters of one semiclassical computation.

    ``window = (a, b)`` is in units of ``h``: the spectrum is sought in
    ``[h a, h b]``.  ``theta_offset`` is added to the flux (used to check that
    only its class modulo ``pi / L`` matters).
    """

    h: float
    gamma: object
    window: tuple
    geometry: DomainGeometry
    theta_offset: float = 0.0

    def __post_init__(self):
        if not 0 < self.h <= MAX_H:
            raise ValueError(f"h must lie in (0, {MAX_H}], got {self.h}")
        object.__setattr__(self, "gamma", degennes.robin(self.gamma))
        a, b = map(float, self.window)
        object.__setattr__(self, "window", (a, b))
        self.decomposition  # validates the window

    @property
    def hbar(self) -> float:
        return math.sqrt(self.h)

    @property
    def L(self) -> float:
        return self.geometry.L

    @property
    def theta(self) -> float:
        return self.geometry.area / (2.0 * self.geometry.L * self.h) + self.theta_offset

    @property
    def step(self) -> float:
        """Spacing ``pi hbar / L`` of the quantised momenta."""
        return math.pi * self.hbar / self.L

    @property
    def mean_kappa(self) -> float:
        return self.geometry.mean_kappa

    @property
    def decomposition(self) -> degennes.WindowDecomposition:
        a, b = self.window
        return degennes.window_decomposition(self.gamma, a, b)

    def sigma(self, ell):
        return self.hbar * (math.pi * np.asarray(ell) / self.L + self.theta)

    def ells_in(self, lo: float, hi: float) -> np.ndarray:
        """Integers ``l`` with ``lo <= sigma_l <= hi``."""
        c = self.L / math.pi
        first = math.ceil((lo / self.hbar - self.theta) * c - 1e-12)
        last = math.floor((hi / self.hbar - self.theta) * c + 1e-12)
        return np.arange(first, last + 1)

    def enlarged(self, comp: degennes.Component, steps: float = 2.0):
        """Component interval widened by ``steps`` grid steps, clipped at the branch minimum."""
        lo, hi = comp.lo - steps * self.step, comp.hi + steps * self.step
        xi = self.decomposition.xi(comp.k)
        if xi is not None:
            if comp.monotone == "decreasing":
                hi = min(hi, xi)
            elif comp.monotone == "increasing":
                lo = max(lo, xi)
        return lo, hi

    def table(self, k: int, lo: float, hi: float):
        return branch_table(self.gamma, k, lo, hi)

    def as_dict(self):
        a, b = self.window
        return dict(h=self.h, gamma=self.gamma, window=[a, b], theta=self.theta,
                    theta_offset=self.theta_offset, geometry=self.geometry.summary())


# ---------------------------------------------------------------------------
# flux grid and the two-term spectrum
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FluxGrid:
    theta: float
    step: float
    ells: np.ndarray
    sigmas: np.ndarray


def flux_grid(cfg: SemiclassicalConfig) -> FluxGrid:
    """Quantised momenta covering all window preimages with one spare point per side."""
    dec = cfg.decomposition
    hull = dec.hull()
    if hull is None:
        e = np.arange(0)
        return FluxGrid(cfg.theta, cfg.step, e, cfg.sigma(e).astype(float))
    ells = cfg.ells_in(*hull)
    ells = np.arange(ells[0] - 1, ells[-1] + 2) if ells.size else cfg.ells_in(
        hull[0] - cfg.step, hull[1] + cfg.step)
    return FluxGrid(cfg.theta, cfg.step, ells, cfg.sigma(ells))


class Entry(NamedTuple):
    k: int
    q: int
    ell: int
    sigma: float
    lam: float
    order: str


@dataclass(frozen=True)
class EffectiveSpectrum:
    entries: tuple
    window_hull: tuple
    h: float

    @property
    def values(self) -> np.ndarray:
        return np.array([e.lam for e in self.entries])

    def __len__(self):
        return len(self.entries)

    def as_dict(self):
        return dict(h=self.h, window_hull=list(self.window_hull), count=len(self.entries),
                    entries=[e._asdict() for e in self.entries])

    def write_json(self, path):
        report.write_json(path, self.as_dict())

    def write_csv(self, path, meta=None):
        rows = [(e.k, e.q, e.ell, e.sigma, e.lam, e.lam / self.h, e.order) for e in self.entries]
        report.write_csv(path, ["k", "q", "ell", "sigma", "lambda", "lambda_over_h", "order"],
                         rows, meta)


def _make_spectrum(entries, cfg):
    a, b = cfg.window
    return EffectiveSpectrum(tuple(sorted(entries, key=lambda e: (e.lam, e.k, e.q, e.ell))),
                             (cfg.h * a, cfg.h * b), cfg.h)


def two_term(cfg: SemiclassicalConfig, k: int, sigmas) -> np.ndarray:
    """``h mu_k(sigma) - h^{3/2} <kappa> C_k(sigma)``."""
    sigmas = np.asarray(sigmas, dtype=float)
    if sigmas.size == 0:
        return np.zeros(0)
    tab = cfg.table(k, float(sigmas.min()), float(sigmas.max()))
    return cfg.h * tab.mu_at(sigmas) - cfg.h ** 1.5 * cfg.mean_kappa * tab.C_at(sigmas)


def _component_ells(cfg, comp):
    lo, hi = cfg.enlarged(comp)
    ells = cfg.ells_in(lo, hi)
    s = cfg.sigma(ells)
    # components of one curve meet only at the minimum: keep them disjoint
    if comp.monotone == "decreasing" and hi == cfg.decomposition.xi(comp.k):
        keep = s < hi
        ells, s = ells[keep], s[keep]
    return ells, s


def leading_spectrum(cfg: SemiclassicalConfig) -> EffectiveSpectrum:
    """Two-term approximate eigenvalues, labelled by curve, component and momentum."""
    ha, hb = cfg.h * cfg.window[0], cfg.h * cfg.window[1]
    entries = []
    for comp in cfg.decomposition.components:
        ells, s = _component_ells(cfg, comp)
        lam = two_term(cfg, comp.k, s)
        for e, si, li in zip(ells, s, lam):
            if ha <= li <= hb:
                entries.append(Entry(comp.k, comp.q, int(e), float(si), float(li), "leading2"))
    return _make_spectrum(entries, cfg)


# ---------------------------------------------------------------------------
# Weyl-quantised matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PdoMatrix:
    """Matrix of ``m_k^W`` in the Floquet-Fourier basis.

    When the curvature coefficients are complex the Hermitian matrix
    ``A + iB`` is stored through its real form ``[[A, -B], [B, A]]``, whose
    spectrum is that of ``A + iB`` with every eigenvalue doubled.
    """

    k: int
    ells: np.ndarray
    sigmas: np.ndarray
    matrix: numerics.DenseSym
    embedded: bool
    h: float
    margin: float

    @property
    def size(self):
        return self.ells.size

    def eigh(self):
        """Eigenvalues of ``m_k^W`` (not scaled by ``h``) and unit eigenvectors in ``C^n``."""
        lam, vec = numerics.dense_sym_eigs(self.matrix)
        if not self.embedded:
            return lam, vec.astype(complex)
        n = self.size
        lam, vec = lam[::2], vec[:, ::2]
        v = vec[:n] + 1j * vec[n:]
        return lam, v / np.linalg.norm(v, axis=0)


def kappa_coupling(geometry: DomainGeometry, ells: np.ndarray) -> np.ndarray:
    """``kappa_hat_{l - l'}`` on the index grid."""
    d = ells[:, None] - ells[None, :]
    return geometry.kappa_hat(d)


def pdo_matrix(cfg: SemiclassicalConfig, k: int, margin: float | None = None,
               sigma_hull: tuple | None = None) -> PdoMatrix:
    """Assemble ``M_{l l'} = mu_k(sigma_l) delta - hbar kappa_hat_{l-l'} C_k(sigma_bar)``.

    ``sigma_bar`` is the midpoint momentum ``hbar (pi (l + l') / (2L) + theta)``,
    which gives the exact Weyl matrix element of ``e^{i pi j s / L} c(sigma)``.
    Indices are kept while ``sigma_l`` is within ``margin`` (default
    ``5 hbar^{1/2}``) of the preimage hull of curve ``k``.
    """
    if sigma_hull is None:
        sigma_hull = cfg.decomposition.hull(k)
        if sigma_hull is None:
            raise ValueError(f"curve {k} does not meet the window")
    margin = 5.0 * cfg.hbar ** 0.5 if margin is None else float(margin)
    lo, hi = sigma_hull[0] - margin, sigma_hull[1] + margin
    ells = cfg.ells_in(lo, hi)
    if ells.size < 2:
        ells = cfg.ells_in(lo - cfg.step, hi + cfg.step)
    s = cfg.sigma(ells)
    tab = cfg.table(k, float(s[0]), float(s[-1]))
    sbar = 0.5 * (s[:, None] + s[None, :])
    kap = kappa_coupling(cfg.geometry, ells)
    cbar = tab.C_at(sbar)
    full = -cfg.hbar * kap * cbar
    full[np.diag_indices_from(full)] += tab.mu_at(s)
    A, B = full.real, full.imag
    embedded = bool(np.abs(B).max() > 1e-15 * max(1.0, np.abs(A).max()))
    if embedded:
        mat = np.block([[A, -B], [B, A]])
    else:
        mat = A
    return PdoMatrix(k, ells, s, numerics.DenseSym(mat), embedded, cfg.h, margin)


def matrix_eigenvalues(cfg: SemiclassicalConfig, k: int, lo: float, hi: float,
                       sigma_hull=None, max_doublings: int = 3):
    """Eigenvalues of ``h m_k^W`` in ``[lo, hi]`` with truncation control.

    The index range is enlarged (margin doubled) while an in-range
    eigenvector carries more than ``1e-8`` of its mass on the two outermost
    indices at either end.
    """
    margin = 5.0 * cfg.hbar ** 0.5
    for attempt in range(max_doublings + 1):
        pm = pdo_matrix(cfg, k, margin=margin, sigma_hull=sigma_hull)
        lam, vec = pm.eigh()
        lam = cfg.h * lam
        sel = (lam >= lo) & (lam <= hi)
        edge = np.abs(vec[[0, 1, -2, -1]][:, sel]) ** 2
        if not sel.any() or edge.sum(axis=0).max() <= EDGE_MASS_TOL:
            return lam[sel], pm
        margin *= 2.0
    raise numerics.ConvergenceError(
        f"pdo_matrix truncation for k={k} still leaks {edge.sum(axis=0).max():.2e} after "
        f"{max_doublings} doublings")


def matrix_spectrum(cfg: SemiclassicalConfig) -> EffectiveSpectrum:
    """Union over curves of the in-window eigenvalues of ``h m_k^W``."""
    ha, hb = cfg.h * cfg.window[0], cfg.h * cfg.window[1]
    entries = []
    for k in sorted({c.k for c in cfg.decomposition.components}):
        vals, _ = matrix_eigenvalues(cfg, k, ha, hb)
        entries += [Entry(k, 0, 0, math.nan, float(v), "matrix") for v in vals]
    return _make_spectrum(entries, cfg)


# ---------------------------------------------------------------------------
# Bohr-Sommerfeld series and the Weyl count
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BSSeries:
    """First two Bohr-Sommerfeld coefficients on a monotone component."""

    k: int
    q: int
    sigma: np.ndarray
    f0: np.ndarray
    f1: np.ndarray
    ells: np.ndarray
    sigmas: np.ndarray
    energies: np.ndarray
    hbar: float
    L: float
    total_curvature: float
    _table: object = field(repr=False)

    def energy(self, sigma):
        """``f0 + hbar f1`` (in units of ``h``)."""
        mean_kappa = math.pi / self.L
        return self._table.mu_at(sigma) - self.hbar * mean_kappa * self._table.C_at(sigma)

    def action_K(self, sigma):
        """Subprincipal action ``C(sigma) / mu'(sigma) * int kappa ds``."""
        return self._table.C_at(sigma) / self._table.mu_at(sigma, 1) * self.total_curvature


def bohr_sommerfeld(cfg: SemiclassicalConfig, k: int, q: int) -> BSSeries:
    """``f0 = mu_k``, ``f1 = -<kappa> C_k`` on ``Sigma_{k,q}`` and the quantised energies."""
    comps = [c for c in cfg.decomposition.components if c.k == k and c.q == q]
    if not comps:
        raise ValueError(f"no component (k={k}, q={q}) in the window")
    comp = comps[0]
    if comp.monotone is None:
        raise NonRegularWindow(f"mu_{k} is not monotone on component q={q}")
    s = np.linspace(comp.lo, comp.hi, 200)
    ells, sl = _component_ells(cfg, comp)
    lo = min(comp.lo, sl.min()) if sl.size else comp.lo
    hi = max(comp.hi, sl.max()) if sl.size else comp.hi
    tab = cfg.table(k, lo, hi)
    f0 = tab.mu_at(s)
    f1 = -cfg.mean_kappa * tab.C_at(s)
    e = tab.mu_at(sl) - cfg.hbar * cfg.mean_kappa * tab.C_at(sl) if sl.size else np.zeros(0)
    return BSSeries(k, q, s, f0, f1, ells, sl, e, cfg.hbar, cfg.L, cfg.geometry.total_curvature, tab)


@dataclass(frozen=True)
class WeylReport:
    count: int
    first_term: float
    second_term: float
    components: tuple

    def as_dict(self):
        return dict(count=self.count, first_term=self.first_term, second_term=self.second_term,
                    components=list(self.components))


def weyl_count(cfg: SemiclassicalConfig) -> WeylReport:
    """Two-term Weyl count of eigenvalues in ``[h a, h b]``.

    A component containing the minimum of its curve (``a`` below the
    critical value) is split at the minimum; the two pieces share the
    endpoint there, whose contributions cancel.
    """
    first = second = 0.0
    parts = []
    for comp in cfg.decomposition.components:
        tab = cfg.table(comp.k, comp.lo, comp.hi)
        if comp.monotone is None:
            # both ends are preimages of b
            ends = [(comp.lo, 1.0), (comp.hi, 1.0)]
            d0 = comp.hi - comp.lo
        else:
            ends = [(comp.beta, 1.0), (comp.alpha, -1.0)]
            d0 = abs(comp.alpha - comp.beta)
        d1 = 0.0
        for s, sign in ends:
            slope = abs(float(tab.mu_at(s, 1)))
            if slope < 1e-8:
                raise NonRegularWindow("window endpoint too close to a critical value")
            d1 += sign * float(tab.C_at(s)) / slope
        first += d0
        second += d1
        parts.append(dict(k=comp.k, q=comp.q, alpha=comp.alpha, beta=comp.beta, lo=comp.lo,
                          hi=comp.hi, delta0=d0, delta1=d1))
    t1 = cfg.L / (math.pi * cfg.hbar) * first
    t2 = cfg.L * cfg.mean_kappa / math.pi * second
    return WeylReport(int(math.floor(t1 + t2)), t1, t2, tuple(parts))


# ---------------------------------------------------------------------------
# branches in h and magnetic oscillations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Crossing:
    h: float
    ell1: int
    ell2: int
    lam: float


@dataclass(frozen=True)
class BranchDiagram:
    """Curves ``h -> h (f0 + hbar f1)(sigma_l(h))`` for the two components of ``mu_1``."""

    hs: np.ndarray
    curves: dict
    orientation: dict
    crossings: tuple
    c_hat: float
    separation_ratio: float
    window: tuple
    model: object = field(repr=False)

    def as_dict(self):
        return dict(window=list(self.window), c_hat=self.c_hat,
                    separation_ratio=self.separation_ratio,
                    branches=[dict(q=q, ell=l, orientation=self.orientation[(q, l)])
                              for q, l in sorted(self.curves)],
                    crossings=[dict(h=c.h, ell1=c.ell1, ell2=c.ell2, lam=c.lam)
                               for c in self.crossings])

    def write_csv(self, path, meta=None):
        rows = []
        for (q, l), v in sorted(self.curves.items()):
            for hv, lv in zip(self.hs, v):
                if np.isfinite(lv):
                    rows.append((q, l, float(hv), float(lv / hv)))
        report.write_csv(path, ["q", "ell", "h", "lambda_over_h"], rows, meta)


class _OscillationModel:
    """Two-term branches of the first dispersion curve as functions of ``h``."""

    def __init__(self, geometry, gamma, window):
        self.geometry = geometry
        self.gamma = degennes.robin(gamma)
        if degennes.is_dirichlet(self.gamma):
            raise ValueError("oscillations need a real Robin parameter")
        a, b = map(float, window)
        theta0 = degennes.find_minimum(self.gamma, 1).theta
        if not (theta0 < a < b < 1):
            raise NonRegularWindow(f"need Theta^[0]={theta0:.6f} < a < b < 1, got [{a}, {b}]")
        self.window = (a, b)
        dec = degennes.window_decomposition(self.gamma, a, b)
        self.components = {c.q: c for c in dec.components}
        self.xi = dec.xi(1)
        self.theta0 = theta0
        lo_b = dec.hull(1)
        self.table = branch_table(self.gamma, 1, lo_b[0] - 1.0, lo_b[1] + 1.0)
        self.L = geometry.L
        self.mean_kappa = geometry.mean_kappa

    def sigma(self, ell, h):
        h = np.asarray(h, dtype=float)
        return np.sqrt(h) * (math.pi * np.asarray(ell) / self.L
                             + self.geometry.area / (2.0 * self.L * h))

    def value(self, ell, h):
        s = self.sigma(ell, h)
        return h * self.table.mu_at(s) - h ** 1.5 * self.mean_kappa * self.table.C_at(s)

    def ells(self, lo, hi, h):
        c = self.L / math.pi
        th = self.geometry.area / (2.0 * self.L * h)
        return np.arange(math.ceil((lo / math.sqrt(h) - th) * c),
                         math.floor((hi / math.sqrt(h) - th) * c) + 1)

    def in_component(self, q, s):
        c = self.components[q]
        return (s >= c.lo) & (s <= c.hi)

    def sublevel_values(self, h):
        """Sorted model values of all momenta in ``{mu_1 <= b}`` (plus a margin)."""
        lo = self.components[1].lo - 0.3
        hi = self.components[2].hi + 0.3
        e = self.ells(lo, hi, h)
        return np.sort(self.value(e, h))


def trace_branches(geometry: DomainGeometry, gamma, window, h_range, n_h: int = 801) -> BranchDiagram:
    """Sample the oscillation branches over ``h_range`` and locate their crossings.

    Requires ``Theta^[0](gamma) < a < b < 1`` so that ``mu_1^{-1}([a, b])`` has
    a decreasing component (``q=1``) and an increasing one (``q=2``).
    """
    model = _OscillationModel(geometry, gamma, window)
    h0, h1 = map(float, h_range)
    if not 0 < h0 < h1 <= MAX_H:
        raise ValueError(f"invalid h range {h_range}")
    hs = np.linspace(h0, h1, n_h)
    a, b = model.window
    curves = {}
    for q in (1, 2):
        c = model.components[q]
        ells = set()
        for h in (h0, h1):
            ells.update(model.ells(c.lo, c.hi, h).tolist())
        lo_e, hi_e = min(ells), max(ells)
        for ell in range(lo_e - 1, hi_e + 2):
            s = model.sigma(ell, hs)
            ok = model.in_component(q, s)
            if not ok.any():
                continue
            v = np.full(hs.size, np.nan)
            v[ok] = model.value(ell, hs[ok])
            curves[(q, ell)] = v
    orientation = {}
    for key, v in curves.items():
        d = np.diff(v)
        d = d[np.isfinite(d)]
        if d.size == 0:
            orientation[key] = "point"
        elif np.all(d > 0):
            orientation[key] = "increasing"
        elif np.all(d < 0):
            orientation[key] = "decreasing"
        else:
            orientation[key] = "mixed"
    crossings = []
    for (q1, l1), v1 in curves.items():
        if q1 != 1:
            continue
        for (q2, l2), v2 in curves.items():
            if q2 != 2:
                continue
            d = v1 - v2
            ok = np.isfinite(d)
            idx = np.flatnonzero(ok[:-1] & ok[1:] & (np.sign(d[:-1]) != np.sign(d[1:])))
            for i in idx:
                f = lambda h: float(model.value(l1, h) - model.value(l2, h))
                hc = numerics.brent_root(f, (hs[i], hs[i + 1]), tol=1e-15)
                lam = float(model.value(l1, hc))
                if a * hc <= lam <= b * hc:
                    crossings.append(Crossing(hc, int(l1), int(l2), lam))
    crossings.sort(key=lambda c: (c.h, c.lam))
    # empirical minimal slope of f0 + hbar f1 on the window preimages; f' is
    # affine in hbar so the extremes over the h range sit at its ends
    grid = np.concatenate([np.linspace(c.lo, c.hi, 200) for c in model.components.values()])
    d_mu = model.table.mu_at(grid, 1)
    d_c = model.mean_kappa * model.table.C_at(grid, 1)
    c_hat = float(min(np.abs(d_mu - math.sqrt(hh) * d_c).min() for hh in (h0, h1)))
    ratios = []
    for i in range(0, n_h, max(1, n_h // 50)):
        h = hs[i]
        for q in (1, 2):
            vals = np.sort([v[i] for (qq, _), v in curves.items() if qq == q and np.isfinite(v[i])])
            if vals.size > 1:
                ratios.append(np.diff(vals).min() / (h ** 1.5 * math.pi * c_hat / model.L))
    sep = float(min(ratios)) if ratios else math.inf
    return BranchDiagram(hs, curves, orientation, tuple(crossings), c_hat, sep, (a, b), model)


@dataclass(frozen=True)
class OscillationTriple:
    j: int
    h1: float
    h2: float
    h3: float
    rise: float
    fall: float
    threshold: float

    def as_dict(self):
        return dict(j=self.j, h1=self.h1, h2=self.h2, h3=self.h3, rise=self.rise,
                    fall=self.fall, threshold=self.threshold)


def tracked_eigenvalue(diagram: BranchDiagram, j: int, hs) -> np.ndarray:
    """``j``-th smallest model value (1-based) as a function of ``h``."""
    return np.array([diagram.model.sublevel_values(h)[j - 1] for h in hs])


def oscillation_triple(diagram: BranchDiagram, h: float, M: float = 4.0, n: int = 801,
                       j: int | None = None) -> OscillationTriple:
    """Best rise-then-fall triple ``h1 < h2 < h3`` in ``[h, h + M h^2]``.

    The tracked index ``j`` defaults to the in-window model value at ``h``
    closest to the window centre.
    """
    model = diagram.model
    a, b = model.window
    vals = model.sublevel_values(h)
    if j is None:
        inside = np.flatnonzero((vals >= a * h) & (vals <= b * h))
        if inside.size == 0:
            raise ValueError("no model value in the window at this h")
        j = int(inside[np.argmin(np.abs(vals[inside] / h - 0.5 * (a + b)))]) + 1
    hs = np.linspace(h, h + M * h * h, n)
    lam = tracked_eigenvalue(diagram, j, hs)
    run_min_left = np.minimum.accumulate(lam)
    run_min_right = np.minimum.accumulate(lam[::-1])[::-1]
    rise = lam - run_min_left
    fall = lam - run_min_right
    score = np.minimum(rise, fall)
    i2 = int(np.argmax(score))
    i1 = int(np.argmin(lam[:i2 + 1]))
    i3 = i2 + int(np.argmin(lam[i2:]))
    thr = 0.5 * diagram.c_hat * h ** 1.5
    return OscillationTriple(j, float(hs[i1]), float(hs[i2]), float(hs[i3]), float(rise[i2]),
                             float(fall[i2]), thr)


# ---------------------------------------------------------------------------
# low-lying eigenvalues
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LowLying:
    values: np.ndarray
    theta0: float
    xi0: float
    C1: float
    mu2: float
    kappa_at_well: float
    k2: float
    eps: int
    multiplicity: int
    s_max: float

    @property
    def gap(self):
        return math.sqrt(self.k2 * abs(self.C1) * self.mu2)

    def as_dict(self):
        d = {k: getattr(self, k) for k in ("theta0", "xi0", "C1", "mu2", "kappa_at_well", "k2",
                                           "eps", "multiplicity", "s_max")}
        d["values"] = self.values.tolist()
        return d


def lowlying_config(geometry: DomainGeometry, gamma, h: float, eta: float = 0.5) -> SemiclassicalConfig:
    """Configuration with window ``(-inf, Theta^[0] + hbar^eta]`` (capped below 1)."""
    theta0 = degennes.find_minimum(gamma, 1).theta
    b = min(theta0 + math.sqrt(h) ** eta, 0.5 * (theta0 + 1.0) + 0.25)
    b = min(b, 0.999)
    return SemiclassicalConfig(h, gamma, (-math.inf, b), geometry)


def lowlying_spectrum(cfg: SemiclassicalConfig, j_max: int) -> LowLying:
    """Three-term harmonic ladder of the lowest eigenvalues.

    ``lambda_j = Theta h - kappa(s_max) C_1 h^{3/2} + h^{7/4} (2j - 1)/2 sqrt(k2 |C_1| mu'')``
    where ``s_max`` maximises ``eps kappa`` with ``eps = sign(C_1(xi_0))``.  When
    the maximum is repeated by a symmetry of the curvature, every ladder
    level is repeated ``multiplicity`` times.
    """
    gamma = cfg.gamma
    if degennes.is_dirichlet(gamma):
        raise ValueError("low-lying ladder needs a real Robin parameter")
    g0 = degennes.find_gamma0(1)
    if abs(gamma - g0) < GAMMA0_EXCLUSION:
        raise ValueError(f"gamma={gamma} within {GAMMA0_EXCLUSION} of the threshold {g0}")
    ext = degennes.find_minimum(gamma, 1)
    C1 = degennes.compute_C(gamma, ext.xi, 1)
    eps = 1 if C1 > 0 else -1
    ce = curvature_extremum(cfg.geometry, eps)
    kappa_w = eps * ce.kappa_max
    h = cfg.h
    gap = math.sqrt(ce.k2 * abs(C1) * ext.mu2)
    levels = ext.theta * h - kappa_w * C1 * h ** 1.5 + h ** 1.75 * gap * (
        2.0 * np.arange(1, j_max + 1) - 1.0) / 2.0
    vals = np.repeat(levels, ce.multiplicity)[:j_max]
    return LowLying(vals, ext.theta, ext.xi, C1, ext.mu2, kappa_w, ce.k2, eps,
                    ce.multiplicity, ce.s_max)


@dataclass(frozen=True)
class HarmonicReport:
    h: float
    matrix: np.ndarray
    ladder: np.ndarray
    residual: np.ndarray

    @property
    def max_ratio(self) -> float:
        if self.residual.size == 0:
            return math.nan
        return float(self.residual.max() / self.h ** 1.75)

    def as_dict(self):
        return dict(h=self.h, matrix=self.matrix.tolist(), ladder=self.ladder.tolist(),
                    residual=self.residual.tolist(), max_ratio=self.max_ratio)


def harmonic_crosscheck(cfg: SemiclassicalConfig, j_max: int, cutoff: float | None = None) -> HarmonicReport:
    """Compare the lowest eigenvalues of ``h m_1^W`` with the three-term ladder.

    Only matrix eigenvalues ``<= cutoff`` (absolute units) are compared when
    a cutoff is given.
    """
    ladder = lowlying_spectrum(cfg, j_max)
    dec = cfg.decomposition
    hull = dec.hull(1)
    vals, _ = matrix_eigenvalues(cfg, 1, -math.inf, cfg.h * cfg.window[1], sigma_hull=hull)
    vals = np.sort(vals)[:j_max]
    if cutoff is not None:
        vals = vals[vals <= cutoff]
    lad = ladder.values[:vals.size]
    return HarmonicReport(cfg.h, vals, lad, np.abs(vals - lad))


# ---------------------------------------------------------------------------
# set distances
# ---------------------------------------------------------------------------


def hausdorff(x, y) -> float:
    """Hausdorff distance between two finite subsets of the real line."""
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    if x.size == 0 and y.size == 0:
        return 0.0
    if x.size == 0 or y.size == 0:
        return math.inf

    def one_sided(p, q):
        i = np.clip(np.searchsorted(q, p), 1, q.size - 1) if q.size > 1 else np.zeros(p.size, int)
        d = np.abs(p - q[i])
        if q.size > 1:
            d = np.minimum(d, np.abs(p - q[i - 1]))
        return d.max()

    return float(max(one_sided(x, y), one_sided(y, x)))


def windowed_hausdorff(x, y, lo: float, hi: float, margin: float) -> float:
    """Hausdorff distance with a buffer: points of one set inside ``[lo, hi]`` are
    matched against the other set restricted to ``[lo - margin, hi + margin]``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)

    def part(p, q):
        p_in = p[(p >= lo) & (p <= hi)]
        q_big = q[(q >= lo - margin) & (q <= hi + margin)]
        if p_in.size == 0:
            return 0.0
        if q_big.size == 0:
            return math.inf
        return float(np.min(np.abs(p_in[:, None] - q_big[None, :]), axis=1).max())

    return max(part(x, y), part(y, x))
