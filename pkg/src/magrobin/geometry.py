"""Boundary data of smooth simply connected planar domains.

A domain is stored through its boundary curve sampled at ``M`` points that are
uniform in arclength ``s in [0, 2L)``, counterclockwise.  Curvature samples are
turned into Fourier coefficients ``kappa_hat_j = (1/2L) int kappa e^{-i pi j s/L} ds``,
which also give a trigonometric interpolant for derivatives and shifts.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

GAUSS_BONNET_TOL = 1e-8
CUSTOM_GB_TOL = 1e-6
TIE_MARGIN = 1e-9


class GeometryError(ValueError):
    """Rejected geometry input."""


@dataclass(frozen=True)
class DomainGeometry:
    kind: str
    L: float
    area: float
    kappa: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.L > 0 and self.area > 0):
            raise GeometryError("L and area must be positive")
        k = np.asarray(self.kappa, dtype=float)
        k.setflags(write=False)
        object.__setattr__(self, "kappa", k)
        coef = np.fft.rfft(k) / k.size
        object.__setattr__(self, "_rcoef", coef)

    @property
    def M(self) -> int:
        return self.kappa.size

    @property
    def perimeter(self) -> float:
        return 2.0 * self.L

    @property
    def ds(self) -> float:
        return 2.0 * self.L / self.M

    @property
    def s(self) -> np.ndarray:
        return self.ds * np.arange(self.M)

    @property
    def total_curvature(self) -> float:
        # periodic trapezoid rule
        return float(self.kappa.sum() * self.ds)

    @property
    def mean_kappa(self) -> float:
        """Gauss-Bonnet value ``pi / L``; sampled curves are checked against it on construction."""
        return math.pi / self.L

    @property
    def gauss_bonnet_residual(self) -> float:
        return abs(self.total_curvature - 2.0 * math.pi)

    @property
    def is_constant_curvature(self) -> bool:
        return float(np.ptp(self.kappa)) < TIE_MARGIN

    def kappa_hat(self, j):
        """Fourier coefficient(s) ``kappa_hat_j``; zero for ``|j| >= M/2``."""
        j = np.asarray(j)
        aj = np.abs(j)
        out = np.zeros(j.shape, dtype=complex)
        ok = aj < self.M // 2
        c = self._rcoef[aj[ok]]
        out[ok] = np.where(j[ok] >= 0, c, np.conj(c))
        return out if out.ndim else complex(out)

    def kappa_fourier(self, J: int | None = None):
        """``(j, kappa_hat_j)`` for ``|j| <= J`` (default ``J = M/2 - 1``)."""
        J = self.M // 2 - 1 if J is None else int(J)
        j = np.arange(-J, J + 1)
        return j, self.kappa_hat(j)

    def kappa_at(self, s, nu: int = 0):
        """Trigonometric interpolant of ``kappa`` (or its ``nu``-th derivative)."""
        s = np.asarray(s, dtype=float)
        J = self.M // 2 - 1
        j = np.arange(1, J + 1)
        w = math.pi * j / self.L
        ph = np.multiply.outer(s, w)
        c = self._rcoef[1:J + 1] * (1j * w) ** nu
        val = 2.0 * np.real(np.exp(1j * ph) @ c)
        if nu == 0:
            val = val + self._rcoef[0].real
        return val

    def shifted(self, s0: float) -> "DomainGeometry":
        """Same domain with arclength origin moved to ``s0``."""
        k = self.kappa_at(self.s + s0)
        step = s0 / self.ds
        pts = self.points
        if abs(step - round(step)) < 1e-12:
            pts = np.roll(pts, -int(round(step)), axis=0)
        params = dict(self.params, origin_shift=float(s0))
        return DomainGeometry(self.kind, self.L, self.area, k, pts, params)

    def summary(self) -> dict:
        return dict(kind=self.kind, params=self.params, M=self.M, L=self.L,
                    perimeter=self.perimeter, area=self.area, mean_kappa=self.mean_kappa,
                    kappa_max=float(self.kappa.max()), kappa_min=float(self.kappa.min()),
                    gauss_bonnet_residual=self.gauss_bonnet_residual)

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(f"# kind={self.kind} L={self.L!r} area={self.area!r} M={self.M}\n")
            w = csv.writer(fh)
            w.writerow(["s", "kappa"])
            for s, k in zip(self.s, self.kappa):
                w.writerow([repr(float(s)), repr(float(k))])


def disk(R: float, M: int = 1024) -> DomainGeometry:
    if not R > 0:
        raise GeometryError(f"disk radius must be positive, got {R}")
    _check_M(M)
    ang = 2.0 * math.pi * np.arange(M) / M
    pts = R * np.column_stack([np.cos(ang), np.sin(ang)])
    return DomainGeometry("disk", math.pi * R, math.pi * R * R, np.full(M, 1.0 / R), pts,
                          dict(R=float(R)))


def _check_M(M):
    if M < 16 or M & (M - 1):
        raise GeometryError(f"M must be a power of two >= 16, got {M}")


class _PeriodicCurve:
    """Closed curve ``phi -> z(phi)``, ``phi in [0, 2 pi)``, given with exact derivatives."""

    def __init__(self, deriv, P=4096):
        self.deriv = deriv
        phi = 2.0 * math.pi * np.arange(P) / P
        x, y, dx, dy, _, _ = deriv(phi)
        speed = np.hypot(dx, dy)
        if np.any(speed <= 0):
            raise GeometryError("curve has a singular point")
        self.vhat = np.fft.rfft(speed) / P
        if abs(self.vhat[-1]) > 1e-13 * abs(self.vhat[0]):
            raise GeometryError("speed not resolved; increase P")
        self.signed_area = 0.5 * float(np.mean(x * dy - y * dx)) * 2.0 * math.pi
        self.length = 2.0 * math.pi * self.vhat[0].real

    def arclength(self, phi):
        k = np.arange(1, self.vhat.size - 1)
        c = self.vhat[1:-1] / (1j * k)
        e = np.exp(1j * np.multiply.outer(phi, k))
        return self.vhat[0].real * phi + 2.0 * np.real(e @ c - c.sum())

    def speed(self, phi):
        _, _, dx, dy, _, _ = self.deriv(phi)
        return np.hypot(dx, dy)

    def invert(self, s, tol=1e-14):
        phi = s / self.vhat[0].real
        for _ in range(50):
            step = (self.arclength(phi) - s) / self.speed(phi)
            phi = phi - step
            if np.max(np.abs(step)) < tol:
                break
        return phi

    def curvature(self, phi):
        _, _, dx, dy, ddx, ddy = self.deriv(phi)
        return (dx * ddy - dy * ddx) / np.hypot(dx, dy) ** 3


def _sample_curve(kind, deriv, M, params, gb_tol):
    _check_M(M)
    crv = _PeriodicCurve(deriv)
    L = 0.5 * crv.length
    s = 2.0 * L * np.arange(M) / M
    phi = crv.invert(s)
    kap = crv.curvature(phi)
    x, y = deriv(phi)[:2]
    pts = np.column_stack([x, y])
    if crv.signed_area < 0:
        # clockwise input: reverse orientation
        kap = -np.roll(kap[::-1], 1)
        pts = np.roll(pts[::-1], 1, axis=0)
    g = DomainGeometry(kind, L, abs(crv.signed_area), kap, pts, params)
    if g.gauss_bonnet_residual > gb_tol:
        raise GeometryError(f"Gauss-Bonnet residual {g.gauss_bonnet_residual:.3e} exceeds {gb_tol}:"
                            " curve is not simple or not resolved")
    return g


def ellipse(a_axis: float, b_axis: float, M: int = 1024) -> DomainGeometry:
    """Ellipse ``x = a cos phi, y = b sin phi``; ``s = 0`` on the positive major axis."""
    a, b = float(a_axis), float(b_axis)
    if not (b > 0 and a >= b):
        raise GeometryError(f"need a >= b > 0, got a={a}, b={b}")

    def deriv(phi):
        c, s = np.cos(phi), np.sin(phi)
        return a * c, b * s, -a * s, b * c, -a * c, -b * s

    g = _sample_curve("ellipse", deriv, M, dict(a=a, b=b), GAUSS_BONNET_TOL)
    return DomainGeometry("ellipse", g.L, math.pi * a * b, g.kappa, g.points, g.params)


def custom_from_radius(cos_coeffs, sin_coeffs=(), M: int = 1024) -> DomainGeometry:
    """Star-shaped domain ``r(phi) = c_0 + sum_k (c_k cos k phi + s_k sin k phi)``.

    ``sin_coeffs[k - 1]`` multiplies ``sin k phi``.
    """
    c = np.asarray(cos_coeffs, dtype=float)
    sn = np.concatenate([[0.0], np.asarray(sin_coeffs, dtype=float)])
    K = max(c.size, sn.size)
    c = np.pad(c, (0, K - c.size))
    sn = np.pad(sn, (0, K - sn.size))
    k = np.arange(K)

    def deriv(phi):
        ph = np.multiply.outer(phi, k)
        cs, sc = np.cos(ph), np.sin(ph)
        r = cs @ c + sc @ sn
        r1 = (-sc * k) @ c + (cs * k) @ sn
        r2 = (-cs * k * k) @ c + (-sc * k * k) @ sn
        co, si = np.cos(phi), np.sin(phi)
        x, y = r * co, r * si
        dx, dy = r1 * co - r * si, r1 * si + r * co
        ddx = r2 * co - 2 * r1 * si - r * co
        ddy = r2 * si + 2 * r1 * co - r * si
        return x, y, dx, dy, ddx, ddy

    test = np.linspace(0.0, 2.0 * math.pi, 8192, endpoint=False)
    if np.min(deriv(test)[0] ** 2 + deriv(test)[1] ** 2) <= 0 or np.min(
            np.cos(np.multiply.outer(test, k)) @ c + np.sin(np.multiply.outer(test, k)) @ sn) <= 0:
        raise GeometryError("radial function must stay positive")
    params = dict(cos=c.tolist(), sin=sn[1:].tolist())
    return _sample_curve("custom", deriv, M, params, CUSTOM_GB_TOL)


@dataclass(frozen=True)
class CurvatureExtremum:
    """Maximum of ``eps * kappa``.

    ``kappa_max`` is the signed value ``eps * kappa(s_max)``; ``k2`` is
    ``-(eps kappa)''(s_max)``.  ``multiplicity`` counts maxima that are
    images of each other under an arclength translation preserving ``kappa``.
    """

    s_max: float
    kappa_max: float
    k2: float
    eps: int
    multiplicity: int = 1
    locations: tuple = ()

    def as_dict(self):
        return dict(s_max=self.s_max, kappa_max=self.kappa_max, k2=self.k2, eps=self.eps,
                    multiplicity=self.multiplicity, locations=list(self.locations))


def _refine_max(g, s0, eps):
    s = s0
    for _ in range(30):
        d1 = eps * g.kappa_at(s, 1)
        d2 = eps * g.kappa_at(s, 2)
        if d2 >= 0:
            break
        step = d1 / d2
        s -= step
        if abs(step) < 1e-14 * g.L:
            break
    s = float(s % (2.0 * g.L))
    return 0.0 if 2.0 * g.L - s < 1e-10 else s


def curvature_extremum(g: DomainGeometry, direction: str | int = "max") -> CurvatureExtremum:
    """Locate the maximum of ``kappa`` (``direction='max'`` or ``+1``) or of ``-kappa``.

    Raises
    ------
    GeometryError
        If the curvature is constant, or if the maximum is tied with another
        sample location (within ``1e-9``) that is not related to it by a
        translation symmetry of ``kappa``.
    """
    eps = {"max": 1, "min": -1, 1: 1, -1: -1, "+": 1, "-": -1}.get(direction)
    if eps is None:
        raise ValueError(f"direction must be 'max' or 'min', got {direction!r}")
    if g.is_constant_curvature:
        raise GeometryError("constant curvature: no isolated maximum")
    f = eps * g.kappa
    M = f.size
    is_peak = (f >= np.roll(f, 1)) & (f > np.roll(f, -1))
    peaks = np.flatnonzero(is_peak)
    refined = [_refine_max(g, g.s[i], eps) for i in peaks]
    vals = np.array([eps * g.kappa_at(s) for s in refined])
    top = vals.max()
    tied = [s for s, v in zip(refined, vals) if top - v <= TIE_MARGIN]
    s_max = min(tied)
    if len(tied) > 1:
        for s in tied[1:]:
            shift = s - s_max
            if np.max(np.abs(g.kappa_at(g.s + shift) - g.kappa)) > 1e3 * TIE_MARGIN:
                raise GeometryError(f"curvature maximum is not unique: tied at s={tied}")
    k2 = float(-eps * g.kappa_at(s_max, 2))
    return CurvatureExtremum(s_max, float(eps * g.kappa_at(s_max)), k2, eps, len(tied),
                             tuple(float(t) for t in tied))


def count_maxima(g: DomainGeometry) -> int:
    """Number of strict local maxima of the sampled curvature (cyclically)."""
    f = g.kappa
    return int(np.count_nonzero((f > np.roll(f, 1)) & (f > np.roll(f, -1))))
