"""Convex billiard tables bounded by geodesic-polar Fourier profiles.

The boundary is ``gamma(theta) = exp_c(rho(theta) u(theta))`` where ``c`` is
the profile centre and ``rho`` a finite Fourier series.  Everything the
dynamics needs (arclength, unit tangent, inward normal, geodesic curvature)
is evaluated from closed-form derivatives of this parametrization; the
sampled arrays stored on :class:`Table` serve as the dense lookup table and
feed the periodic quadratures for perimeter, area and total curvature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConvexityError, OutOfChartError, ResolutionError
from .surface import (
    Surface,
    TangentVector,
    check_state,
    form,
    point_to_polar_arrays,
    rot90,
)

GAUSS_BONNET_TOL = 1e-8
PROFILE_SAMPLES = 4096
MIN_RESOLUTION = 256


@dataclass(frozen=True)
class PolarProfile:
    """Radius profile ``rho(theta) = c0 + sum a_n cos(n theta) + b_n sin(n theta)``.

    ``fourier_cos[i]`` and ``fourier_sin[i]`` hold the coefficients of
    harmonic ``n = i + 1``.  ``theta`` is measured counterclockwise from
    ``center.dir``.
    """

    center: TangentVector
    c0: float
    fourier_cos: tuple = ()
    fourier_sin: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "fourier_cos", tuple(float(a) for a in self.fourier_cos))
        object.__setattr__(self, "fourier_sin", tuple(float(b) for b in self.fourier_sin))

    @classmethod
    def circle(cls, surface: Surface, rho: float) -> "PolarProfile":
        return cls(standard_frame(surface), rho)

    @property
    def is_circle(self) -> bool:
        return not any(self.fourier_cos) and not any(self.fourier_sin)

    def radius(self, theta, order: int = 0):
        """``d^order rho / d theta^order`` evaluated at ``theta``."""
        theta = np.asarray(theta, dtype=float)
        out = np.full(theta.shape, self.c0 if order == 0 else 0.0)
        # derivative of cos(n t) is n^order cos(n t + order pi/2)
        shift = order * np.pi / 2
        for i, a in enumerate(self.fourier_cos):
            if a:
                n = i + 1
                out = out + a * n**order * np.cos(n * theta + shift)
        for i, b in enumerate(self.fourier_sin):
            if b:
                n = i + 1
                out = out + b * n**order * np.sin(n * theta + shift)
        return out

    def check(self, surface: Surface):
        theta = np.linspace(0.0, 2 * np.pi, PROFILE_SAMPLES, endpoint=False)
        rho = self.radius(theta)
        if np.min(rho) <= 0:
            raise ConvexityError(f"profile radius must stay positive; min rho = {np.min(rho):.6g}")
        if surface.K == 1 and np.max(rho) >= np.pi / 2:
            raise ConvexityError(
                f"spherical profile must stay inside a hemisphere; max rho = {np.max(rho):.6g}"
            )
        check_state(surface, self.center)


def standard_frame(surface: Surface) -> TangentVector:
    """Frame at ``(0, 0, 1)`` pointing along the first axis."""
    return TangentVector(surface.origin(), [1.0, 0.0, 0.0])


@dataclass(frozen=True)
class PhasePoint:
    """Boundary collision state: arclength ``x`` and inward angle ``phi``."""

    x: float
    phi: float

    def check(self, perimeter: float) -> "PhasePoint":
        if not (0.0 <= self.x < perimeter):
            raise ValueError(f"x = {self.x} outside [0, {perimeter})")
        if not (0.0 < self.phi < np.pi):
            raise ValueError(f"phi = {self.phi} outside (0, pi)")
        return self


@dataclass(frozen=True, eq=False)
class Table:
    """Immutable convex table with its arclength parametrization.

    The ``theta``, ``x``, ``points``, ``tangents`` and ``curvature`` arrays
    are the dense arclength table at ``resolution`` equispaced angles.
    """

    surface: Surface
    profile: PolarProfile
    perimeter: float
    area: float
    theta: np.ndarray
    x: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    curvature: np.ndarray
    k_min: float
    k_max: float
    total_curvature: float
    gauss_bonnet_residual: float
    _speed_cos: np.ndarray = field(repr=False)
    _speed_sin: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return self.surface.K

    @property
    def resolution(self) -> int:
        return len(self.theta)

    # -- parametrization by polar angle -----------------------------------

    def jet(self, theta):
        """Return ``(gamma, gamma', gamma'')`` with respect to ``theta``."""
        return curve_jet(self.surface.K, self.profile, theta)

    def frame_at_theta(self, theta):
        """Boundary point, unit tangent, inward normal, curvature and speed."""
        g, dg, ddg = self.jet(theta)
        speed = np.sqrt(form(self.K, dg, dg))
        T = dg / speed[..., None]
        N = rot90(self.K, g, T)
        k = form(self.K, ddg, N) / speed**2
        return g, T, N, k, speed

    def arclength(self, theta):
        """Arclength from ``theta = 0`` to ``theta`` (not reduced mod P)."""
        theta = np.asarray(theta, dtype=float)
        s0 = self.perimeter / (2 * np.pi)
        out = s0 * theta
        m = np.arange(1, len(self._speed_cos) + 1)
        if len(m):
            mt = np.multiply.outer(theta, m)
            out = out + (np.sin(mt) @ (self._speed_cos / m)) + ((1.0 - np.cos(mt)) @ (self._speed_sin / m))
        return out

    def theta_at(self, x):
        """Invert :meth:`arclength` by Newton iteration; ``x`` is taken mod P."""
        x = np.mod(np.asarray(x, dtype=float), self.perimeter)
        if self.profile.is_circle:
            return 2 * np.pi * x / self.perimeter
        theta = np.interp(x, np.append(self.x, self.perimeter), np.append(self.theta, 2 * np.pi))
        for _ in range(12):
            g, dg, _ = self.jet(theta)
            step = (self.arclength(theta) - x) / np.sqrt(form(self.K, dg, dg))
            theta = theta - step
            if np.max(np.abs(step), initial=0.0) < 1e-14:
                break
        return theta

    # -- parametrization by arclength --------------------------------------

    def point_at(self, x):
        return self.frame_at_theta(self.theta_at(x))[0]

    def frame_at(self, x):
        """``(point, unit tangent, inward normal)`` at arclength ``x``."""
        g, T, N, _, _ = self.frame_at_theta(self.theta_at(x))
        return g, T, N

    def locate(self, p):
        """Arclength coordinate of the boundary point nearest in angle to ``p``."""
        _, theta, _ = point_to_polar_arrays(self.K, self.profile.center.base, self.profile.center.dir, p)
        return np.mod(self.arclength(np.mod(theta, 2 * np.pi)), self.perimeter)


def curve_jet(K: int, profile: PolarProfile, theta):
    """Ambient derivatives of ``gamma(theta) = C(rho) c + S(rho) u(theta)``.

    ``C, S`` are ``(cos, sin)``, ``(1, r)`` or ``(cosh, sinh)``; they obey
    ``C' = -K S`` and ``S' = C``, which gives one set of formulas for all
    three models.
    """
    theta = np.asarray(theta, dtype=float)
    c, ref = profile.center.base, profile.center.dir
    nref = rot90(K, c, ref)
    rho = profile.radius(theta)[..., None]
    d1 = profile.radius(theta, 1)[..., None]
    d2 = profile.radius(theta, 2)[..., None]
    if K == 1:
        C, S = np.cos(rho), np.sin(rho)
    elif K == -1:
        C, S = np.cosh(rho), np.sinh(rho)
    else:
        C, S = np.ones_like(rho), rho
    cos_t = np.cos(theta)[..., None]
    sin_t = np.sin(theta)[..., None]
    u = cos_t * ref + sin_t * nref
    u_perp = -sin_t * ref + cos_t * nref
    g = C * c + S * u
    dg = -K * S * d1 * c + C * d1 * u + S * u_perp
    ddg = (-K * C * d1**2 - K * S * d2) * c + (-K * S * d1**2 + C * d2 - S) * u + 2 * C * d1 * u_perp
    return g, dg, ddg


def _polar_area_density(K: int, rho):
    """Integral of the polar area element from 0 to ``rho``."""
    if K == 1:
        return 2.0 * np.sin(0.5 * rho) ** 2
    if K == -1:
        return 2.0 * np.sinh(0.5 * rho) ** 2
    return 0.5 * rho**2


def build_table(surface: Surface, profile: PolarProfile, resolution: int = 1024) -> Table:
    """Build and validate the table bounded by ``profile``.

    Perimeter, area and total curvature are periodic trapezoid sums over
    ``resolution`` angles, which converge spectrally for Fourier profiles.
    Raises :class:`ConvexityError` when the curvature is not strictly
    positive and :class:`ResolutionError` when the Gauss-Bonnet residual
    exceeds ``1e-8``.
    """
    if resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be >= {MIN_RESOLUTION}; got {resolution}")
    resolution += resolution % 2
    profile.check(surface)
    K = surface.K

    theta = np.linspace(0.0, 2 * np.pi, resolution, endpoint=False)
    g, dg, ddg = curve_jet(K, profile, theta)
    speed = np.sqrt(form(K, dg, dg))
    T = dg / speed[:, None]
    N = rot90(K, g, T)
    k = form(K, ddg, N) / speed**2
    if np.min(k) <= 0:
        j = int(np.argmin(k))
        raise ConvexityError(
            f"boundary is not strictly convex: k = {k[j]:.6g} at theta = {theta[j]:.6g}"
        )

    dtheta = 2 * np.pi / resolution
    perimeter = float(np.sum(speed) * dtheta)
    area = float(np.sum(_polar_area_density(K, profile.radius(theta))) * dtheta)
    total_curvature = float(np.sum(k * speed) * dtheta)
    residual = K * area + total_curvature - 2 * np.pi
    if abs(residual) > GAUSS_BONNET_TOL:
        raise ResolutionError(
            f"Gauss-Bonnet residual {residual:.3g} exceeds {GAUSS_BONNET_TOL:g}; increase resolution"
        )

    spectrum = np.fft.rfft(speed) / resolution
    cos_coef = 2 * spectrum.real[1 : resolution // 2]
    sin_coef = -2 * spectrum.imag[1 : resolution // 2]
    significant = np.nonzero(np.hypot(cos_coef, sin_coef) > 1e-15 * speed.mean())[0]
    keep = significant[-1] + 1 if len(significant) and not profile.is_circle else 0
    cos_coef, sin_coef = cos_coef[:keep], sin_coef[:keep]

    x = (perimeter / (2 * np.pi)) * theta
    if keep:
        m = np.arange(1, keep + 1)
        mt = np.multiply.outer(theta, m)
        x = x + np.sin(mt) @ (cos_coef / m) + (1.0 - np.cos(mt)) @ (sin_coef / m)

    k_min, k_max = _refine_extremes(K, profile, theta, k)

    return Table(
        surface=surface,
        profile=profile,
        perimeter=perimeter,
        area=area,
        theta=theta,
        x=x,
        points=g,
        tangents=T,
        curvature=k,
        k_min=k_min,
        k_max=k_max,
        total_curvature=total_curvature,
        gauss_bonnet_residual=float(residual),
        _speed_cos=cos_coef,
        _speed_sin=sin_coef,
    )


def _curvature_at_theta(K, profile, theta):
    g, dg, ddg = curve_jet(K, profile, theta)
    speed2 = form(K, dg, dg)
    N = rot90(K, g, dg / np.sqrt(speed2)[..., None])
    return form(K, ddg, N) / speed2


def _refine_extremes(K, profile, theta, k):
    if profile.is_circle:
        return float(np.min(k)), float(np.max(k))
    h = theta[1] - theta[0]
    out = []
    for sign, j in ((1.0, int(np.argmin(k))), (-1.0, int(np.argmax(k)))):
        res = minimize_scalar(
            lambda t: sign * float(_curvature_at_theta(K, profile, t)),
            bounds=(theta[j] - h, theta[j] + h),
            method="bounded",
            options={"xatol": 1e-12},
        )
        out.append(sign * min(res.fun, sign * k[j]))
    return float(out[0]), float(out[1])


def curvature_at(table: Table, x):
    return table.frame_at_theta(table.theta_at(x))[3]


def inside_value_arrays(table: Table, p):
    """Unchecked ``rho(theta(p)) - r(p)``; NaN at the antipode of the centre."""
    c = table.profile.center
    r, theta, s = point_to_polar_arrays(table.K, c.base, c.dir, p)
    out = table.profile.radius(theta) - r
    if table.K == 1:
        out = np.where((s < 1e-12) & (r > 1.0), np.nan, out)
    return out


def inside_value(table: Table, p) -> float:
    """Positive inside the table, zero on the boundary, negative outside."""
    value = float(inside_value_arrays(table, np.asarray(p, dtype=float).reshape(3)))
    if not np.isfinite(value):
        raise OutOfChartError("point is outside the polar chart of the table centre")
    return value


def assumption_margin(table: Table, beta: float) -> float:
    """``k_min - beta``; the billiard map is defined only when this is positive."""
    return table.k_min - beta


def circle_table(surface: Surface, rho: float, resolution: int = 1024) -> Table:
    return build_table(surface, PolarProfile.circle(surface, rho), resolution)


def polar_table(surface: Surface, c0: float, cos=(), sin=(), resolution: int = 1024) -> Table:
    return build_table(surface, PolarProfile(standard_frame(surface), c0, tuple(cos), tuple(sin)), resolution)

