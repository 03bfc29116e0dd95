"""Geometry kernel for the three constant-curvature surfaces.

All three surfaces live in a single ambient R^3:

* ``K = +1``: the unit sphere with the Euclidean form,
* ``K = -1``: the upper sheet of the hyperboloid ``x^2 + y^2 - z^2 = -1``
  with the Minkowski form ``diag(1, 1, -1)``,
* ``K = 0``: the affine slice ``z = 1`` (homogeneous coordinates), tangent
  vectors having a zero third component.

A unit-speed curve of constant geodesic curvature ``beta`` is the orbit of a
one-parameter isometry group ``exp(t xi)``.  The generator satisfies
``xi^3 = -(K + beta^2) xi`` so the exponential has a closed form and the
dynamics carries no step-size error.

Orientation: ``n`` is ``v`` turned by +90 degrees (counterclockwise seen from
outside the sphere / above the plane and hyperboloid); ``beta > 0`` bends the
trajectory towards ``n``.

Most functions come in two flavours: a validated single-state API working on
:class:`TangentVector` objects and an unchecked array API (``*_arrays``)
operating on stacks of shape ``(..., 3)`` for the vectorized billiard code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidStateError, OutOfChartError

STATE_TOL = 1e-10
ZERO_CURVATURE_TOL = 1e-14

_MINKOWSKI = np.array([1.0, 1.0, -1.0])
_PLANE = np.array([1.0, 1.0, 0.0])

_NAMES = {"plane": 0, "sphere": 1, "hyperbolic": -1}


@dataclass(frozen=True)
class Surface:
    """Constant-curvature model surface with curvature ``K`` in {0, +1, -1}."""

    K: int

    def __post_init__(self):
        if self.K not in (-1, 0, 1) or isinstance(self.K, bool):
            raise ValueError(f"curvature sign must be one of -1, 0, 1; got {self.K!r}")

    @classmethod
    def from_name(cls, name: str) -> "Surface":
        try:
            return cls(_NAMES[name])
        except KeyError:
            raise ValueError(f"unknown surface {name!r}; expected one of {sorted(_NAMES)}") from None

    @property
    def name(self) -> str:
        return {0: "plane", 1: "sphere", -1: "hyperbolic"}[self.K]

    def origin(self) -> np.ndarray:
        """Base point ``(0, 0, 1)``, valid in all three models."""
        return np.array([0.0, 0.0, 1.0])

    def form(self, a, b):
        return form(self.K, a, b)


@dataclass(frozen=True)
class TangentVector:
    """Unit tangent vector ``dir`` attached at the surface point ``base``."""

    base: np.ndarray
    dir: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float).reshape(3))
        object.__setattr__(self, "dir", np.asarray(self.dir, dtype=float).reshape(3))

    def normal(self, surface: Surface) -> np.ndarray:
        """The direction turned by +90 degrees in the tangent plane."""
        return rot90(surface.K, self.base, self.dir)


@dataclass(frozen=True)
class MagneticContext:
    surface: Surface
    beta: float

    def __post_init__(self):
        if not np.isfinite(self.beta) or self.beta < 0:
            raise ValueError(f"field strength must be a finite number >= 0; got {self.beta!r}")
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def K(self) -> int:
        return self.surface.K

    @property
    def effective_curvature(self) -> float:
        return self.surface.K + self.beta**2


@dataclass(frozen=True)
class FlowGenerator:
    """Infinitesimal isometry whose orbit through a state is its trajectory."""

    matrix: np.ndarray
    effective_curvature: float

    def identity_residual(self) -> float:
        """Max-norm of ``xi^3 + (K + beta^2) xi``; zero up to rounding."""
        xi = self.matrix
        return float(np.max(np.abs(xi @ xi @ xi + self.effective_curvature * xi)))

    def exp(self, t: float) -> np.ndarray:
        a, b = _exp_coefficients(self.effective_curvature, t)
        xi = self.matrix
        return np.eye(3) + a * xi + b * (xi @ xi)


# ---------------------------------------------------------------------------
# array-level primitives


def form(K: int, a, b):
    """Ambient bilinear form of the model, broadcast over the last axis."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if K == 1:
        return np.sum(a * b, axis=-1)
    if K == -1:
        return np.sum(a * b * _MINKOWSKI, axis=-1)
    return np.sum(a * b * _PLANE, axis=-1)


def _cross(a, b):
    # np.cross carries heavy per-call overhead on small stacks
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


def rot90(K: int, p, v):
    """Rotate the tangent vector ``v`` at ``p`` by +90 degrees."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if K == 1:
        return _cross(p, v)
    if K == -1:
        return _cross(p, v) * _MINKOWSKI
    n = np.empty(np.broadcast_shapes(p.shape, v.shape))
    n[..., 0] = -v[..., 1]
    n[..., 1] = v[..., 0]
    n[..., 2] = 0.0
    return n


def reproject(K: int, p, v):
    """Project ``(p, v)`` back onto the point and unit-tangent constraint sets."""
    p = np.array(p, dtype=float)
    v = np.array(v, dtype=float)
    if K == 1:
        p = p / np.linalg.norm(p, axis=-1, keepdims=True)
        v = v - np.sum(p * v, axis=-1, keepdims=True) * p
        v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    elif K == -1:
        p = p / np.sqrt(-form(-1, p, p))[..., None]
        v = v + form(-1, p, v)[..., None] * p
        v = v / np.sqrt(form(-1, v, v))[..., None]
    else:
        p[..., 2] = 1.0
        v[..., 2] = 0.0
        v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    return p, v


def _exp_coefficients(c, t):
    """Coefficients ``(a, b)`` with ``exp(t xi) = I + a xi + b xi^2``.

    ``a = sin(wt)/w`` and ``b = (1 - cos wt)/w^2`` for ``c = w^2 > 0``, the
    hyperbolic analogues for ``c < 0`` and ``(t, t^2/2)`` at ``c = 0``.  The
    half-angle form of ``b`` avoids cancellation when ``|c|`` is small.
    """
    t = np.asarray(t, dtype=float)
    if abs(c) < ZERO_CURVATURE_TOL:
        return t, 0.5 * t * t
    if c > 0:
        w = np.sqrt(c)
        return np.sin(w * t) / w, 2.0 * (np.sin(0.5 * w * t) / w) ** 2
    w = np.sqrt(-c)
    return np.sinh(w * t) / w, 2.0 * (np.sinh(0.5 * w * t) / w) ** 2


def flow_arrays(K: int, beta: float, p, v, t, accel=None):
    """Closed-form magnetic flow of the states ``(p, v)`` for times ``t``.

    Written in the moving frame ``(p, v, n)``: with ``xi p = v`` and
    ``xi v = beta n - K p`` the exponential series collapses to
    ``p(t) = p + a v + b (beta n - K p)`` and
    ``v(t) = (1 - c b) v + a (beta n - K p)``.  No reprojection is applied.
    ``accel`` may pass a precomputed ``beta n - K p``.
    """
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    c = K + beta * beta
    a, b = _exp_coefficients(c, t)
    a = np.asarray(a)[..., None]
    b = np.asarray(b)[..., None]
    if accel is None:
        accel = beta * rot90(K, p, v) - K * p
    return p + a * v + b * accel, (1.0 - c * b) * v + a * accel


def polar_to_point_arrays(K: int, base, ref, r, theta):
    """Point at geodesic distance ``r`` from ``base`` in direction ``theta``.

    ``theta`` is measured counterclockwise from the unit tangent ``ref``.
    """
    base = np.asarray(base, dtype=float)
    ref = np.asarray(ref, dtype=float)
    r = np.asarray(r, dtype=float)[..., None]
    theta = np.asarray(theta, dtype=float)[..., None]
    u = np.cos(theta) * ref + np.sin(theta) * rot90(K, base, ref)
    if K == 1:
        return np.cos(r) * base + np.sin(r) * u
    if K == -1:
        return np.cosh(r) * base + np.sinh(r) * u
    return base + r * u


def point_to_polar_arrays(K: int, base, ref, p, nref=None):
    """Inverse of :func:`polar_to_point_arrays` without chart checks.

    Returns ``(r, theta, s)`` where ``s`` is the norm of the tangential part
    of ``p``; callers use it to detect the degenerate antipodal case.
    """
    base = np.asarray(base, dtype=float)
    ref = np.asarray(ref, dtype=float)
    p = np.asarray(p, dtype=float)
    if nref is None:
        nref = rot90(K, base, ref)
    if K == 1:
        c = np.sum(p * base, axis=-1)
        w = p - c[..., None] * base
        s = np.linalg.norm(w, axis=-1)
        r = np.arctan2(s, c)
    elif K == -1:
        c = -form(-1, p, base)
        w = p - c[..., None] * base
        s = np.sqrt(np.maximum(form(-1, w, w), 0.0))
        r = np.arcsinh(s)
    else:
        w = p - base
        s = np.sqrt(form(0, w, w))
        r = s
    theta = np.arctan2(form(K, w, nref), form(K, w, ref))
    return r, theta, s


def circle_chord_length(K: int, beta: float, k, phi):
    """Length of the magnetic chord launched at angle ``phi`` in a circle.

    The circle has geodesic curvature ``k``.  By symmetry the focusing
    distances on both sides equal half the chord, which turns the mirror
    relation into ``tan(w l / 2) = w sin(phi) / (k - beta cos(phi))`` (with
    ``tanh`` when ``K + beta^2 < 0``).  Returns NaN where no such chord exists.
    """
    k = np.asarray(k, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c = K + beta * beta
    z = np.sin(phi) / (k - beta * np.cos(phi))
    with np.errstate(invalid="ignore", divide="ignore"):
        if abs(c) < ZERO_CURVATURE_TOL:
            out = 2.0 * z
        elif c > 0:
            w = np.sqrt(c)
            out = 2.0 / w * np.arctan(w * z)
        else:
            w = np.sqrt(-c)
            arg = w * z
            out = np.where(np.abs(arg) < 1.0, 2.0 / w * np.arctanh(np.clip(arg, -1.0, 1.0)), np.nan)
        return np.where(z > 0, out, np.nan)


# ---------------------------------------------------------------------------
# validated single-state API


def check_point(surface: Surface, p, tol: float = STATE_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(3)
    K = surface.K
    if K == 1:
        bad = abs(p @ p - 1.0) > tol
    elif K == -1:
        bad = abs(form(-1, p, p) + 1.0) > tol or p[2] <= 0
    else:
        bad = abs(p[2] - 1.0) > tol
    if bad or not np.all(np.isfinite(p)):
        raise InvalidStateError(f"{p!r} is not a point of the {surface.name} model")
    return p


def check_state(surface: Surface, state: TangentVector, tol: float = STATE_TOL) -> TangentVector:
    """Raise :class:`InvalidStateError` unless ``state`` is a unit tangent vector."""
    p = check_point(surface, state.base, tol)
    v = state.dir
    K = surface.K
    tangency = v[2] if K == 0 else form(K, p, v)
    if abs(tangency) > tol or abs(form(K, v, v) - 1.0) > tol or not np.all(np.isfinite(v)):
        raise InvalidStateError(f"{v!r} is not a unit tangent vector at {p!r}")
    return state


def make_generator(state: TangentVector, ctx: MagneticContext) -> FlowGenerator:
    """Generator ``xi`` of the magnetic flow through ``state``.

    Built from its action on the frame: ``xi p = v``, ``xi v = beta n - K p``
    and ``xi n = -beta v``.  For the plane this is the homogeneous generator
    of a rotation about the Larmor centre (a translation when ``beta = 0``).
    """
    K = ctx.K
    check_state(ctx.surface, state)
    p, v = state.base, state.dir
    n = rot90(K, p, v)
    frame = np.column_stack([p, v, n])
    image = np.column_stack([v, ctx.beta * n - K * p, -ctx.beta * v])
    xi = np.linalg.solve(frame.T, image.T).T
    return FlowGenerator(xi, ctx.effective_curvature)


def flow(state: TangentVector, ctx: MagneticContext, t: float) -> TangentVector:
    """Move ``state`` for arclength ``t`` along its magnetic geodesic."""
    gen = make_generator(state, ctx)
    E = gen.exp(t)
    p, v = reproject(ctx.K, E @ state.base, E @ state.dir)
    return TangentVector(p, v)


def flow_ode_oracle_arrays(K: int, beta: float, p, v, t, steps: int):
    """RK4 integration of ``p' = v, v' = beta n - K p`` for stacks of states.

    ``t`` may differ per state; every state takes ``steps`` steps of size
    ``t / steps`` and is reprojected after each step.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    p = np.array(p, dtype=float)
    v = np.array(v, dtype=float)
    h = np.asarray(t, dtype=float)[..., None] / steps

    def rhs(p, v):
        return v, beta * rot90(K, p, v) - K * p

    for _ in range(steps):
        k1p, k1v = rhs(p, v)
        k2p, k2v = rhs(p + 0.5 * h * k1p, v + 0.5 * h * k1v)
        k3p, k3v = rhs(p + 0.5 * h * k2p, v + 0.5 * h * k2v)
        k4p, k4v = rhs(p + h * k3p, v + h * k3v)
        p = p + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        v = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        p, v = reproject(K, p, v)
    return p, v


def flow_ode_oracle(state: TangentVector, ctx: MagneticContext, t: float, steps: int) -> TangentVector:
    """Independent RK4 cross-check of :func:`flow`."""
    check_state(ctx.surface, state)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if t == 0:
        return TangentVector(state.base.copy(), state.dir.copy())
    p, v = flow_ode_oracle_arrays(ctx.K, ctx.beta, state.base, state.dir, t, steps)
    return TangentVector(p, v)


def geodesic_polar_to_point(surface: Surface, center: TangentVector, r: float, theta: float) -> np.ndarray:
    if r < 0:
        raise OutOfChartError(f"geodesic radius must be >= 0; got {r}")
    if surface.K == 1 and r >= np.pi:
        raise OutOfChartError(f"radius {r} exceeds the injectivity radius pi of the sphere")
    check_state(surface, center)
    return polar_to_point_arrays(surface.K, center.base, center.dir, r, theta)


def point_to_geodesic_polar(surface: Surface, center: TangentVector, p) -> tuple[float, float]:
    """Geodesic polar coordinates ``(r, theta)`` of ``p`` about ``center``.

    ``theta`` is returned in ``(-pi, pi]``; at ``r = 0`` it is 0.
    """
    check_state(surface, center)
    p = check_point(surface, p)
    r, theta, s = point_to_polar_arrays(surface.K, center.base, center.dir, p)
    if surface.K == 1 and s < 1e-12 and np.dot(p, center.base) < 0:
        raise OutOfChartError("antipodal point has no polar coordinates")
    if s < 1e-15:
        return 0.0, 0.0
    return float(r), float(theta)


def effective_regime(c: float) -> str:
    if abs(c) < ZERO_CURVATURE_TOL:
        return "zero"
    return "positive" if c > 0 else "negative"


def first_conjugate_time(K: int, beta: float) -> float:
    """First positive zero of the Jacobi field; ``inf`` if there is none."""
    c = K + beta * beta
    if effective_regime(c) != "positive":
        return np.inf
    return np.pi / np.sqrt(c)
