"""Integral identities and inequalities of the rigidity argument.

The central objects are

* the chord-length integral over the phase cylinder, which equals ``2 pi A``
  for every table and every admissible field strength;
* the comparison integral ``I(k)``: the same integral per unit boundary
  length for a circle of curvature ``k``, written as a 1D integral over the
  launch angle.  Its independence of ``beta`` is checked numerically;
* the rigidity defect ``H``, the difference of the two, which is zero on
  circles and strictly negative on every other convex table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .dynamics import BilliardSystem, step_arrays
from .errors import ChordSearchError, DomainError
from .surface import MagneticContext, Surface, ZERO_CURVATURE_TOL, effective_regime
from .table import circle_table

NEAR_ZERO_CURVATURE = 1e-8
CHUNK = 1 << 16


@dataclass(frozen=True)
class EffectiveCurvature:
    value: float
    regime: str

    @classmethod
    def of(cls, K: int, beta: float) -> "EffectiveCurvature":
        c = K + beta * beta
        return cls(c, effective_regime(c))


@dataclass(frozen=True)
class PhaseQuadrature:
    """Gauss-Legendre tensor rule on ``[0, P) x (0, pi)`` for ``sin(phi) dx dphi``."""

    nodes_x: int = 256
    nodes_phi: int = 256

    def __post_init__(self):
        if self.nodes_x < 32 or self.nodes_phi < 32:
            raise ValueError("quadrature needs at least 32 nodes per direction")

    def x_rule(self, perimeter: float):
        t, w = leggauss(self.nodes_x)
        return 0.5 * perimeter * (t + 1.0), 0.5 * perimeter * w

    def phi_rule(self):
        """Nodes and weights in ``phi`` with the ``sin(phi)`` factor folded in."""
        t, w = leggauss(self.nodes_phi)
        phi = 0.5 * np.pi * (t + 1.0)
        return phi, 0.5 * np.pi * w * np.sin(phi)

    def total_weight(self, perimeter: float) -> float:
        return float(np.sum(self.x_rule(perimeter)[1]) * np.sum(self.phi_rule()[1]))

    def halved(self) -> "PhaseQuadrature":
        return PhaseQuadrature(max(32, self.nodes_x // 2), max(32, self.nodes_phi // 2))


# ---------------------------------------------------------------------------
# Jacobi fields and the mirror relation


def jacobi_ratio(K: int, beta: float, t: float) -> float:
    """Logarithmic derivative ``Y'/Y`` of the Jacobi field with ``Y(0)=0, Y'(0)=1``.

    The field obeys ``Y'' + (K + beta^2) Y = 0``.
    """
    if not t > 0:
        raise DomainError(f"Jacobi ratio needs t > 0; got {t}")
    c = K + beta * beta
    regime = effective_regime(c)
    if regime == "zero":
        return 1.0 / t
    if regime == "positive":
        w = math.sqrt(c)
        if w * t >= math.pi:
            raise DomainError(f"t = {t} is at or beyond the first conjugate time {math.pi / w}")
        return w / math.tan(w * t)
    w = math.sqrt(-c)
    return w / math.tanh(w * t)


def mirror_rhs(k, beta: float, phi):
    """Right-hand side ``2 (k - beta cos phi) / sin phi`` of the mirror relation."""
    return 2.0 * (k - beta * np.cos(phi)) / np.sin(phi)


def mirror_residuals_circle(surface: Surface, rho: float, beta: float, phis, resolution: int = 1024):
    """Mirror-relation residuals on the circle of geodesic radius ``rho``.

    By symmetry both focusing distances are half the chord, so the residual
    is ``2 Y'/Y(l/2) - 2 (k - beta cos phi)/sin phi`` with ``l`` from the
    simulated chord.
    """
    table = circle_table(surface, rho, resolution)
    sys = BilliardSystem(table, MagneticContext(surface, beta))
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    batch = step_arrays(sys, np.zeros_like(phis), phis)
    if not np.all(batch.ok):
        i = int(np.argmin(batch.ok))
        raise ChordSearchError(f"chord search failed at phi={phis[i]!r}: {batch.reason[i]}")
    k = circle_geometry(surface.K, rho=rho).k
    ratios = np.array([jacobi_ratio(surface.K, beta, 0.5 * l) for l in batch.length])
    return 2.0 * ratios - mirror_rhs(k, beta, phis)


def mirror_residual_circle(surface: Surface, rho_circle: float, beta: float, phi: float) -> float:
    return float(mirror_residuals_circle(surface, rho_circle, beta, [phi])[0])


# ---------------------------------------------------------------------------
# chord-length integral


def santalo_integral(sys: BilliardSystem, quad: PhaseQuadrature) -> float:
    """Integral of the chord length over the phase cylinder."""
    xs, wx = quad.x_rule(sys.perimeter)
    phis, wphi = quad.phi_rule()
    X, PHI = (a.ravel() for a in np.meshgrid(xs, phis, indexing="ij"))
    W = np.outer(wx, wphi).ravel()
    lengths = np.empty_like(X)
    for start in range(0, len(X), CHUNK):
        sl = slice(start, start + CHUNK)
        b = step_arrays(sys, X[sl], PHI[sl])
        if not np.all(b.ok):
            i = int(np.argmin(b.ok))
            raise ChordSearchError(
                f"chord search failed at quadrature node x={X[sl][i]!r}, phi={PHI[sl][i]!r}: {b.reason[i]}"
            )
        lengths[sl] = b.length
    return float(np.sum(W * lengths))


# ---------------------------------------------------------------------------
# comparison-circle integral


def _chord_series(c, z):
    # arctan(w z)/w and artanh(w z)/w share the expansion z - c z^3/3 + c^2 z^5/5 - ...
    z2 = z * z
    return z * (1.0 - c * z2 / 3.0 + c * c * z2 * z2 / 5.0 - c**3 * z2**3 / 7.0)


def inner_integrand(K: int, beta: float, k, phi):
    """Integrand of ``I(k)`` including the ``sin(phi)`` measure factor.

    * ``K + beta^2 > 0``: ``(2/w) arctan(w sin(phi) / (k - beta cos(phi))) sin(phi)``
    * ``K + beta^2 = 0``: ``(2 sin(phi) / (k - cos(phi))) sin(phi)``
    * ``K + beta^2 < 0``: ``(2/w) artanh(w sin(phi) / (k - beta cos(phi))) sin(phi)``

    with ``w = sqrt(|K + beta^2|)``.
    """
    k = np.asarray(k, dtype=float)
    phi = np.asarray(phi, dtype=float)
    denom = k - beta * np.cos(phi)
    if np.any(denom <= 0):
        raise DomainError("k - beta cos(phi) must be positive")
    z = np.sin(phi) / denom
    c = K + beta * beta
    if abs(c) < ZERO_CURVATURE_TOL:
        half = z
    elif abs(c) < NEAR_ZERO_CURVATURE:
        half = _chord_series(c, z)
        w = math.sqrt(abs(c))
        closed = np.arctan(w * z) / w if c > 0 else np.arctanh(np.minimum(w * z, 1.0)) / w
        if not np.allclose(closed, half, rtol=1e-7, atol=0.0):
            raise DomainError(f"near-zero effective curvature {c:g}: series and closed form disagree")
    elif c > 0:
        w = math.sqrt(c)
        half = np.arctan(w * z) / w
    else:
        w = math.sqrt(-c)
        arg = w * z
        if np.any(arg >= 1.0):
            raise DomainError(
                "artanh argument reaches 1: the boundary curvature must exceed 1 "
                "(convexity with respect to horocycles)"
            )
        half = np.arctanh(arg) / w
    return 2.0 * half * np.sin(phi)


def _check_inner_domain(K: int, beta: float, k):
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise DomainError("curvature must be positive")
    if np.any(beta >= k):
        raise DomainError(f"field strength {beta} must be below the curvature")
    if K == -1 and np.any(k <= 1.0):
        raise DomainError("hyperbolic comparison circle needs k > 1 (horocycle convexity)")


def inner_integral(K: int, beta: float, k, nodes: int = 256):
    """``I(k)``: Gauss-Legendre integral of :func:`inner_integrand` over ``(0, pi)``."""
    _check_inner_domain(K, beta, k)
    t, w = leggauss(nodes)
    phi = 0.5 * np.pi * (t + 1.0)
    w = 0.5 * np.pi * w
    k = np.asarray(k, dtype=float)
    vals = inner_integrand(K, beta, k[..., None], phi)
    out = vals @ w
    return float(out) if out.ndim == 0 else out


def circle_gap_closed_form(K: int, k):
    """Closed form of ``I(k)``: ``pi/k``, ``2 pi (sqrt(k^2+1) - k)``, ``2 pi (k - sqrt(k^2-1))``.

    The sphere and hyperbolic forms are evaluated as ``2 pi / (sqrt(k^2 +- 1) + k)``
    to avoid cancellation at large ``k``.
    """
    k = np.asarray(k, dtype=float)
    if K == 0:
        if np.any(k <= 0):
            raise DomainError("planar circles have k > 0")
        out = np.pi / k
    elif K == 1:
        if np.any(k <= 0):
            raise DomainError("comparison needs k > 0")
        out = 2 * np.pi / (np.sqrt(k * k + 1.0) + k)
    else:
        if np.any(k <= 1):
            raise DomainError(f"no hyperbolic circle has curvature k <= 1 (got {k})")
        out = 2 * np.pi / (k + np.sqrt(k * k - 1.0))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CircleGeometry:
    k: float
    rho: float
    perimeter: float
    area: float

    @property
    def gap(self) -> float:
        """``2 pi A / P`` of the circle."""
        return 2 * np.pi * self.area / self.perimeter


def circle_geometry(K: int, rho: float | None = None, k: float | None = None) -> CircleGeometry:
    """Curvature, radius, perimeter and area of a geodesic circle.

    Give exactly one of ``rho`` (geodesic radius) and ``k`` (geodesic curvature).
    """
    if (rho is None) == (k is None):
        raise ValueError("give exactly one of rho and k")
    if rho is None:
        if K == 0:
            if k <= 0:
                raise DomainError("planar circles have k > 0")
            rho = 1.0 / k
        elif K == 1:
            rho = math.atan2(1.0, k)
        else:
            if k <= 1:
                raise DomainError(f"no hyperbolic circle has curvature k = {k} <= 1")
            rho = math.atanh(1.0 / k)
    if not rho > 0 or (K == 1 and rho >= math.pi):
        raise DomainError(f"invalid geodesic radius {rho}")
    if K == 0:
        return CircleGeometry(1.0 / rho, rho, 2 * math.pi * rho, math.pi * rho * rho)
    if K == 1:
        return CircleGeometry(
            1.0 / math.tan(rho), rho, 2 * math.pi * math.sin(rho), 4 * math.pi * math.sin(0.5 * rho) ** 2
        )
    return CircleGeometry(
        1.0 / math.tanh(rho), rho, 2 * math.pi * math.sinh(rho), 4 * math.pi * math.sinh(0.5 * rho) ** 2
    )


@dataclass
class BetaSweep:
    K: int
    k: float
    betas: list
    values: list
    closed_form: float
    max_deviation: float
    max_closed_form_deviation: float


def beta_independence_sweep(K: int, k: float, betas, nodes: int = 256) -> BetaSweep:
    betas = [float(b) for b in betas]
    for b in betas:
        if b < 0:
            raise DomainError(f"field strength must be >= 0; got {b}")
        _check_inner_domain(K, b, k)
    values = [inner_integral(K, b, k, nodes) for b in betas]
    closed = circle_gap_closed_form(K, k)
    spread = max(values) - min(values) if values else 0.0
    off = max((abs(v - closed) for v in values), default=0.0)
    return BetaSweep(K, float(k), betas, values, closed, spread, off)


# ---------------------------------------------------------------------------
# defects


def isoperimetric_defect(K: int, P: float, A: float) -> float:
    """``P^2 - 4 pi A + K A^2``; nonnegative, zero exactly on circles."""
    if not (P > 0 and A > 0):
        raise DomainError("perimeter and area must be positive")
    return P * P - 4 * math.pi * A + K * A * A


CONSISTENT = "consistent with total integrability"
EXCLUDED = "total integrability excluded"
HOROCYCLE_EXCLUDED = "total integrability excluded: horocycle convexity k >= 1 violated"
UNRESOLVED = "unresolved: quadrature not converged"


@dataclass
class DefectReport:
    """Rigidity defect ``H = santalo_lhs - gap_integral`` with its verdict."""

    santalo_lhs: float
    gap_integral: float
    rigidity_defect: float
    isoperimetric_defect: float
    two_pi_area: float
    uncertainty: float
    verdict: str
    details: dict = field(default_factory=dict)


def gap_integral(sys: BilliardSystem, quad: PhaseQuadrature) -> float:
    """Integral over the boundary of ``I(k(x))`` with the x-rule of ``quad``."""
    table = sys.table
    xs, wx = quad.x_rule(table.perimeter)
    k = table.frame_at_theta(table.theta_at(xs))[3]
    return float(np.sum(wx * inner_integral(sys.K, sys.beta, k, quad.nodes_phi)))


def rigidity_defect(
    sys: BilliardSystem,
    quad: PhaseQuadrature,
    tolerance: float = 1e-5,
    stability: float = 1e-6,
    check_doubling: bool = True,
) -> DefectReport:
    """Evaluate ``H`` and classify the table.

    ``tolerance`` and ``stability`` are relative to ``2 pi A``.  With
    ``check_doubling`` the defect is also evaluated on the rule with half the
    nodes; their difference is reported as ``uncertainty`` and no verdict is
    issued unless it is below ``stability``.
    """
    table = sys.table
    scale = 2 * math.pi * table.area
    iso = isoperimetric_defect(sys.K, table.perimeter, table.area)
    details = {
        "K": sys.K,
        "beta": sys.beta,
        "k_min": table.k_min,
        "k_max": table.k_max,
        "nodes_x": quad.nodes_x,
        "nodes_phi": quad.nodes_phi,
    }
    lhs = santalo_integral(sys, quad)
    if EffectiveCurvature.of(sys.K, sys.beta).regime == "negative" and table.k_min <= 1.0:
        details["reason"] = f"min k = {table.k_min:.6g} < 1 while beta = {sys.beta:g} < 1"
        return DefectReport(lhs, math.nan, math.nan, iso, scale, math.nan, HOROCYCLE_EXCLUDED, details)

    gap = gap_integral(sys, quad)
    H = lhs - gap
    uncertainty = 0.0
    if check_doubling:
        coarse = quad.halved()
        H_coarse = santalo_integral(sys, coarse) - gap_integral(sys, coarse)
        uncertainty = abs(H - H_coarse)
        details["defect_coarse"] = H_coarse

    if uncertainty > stability * scale:
        verdict = UNRESOLVED
    elif H < -tolerance * scale:
        verdict = EXCLUDED
    else:
        verdict = CONSISTENT
    return DefectReport(lhs, gap, H, iso, scale, uncertainty, verdict, details)
