"""The magnetic billiard map on the phase cylinder.

A collision state ``(x, phi)`` is launched along its magnetic geodesic with
the closed-form flow; the next boundary hit is the first sign change of
``rho(theta) - r`` (see :func:`~magbill.table.inside_value`) along the
trajectory, located by fixed-step bracketing and bisection.  Every routine works on whole arrays of
phase points so quadrature grids and seed sets are stepped together.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionError, ChordSearchError, StepSizeError
from .surface import (
    MagneticContext,
    TangentVector,
    circle_chord_length,
    flow_arrays,
    form,
    point_to_polar_arrays,
    reproject,
    rot90,
)
from .table import PhasePoint, Table, assumption_margin

BISECTION_TOL = 1e-12
BRACKET_SAFETY = 0.5
MAX_BRACKET_STEPS = 20000
ANGLE_FLOOR = 1e-9


@dataclass(frozen=True, eq=False)
class BilliardSystem:
    table: Table
    ctx: MagneticContext

    def __post_init__(self):
        if self.table.surface != self.ctx.surface:
            raise ValueError("table and magnetic context live on different surfaces")
        margin = assumption_margin(self.table, self.ctx.beta)
        if not margin > 0:
            raise AssumptionError(
                f"field strength beta = {self.ctx.beta:g} is not below min k = {self.table.k_min:.6g}"
            )

    @property
    def K(self) -> int:
        return self.ctx.K

    @property
    def beta(self) -> float:
        return self.ctx.beta

    @property
    def perimeter(self) -> float:
        return self.table.perimeter


@dataclass(frozen=True)
class ChordResult:
    """One application of the map.

    ``exit_state`` is the ball arriving at the boundary (end of the chord),
    ``entry_state`` the reflected state that starts the next chord.
    """

    next: PhasePoint
    length: float
    exit_state: TangentVector
    entry_state: TangentVector


@dataclass
class StepBatch:
    x: np.ndarray
    phi: np.ndarray
    length: np.ndarray
    ok: np.ndarray
    exit_point: np.ndarray
    exit_dir: np.ndarray
    entry_dir: np.ndarray
    reason: list = field(default_factory=list)


def launch_states(sys: BilliardSystem, x, phi):
    """Ambient states leaving the boundary at ``x`` with inward angle ``phi``."""
    table = sys.table
    g, T, N, _, _ = table.frame_at_theta(table.theta_at(x))
    phi = np.asarray(phi, dtype=float)[..., None]
    return g, np.cos(phi) * T + np.sin(phi) * N


def step_arrays(sys: BilliardSystem, x, phi) -> StepBatch:
    """Apply the billiard map to arrays of phase points.

    Failures never raise here: the affected entries get ``ok = False`` and
    NaN outputs, with a message in ``reason`` (``None`` for good entries).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    table, K, beta = sys.table, sys.K, sys.beta
    n = len(x)
    reason = [None] * n

    p0, v0 = launch_states(sys, x, phi)
    accel0 = beta * rot90(K, p0, v0) - K * p0
    center = table.profile.center
    nref = rot90(K, center.base, center.dir)

    def inside(idx, t):
        q, _ = flow_arrays(K, beta, p0[idx], v0[idx], t, accel0[idx])
        r, theta, _ = point_to_polar_arrays(K, center.base, center.dir, q, nref)
        return table.profile.radius(theta) - r

    # Blaschke rolling: the circle of curvature k_max tangent at x lies in the
    # table, so the trajectory is still inside before its chord in that circle.
    l_in = circle_chord_length(K, beta, table.k_max, phi)
    fallback = np.sin(phi) / (table.k_max + beta)
    scale = np.where(np.isfinite(l_in), l_in, fallback)
    dt = BRACKET_SAFETY * np.minimum(min(0.05, table.perimeter / 64), scale)
    t_lo = np.where(np.isfinite(l_in), 0.9 * l_in, dt)

    idx = np.arange(n)
    for _ in range(60):
        f = inside(idx, t_lo[idx])
        bad = idx[~(f > 0)]
        if not len(bad):
            break
        t_lo[bad] *= 0.5
        idx = bad
    else:
        for i in idx:
            reason[i] = "no interior point found near the launch point"

    t_hi = t_lo + dt
    active = np.array([i for i in range(n) if reason[i] is None], dtype=int)
    for _ in range(MAX_BRACKET_STEPS):
        if not len(active):
            break
        f = inside(active, t_hi[active])
        still = f > 0
        moved = active[still]
        t_lo[moved] = t_hi[moved]
        t_hi[moved] += dt[moved]
        active = moved
    for i in active:
        reason[i] = f"no boundary crossing within {MAX_BRACKET_STEPS} bracket steps"

    good = np.array([r is None for r in reason])
    idx = np.nonzero(good)[0]
    while len(idx):
        mid = 0.5 * (t_lo[idx] + t_hi[idx])
        f = inside(idx, mid)
        pos = f > 0
        t_lo[idx[pos]] = mid[pos]
        t_hi[idx[~pos]] = mid[~pos]
        idx = idx[(t_hi[idx] - t_lo[idx]) > BISECTION_TOL]

    t_star = 0.5 * (t_lo + t_hi)
    q, w = flow_arrays(K, beta, p0, v0, t_star, accel0)
    q, w = reproject(K, q, w)
    _, theta_q, _ = point_to_polar_arrays(K, center.base, center.dir, q, nref)
    theta_q = np.mod(theta_q, 2 * np.pi)
    x_next = np.mod(table.arclength(theta_q), table.perimeter)
    _, T, N, _, _ = table.frame_at_theta(theta_q)
    wn = form(K, w, N)
    phi_next = np.arctan2(-wn, form(K, w, T))
    w_ref = w - 2.0 * wn[:, None] * N

    for i in np.nonzero(good)[0]:
        if not (ANGLE_FLOOR <= phi_next[i] <= np.pi - ANGLE_FLOOR):
            reason[i] = f"reflected angle {phi_next[i]:.3g} outside (0, pi)"
    good = np.array([r is None for r in reason])
    nan = np.where(good, 1.0, np.nan)
    return StepBatch(
        x=x_next * nan,
        phi=phi_next * nan,
        length=t_star * nan,
        ok=good,
        exit_point=q * nan[:, None],
        exit_dir=w * nan[:, None],
        entry_dir=w_ref * nan[:, None],
        reason=reason,
    )


def billiard_step(sys: BilliardSystem, p: PhasePoint) -> ChordResult:
    """Apply the magnetic billiard map once."""
    p.check(sys.perimeter)
    b = step_arrays(sys, p.x, p.phi)
    if not b.ok[0]:
        raise ChordSearchError(f"chord search failed at x={p.x!r}, phi={p.phi!r}: {b.reason[0]}")
    return ChordResult(
        next=PhasePoint(float(b.x[0]), float(b.phi[0])),
        length=float(b.length[0]),
        exit_state=TangentVector(b.exit_point[0], b.exit_dir[0]),
        entry_state=TangentVector(b.exit_point[0], b.entry_dir[0]),
    )


def orbit(sys: BilliardSystem, p0: PhasePoint, n: int) -> list[tuple[PhasePoint, float]]:
    """``n`` successive images of ``p0`` with the chord length leading to each.

    On failure the raised :class:`ChordSearchError` carries ``index`` (the
    failing step, 0-based) and ``partial`` (the images computed so far).
    """
    p0.check(sys.perimeter)
    out = []
    x, phi = p0.x, p0.phi
    for i in range(n):
        b = step_arrays(sys, x, phi)
        if not b.ok[0]:
            err = ChordSearchError(f"step {i}: chord search failed at x={x!r}, phi={phi!r}: {b.reason[0]}")
            err.index = i
            err.partial = out
            raise err
        x, phi = float(b.x[0]), float(b.phi[0])
        out.append((PhasePoint(x, phi), float(b.length[0])))
    return out


def _wrap(dx, period):
    return (dx + 0.5 * period) % period - 0.5 * period


def map_jacobians(sys: BilliardSystem, x, phi, h: float = 1e-5):
    """Central-difference Jacobians of ``(x, phi) -> (x', phi')``.

    Returns ``(J, phi_next)`` with ``J`` of shape ``(n, 2, 2)``, rows
    ``(x', phi')`` and columns ``(d/dx, d/dphi)``; ``x'`` differences are
    unwrapped modulo the perimeter.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    if np.any(phi - h <= 0) or np.any(phi + h >= np.pi):
        raise StepSizeError(f"finite-difference step h={h:g} leaves (0, pi)")
    P = sys.perimeter
    n = len(x)
    xs = np.concatenate([x + h, x - h, x, x, x])
    ps = np.concatenate([phi, phi, phi + h, phi - h, phi])
    b = step_arrays(sys, np.mod(xs, P), ps)
    if not np.all(b.ok):
        i = int(np.argmin(b.ok))
        raise ChordSearchError(f"chord search failed at x={xs[i]!r}, phi={ps[i]!r}: {b.reason[i]}")
    X = b.x.reshape(5, n)
    F = b.phi.reshape(5, n)
    J = np.empty((n, 2, 2))
    J[:, 0, 0] = _wrap(X[0] - X[1], P) / (2 * h)
    J[:, 1, 0] = (F[0] - F[1]) / (2 * h)
    J[:, 0, 1] = _wrap(X[2] - X[3], P) / (2 * h)
    J[:, 1, 1] = (F[2] - F[3]) / (2 * h)
    return J, F[4]


def map_jacobian(sys: BilliardSystem, p: PhasePoint, h: float = 1e-5) -> np.ndarray:
    p.check(sys.perimeter)
    return map_jacobians(sys, p.x, p.phi, h)[0][0]


def area_form_determinants(sys: BilliardSystem, x, phi, h: float = 1e-5):
    """Jacobian determinants in the coordinates ``(x, cos phi)``, plus twist.

    Returns ``(det, twist)`` where ``twist = d x' / d phi``.  Preservation of
    ``dx ^ d(cos phi)`` means ``det == 1``.
    """
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    J, phi_next = map_jacobians(sys, x, phi, h)
    det = np.linalg.det(J) * np.sin(phi_next) / np.sin(phi)
    return det, J[:, 0, 1]


@dataclass
class PhasePortrait:
    """Per-seed orbit samples in ``(x, cos phi)``; failed seeds listed in ``errors``."""

    seeds: list
    samples: list
    errors: dict


def phase_portrait(sys: BilliardSystem, grid, iterations: int) -> PhasePortrait:
    """Iterate every seed ``iterations`` times, all seeds stepped together.

    Each seed's samples start with the seed itself.  A seed whose chord
    search fails keeps the samples gathered so far.
    """
    grid = list(grid)
    for p in grid:
        p.check(sys.perimeter)
    samples = [[(p.x, np.cos(p.phi))] for p in grid]
    errors = {}
    x = np.array([p.x for p in grid], dtype=float)
    phi = np.array([p.phi for p in grid], dtype=float)
    alive = np.arange(len(grid))
    for it in range(iterations):
        if not len(alive):
            break
        b = step_arrays(sys, x[alive], phi[alive])
        for j, i in enumerate(alive):
            if b.ok[j]:
                samples[i].append((float(b.x[j]), float(np.cos(b.phi[j]))))
            else:
                errors[int(i)] = f"iteration {it}: {b.reason[j]}"
        x[alive] = b.x
        phi[alive] = b.phi
        alive = alive[b.ok]
    return PhasePortrait(grid, [np.array(s).reshape(-1, 2) for s in samples], errors)
