import math

import numpy as np
import pytest
from conftest import TABLE_SPECS
from scipy.integrate import dblquad, quad

from magbill import table as table_mod
from magbill.errors import ConvexityError, OutOfChartError, ResolutionError
from magbill.surface import Surface
from magbill.table import (
    PhasePoint,
    PolarProfile,
    assumption_margin,
    circle_table,
    curvature_at,
    inside_value,
    polar_table,
    standard_frame,
)

PLANE, SPHERE, HYPERBOLIC = Surface(0), Surface(1), Surface(-1)


def chart_functions(K):
    """``(C, S)`` of geodesic polar coordinates: metric dr^2 + S(r)^2 dtheta^2."""
    return {
        0: (lambda r: 1.0, lambda r: r),
        1: (math.cos, math.sin),
        -1: (math.cosh, math.sinh),
    }[K]


def polar_oracle(K, profile):
    """Perimeter, area and curvature from the intrinsic polar metric, via scipy quad."""
    C, S = chart_functions(K)
    rho = lambda t: float(profile.radius(t))
    d1 = lambda t: float(profile.radius(t, 1))
    d2 = lambda t: float(profile.radius(t, 2))
    speed = lambda t: math.hypot(d1(t), S(rho(t)))
    P = quad(speed, 0, 2 * math.pi, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    A = dblquad(lambda r, t: S(r), 0, 2 * math.pi, 0, rho, epsabs=1e-13, epsrel=1e-13)[0]

    def curvature(t):
        # angle psi between the radial direction and the tangent, then Liouville's formula
        r, r1, r2 = rho(t), d1(t), d2(t)
        dpsi = (r1 * r1 * C(r) - S(r) * r2) / (r1 * r1 + S(r) ** 2)
        return (dpsi + C(r)) / speed(t)

    return P, A, curvature


class TestCircles:
    def test_unit_disk(self):
        t = circle_table(PLANE, 1.0)
        assert t.perimeter == pytest.approx(2 * math.pi, rel=1e-14)
        assert t.area == pytest.approx(math.pi, rel=1e-14)
        assert np.allclose(t.curvature, 1.0, atol=1e-14)

    def test_spherical_cap(self):
        t = circle_table(SPHERE, math.pi / 4)
        assert t.perimeter == pytest.approx(math.pi * math.sqrt(2), rel=1e-14)
        assert t.area == pytest.approx(2 * math.pi * (1 - math.cos(math.pi / 4)), rel=1e-14)
        assert t.k_min == pytest.approx(1.0, abs=1e-14) and t.k_max == pytest.approx(1.0, abs=1e-14)

    def test_hyperbolic_circle(self):
        t = circle_table(HYPERBOLIC, 0.6)
        assert t.perimeter == pytest.approx(2 * math.pi * math.sinh(0.6), rel=1e-14)
        assert t.area == pytest.approx(2 * math.pi * (math.cosh(0.6) - 1), rel=1e-14)
        assert np.allclose(t.curvature, 1 / math.tanh(0.6), atol=1e-13)

    @pytest.mark.parametrize(
        "surface,rho,k",
        [(PLANE, 1.0, 1.0), (SPHERE, math.pi / 4, 1.0), (HYPERBOLIC, 0.6, 1.8620)],
        ids=["disk", "sphere", "hyperbolic"],
    )
    def test_curvature_at_any_x(self, surface, rho, k):
        t = circle_table(surface, rho)
        xs = np.linspace(0, t.perimeter, 7, endpoint=False)
        assert np.allclose(curvature_at(t, xs), k, atol=1e-4)

    def test_circle_profile_flag(self):
        assert PolarProfile.circle(PLANE, 1.0).is_circle
        assert not PolarProfile(standard_frame(PLANE), 1.0, (0.0, 0.1)).is_circle
        assert PolarProfile(standard_frame(PLANE), 1.0, (0.0, 0.0)).is_circle


@pytest.mark.parametrize("label", ["plane-polar", "sphere-polar", "hyperbolic-polar"])
class TestPerturbed:
    def test_perimeter_area_against_quad(self, tables, label):
        t = tables(label)
        P, A, _ = polar_oracle(t.K, t.profile)
        assert t.perimeter == pytest.approx(P, rel=1e-12)
        assert t.area == pytest.approx(A, rel=1e-11)

    def test_curvature_against_intrinsic_formula(self, tables, label):
        t = tables(label)
        _, _, k = polar_oracle(t.K, t.profile)
        thetas = np.linspace(0, 2 * math.pi, 37)
        expected = np.array([k(th) for th in thetas])
        assert np.allclose(t.frame_at_theta(thetas)[3], expected, rtol=1e-12, atol=1e-12)
        dense = np.array([k(th) for th in np.linspace(0, 2 * math.pi, 4001)])
        assert t.k_min == pytest.approx(dense.min(), abs=1e-6) and t.k_min <= dense.min() + 1e-12
        assert t.k_max == pytest.approx(dense.max(), abs=1e-6) and t.k_max >= dense.max() - 1e-12

    def test_gauss_bonnet(self, tables, label):
        assert abs(tables(label).gauss_bonnet_residual) < 1e-8

    def test_arclength_round_trip(self, tables, label):
        t = tables(label)
        xs = np.linspace(0, t.perimeter, 101, endpoint=False)
        assert np.allclose(t.arclength(t.theta_at(xs)), xs, atol=1e-12)
        assert np.allclose(np.mod(t.locate(t.point_at(xs)), t.perimeter), xs, atol=1e-10)

    def test_arclength_against_quad(self, tables, label):
        t = tables(label)
        C, S = chart_functions(t.K)
        speed = lambda th: math.hypot(float(t.profile.radius(th, 1)), S(float(t.profile.radius(th))))
        for th in (0.3, 1.7, 4.0):
            assert float(t.arclength(th)) == pytest.approx(quad(speed, 0, th, epsabs=1e-14)[0], abs=1e-12)

    def test_frame_is_orthonormal_and_inward(self, tables, label):
        t = tables(label)
        xs = np.linspace(0, t.perimeter, 50, endpoint=False)
        g, T, N = t.frame_at(xs)
        f = t.surface.form
        assert np.allclose(f(T, T), 1) and np.allclose(f(N, N), 1) and np.allclose(f(T, N), 0, atol=1e-13)
        # a short step along the inward normal lands inside
        eps = 1e-4
        if t.K == 0:
            q = g + eps * N
        elif t.K == 1:
            q = math.cos(eps) * g + math.sin(eps) * N
        else:
            q = math.cosh(eps) * g + math.sinh(eps) * N
        assert all(inside_value(t, qi) > 0 for qi in q)


def test_perturbed_plane_beats_isoperimetric_bound(tables):
    t = tables("plane-polar")
    assert t.perimeter**2 > 4 * math.pi * t.area


class TestRejection:
    def test_nonconvex_sphere_profile(self):
        # 0.6 + 0.05 cos 3theta dips to negative curvature at theta = pi
        with pytest.raises(ConvexityError):
            polar_table(SPHERE, 0.6, cos=(0.0, 0.0, 0.05))
        _, _, k = polar_oracle(1, PolarProfile(standard_frame(SPHERE), 0.6, (0.0, 0.0, 0.05)))
        assert k(math.pi) < 0

    def test_nonconvex_plane_profile(self):
        with pytest.raises(ConvexityError):
            polar_table(PLANE, 1.0, cos=(0.0, 0.3))

    def test_negative_radius(self):
        with pytest.raises(ConvexityError):
            polar_table(PLANE, 0.1, cos=(0.2,))

    def test_beyond_hemisphere(self):
        with pytest.raises(ConvexityError):
            circle_table(SPHERE, 1.6)

    def test_resolution_floor(self):
        with pytest.raises(ValueError):
            circle_table(PLANE, 1.0, resolution=64)

    def test_resolution_error(self, monkeypatch):
        # trapezoid sums of the turning rate are near exact for periodic profiles,
        # so a negative tolerance is the only reliable way to exercise this path
        monkeypatch.setattr(table_mod, "GAUSS_BONNET_TOL", -1.0)
        with pytest.raises(ResolutionError):
            polar_table(PLANE, 1.0, cos=(0.0, 0.1), resolution=256)


class TestInsideValue:
    def test_disk(self):
        t = circle_table(PLANE, 1.0)
        assert inside_value(t, [0, 0, 1]) == 1.0
        assert inside_value(t, [1, 0, 1]) == pytest.approx(0.0, abs=1e-15)
        assert inside_value(t, [2, 0, 1]) == pytest.approx(-1.0)

    def test_sphere_antipode(self):
        t = circle_table(SPHERE, 0.6)
        with pytest.raises(OutOfChartError):
            inside_value(t, [0, 0, -1])

    def test_boundary_points_zero(self, tables):
        for label in TABLE_SPECS:
            t = tables(label)
            assert np.max(np.abs([inside_value(t, p) for p in t.points[::64]])) < 1e-13


class TestMargin:
    def test_disk(self):
        t = circle_table(PLANE, 1.0)
        assert assumption_margin(t, 0.5) == 0.5
        assert assumption_margin(t, 1.0) == pytest.approx(0.0, abs=1e-14)

    def test_hyperbolic(self):
        t = circle_table(HYPERBOLIC, 0.6)
        assert assumption_margin(t, 1.5) == pytest.approx(1 / math.tanh(0.6) - 1.5, abs=1e-13)
        assert assumption_margin(t, 1.5) == pytest.approx(0.3620, abs=1e-4)


class TestPhasePoint:
    def test_valid(self):
        assert PhasePoint(0.0, 1.0).check(2.0).phi == 1.0

    @pytest.mark.parametrize("x,phi", [(-0.1, 1.0), (2.0, 1.0), (0.5, 0.0), (0.5, math.pi)])
    def test_invalid(self, x, phi):
        with pytest.raises(ValueError):
            PhasePoint(x, phi).check(2.0)
