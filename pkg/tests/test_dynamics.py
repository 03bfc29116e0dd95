import math

import numpy as np
import pytest

from magbill import dynamics
from magbill.errors import AssumptionError, ChordSearchError, StepSizeError
from magbill.surface import MagneticContext, Surface, flow_arrays
from magbill.table import PhasePoint, circle_table, inside_value_arrays
from magbill.dynamics import (
    BilliardSystem,
    area_form_determinants,
    billiard_step,
    map_jacobian,
    orbit,
    phase_portrait,
    step_arrays,
)

PLANE = Surface(0)


def system(table, beta):
    return BilliardSystem(table, MagneticContext(table.surface, beta))


@pytest.fixture(scope="module")
def disk():
    return circle_table(PLANE, 1.0)


def disk_oracle(x, phi, beta):
    """Exit of a unit-disk chord by intersecting the boundary with the Larmor circle."""
    p = np.array([math.cos(x), math.sin(x)])
    T = np.array([-math.sin(x), math.cos(x)])
    v = math.cos(phi) * T - math.sin(phi) * p
    left = np.array([-v[1], v[0]])
    R = 1 / beta
    c = p + R * left
    # the radical line of the two circles passes through p and the exit point
    d = np.linalg.norm(c)
    a = (1 - R * R + d * d) / (2 * d)
    h = math.sqrt(1 - a * a)
    u = c / d
    m = a * u
    cands = [m + h * np.array([-u[1], u[0]]), m - h * np.array([-u[1], u[0]])]
    q = max(cands, key=lambda z: np.linalg.norm(z - p))
    # counterclockwise arc around the Larmor centre from p to q
    a0 = math.atan2(*(p - c)[::-1])
    a1 = math.atan2(*(q - c)[::-1])
    length = R * ((a1 - a0) % (2 * math.pi))
    return math.atan2(q[1], q[0]) % (2 * math.pi), length


class TestDiskExamples:
    def test_diameter(self, disk):
        r = billiard_step(system(disk, 0.0), PhasePoint(0.0, math.pi / 2))
        assert r.next.x == pytest.approx(math.pi, abs=1e-10)
        assert r.next.phi == pytest.approx(math.pi / 2, abs=1e-10)
        assert r.length == pytest.approx(2.0, abs=1e-10)

    def test_inscribed_chord(self, disk):
        r = billiard_step(system(disk, 0.0), PhasePoint(0.5, math.pi / 3))
        assert r.length == pytest.approx(math.sqrt(3), abs=1e-10)
        assert r.next.x == pytest.approx(0.5 + 2 * math.pi / 3, abs=1e-10)
        assert r.next.phi == pytest.approx(math.pi / 3, abs=1e-10)

    def test_larmor_intersection(self, disk):
        r = billiard_step(system(disk, 0.5), PhasePoint(0.0, math.pi / 2))
        x_ref, l_ref = disk_oracle(0.0, math.pi / 2, 0.5)
        assert r.next.x == pytest.approx(x_ref, abs=1e-10)
        assert r.length == pytest.approx(l_ref, abs=1e-10)
        assert x_ref == pytest.approx(math.pi + math.atan(4 / 3), abs=1e-14)

    @pytest.mark.parametrize("beta", [0.2, 0.5, 0.9])
    def test_larmor_intersection_many(self, disk, beta):
        rng = np.random.default_rng(1)
        x = rng.uniform(0, 2 * math.pi, 40)
        phi = rng.uniform(0.05, math.pi - 0.05, 40)
        b = step_arrays(system(disk, beta), x, phi)
        assert b.ok.all()
        for i in range(40):
            x_ref, l_ref = disk_oracle(x[i], phi[i], beta)
            assert _circdist(b.x[i], x_ref, 2 * math.pi) < 1e-10
            assert b.length[i] == pytest.approx(l_ref, abs=1e-10)
            assert b.phi[i] == pytest.approx(phi[i], abs=1e-10)

    def test_period_two(self, disk):
        pts = orbit(system(disk, 0.0), PhasePoint(0.3, math.pi / 2), 2)
        assert pts[1][0].x == pytest.approx(0.3, abs=1e-10)

    def test_period_three(self, disk):
        pts = orbit(system(disk, 0.0), PhasePoint(0.3, math.pi / 3), 3)
        assert _circdist(pts[2][0].x, 0.3, 2 * math.pi) < 1e-10


def _circdist(a, b, P):
    d = (a - b) % P
    return min(d, P - d)


class TestGeneralTables:
    @pytest.mark.parametrize("label", ["plane-polar", "sphere-polar", "hyperbolic-polar", "sphere-0.6"])
    def test_chord_is_first_crossing(self, tables, label):
        t = tables(label)
        sys = system(t, 0.3 * t.k_min)
        rng = np.random.default_rng(2)
        x = rng.uniform(0, t.perimeter, 30)
        phi = rng.uniform(0.02, math.pi - 0.02, 30)
        b = step_arrays(sys, x, phi)
        assert b.ok.all()
        assert np.max(np.abs(inside_value_arrays(t, b.exit_point))) < 1e-10
        # the trajectory stays strictly inside before the exit
        g, T, N = t.frame_at(x)
        v = np.cos(phi)[:, None] * T + np.sin(phi)[:, None] * N
        for frac in np.linspace(0.02, 0.98, 25):
            q, _ = flow_arrays(t.K, sys.beta, g, v, frac * b.length)
            assert np.all(inside_value_arrays(t, q) > 0)

    @pytest.mark.parametrize("label", ["plane-polar", "hyperbolic-polar"])
    def test_reversibility_without_field(self, tables, label):
        sys = system(tables(label), 0.0)
        rng = np.random.default_rng(3)
        x = rng.uniform(0, sys.perimeter, 20)
        phi = rng.uniform(0.1, math.pi - 0.1, 20)
        b = step_arrays(sys, x, phi)
        back = step_arrays(sys, b.x, math.pi - b.phi)
        for i in range(20):
            assert _circdist(back.x[i], x[i], sys.perimeter) < 1e-9
        assert np.allclose(math.pi - back.phi, phi, atol=1e-9)

    def test_reflection_preserves_speed(self, tables):
        t = tables("sphere-polar")
        b = step_arrays(system(t, 0.1), [0.4, 1.1], [0.7, 2.0])
        f = t.surface.form
        assert np.allclose(f(b.entry_dir, b.entry_dir), 1.0, atol=1e-12)
        assert np.allclose(f(b.exit_dir, b.exit_dir), 1.0, atol=1e-12)

    @pytest.mark.parametrize("label", ["plane-polar", "sphere-polar", "hyperbolic-polar"])
    def test_symplectic_and_twist(self, tables, label):
        t = tables(label)
        sys = system(t, 0.3 * t.k_min)
        rng = np.random.default_rng(4)
        det, twist = area_form_determinants(
            sys, rng.uniform(0, t.perimeter, 50), rng.uniform(0.05, math.pi - 0.05, 50)
        )
        assert np.max(np.abs(det - 1)) < 1e-5
        assert np.min(twist) > 0


class TestJacobian:
    def test_disk_determinant(self, disk):
        J = map_jacobian(system(disk, 0.0), PhasePoint(1.0, math.pi / 2))
        assert abs(np.linalg.det(J) - 1) < 1e-5
        # in the unit disk x' = x + 2 phi
        assert J[0, 0] == pytest.approx(1.0, abs=1e-6)
        assert J[0, 1] == pytest.approx(2.0, abs=1e-6)

    def test_step_size_error(self, disk):
        with pytest.raises(StepSizeError):
            map_jacobian(system(disk, 0.0), PhasePoint(1.0, 1e-6))


class TestOrbits:
    @pytest.mark.parametrize("beta", [0.0, 0.5, 0.95])
    def test_circle_preserves_angle(self, disk, beta):
        pts = orbit(system(disk, beta), PhasePoint(0.0, 0.8), 200)
        assert max(abs(p.phi - 0.8) for p, _ in pts) < 1e-8

    def test_zero_steps(self, disk):
        assert orbit(system(disk, 0.2), PhasePoint(0.0, 1.0), 0) == []

    def test_chord_error_carries_index(self, disk, monkeypatch):
        monkeypatch.setattr(dynamics, "MAX_BRACKET_STEPS", 0)
        with pytest.raises(ChordSearchError) as info:
            orbit(system(disk, 0.0), PhasePoint(0.0, 1.0), 5)
        assert info.value.index == 0
        assert info.value.partial == []

    def test_step_arrays_flags_failures(self, disk, monkeypatch):
        monkeypatch.setattr(dynamics, "MAX_BRACKET_STEPS", 0)
        b = step_arrays(system(disk, 0.0), [0.0, 1.0], [1.0, 2.0])
        assert not b.ok.any() and np.isnan(b.x).all()
        assert all("bracket" in r for r in b.reason)

    def test_invalid_start(self, disk):
        with pytest.raises(ValueError):
            orbit(system(disk, 0.0), PhasePoint(0.0, math.pi), 1)

    def test_determinism(self, tables):
        t = tables("plane-polar")
        a = orbit(system(t, 0.3), PhasePoint(0.2, 1.1), 50)
        b = orbit(system(t, 0.3), PhasePoint(0.2, 1.1), 50)
        assert a == b


class TestSystem:
    def test_assumption_violated(self, disk):
        with pytest.raises(AssumptionError):
            system(disk, 1.0)

    def test_surface_mismatch(self, disk):
        with pytest.raises(ValueError):
            BilliardSystem(disk, MagneticContext(Surface(1), 0.0))


class TestPortrait:
    def test_circle_gives_horizontal_lines(self, disk):
        seeds = [PhasePoint(0.0, math.pi * (j + 0.5) / 6) for j in range(6)]
        pp = phase_portrait(system(disk, 0.4), seeds, 30)
        assert not pp.errors
        for s, samples in zip(seeds, pp.samples):
            assert samples.shape == (31, 2)
            assert np.allclose(samples[:, 1], math.cos(s.phi), atol=1e-9)

    def test_perturbed_runs(self, tables):
        t = tables("plane-polar")
        seeds = [PhasePoint(0.0, math.pi * (j + 0.5) / 4) for j in range(4)]
        pp = phase_portrait(system(t, 0.3), seeds, 20)
        assert not pp.errors and all(len(s) == 21 for s in pp.samples)

    def test_empty_grid(self, disk):
        pp = phase_portrait(system(disk, 0.0), [], 10)
        assert pp.samples == [] and pp.errors == {}
