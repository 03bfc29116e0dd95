import math

import numpy as np
import pytest

from magbill.surface import Surface
from magbill.table import circle_table, polar_table

PLANE, SPHERE, HYPERBOLIC = Surface(0), Surface(1), Surface(-1)

# (label, surface, builder kwargs); "circle" entries use rho, others polar coefficients
TABLE_SPECS = {
    "plane-disk": (PLANE, {"rho": 1.0}),
    "plane-polar": (PLANE, {"c0": 1.0, "cos": (0.0, 0.1)}),
    "sphere-quarter": (SPHERE, {"rho": math.pi / 4}),
    "sphere-0.6": (SPHERE, {"rho": 0.6}),
    # 0.6 + 0.05 cos 3theta is not convex; see test_table for the rejection
    "sphere-polar": (SPHERE, {"c0": 0.6, "cos": (0.0, 0.0, 0.04)}),
    "hyperbolic-0.6": (HYPERBOLIC, {"rho": 0.6}),
    "hyperbolic-polar": (HYPERBOLIC, {"c0": 0.8, "cos": (0.0, 0.05)}),
}

_CACHE = {}


def get_table(label):
    if label not in _CACHE:
        surface, kw = TABLE_SPECS[label]
        if "rho" in kw:
            _CACHE[label] = circle_table(surface, kw["rho"])
        else:
            _CACHE[label] = polar_table(surface, kw["c0"], cos=kw.get("cos", ()), sin=kw.get("sin", ()))
    return _CACHE[label]


@pytest.fixture(scope="session")
def tables():
    return get_table


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def minkowski(a, b):
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2]


def random_states(K, n, rng, radius=1.5):
    """Unit tangent vectors built directly from the model equations."""
    if K == 1:
        p = rng.normal(size=(n, 3))
        p /= np.linalg.norm(p, axis=1, keepdims=True)
        u = rng.normal(size=(n, 3))
        v = u - np.sum(u * p, axis=1, keepdims=True) * p
        v /= np.linalg.norm(v, axis=1, keepdims=True)
    elif K == -1:
        r = rng.uniform(0, radius, n)
        a = rng.uniform(0, 2 * np.pi, n)
        p = np.stack([np.sinh(r) * np.cos(a), np.sinh(r) * np.sin(a), np.cosh(r)], axis=1)
        u = rng.normal(size=(n, 3))
        v = u + minkowski(u, p)[:, None] * p
        v /= np.sqrt(minkowski(v, v))[:, None]
    else:
        xy = rng.uniform(-radius, radius, (n, 2))
        p = np.column_stack([xy, np.ones(n)])
        a = rng.uniform(0, 2 * np.pi, n)
        v = np.stack([np.cos(a), np.sin(a), np.zeros(n)], axis=1)
    return p, v
