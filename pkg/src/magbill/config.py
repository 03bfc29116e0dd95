"""JSON run configuration.

Example::

    {
      "schema": "magbill-config/1",
      "surface": "plane",
      "table": {"type": "polar", "c0": 1.0, "cos": [0.0, 0.1], "sin": []},
      "beta": 0.3,
      "quadrature": {"nx": 256, "nphi": 256},
      "tolerances": {"santalo": 1e-5},
      "output": "out"
    }

``table`` may also be ``{"type": "circle", "rho": 1.0}``.  ``cos[i]`` and
``sin[i]`` multiply ``cos((i+1) theta)`` and ``sin((i+1) theta)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import BilliardSystem
from .errors import ConfigError
from .surface import MagneticContext, Surface
from .table import PolarProfile, Table, build_table, standard_frame

SCHEMA = "magbill-config/1"

DEFAULT_TOLERANCES = {
    "gauss-bonnet": 1e-8,
    "santalo": 1e-5,
    "mirror": 1e-8,
    "beta-independence": 1e-8,
    "defect": 1e-5,
    "defect-stability": 1e-6,
    "symplectic": 1e-5,
}

_TOP_KEYS = {"schema", "surface", "table", "beta", "quadrature", "tolerances", "output", "resolution", "seed", "samples"}


@dataclass
class RunConfig:
    surface: str
    table: dict
    beta: float = 0.0
    nx: int = 256
    nphi: int = 256
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output: str = "."
    resolution: int = 1024
    seed: int = 0
    samples: int = 100

    def make_surface(self) -> Surface:
        return Surface.from_name(self.surface)

    def make_profile(self) -> PolarProfile:
        frame = standard_frame(self.make_surface())
        if self.table["type"] == "circle":
            return PolarProfile(frame, self.table["rho"])
        return PolarProfile(frame, self.table["c0"], self.table.get("cos", ()), self.table.get("sin", ()))

    def make_table(self) -> Table:
        return build_table(self.make_surface(), self.make_profile(), self.resolution)

    def make_system(self, table: Table | None = None) -> BilliardSystem:
        table = table if table is not None else self.make_table()
        return BilliardSystem(table, MagneticContext(table.surface, self.beta))


def _fail(path: str, msg: str):
    raise ConfigError(f"field '{path}': {msg}")


def _number(obj, key, path, positive=False, nonneg=False):
    if key not in obj:
        _fail(path, "missing")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        _fail(path, f"expected a finite number, got {v!r}")
    if positive and v <= 0:
        _fail(path, f"must be > 0, got {v!r}")
    if nonneg and v < 0:
        _fail(path, f"must be >= 0, got {v!r}")
    return float(v)


def _integer(obj, key, path, default, minimum):
    v = obj.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(path, f"expected an integer, got {v!r}")
    if v < minimum:
        _fail(path, f"must be >= {minimum}, got {v!r}")
    return v


def _coefficients(obj, key, path):
    v = obj.get(key, [])
    if not isinstance(v, list):
        _fail(path, f"expected a list of numbers, got {v!r}")
    for i, a in enumerate(v):
        if isinstance(a, bool) or not isinstance(a, (int, float)) or not math.isfinite(a):
            _fail(f"{path}[{i}]", f"expected a finite number, got {a!r}")
    return [float(a) for a in v]


def parse_config(data: dict) -> RunConfig:
    """Validate a decoded JSON object; raise :class:`ConfigError` naming the field."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = sorted(set(data) - _TOP_KEYS)
    if unknown:
        _fail(unknown[0], "unknown key")
    if data.get("schema") != SCHEMA:
        _fail("schema", f"expected {SCHEMA!r}, got {data.get('schema')!r}")
    surface = data.get("surface")
    if surface not in ("plane", "sphere", "hyperbolic"):
        _fail("surface", f"expected 'plane', 'sphere' or 'hyperbolic', got {surface!r}")

    t = data.get("table")
    if not isinstance(t, dict):
        _fail("table", "expected an object")
    kind = t.get("type")
    if kind == "circle":
        table = {"type": "circle", "rho": _number(t, "rho", "table.rho", positive=True)}
    elif kind == "polar":
        table = {
            "type": "polar",
            "c0": _number(t, "c0", "table.c0", positive=True),
            "cos": _coefficients(t, "cos", "table.cos"),
            "sin": _coefficients(t, "sin", "table.sin"),
        }
    else:
        _fail("table.type", f"expected 'circle' or 'polar', got {kind!r}")

    beta = _number(data, "beta", "beta", nonneg=True) if "beta" in data else 0.0
    q = data.get("quadrature", {})
    if not isinstance(q, dict):
        _fail("quadrature", "expected an object")
    nx = _integer(q, "nx", "quadrature.nx", 256, 32)
    nphi = _integer(q, "nphi", "quadrature.nphi", 256, 32)

    tol = dict(DEFAULT_TOLERANCES)
    given = data.get("tolerances", {})
    if not isinstance(given, dict):
        _fail("tolerances", "expected an object")
    for name in given:
        if name not in DEFAULT_TOLERANCES:
            _fail(f"tolerances.{name}", f"unknown check; expected one of {sorted(DEFAULT_TOLERANCES)}")
        tol[name] = _number(given, name, f"tolerances.{name}", positive=True)

    output = data.get("output", ".")
    if not isinstance(output, str):
        _fail("output", f"expected a path string, got {output!r}")

    return RunConfig(
        surface=surface,
        table=table,
        beta=beta,
        nx=nx,
        nphi=nphi,
        tolerances=tol,
        output=output,
        resolution=_integer(data, "resolution", "resolution", 1024, 256),
        seed=_integer(data, "seed", "seed", 0, 0),
        samples=_integer(data, "samples", "samples", 100, 1),
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return parse_config(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
