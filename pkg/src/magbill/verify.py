"""Checks run by ``magbill verify``; each returns a :class:`VerificationReport`."""

from __future__ import annotations

import math
import time

import numpy as np

from . import analysis
from .config import RunConfig
from .dynamics import BilliardSystem, area_form_determinants
from .errors import MagbillError
from .report import VerificationReport

CHECKS = ("gauss-bonnet", "santalo", "mirror", "beta-independence", "defect", "symplectic")

MIRROR_ANGLES = 64
SYMPLECTIC_EDGE = 1e-3


def _gauss_bonnet(cfg, sys, tol):
    t = sys.table
    return {
        "computed": {"K_times_A_plus_total_curvature": t.K * t.area + t.total_curvature},
        "reference": {"two_pi": 2 * math.pi},
        "residual": abs(t.gauss_bonnet_residual),
    }


def _santalo(cfg, sys, tol):
    quad = analysis.PhaseQuadrature(cfg.nx, cfg.nphi)
    lhs = analysis.santalo_integral(sys, quad)
    ref = 2 * math.pi * sys.table.area
    return {
        "computed": {"chord_integral": lhs},
        "reference": {"two_pi_area": ref},
        "residual": abs(lhs - ref) / ref,
    }


def _mirror(cfg, sys, tol):
    profile = sys.table.profile
    note = "" if profile.is_circle else f"table is not a circle; using the comparison circle rho={profile.c0:g}"
    phis = np.linspace(0.0, math.pi, MIRROR_ANGLES + 2)[1:-1]
    res = analysis.mirror_residuals_circle(sys.table.surface, profile.c0, sys.beta, phis, cfg.resolution)
    return {
        "computed": {"max_abs_residual": float(np.max(np.abs(res)))},
        "reference": {"residual": 0.0},
        "residual": float(np.max(np.abs(res))),
        "conclusion": note,
    }


def _sweep_betas(K, k, beta):
    betas = {0.0, beta, 0.5 * k, 0.9 * k}
    if K == -1 and k > 1:
        betas |= {0.5, 1.0}
    return sorted(b for b in betas if b < k)


def _beta_independence(cfg, sys, tol):
    K = sys.K
    ks = sorted({sys.table.k_min, sys.table.k_max})
    if K == -1:
        ks = [k for k in ks if k > 1]
    if not ks:
        return {
            "computed": {},
            "reference": {},
            "residual": 0.0,
            "conclusion": "no table curvature admits a comparison circle (k <= 1)",
        }
    computed, reference, residual = {}, {}, 0.0
    for k in ks:
        sweep = analysis.beta_independence_sweep(K, k, _sweep_betas(K, k, sys.beta), cfg.nphi)
        computed[f"k={k:.17g}"] = dict(zip((f"{b:.6g}" for b in sweep.betas), sweep.values))
        reference[f"k={k:.17g}"] = sweep.closed_form
        residual = max(residual, sweep.max_deviation, sweep.max_closed_form_deviation)
    return {"computed": computed, "reference": reference, "residual": residual}


def _defect(cfg, sys, tol):
    quad = analysis.PhaseQuadrature(cfg.nx, cfg.nphi)
    rep = analysis.rigidity_defect(sys, quad, tolerance=tol, stability=cfg.tolerances["defect-stability"])
    scale = rep.two_pi_area
    computed = {
        "santalo_lhs": rep.santalo_lhs,
        "gap_integral": rep.gap_integral,
        "rigidity_defect": rep.rigidity_defect,
        "isoperimetric_defect": rep.isoperimetric_defect,
        "uncertainty": rep.uncertainty,
    }
    out = {"computed": computed, "reference": {"two_pi_area": scale}, "conclusion": rep.verdict}
    if rep.verdict == analysis.HOROCYCLE_EXCLUDED:
        out["residual"] = 0.0
        out["conclusion"] += f" ({rep.details['reason']})"
    elif rep.verdict == analysis.UNRESOLVED:
        out["residual"] = rep.uncertainty / scale
        out["force_fail"] = True
    elif sys.table.profile.is_circle:
        out["residual"] = abs(rep.rigidity_defect) / scale
    else:
        # the argument gives H <= 0 for every convex table
        out["residual"] = max(rep.rigidity_defect, 0.0) / scale
    return out


def _symplectic(cfg, sys, tol):
    rng = np.random.default_rng(cfg.seed)
    x = rng.uniform(0.0, sys.perimeter, cfg.samples)
    # keep the finite-difference stencil well inside (0, pi)
    phi = rng.uniform(SYMPLECTIC_EDGE, math.pi - SYMPLECTIC_EDGE, cfg.samples)
    det, twist = area_form_determinants(sys, x, phi)
    out = {
        "computed": {"max_abs_det_minus_one": float(np.max(np.abs(det - 1))), "min_twist": float(np.min(twist))},
        "reference": {"det": 1.0, "twist": "> 0"},
        "residual": float(np.max(np.abs(det - 1))),
    }
    if np.min(twist) <= 0:
        out["force_fail"] = True
        out["conclusion"] = "twist condition violated"
    return out


_RUNNERS = {
    "gauss-bonnet": _gauss_bonnet,
    "santalo": _santalo,
    "mirror": _mirror,
    "beta-independence": _beta_independence,
    "defect": _defect,
    "symplectic": _symplectic,
}


def run_check(name: str, cfg: RunConfig, sys: BilliardSystem) -> VerificationReport:
    tol = cfg.tolerances[name]
    inputs = {
        "surface": cfg.surface,
        "table": cfg.table,
        "beta": cfg.beta,
        "nx": cfg.nx,
        "nphi": cfg.nphi,
    }
    start = time.perf_counter()
    try:
        r = _RUNNERS[name](cfg, sys, tol)
    except MagbillError as exc:
        return VerificationReport(
            name, inputs, {}, {}, math.inf, tol, "fail",
            wall_time=time.perf_counter() - start, diagnostic=f"{type(exc).__name__}: {exc}",
        )
    ok = r["residual"] <= tol and not r.get("force_fail", False)
    return VerificationReport(
        check_name=name,
        inputs=inputs,
        computed=r["computed"],
        reference=r["reference"],
        residual=float(r["residual"]),
        tolerance=tol,
        verdict="pass" if ok else "fail",
        conclusion=r.get("conclusion", ""),
        wall_time=time.perf_counter() - start,
    )


def run_checks(cfg: RunConfig, sys: BilliardSystem, which=CHECKS) -> list[VerificationReport]:
    return [run_check(name, cfg, sys) for name in which]
