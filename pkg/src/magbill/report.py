"""Verification reports and the flat-file writers (CSV, SVG, JSON)."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass


@dataclass
class VerificationReport:
    check_name: str
    inputs: dict
    computed: dict
    reference: dict
    residual: float
    tolerance: float
    verdict: str
    conclusion: str = ""
    wall_time: float = 0.0
    diagnostic: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def line(self) -> str:
        text = f"[{self.verdict.upper()}] {self.check_name}: residual={self.residual:.3e} tol={self.tolerance:.1e}"
        if self.conclusion:
            text += f" -- {self.conclusion}"
        if self.diagnostic:
            text += f" ({self.diagnostic})"
        return text

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        return cls(**d)


def reports_to_json(reports, config: dict | None = None) -> str:
    # non-finite values use the NaN/Infinity tokens of the json module
    doc = {
        "schema": "magbill-report/1",
        "config": config or {},
        "all_passed": all(r.passed for r in reports),
        "reports": [r.to_dict() for r in reports],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def reports_from_json(text: str) -> list[VerificationReport]:
    return [VerificationReport.from_dict(d) for d in json.loads(text)["reports"]]


def fmt(v) -> str:
    """17 significant digits: lossless for doubles."""
    return format(float(v), ".17g")


def orbit_csv(rows, error: tuple | None = None) -> str:
    """Rows are ``(step, x, phi, l)``; an optional ``(step, message)`` error row ends the file."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "x", "phi", "cos_phi", "l"])
    for step, x, phi, l in rows:
        w.writerow([step, fmt(x), fmt(phi), fmt(math.cos(phi)), fmt(l)])
    if error is not None:
        w.writerow([error[0], "error", error[1], "", ""])
    return buf.getvalue()


def portrait_csv(samples) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed_id", "x", "cos_phi"])
    for sid, pts in enumerate(samples):
        for x, c in pts:
            w.writerow([sid, fmt(x), fmt(c)])
    return buf.getvalue()


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"]


def portrait_svg(samples, perimeter: float, width: int = 800, height: int = 400, pad: int = 20) -> str:
    """Scatter of ``(x, cos phi)``, one group of points per seed."""
    sx = (width - 2 * pad) / perimeter
    sy = (height - 2 * pad) / 2.0
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
        'fill="white" stroke="black" stroke-width="1"/>',
    ]
    for sid, pts in enumerate(samples):
        color = _PALETTE[sid % len(_PALETTE)]
        out.append(f'<g id="seed-{sid}" fill="{color}">')
        for x, c in pts:
            out.append(f'<circle cx="{pad + sx * x:.3f}" cy="{pad + sy * (1.0 - c):.3f}" r="1"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
