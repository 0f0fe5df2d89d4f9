"""Deterministic sample points and residual check records.

All numeric verification in this package happens at Halton points scaled to
the chart domain: reproducible without RNG state, seedable through an index
offset, and overridable globally via the FPK_POINTS environment variable.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .expr import Point, evaluate

__all__ = [
    "default_point_count",
    "halton",
    "chart_points",
    "CheckRecord",
    "make_record",
    "max_abs_fields",
    "max_abs_blades",
]

DEFAULT_POINTS = 64
DEFAULT_TOL = 1e-9

_PRIMES = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
]


def default_point_count():
    raw = os.environ.get("FPK_POINTS", "")
    try:
        n = int(raw)
    except ValueError:
        return DEFAULT_POINTS
    return n if n > 0 else DEFAULT_POINTS


def halton(index, base):
    """Halton radical-inverse of `index` (1-based) in the given prime base."""
    f = 1.0
    r = 0.0
    i = index
    while i > 0:
        f /= base
        r += f * (i % base)
        i //= base
    return r


def chart_points(chart, count=None, offset=0):
    """Halton sequence scaled to the chart box; deterministic for fixed args."""
    if count is None:
        count = default_point_count()
    if chart.dim > len(_PRIMES):
        raise ValueError("chart dimension exceeds the prepared prime table")
    pts = []
    for k in range(count):
        u = [halton(offset + k + 1, _PRIMES[d]) for d in range(chart.dim)]
        vals = [lo + (hi - lo) * u[d] for d, (lo, hi) in enumerate(chart.domain)]
        pts.append(Point(chart, vals))
    return pts


@dataclass(frozen=True)
class CheckRecord:
    """Outcome of one residual check at the shared sample protocol."""

    name: str
    max_residual: float
    tolerance: float
    status: str = field(default="")
    witness: tuple | None = None
    detail: str = ""

    def __post_init__(self):
        if not self.status:
            status = "pass" if self.max_residual < self.tolerance else "fail"
            object.__setattr__(self, "status", status)
        if self.status == "pass" and self.witness is not None:
            object.__setattr__(self, "witness", None)

    @property
    def passed(self):
        return self.status == "pass"

    def as_dict(self):
        out = {
            "name": self.name,
            "status": self.status,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "witness_point": list(self.witness) if self.witness is not None else None,
        }
        if self.detail:
            out["detail"] = self.detail
        return out

    def __str__(self):
        mark = "ok " if self.passed else self.status
        return f"[{mark:>4}] {self.name}: max {self.max_residual:.3e} (tol {self.tolerance:.1e})"


def make_record(name, residual, tolerance=DEFAULT_TOL, witness=None, detail=""):
    return CheckRecord(name, residual, tolerance, witness=witness, detail=detail)


def max_abs_fields(fields, points):
    """Largest |value| over fields x points, with the attaining point."""
    worst = 0.0
    witness = None
    for f in fields:
        for p in points:
            v = abs(evaluate(f, p))
            if v > worst:
                worst = v
                witness = p.values
    return worst, witness


def max_abs_blades(blades, points):
    """Largest |component value| over tensors x points."""
    worst = 0.0
    witness = None
    for blade in blades:
        for f in blade.components.values():
            for p in points:
                v = abs(evaluate(f, p))
                if v > worst:
                    worst = v
                    witness = p.values
    return worst, witness
