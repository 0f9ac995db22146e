"""Structured pass/fail reports shared by the verifier operations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class CheckReport:
    """Outcome of one verifier check.

    ``worst_margin`` is the smallest slack observed (negative means violated);
    ``witness`` records (value, lhs, rhs) at the worst point when available.
    A check passes iff the worst margin clears ``-tolerance``.
    """

    name: str
    passed: bool
    worst_margin: float
    witness: tuple[float, float, float] | None = None
    grid_size: int = 0
    tolerance: float = 0.0
    skipped: bool = False
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "passed": bool(self.passed),
            "worst_margin": None if math.isnan(self.worst_margin) else float(self.worst_margin),
            "witness": list(self.witness) if self.witness is not None else None,
            "grid_size": int(self.grid_size),
            "tolerance": float(self.tolerance),
            "skipped": bool(self.skipped),
            "details": self.details,
        }
        return out


def from_margins(name, margins, grid, lhs, rhs, tolerance=1e-12, details=None) -> CheckReport:
    """Build a report from pointwise margins (lhs - rhs, >= -tolerance passes)."""
    import numpy as np

    margins = np.asarray(margins, dtype=float)
    i = int(np.argmin(margins))
    worst = float(margins[i])
    return CheckReport(
        name=name,
        passed=bool(worst >= -tolerance),
        worst_margin=worst,
        witness=(float(np.asarray(grid)[i]), float(np.asarray(lhs)[i]), float(np.asarray(rhs)[i])),
        grid_size=int(margins.size),
        tolerance=float(tolerance),
        details=details or {},
    )
