from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np


@dataclass
class EstimationResult:
    """Outcome of one localisation run.

    ``trace`` holds the iterates (including the start) for iterative solvers;
    ``rank`` is the rank of the last operator inverted. ``signal_detected`` is
    False when the fit is indistinguishable from noise; such results are also
    marked ``degenerate``.
    """

    estimate: np.ndarray
    residual_norm: float
    iterations: int = 0
    converged: bool = True
    degenerate: bool = False
    init_point: Optional[np.ndarray] = None
    init_label: str = ""
    rank: int = 3
    signal_detected: bool = True
    trace: List[np.ndarray] = field(default_factory=list)

    def error(self, truth) -> float:
        return float(np.linalg.norm(self.estimate - np.asarray(truth, dtype=float)))

    def to_dict(self) -> dict:
        return {
            "estimate": [float(x) for x in self.estimate],
            "residual_norm": float(self.residual_norm),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "degenerate": bool(self.degenerate),
            "init_point": None if self.init_point is None else [float(x) for x in self.init_point],
            "init_label": self.init_label,
            "rank": int(self.rank),
            "signal_detected": bool(self.signal_detected),
        }
