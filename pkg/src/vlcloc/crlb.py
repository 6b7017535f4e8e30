"""Fisher information and Cramer-Rao bound for RSS localisation, and room coverage."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Sequence

import numpy as np

from .exceptions import ConfigError
from .geometry import Scene, as_vec3, grid_points
from .rss import _jacobian_batch

SINGULAR_RTOL = 1e-12
DEFAULT_THRESHOLDS = (0.01, 0.04, 0.07, 0.125, 0.25)


@dataclass(frozen=True)
class FimResult:
    J: np.ndarray
    condition: float
    singular: bool


def _check_variance(noise_variance: float) -> None:
    if not noise_variance > 0:
        raise ConfigError(f"noise variance must be positive, got {noise_variance}")


def fim(candidate, scene: Scene, noise_variance: float) -> FimResult:
    """``J = H^T H / sigma^2`` from the analytical Jacobian."""
    _check_variance(noise_variance)
    h = _jacobian_batch(as_vec3(candidate, "candidate"), scene)
    J = h.T @ h / noise_variance
    eig = np.linalg.eigvalsh(J)
    singular = bool(eig[-1] <= 0 or eig[0] < SINGULAR_RTOL * eig[-1])
    condition = np.inf if singular else float(eig[-1] / eig[0])
    return FimResult(J, condition, singular)


def _crlb_from_fims(J: np.ndarray) -> np.ndarray:
    eig = np.linalg.eigvalsh(J)
    lo, hi = eig[..., 0], eig[..., -1]
    singular = (hi <= 0) | (lo < SINGULAR_RTOL * hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sqrt(np.sum(1.0 / eig, axis=-1))
    return np.where(singular, np.inf, out)


def crlb_rmse(candidate, scene: Scene, noise_variance: float) -> float:
    """``sqrt(tr(J^-1))`` in metres, or ``inf`` when the FIM is singular."""
    res = fim(candidate, scene, noise_variance)
    if res.singular:
        return float("inf")
    return float(_crlb_from_fims(res.J))


def crlb_batch(points, scene: Scene, noise_variance: float) -> np.ndarray:
    """Vectorised :func:`crlb_rmse` over an ``(N, 3)`` array of positions."""
    _check_variance(noise_variance)
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    h = _jacobian_batch(pts, scene)
    J = np.einsum("nli,nlj->nij", h, h) / noise_variance
    return _crlb_from_fims(J)


@dataclass
class CoverageReport:
    spacing: float
    room: tuple
    points: np.ndarray
    crlb: np.ndarray
    probabilities: Dict[float, float]

    def rows(self):
        for p, c in zip(self.points, self.crlb):
            yield (p[0], p[1], p[2], c)


def coverage_map(scene: Scene, spacing: float = 0.1,
                 thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
                 noise_variance: float = 1e-13) -> CoverageReport:
    """CRLB on a cell-centred grid over the room and the fraction of grid
    points whose bound is ``<=`` each threshold. Unbounded points only count
    towards an infinite threshold."""
    pts = grid_points(scene.room, spacing)
    bound = crlb_batch(pts, scene, noise_variance)
    probs = {}
    for t in thresholds:
        probs[float(t)] = float(np.mean(bound <= t))
    return CoverageReport(spacing, scene.room, pts, bound, probs)
