"""
AOA localisation from LED pointing directions.

Each selected LED defines a line through its location along its axis. The
receiver estimate is the point minimising the (optionally RSS-weighted) sum
of squared distances to those lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from .channel import Observation
from .exceptions import DomainError, InsufficientAnchorsError, NoAnchorsError, NoContourError
from .geometry import Scene, as_vec3
from .linalg import pinv_with_rank
from .results import EstimationResult


def projection_matrix(n) -> np.ndarray:
    """``I - n n^T``: projector onto the plane orthogonal to unit vector ``n``."""
    n = as_vec3(n, "n")
    if abs(np.linalg.norm(n) - 1.0) > 1e-9:
        raise DomainError(f"projection direction must be a unit vector, got norm {np.linalg.norm(n)}")
    return np.eye(3) - np.outer(n, n)


@dataclass(frozen=True)
class DirectionLine:
    origin: np.ndarray
    direction: np.ndarray

    @property
    def projector(self) -> np.ndarray:
        return projection_matrix(self.direction)

    @property
    def intersection(self) -> np.ndarray:
        # foot of the line in the plane through the origin orthogonal to it
        return self.projector @ self.origin

    def distance(self, point) -> float:
        return float(np.linalg.norm(self.intersection - self.projector @ np.asarray(point, float)))


@dataclass(frozen=True)
class AoaProblem:
    lines: Tuple[DirectionLine, ...]
    weights: Tuple[float, ...]

    def __post_init__(self):
        if len(self.lines) != len(self.weights):
            raise ValueError("one weight per line required")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be non-negative")


def select_leds(obs: Observation, scene: Scene) -> Dict[int, int]:
    """Strongest observed LED per VAP, ``{vap_index: led_index}``.

    Ties go to the lowest LED index; VAPs whose best reading is <= 0 are dropped.
    """
    obs.check_scene(scene)
    chosen = {}
    for k, row in enumerate(obs.by_vap()):
        m = int(np.argmax(row))  # first maximum wins ties
        if row[m] > 0.0:
            chosen[k] = m
    if not chosen:
        raise NoAnchorsError("no VAP has a positive RSS observation")
    return chosen


def build_problem(obs: Observation, scene: Scene, selection: Dict[int, int] = None) -> AoaProblem:
    """Direction lines of the selected LEDs weighted by their observed RSS."""
    if selection is None:
        selection = select_leds(obs, scene)
    lines, weights = [], []
    for k, m in selection.items():
        led = scene.vaps[k][m]
        lines.append(DirectionLine(led.location, led.orientation))
        weights.append(float(obs.s[scene.flat_index(m, k)]))
    return AoaProblem(tuple(lines), tuple(weights))


def aoa_solve(problem: AoaProblem, weighted: bool = False) -> EstimationResult:
    """Least-squares intersection of the problem's lines.

    Unweighted: pseudoinverse of the stacked ``3G x 3`` projector system.
    Weighted: pseudoinverse of ``sum(beta A) theta = sum(beta b)``. A rank
    below 3 yields the minimum-norm solution with ``degenerate`` set.
    """
    if len(problem.lines) < 2:
        raise InsufficientAnchorsError(f"need >= 2 direction lines, got {len(problem.lines)}")
    projectors = np.array([ln.projector for ln in problem.lines])
    feet = np.einsum("gij,gj->gi", projectors, np.array([ln.origin for ln in problem.lines]))

    if weighted:
        beta = np.asarray(problem.weights, dtype=float)
        if np.count_nonzero(beta > 0) < 2:
            raise InsufficientAnchorsError("weighted solve needs two strictly positive weights")
        a = np.einsum("g,gij->ij", beta, projectors)
        b = beta @ feet
        label = "weighted-aoa"
    else:
        a = projectors.reshape(-1, 3)
        b = feet.reshape(-1)
        label = "aoa"

    a_pinv, rank = pinv_with_rank(a)
    theta = a_pinv @ b
    # report the geometric (unweighted) residual for both variants
    resid = np.linalg.norm(
        feet - np.einsum("gij,j->gi", projectors, theta), axis=1)
    return EstimationResult(
        estimate=theta,
        residual_norm=float(np.sqrt(np.sum(resid ** 2))),
        iterations=0,
        converged=True,
        degenerate=rank < 3,
        init_point=None,
        init_label=label,
        rank=rank,
    )


def aoa_localize(obs: Observation, scene: Scene, weighted: bool = True) -> EstimationResult:
    """Select anchors from ``obs`` and solve."""
    return aoa_solve(build_problem(obs, scene), weighted=weighted)


# -- iso-RSS contour of a single LED (LED at origin facing +z, receiver facing it)

@dataclass(frozen=True)
class ContourParams:
    mode: float
    area: float
    p0: float

    @property
    def b(self) -> float:
        return (2 * self.mode + 6) / (2 * self.mode + 2)

    @property
    def gain(self) -> float:
        """``(n+1) A / (2 pi P0)``; the contour obeys ``(r^2+z^2)^((n+3)/2) = gain * z^(n+1)``."""
        return (self.mode + 1) * self.area / (2 * math.pi * self.p0)

    @property
    def axis_crossing(self) -> float:
        """Height at which the contour meets the LED axis."""
        return math.sqrt(self.gain)


def _radius_sq(z: float, p: ContourParams) -> float:
    n = p.mode
    return (p.gain * z ** (n + 1)) ** (2.0 / (n + 3)) - z * z


def contour_radius(z: float, p: ContourParams) -> float:
    """Distance from the LED axis of the contour point at height ``z``."""
    if not z > 0:
        raise NoContourError(f"contour height must be positive, got {z}")
    r2 = _radius_sq(z, p)
    if r2 < 0:
        if r2 > -1e-12 * z * z:
            return 0.0
        raise NoContourError(f"height {z} is not on the contour")
    return math.sqrt(r2)


def golden_section_max(fun, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200):
    """Maximise a unimodal ``fun`` on ``[lo, hi]``; returns ``(x, fun(x))``."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fun(d)
    x = (a + b) / 2.0
    return x, fun(x)


def max_contour_radius(p: ContourParams) -> Tuple[float, float]:
    """Widest point of the contour, ``(d_max, z_at_max)``."""
    top = p.axis_crossing
    if not (top > 0 and math.isfinite(top)):
        raise NoContourError("contour is empty")
    z, r2 = golden_section_max(lambda z: _radius_sq(z, p), 0.0, top)
    return math.sqrt(max(r2, 0.0)), z
