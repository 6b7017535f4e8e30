"""
Maximum-likelihood RSS localisation.

The observation model is ``s = p(theta) + noise`` with white Gaussian noise, so
the ML estimate minimises ``||s - p(theta)||^2``. It is found with a damped
Gauss-Newton iteration driven by an analytical Jacobian, started from the
weighted-AOA estimate and/or the centroids of the random report and cluster
(RRC) search.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .channel import Observation, gates, rss_vector
from .exceptions import ConfigError, DomainError, SingularityError
from .geometry import Scene, as_vec3
from .linalg import pinv_with_rank
from .results import EstimationResult

logger = logging.getLogger(__name__)

# chi-square(3 dof) upper 1e-4 quantile
DETECTION_THRESHOLD = 21.107513466160444


@dataclass(frozen=True)
class SolverConfig:
    step_size: float = 0.2
    max_iters: int = 200
    step_tol: float = 1e-6
    residual_tol: float = 1e-15
    max_halvings: int = 10

    def __post_init__(self):
        if not 0.0 < self.step_size <= 1.0:
            raise ConfigError(f"step size must lie in (0, 1], got {self.step_size}")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if not (self.step_tol > 0 and self.residual_tol > 0):
            raise ConfigError("tolerances must be positive")


@dataclass(frozen=True)
class RrcConfig:
    samples: int = 500
    keep: int = 100
    clusters: int = 4
    kmeans_iters: int = 25
    seed: object = 0

    def __post_init__(self):
        if not 0 < self.keep <= self.samples:
            raise ConfigError(f"need 0 < keep <= samples, got keep={self.keep}, samples={self.samples}")
        if not 0 <= self.clusters <= self.keep:
            raise ConfigError(f"need 0 <= clusters <= keep, got {self.clusters}")
        if self.kmeans_iters < 1:
            raise ConfigError("kmeans_iters must be >= 1")


def nls_objective(candidate, obs: Observation, scene: Scene):
    """``||s - p(candidate)||^2``; ``candidate`` may be an ``(N, 3)`` batch."""
    obs.check_scene(scene)
    r = obs.s - rss_vector(scene, candidate)
    return np.sum(r * r, axis=-1)


def aux_function(x, a, b, k, l, m, n):
    """``(a x + k)^n (b x + l) / (x^2 + m)^((n+3)/2)``: one incidence component varied,
    the rest frozen into ``k``, ``l`` and ``m``."""
    return (a * x + k) ** n * (b * x + l) / (x * x + m) ** ((n + 3) / 2.0)


def aux_derivative_g(x, a, b, k, l, m, n):
    """Closed-form ``d/dx`` of :func:`aux_function`.

    Works elementwise on arrays. ``x^2 + m`` is a squared distance: raises
    :class:`SingularityError` where it vanishes and :class:`DomainError` where
    it is negative.
    """
    x = np.asarray(x, dtype=float)
    denom = x * x + m
    if np.any(denom == 0):
        raise SingularityError("x^2 + m vanishes")
    if np.any(denom < 0):
        raise DomainError("x^2 + m must be positive")
    c0 = k * b * m + l * a * m * n
    c1 = b * m * n * a + b * m * a - l * k * (n + 3)
    c2 = -(k * b * (n + 2) + 3 * l * a)
    c3 = -2 * a * b
    poly = ((c3 * x + c2) * x + c1) * x + c0
    with np.errstate(invalid="ignore", divide="ignore"):
        # ((ax+k)/d)^(n-1) poly / d^6 with d = sqrt(x^2+m): same value, no overflow for large d
        d = np.sqrt(denom)
        out = ((a * x + k) / d) ** (n - 1) * poly / denom ** 3
    return out[()] if out.ndim == 0 else out


def _jacobian_batch(points: np.ndarray, scene: Scene) -> np.ndarray:
    # points (..., 3) -> (..., L, 3)
    led_loc = scene.led_locations
    led_dir = scene.led_orientations
    modes = scene.led_modes
    rx = scene.receiver
    v = points[..., None, :] - led_loc
    if np.any(np.all(v == 0.0, axis=-1)):
        raise DomainError("candidate location coincides with an LED")
    gate = gates(v, led_dir, rx.orientation, np.cos(rx.fov))
    dot_led = np.sum(v * led_dir, axis=-1)
    dot_rx = v @ rx.orientation
    sq = np.sum(v * v, axis=-1)
    scale = -(modes + 1.0) * rx.area / (2.0 * np.pi)
    cols = []
    for j in range(3):
        x = v[..., j]
        a = led_dir[:, j]
        b = rx.orientation[j]
        k = np.where(gate, dot_led - a * x, 0.0)
        kk = np.where(gate, k, 1.0)
        xx = np.where(gate, x, 0.0)
        g = aux_derivative_g(xx, np.where(gate, a, 0.0), b, kk,
                             dot_rx - b * x, np.where(gate, sq - x * x, 1.0), modes)
        cols.append(np.where(gate, scale * g, 0.0))
    return np.stack(cols, axis=-1)


def jacobian(candidate, scene: Scene) -> np.ndarray:
    """Analytical ``(K*M) x 3`` Jacobian of the RSS vector at ``candidate``.

    Rows for gated-off LEDs are zero.
    """
    return _jacobian_batch(as_vec3(candidate, "candidate"), scene)


def gauss_newton(obs: Observation, scene: Scene, init, cfg: SolverConfig = SolverConfig(),
                 label: str = "") -> EstimationResult:
    """Damped Gauss-Newton: ``theta += eta * pinv(H) (s - p(theta))``.

    A step that raises the residual is retried with halved ``eta`` up to
    ``cfg.max_halvings`` times and dropped if it still does not help, which
    ends the run.
    """
    obs.check_scene(scene)
    theta = as_vec3(init, "init").copy()
    p = rss_vector(scene, theta)
    r = obs.s - p
    rnorm = float(np.linalg.norm(r))
    trace = [theta.copy()]
    degenerate = False
    converged = False
    rank = 3
    it = 0
    while it < cfg.max_iters:
        it += 1
        h = jacobian(theta, scene)
        if not np.all(np.isfinite(h)):
            degenerate = True
            break
        h_pinv, rank = pinv_with_rank(h)
        if rank < 3:
            degenerate = True
        direction = h_pinv @ r
        eta = cfg.step_size
        accepted = False
        for _ in range(cfg.max_halvings + 1):
            step = eta * direction
            cand = theta + step
            try:
                r_new = obs.s - rss_vector(scene, cand)
            except DomainError:
                eta *= 0.5
                continue
            rnorm_new = float(np.linalg.norm(r_new))
            if rnorm_new <= rnorm:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            converged = True
            break
        theta, r = cand, r_new
        change = rnorm - rnorm_new
        rnorm = rnorm_new
        trace.append(theta.copy())
        if np.linalg.norm(step) < cfg.step_tol or change < cfg.residual_tol:
            converged = True
            break
    return EstimationResult(
        estimate=theta,
        residual_norm=rnorm,
        iterations=it,
        converged=converged,
        degenerate=degenerate,
        init_point=np.asarray(init, dtype=float).copy(),
        init_label=label,
        rank=rank,
        trace=trace,
    )


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=-1)


def kmeans(points, n_clusters: int, n_iter: int = 25, seed=0, return_inertia: bool = False):
    """Lloyd's algorithm with centroids seeded from distinct random points.

    Empty clusters are re-seeded at the point farthest from its own centroid.
    With ``return_inertia`` the within-cluster sum of squares after every
    update is returned as well.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ConfigError("points must be a 2-D array")
    if not 1 <= n_clusters <= len(pts):
        raise ConfigError(f"need 1 <= n_clusters <= {len(pts)}, got {n_clusters}")
    rng = np.random.default_rng(seed)
    centroids = pts[rng.choice(len(pts), size=n_clusters, replace=False)].copy()
    labels = None
    inertia = []
    for _ in range(n_iter):
        d2 = _sq_dists(pts, centroids)
        new_labels = np.argmin(d2, axis=1)
        own = d2[np.arange(len(pts)), new_labels]
        for c in range(n_clusters):
            if not np.any(new_labels == c):
                far = int(np.argmax(own))
                centroids[c] = pts[far]
                new_labels[far] = c
                own[far] = -1.0
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
        for c in range(n_clusters):
            centroids[c] = pts[labels == c].mean(axis=0)
        inertia.append(float(np.sum((pts - centroids[labels]) ** 2)))
    if return_inertia:
        return centroids, inertia
    return centroids


def rrc_init(obs: Observation, scene: Scene, cfg: RrcConfig = RrcConfig()) -> List[np.ndarray]:
    """Random report and cluster: score uniform room samples by the NLS objective,
    keep the best ``cfg.keep`` and return their ``cfg.clusters`` k-means centroids."""
    if cfg.clusters == 0:
        return []
    rng = np.random.default_rng(cfg.seed)
    samples = rng.uniform(0.0, 1.0, size=(cfg.samples, 3)) * np.asarray(scene.room)
    scores = nls_objective(samples, obs, scene)
    best = samples[np.argsort(scores, kind="stable")[: cfg.keep]]
    centroids = kmeans(best, cfg.clusters, cfg.kmeans_iters, seed=rng)
    return [c for c in centroids]


def rss_localize(obs: Observation, scene: Scene, solver_cfg: SolverConfig = SolverConfig(),
                 rrc_cfg: Optional[RrcConfig] = RrcConfig(), aoa_seed=None) -> EstimationResult:
    """Multi-start Gauss-Newton; the start ending at the smallest NLS objective wins."""
    starts: List[Tuple[str, np.ndarray]] = []
    if aoa_seed is not None:
        starts.append(("weighted-aoa", as_vec3(aoa_seed, "aoa_seed")))
    if rrc_cfg is not None:
        for i, c in enumerate(rrc_init(obs, scene, rrc_cfg)):
            starts.append((f"rrc-centroid-{i}", c))
    if not starts:
        raise ConfigError("no initial points: give an AOA seed or enable RRC clusters")
    result = best_of(obs, scene, starts, solver_cfg)
    if not signal_detected(obs, result):
        result.signal_detected = False
        result.degenerate = True
    return result


def signal_detected(obs: Observation, result: EstimationResult,
                    threshold: float = DETECTION_THRESHOLD) -> bool:
    """Whether the fitted model explains significantly more than the all-dark
    hypothesis ``p = 0``.

    The statistic is ``(||s||^2 - ||s - p(theta_hat)||^2) / sigma^2``. With
    ``sigma^2 = 0`` any non-zero observation counts as detected.
    """
    energy = float(obs.s @ obs.s)
    if obs.noise_variance == 0:
        return energy > 0
    return (energy - result.residual_norm ** 2) / obs.noise_variance > threshold


def best_of(obs: Observation, scene: Scene, starts: Sequence[Tuple[str, np.ndarray]],
            solver_cfg: SolverConfig = SolverConfig()) -> EstimationResult:
    results = []
    for label, init in starts:
        try:
            results.append(gauss_newton(obs, scene, init, solver_cfg, label=label))
        except DomainError as exc:
            logger.debug("start %s skipped: %s", label, exc)
    if not results:
        raise DomainError("every initial point coincides with an LED")
    return min(results, key=lambda res: (res.residual_norm, res.init_label))
