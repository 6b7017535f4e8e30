"""
Monte Carlo experiments: path RMSE sweeps, RRC convergence, coverage sweeps.

Every random draw is seeded from ``(master_seed, trial, position, stream)``
through :class:`numpy.random.SeedSequence`, so results do not depend on the
order in which trials run.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import replace
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

import numpy as np

from .aoa import aoa_solve, build_problem, select_leds
from .channel import Observation, observe
from .config import ExperimentConfig
from .crlb import coverage_map, crlb_rmse
from .exceptions import (ConfigError, InputError, InsufficientAnchorsError,
                         NoAnchorsError)
from .geometry import Scene, build_room_scene
from .rss import best_of, gauss_newton, rrc_init, rss_localize, signal_detected

logger = logging.getLogger(__name__)

OBS_STREAM, RRC_STREAM = 0, 1
AXES = {"x": 0, "y": 1, "z": 2}

PATH_COLUMNS = [
    "x", "y", "z", "rmse_aoa", "rmse_weighted_aoa", "rmse_rss_aoa", "rmse_rss_rrc", "crlb",
    "aoa_failures", "rss_rrc_flagged",
]


def derive_seed(master: int, trial: int, position: int, stream: int = OBS_STREAM) -> int:
    """Independent 64-bit seed for one (trial, position, stream) cell."""
    ss = np.random.SeedSequence([int(master), int(trial), int(position), int(stream)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def fmt(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return "%.17g" % float(value)


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_json(path, payload) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _rmse(sq_errors: List[float]) -> float:
    return math.sqrt(sum(sq_errors) / len(sq_errors)) if sq_errors else float("nan")


def path_positions(cfg: ExperimentConfig, scene: Scene) -> np.ndarray:
    sweep = cfg.sweep_spec()
    if sweep.axis not in AXES:
        raise ConfigError(f"sweep axis must be one of x/y/z, got {sweep.axis!r}")
    fixed = cfg.fixed_coordinates()
    missing = set(AXES) - set(fixed) - {sweep.axis}
    if missing:
        raise ConfigError(f"path needs fixed coordinates for {sorted(missing)}")
    out = []
    for value in sweep.values():
        pos = np.zeros(3)
        for name, idx in AXES.items():
            pos[idx] = value if name == sweep.axis else fixed[name]
        if not scene.contains(pos):
            raise ConfigError(f"sweep position {pos} leaves the room {scene.room}")
        out.append(pos)
    return np.array(out)


def run_trial(scene: Scene, cfg: ExperimentConfig, trial: int, position: int) -> Dict[str, object]:
    """All four estimators on one seeded observation; ``None`` marks a failure."""
    obs = observe(scene, cfg.noise_variance, derive_seed(cfg.seed, trial, position, OBS_STREAM))
    rrc_cfg = replace(cfg.rrc, seed=derive_seed(cfg.seed, trial, position, RRC_STREAM))
    out: Dict[str, object] = {"aoa": None, "weighted_aoa": None, "rss_aoa": None, "rss_rrc": None}
    try:
        problem = build_problem(obs, scene, select_leds(obs, scene))
        out["aoa"] = aoa_solve(problem, weighted=False)
        out["weighted_aoa"] = aoa_solve(problem, weighted=True)
    except (NoAnchorsError, InsufficientAnchorsError) as exc:
        logger.debug("trial %d/%d: AOA unavailable (%s)", trial, position, exc)
    seed_pt = out["weighted_aoa"].estimate if out["weighted_aoa"] is not None else None
    if seed_pt is not None:
        out["rss_aoa"] = rss_localize(obs, scene, cfg.solver, None, seed_pt)
    if seed_pt is not None or rrc_cfg.clusters > 0:
        out["rss_rrc"] = rss_localize(obs, scene, cfg.solver, rrc_cfg, seed_pt)
    return out


def run_path_experiment(cfg: ExperimentConfig) -> List[list]:
    """One row per sweep position: RMSE of the four estimators and the CRLB."""
    if cfg.kind not in ("path1", "path2"):
        raise ConfigError(f"path experiment needs kind path1/path2, got {cfg.kind}")
    base = build_room_scene(cfg.scenario)
    rows = []
    for pos_idx, pos in enumerate(path_positions(cfg, base)):
        scene = base.with_receiver_at(pos)
        errs = {"aoa": [], "weighted_aoa": [], "rss_aoa": [], "rss_rrc": []}
        aoa_fail = 0
        flagged = 0
        for t in range(cfg.trials):
            res = run_trial(scene, cfg, t, pos_idx)
            if res["aoa"] is None:
                aoa_fail += 1
            for key, r in res.items():
                if r is not None:
                    errs[key].append(r.error(pos) ** 2)
            rr = res["rss_rrc"]
            if rr is None or rr.degenerate or not rr.converged:
                flagged += 1
        bound = crlb_rmse(pos, scene, cfg.noise_variance) if cfg.noise_variance > 0 else 0.0
        rows.append([
            pos[0], pos[1], pos[2],
            _rmse(errs["aoa"]), _rmse(errs["weighted_aoa"]),
            _rmse(errs["rss_aoa"]), _rmse(errs["rss_rrc"]), bound,
            aoa_fail, flagged / cfg.trials,
        ])
        logger.info("position %s done", pos)
    return rows


def run_convergence_experiment(cfg: ExperimentConfig) -> List[list]:
    """Fraction of noiseless runs converging to the receiver, per RRC cluster count.

    The weighted-AOA start is always included. Trial ``t`` uses the same RRC
    samples for every cluster count.
    """
    location = cfg.receiver_location if cfg.receiver_location is not None else (0.0, 0.0, 0.0)
    scene = build_room_scene(cfg.scenario, location)
    obs = observe(scene, 0.0, derive_seed(cfg.seed, 0, 0, OBS_STREAM))
    truth = scene.receiver.location
    try:
        seed_pt = aoa_solve(build_problem(obs, scene), weighted=True).estimate
        aoa_result = gauss_newton(obs, scene, seed_pt, cfg.solver, label="weighted-aoa")
    except (NoAnchorsError, InsufficientAnchorsError):
        aoa_result = None
    rows = []
    for n_clusters in cfg.clusters:
        hits = 0
        for t in range(cfg.trials):
            candidates = [aoa_result] if aoa_result is not None else []
            if n_clusters > 0:
                rrc_cfg = replace(cfg.rrc, clusters=n_clusters,
                                  seed=derive_seed(cfg.seed, t, 0, RRC_STREAM))
                starts = [(f"rrc-centroid-{i}", c)
                          for i, c in enumerate(rrc_init(obs, scene, rrc_cfg))]
                candidates.append(best_of(obs, scene, starts, cfg.solver))
            if not candidates:
                continue
            best = min(candidates, key=lambda r: (r.residual_norm, r.init_label))
            hits += best.error(truth) < cfg.success_radius
        rows.append([n_clusters, hits / cfg.trials])
    return rows


def run_coverage_sweep(cfg: ExperimentConfig) -> List[list]:
    """Rows ``(angle, threshold, probability)`` over the swept VAP/LED angle."""
    if cfg.kind not in ("coverage-ceiling", "coverage-polar"):
        raise ConfigError(f"coverage sweep needs a coverage kind, got {cfg.kind}")
    field_name = "ceiling_deg" if cfg.kind == "coverage-ceiling" else "polar_deg"
    rows = []
    for angle in cfg.sweep_spec().values():
        scene = build_room_scene(replace(cfg.scenario, **{field_name: float(angle)}))
        report = coverage_map(scene, cfg.grid_spacing, cfg.thresholds, cfg.noise_variance)
        for t in cfg.thresholds:
            rows.append([float(angle), float(t), report.probabilities[float(t)]])
    return rows


def run_crlb_grid(cfg: ExperimentConfig):
    scene = build_room_scene(cfg.scenario)
    return coverage_map(scene, cfg.grid_spacing, cfg.thresholds, cfg.noise_variance)


def load_observation(path, scene: Scene, noise_variance: float) -> Observation:
    """Read ``{"s": [...], "noise_variance": ...}`` (the latter optional)."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read observation {path}: {exc}") from exc
    if isinstance(data, list):
        data = {"s": data}
    if not isinstance(data, dict) or "s" not in data:
        raise InputError("observation file must hold a list or an object with key 's'")
    return Observation.for_scene(data["s"], scene, float(data.get("noise_variance", noise_variance)))


def observation_payload(obs: Observation, truth=None) -> dict:
    payload = {
        "s": [float(v) for v in obs.s],
        "noise_variance": obs.noise_variance,
        "index_map": [list(mk) for mk in obs.index_map],
    }
    if truth is not None:
        payload["receiver_location"] = [float(v) for v in truth]
    return payload


def localize_once(cfg: ExperimentConfig, obs: Observation) -> dict:
    """Selection, weighted AOA and RSS localisation of one observation."""
    location = cfg.receiver_location if cfg.receiver_location is not None else None
    scene = build_room_scene(cfg.scenario, location)
    obs.check_scene(scene)
    selection = select_leds(obs, scene)
    problem = build_problem(obs, scene, selection)
    aoa = aoa_solve(problem, weighted=False) if len(problem.lines) >= 2 else None
    waoa = aoa_solve(problem, weighted=True) if len(problem.lines) >= 2 else None
    rrc_cfg = replace(cfg.rrc, seed=derive_seed(cfg.seed, 0, 0, RRC_STREAM))
    rss = rss_localize(obs, scene, cfg.solver, rrc_cfg,
                       None if waoa is None else waoa.estimate)
    bound = None
    if obs.noise_variance > 0:
        bound = crlb_rmse(rss.estimate, scene, obs.noise_variance)
    return {
        "selection": {str(k): m for k, m in selection.items()},
        "aoa": None if aoa is None else aoa.to_dict(),
        "weighted_aoa": None if waoa is None else waoa.to_dict(),
        "rss": rss.to_dict(),
        "init_label": rss.init_label,
        "signal_detected": signal_detected(obs, rss),
        "crlb": None if bound is None or not math.isfinite(bound) else bound,
    }
