"""
Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run standalone with ``python3 tests/test_acceptance.py`` for the summary only.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from vlcloc.aoa import (AoaProblem, DirectionLine, aoa_localize, aoa_solve,
                        projection_matrix)
from vlcloc.channel import gates, observe, received_power, rss_vector
from vlcloc.cli import main as cli_main
from vlcloc.config import ExperimentConfig, SweepSpec
from vlcloc.crlb import crlb_rmse, fim
from vlcloc.experiments import (run_convergence_experiment, run_coverage_sweep,
                                run_path_experiment, run_trial)
from vlcloc.geometry import (LedTransmitter, Receiver, RoomScenarioConfig, Scene,
                             build_room_scene)
from vlcloc.rss import (RrcConfig, SolverConfig, aux_derivative_g, aux_function,
                        jacobian, rss_localize)

RESULTS = {}


def report(num, ok, detail, elapsed, budget):
    within = elapsed < budget
    ok = ok and within
    line = (f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail} "
            f"({elapsed:.1f} s / budget {budget:.0f} s)")
    RESULTS[num] = line
    return ok, line


def timed(fn):
    t0 = time.perf_counter()
    ok, detail = fn()
    return ok, detail, time.perf_counter() - t0


def five_point(f, x, h):
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


# -- 1: analytical Jacobian against finite differences

def _random_scene(rng):
    cfg = RoomScenarioConfig(
        room=tuple(rng.uniform([3, 3, 2.5], [7, 6, 4])),
        ceiling_deg=float(rng.uniform(0, 80)),
        polar_deg=float(rng.uniform(0, 40)),
        leds_per_vap=int(rng.integers(1, 5)),
        mode=float(rng.choice([1, 2, 10, 30])),
        fov_deg=float(rng.uniform(50, 90)),
    )
    return build_room_scene(cfg)


def _clear_of_gates(scene, point, margin=0.02):
    v = point - scene.led_locations
    d = np.linalg.norm(v, axis=1)
    cos_emit = np.sum(v * scene.led_orientations, axis=1) / d
    cos_inc = -(v @ scene.receiver.orientation) / d
    return (np.all(np.abs(cos_emit) > margin)
            and np.all(np.abs(cos_inc - math.cos(scene.receiver.fov)) > margin)
            and np.any(gates(v, scene.led_orientations, scene.receiver.orientation,
                             math.cos(scene.receiver.fov))))


def criterion_1():
    rng = np.random.default_rng(1)
    worst = 0.0
    done = 0
    while done < 1000:
        scene = _random_scene(rng)
        point = rng.uniform(0.05, 0.95, 3) * np.array(scene.room)
        if not _clear_of_gates(scene, point):
            continue
        h_an = jacobian(point, scene)
        step = 1e-4
        fd = np.column_stack([
            five_point(lambda t, j=j: rss_vector(scene, point + (t - point[j]) * np.eye(3)[j]),
                       point[j], step)
            for j in range(3)
        ])
        for row_an, row_fd in zip(h_an, fd):
            den = np.linalg.norm(row_fd)
            if den == 0.0:
                worst = max(worst, float(np.linalg.norm(row_an) > 0))
            else:
                worst = max(worst, float(np.linalg.norm(row_an - row_fd) / den))
        done += 1
    return worst < 1e-6, f"max relative row error {worst:.2e} over {done} scenes (< 1e-6)"


# -- 2: closed-form derivative of the auxiliary function

def criterion_2():
    rng = np.random.default_rng(2)
    worst = 0.0
    done = 0
    while done < 1000:
        n = int(rng.choice([1, 2, 10, 30]))
        x, a, b, l = rng.uniform(-1, 1, 4)
        k = rng.uniform(0.2, 2)
        m = rng.uniform(0.1, 3)
        if a * x + k < 0.1:
            continue
        h = 1e-3 * min(1 + abs(x), (a * x + k) / (n * abs(a) + 1))
        fd = five_point(lambda t: aux_function(t, a, b, k, l, m, n), x, h)
        g = aux_derivative_g(x, a, b, k, l, m, n)
        worst = max(worst, abs(g - fd) / abs(fd))
        done += 1
    symbolic = aux_derivative_g(1.0, 0, 1, 1, 0, 1, 1)
    ok = worst < 1e-7 and symbolic == -0.25
    return ok, f"max relative error {worst:.2e} over {done} tuples (< 1e-7); g(1; n=1, a=0) = {symbolic}"


# -- 3: noiseless exact recovery

def criterion_3():
    rng = np.random.default_rng(3)
    base = build_room_scene(RoomScenarioConfig(mode=10))
    lo = np.array([0.25, 0.25, 0.25])
    hi = np.array([base.room[0] - 0.25, base.room[1] - 0.25, 1.5])
    hits = 0
    for i in range(200):
        truth = rng.uniform(lo, hi)
        scene = base.with_receiver_at(truth)
        obs = observe(scene, 0.0)
        seed = aoa_localize(obs, scene, weighted=True).estimate
        res = rss_localize(obs, scene, SolverConfig(), RrcConfig(clusters=4, seed=[3, i]), seed)
        hits += res.error(truth) < 1e-2
    frac = hits / 200
    return frac >= 0.95, f"{frac:.3f} of 200 noiseless runs within 1e-2 m (>= 0.95)"


# -- 4: path 2 RMSE sweep

def criterion_4():
    cfg = ExperimentConfig(kind="path2", scenario=RoomScenarioConfig(mode=30), trials=50,
                           noise_variance=1e-13, seed=4, sweep=SweepSpec("x", 0.25, 4.75, 0.25))
    rows = np.array(run_path_experiment(cfg))
    waoa, rrc, bound = rows[:, 4], rows[:, 6], rows[:, 7]
    aoa_ok = bool(np.all(waoa < 1.0))
    frac = float(np.mean(rrc <= 2 * bound))
    return aoa_ok and frac >= 0.8, (
        f"max weighted-AOA RMSE {waoa.max():.3f} m (< 1); RSS-RRC within 2x CRLB at "
        f"{frac:.2f} of {len(rows)} points (>= 0.80)")


# -- 5: ceiling blackout

def criterion_5():
    cfg = ExperimentConfig(kind="path1", trials=50, noise_variance=1e-13, seed=5)
    base = build_room_scene(cfg.scenario)
    unbounded = True
    flagged = total = 0
    for pos_idx, z in enumerate((2.8, 2.85, 2.9, 2.95)):
        scene = base.with_receiver_at([2.0, 2.0, z])
        unbounded &= crlb_rmse(scene.receiver.location, scene, 1e-13) == math.inf
        for t in range(cfg.trials):
            res = run_trial(scene, cfg, t, pos_idx)
            for key in ("rss_aoa", "rss_rrc"):
                r = res[key]
                total += 1
                flagged += r is None or r.degenerate or not r.converged
    ok = unbounded and flagged == total
    return ok, f"CRLB infinite: {unbounded}; {flagged}/{total} RSS estimates flagged"


# -- 6: convergence probability against cluster count

def criterion_6():
    out = {}
    for n in (10.0, 30.0):
        cfg = ExperimentConfig(kind="convergence", scenario=RoomScenarioConfig(mode=n), trials=200,
                               seed=6, clusters=(0, 1, 2, 3, 4))
        out[n] = dict((int(c), p) for c, p in run_convergence_experiment(cfg))
    mono = all(out[n][c + 1] >= out[n][c] - 0.02 for n in out for c in range(4))
    ok = mono and out[10.0][2] >= 0.95 and out[30.0][4] >= 0.95
    fmt = lambda d: ", ".join(f"C={c}:{p:.3f}" for c, p in d.items())
    return ok, f"monotone {mono}; n=10 [{fmt(out[10.0])}]; n=30 [{fmt(out[30.0])}]"


# -- 7: ceiling-angle coverage sweep

def _best(rows, threshold):
    # (probability, angle); ties go to the smaller angle
    sel = [(p, a) for a, t, p in rows if t == threshold]
    return max(sel, key=lambda pa: pa[0])


def criterion_7():
    best = {}
    for n in (10.0, 30.0):
        cfg = ExperimentConfig(kind="coverage-ceiling",
                               scenario=RoomScenarioConfig(mode=n, polar_deg=20.0),
                               sweep=SweepSpec("ceiling_deg", 20, 70, 5), grid_spacing=0.1,
                               thresholds=(0.04, 0.25))
        rows = run_coverage_sweep(cfg)
        best[n] = (_best(rows, 0.25)[0], _best(rows, 0.04)[0])
    ok = (abs(best[10.0][0] - 0.90) <= 0.05 and abs(best[30.0][0] - 0.85) <= 0.05
          and abs(best[30.0][1] - 0.45) <= 0.05 and abs(best[10.0][1] - 0.27) <= 0.05)
    return ok, (f"best P(<=0.25): n=10 {best[10.0][0]:.3f}, n=30 {best[30.0][0]:.3f}; "
                f"best P(<=0.04): n=30 {best[30.0][1]:.3f}, n=10 {best[10.0][1]:.3f}")


# -- 8: polar-angle optimum

def criterion_8():
    opt = {}
    for n in (10.0, 30.0):
        cfg = ExperimentConfig(kind="coverage-polar",
                               scenario=RoomScenarioConfig(mode=n, ceiling_deg=30.0),
                               sweep=SweepSpec("polar_deg", 5, 40, 2.5), grid_spacing=0.1,
                               thresholds=(0.01,))
        opt[n] = _best(run_coverage_sweep(cfg), 0.01)[1]
    ok = abs(opt[10.0] - 17.5) <= 2.5 and abs(opt[30.0] - 10.0) <= 2.5
    return ok, f"optimum polar angle: n=10 {opt[10.0]:.1f} deg (17.5 +- 2.5), n=30 {opt[30.0]:.1f} deg (10 +- 2.5)"


# -- 9: structural invariants

def _replay_all(tmp):
    tmp = Path(tmp)
    configs = {
        "path1": "kind: path1\nsweep: {axis: z, start: 0.5, stop: 1.5, step: 0.5}\n",
        "path2": "kind: path2\nsweep: {axis: x, start: 1.0, stop: 3.0, step: 1.0}\n",
        "convergence": "kind: convergence\nclusters: [0, 2]\n",
        "coverage-ceiling": "kind: coverage-ceiling\ngrid_spacing: 0.5\nsweep: {axis: ceiling_deg, start: 30, stop: 60, step: 15}\n",
        "coverage-polar": "kind: coverage-polar\ngrid_spacing: 0.5\nsweep: {axis: polar_deg, start: 10, stop: 20, step: 5}\n",
        "crlb-grid": "kind: crlb-grid\ngrid_spacing: 0.5\n",
        "localize": "kind: localize-once\nreceiver_location: [1.5, 2.5, 0.8]\n",
    }
    obs = tmp / "obs.json"
    mismatched = []
    for cmd, text in configs.items():
        cfg = tmp / f"{cmd}.yaml"
        cfg.write_text(text)
        outputs = []
        for rep in range(2):
            suffix = ".json" if cmd == "localize" else ".csv"
            out = tmp / f"{cmd}-{rep}{suffix}"
            argv = [cmd, "--config", str(cfg), "--seed", "77", "--trials", "3", "--out", str(out)]
            if cmd == "localize":
                if cli_main(["simulate", "--config", str(cfg), "--seed", "77", "--out", str(obs)]) != 0:
                    return [cmd]
                argv += ["--observation", str(obs)]
            if cli_main(argv) != 0:
                return [cmd]
            outputs.append(out.read_bytes())
            if cmd == "crlb-grid":
                outputs[-1] += out.with_suffix(".summary.json").read_bytes()
        if outputs[0] != outputs[1]:
            mismatched.append(cmd)
    return mismatched


def criterion_9(tmp):
    rng = np.random.default_rng(9)
    checks = {}

    worst = 0.0
    for _ in range(200):
        n = rng.normal(size=3)
        a = projection_matrix(n / np.linalg.norm(n))
        worst = max(worst, np.abs(a @ a - a).max())
    checks["projection idempotent"] = worst < 1e-12

    worst = 0.0
    for _ in range(200):
        lines = tuple(DirectionLine(rng.uniform(-3, 3, 3), d / np.linalg.norm(d))
                      for d in rng.normal(size=(4, 3)))
        w = rng.uniform(0.1, 10, 4)
        a = aoa_solve(AoaProblem(lines, tuple(w)), weighted=True).estimate
        b = aoa_solve(AoaProblem(lines, tuple(w * rng.uniform(1e-3, 1e3))), weighted=True).estimate
        worst = max(worst, np.abs(a - b).max() / (1 + np.abs(a).max()))
    checks["weight-scale invariance"] = worst < 1e-9

    worst = 0.0
    for n in (1.0, 10.0, 30.0):
        led = LedTransmitter(0, 0, [0, 0, 10], [0, 0, -1], mode=n)
        for d in rng.uniform(0.5, 4, 20):
            ratio = received_power(led, Receiver([0, 0, 10 - d])) / received_power(led, Receiver([0, 0, 10 - 2 * d]))
            worst = max(worst, abs(ratio - 4.0))
    checks["inverse-square law"] = worst < 1e-12

    worst = 0.0
    for n in (1.0, 10.0, 30.0):
        led = LedTransmitter(0, 0, [0, 0, 0], [0, 0, 1], mode=n)

        def ring(phi):
            u = np.array([math.sin(phi), 0.0, math.cos(phi)])
            return received_power(led, Receiver(u, -u, math.radians(85), 1.0)) * 2 * math.pi * math.sin(phi)

        total, _ = integrate.quad(ring, 0.0, math.pi / 2, epsabs=1e-12, epsrel=1e-12)
        worst = max(worst, abs(total - 1.0))
    checks["hemisphere normalisation"] = worst < 1e-6

    full = build_room_scene(RoomScenarioConfig())
    mono = True
    for _ in range(100):
        p = rng.uniform([0.2, 0.2, 0.1], [4.8, 3.8, 2.0])
        part = Scene(full.room, full.vaps[: int(rng.integers(1, 4))], full.receiver)
        diff = fim(p, full, 1e-13).J - fim(p, part, 1e-13).J
        mono &= np.linalg.eigvalsh(diff).min() >= -1e-9 * np.abs(diff).max()
    checks["FIM monotone in LEDs"] = bool(mono)

    mismatched = _replay_all(tmp)
    checks["CLI replay"] = not mismatched

    failed = [k for k, v in checks.items() if not v]
    detail = "all invariants hold" if not failed else f"failed: {failed}"
    return not failed, f"{detail} ({', '.join(checks)})"


BUDGETS = {1: 30, 2: 5, 3: 120, 4: 600, 5: 60, 6: 300, 7: 600, 8: 600, 9: 60}


@pytest.fixture
def emit(capsys):
    def _emit(num, ok, detail, elapsed):
        ok, line = report(num, ok, detail, elapsed, BUDGETS[num])
        with capsys.disabled():
            print("\n" + line)
        return ok, line
    return _emit


@pytest.mark.parametrize("num", [1, 2, 3, 4, 5, 6, 7, 8])
def test_criterion(num, emit):
    ok, detail, elapsed = timed(globals()[f"criterion_{num}"])
    ok, line = emit(num, ok, detail, elapsed)
    assert ok, line


def test_criterion_9(emit, tmp_path):
    ok, detail, elapsed = timed(lambda: criterion_9(tmp_path))
    ok, line = emit(9, ok, detail, elapsed)
    assert ok, line


if __name__ == "__main__":
    import tempfile
    all_ok = True
    for num in range(1, 10):
        if num == 9:
            with tempfile.TemporaryDirectory() as tmp:
                ok, detail, elapsed = timed(lambda: criterion_9(tmp))
        else:
            ok, detail, elapsed = timed(globals()[f"criterion_{num}"])
        ok, line = report(num, ok, detail, elapsed, BUDGETS[num])
        all_ok &= ok
        print(line, flush=True)
    sys.exit(0 if all_ok else 1)
