"""Acceptance checks, one test per criterion.

Each test records a ``PASS``/``FAIL`` line (shown in the terminal summary)
before asserting, so a full run lists all eight outcomes.
"""

import csv
import io
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from ofqueue.cli import main
from ofqueue.controller import ControllerParams, controller_mean_sojourn
from ofqueue.errors import UnstableQueueError
from ofqueue.hyperexp import HyperExpService, pollaczek_khinchine_mean, solve_switch_queue
from ofqueue.network import NetworkScenario, analyze_scenario, validate_scenario
from ofqueue.simulator import SimConfig, run_simulation
from ofqueue.sweep import preset, render_csv, run_sweep

MU1, MU2, MU_C = 32000.0, 64000.0, 256000.0
GRID_P = [0.0, 0.04, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0]
GRID_U = [0.1, 0.5, 0.9, 0.95]


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def emitted_series(tmp_path, name):
    """Run the CLI emitter for a preset and read the CSV back as {lambda: (xs, ys)}."""
    out = tmp_path / f"{name}.csv"
    assert main(["emit", "--preset", name, "--format", "csv", "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    x_col, y_col = list(rows[0])[0], list(rows[0])[2]
    series = {}
    for r in rows:
        xs, ys = series.setdefault(float(r["lambda"]), ([], []))
        xs.append(float(r[x_col]))
        ys.append(float(r[y_col]))
    return {k: (np.array(xs), np.array(ys)) for k, (xs, ys) in series.items()}


def test_1_oracle_equivalence():
    start = time.perf_counter()
    worst, points = 0.0, 0
    for p in GRID_P:
        svc = HyperExpService(p, MU1, MU2)
        for u in GRID_U:
            lam = u / svc.mean_service_time()
            _, qbd = solve_switch_queue(svc, lam)
            pk = pollaczek_khinchine_mean(svc, lam)
            worst = max(worst, abs(qbd.mean_queue_len - pk.mean_queue_len) / pk.mean_queue_len)
            points += 1
    elapsed = time.perf_counter() - start
    ok = points >= 30 and worst <= 1e-9 and elapsed < 1.0
    record(1, "oracle equivalence", ok, f"{points} points, max rel err {worst:.2e}, {elapsed:.3f} s")


def test_2_degenerate_exactness():
    worst = 0.0
    for p, mu in ((0.0, MU2), (1.0, MU1)):
        for lam in (10000.0, 20000.0, 30000.0):
            _, m = solve_switch_queue(HyperExpService(p, MU1, MU2), lam)
            exact = lam / (mu - lam)
            worst = max(worst, abs(m.mean_queue_len - exact) / exact)
    record(2, "degenerate M/M/1 exactness", worst <= 1e-12, f"max rel err {worst:.2e}")


def test_3_ten_times_claim():
    lam = 30000.0
    t0 = solve_switch_queue(HyperExpService(0.0, MU1, MU2), lam)[1].mean_sojourn_s
    t1 = solve_switch_queue(HyperExpService(1.0, MU1, MU2), lam)[1].mean_sojourn_s
    ratio = t1 / t0
    ok = ratio >= 10 and abs(ratio - 17.0) <= 1e-6
    record(3, "sojourn ratio p=1 vs p=0 at 30K", ok, f"ratio {ratio:.9f} ({t1:.6g} s / {t0:.6g} s)")


def test_4_controller_increment():
    def t_c(n):
        return analyze_scenario(NetworkScenario.uniform(n, 30000.0, 0.1, MU1, MU2, MU_C)).controller.mean_sojourn_s

    diff = t_c(50) - t_c(1)
    ctrl = ControllerParams(MU_C)
    closed = controller_mean_sojourn(ctrl, 50 * 3000.0) - controller_mean_sojourn(ctrl, 3000.0)
    ok = abs(diff - 5.48139e-6) <= 1e-10 and abs(diff - closed) <= 1e-15 and 0.004 <= diff * 1e3 <= 0.006
    record(4, "controller increment n=1 to n=50", ok, f"{diff:.9e} s = {diff * 1e3:.6f} ms")


def test_5_figure_shapes(tmp_path):
    start = time.perf_counter()
    problems = []
    f5 = emitted_series(tmp_path, "fig5")
    if sorted(f5) != [20000.0, 25000.0, 30000.0]:
        problems.append("fig5 series")
    for lam, (_, y) in f5.items():
        if not np.all(np.diff(y) > 0):
            problems.append(f"fig5 lambda={lam:g} not increasing")
    f6 = emitted_series(tmp_path, "fig6")
    for lam, (x, y) in f6.items():
        if not (np.array_equal(x, np.arange(1, 51)) and np.all(np.diff(y) > 0)):
            problems.append(f"fig6 lambda={lam:g} not increasing")
        if not np.all(np.diff(y, 2) > 0):
            problems.append(f"fig6 lambda={lam:g} not convex")
    f8 = emitted_series(tmp_path, "fig8")
    steps = {}
    for lam, (_, y) in f8.items():
        if not np.all(np.diff(y) > 0):
            problems.append(f"fig8 lambda={lam:g} not increasing")
        steps[lam] = np.diff(y)
    if not (np.all(steps[20000.0] > steps[15000.0]) and np.all(steps[15000.0] > steps[10000.0])):
        problems.append("fig8 lambda=20K not growing fastest")
    elapsed = time.perf_counter() - start
    ok = not problems and elapsed < 5.0
    record(5, "figure shapes from emitted CSV", ok, "; ".join(problems) or f"all shapes hold, {elapsed:.2f} s")


SIM_SEED = 42
SIM_HORIZON, SIM_WARMUP = 1_100_000, 100_000


@pytest.mark.slow
def test_6_simulation_agreement():
    lines, ok = [], True
    for p in (0.0, 0.1, 0.5, 1.0):
        for lam in (20000.0, 30000.0):
            svc = HyperExpService(p, MU1, MU2)
            target = solve_switch_queue(svc, lam)[1].mean_sojourn_s
            sc = NetworkScenario.uniform(1, lam, p, MU1, MU2, 1e12)
            est = run_simulation(SimConfig(sc, SIM_HORIZON, SIM_WARMUP, seed=SIM_SEED)).per_switch_mean_sojourn[0]
            err = est.mean / target - 1
            good = abs(err) <= 0.02 and est.covers(target)
            ok &= good
            lines.append(f"p={p:g} lam={lam:g} {err:+.2%}{'' if good else ' MISS'}")
    sc = NetworkScenario.uniform(10, 20000.0, 0.1, MU1, MU2, MU_C)
    target = analyze_scenario(sc).controller.mean_sojourn_s
    est = run_simulation(SimConfig(sc, SIM_HORIZON, SIM_WARMUP, seed=SIM_SEED)).controller_mean_sojourn
    err = est.mean / target - 1
    good = abs(err) <= 0.02 and est.covers(target)
    ok &= good
    lines.append(f"controller {err:+.2%}{'' if good else ' MISS'}")
    record(6, "simulation agreement at 10^6 packets", ok, ", ".join(lines))


def test_7_normalization_and_stability():
    worst = 0.0
    for p in GRID_P:
        svc = HyperExpService(p, MU1, MU2)
        for u in GRID_U + [0.3, 0.7, 0.99]:
            dist, _ = solve_switch_queue(svc, u / svc.mean_service_time())
            worst = max(worst, abs(dist.total_mass() - 1.0))
    problems = []
    try:
        solve_switch_queue(HyperExpService(1.0, MU1, MU2), 33000.0)
        problems.append("lambda=33K p=1 solved")
    except UnstableQueueError:
        pass
    fleet = NetworkScenario.uniform(50, 60000.0, 0.1, MU1, MU2, MU_C)
    if not any(v.entity == "controller" and v.kind == "stability" for v in validate_scenario(fleet)):
        problems.append("n=50 fleet not flagged")
    try:
        analyze_scenario(fleet)
        problems.append("n=50 fleet analyzed")
    except UnstableQueueError:
        pass
    f5 = render_csv(run_sweep(preset("fig5", series_lambdas=(33000.0,))))
    last = f5.splitlines()[-1].split(",")
    if last[2:] != ["unstable", repr(33000.0 / MU1), "no"]:
        problems.append(f"sweep row {last}")
    f6 = render_csv(run_sweep(preset("fig6", series_lambdas=(60000.0,))))
    for row in csv.DictReader(io.StringIO(f6)):
        if float(row["controller_utilization"]) >= 1 and row["E_T_c_s"] != "unstable":
            problems.append(f"fig6 n={row['n']} at 60K has a finite delay")
    ok = worst <= 1e-10 and not problems
    record(7, "normalization and stability", ok, "; ".join(problems) or f"max |mass-1| {worst:.2e}, unstable cases rejected")


@pytest.mark.slow
def test_8_determinism(tmp_path):
    argv = [sys.executable, "-m", "ofqueue.cli", "sweep", "--preset", "fig8", "--simulate", "--seed", "42"]
    runs = [subprocess.run(argv, capture_output=True, check=True).stdout for _ in range(2)]
    ok = runs[0] == runs[1] and runs[0].startswith(b"p,lambda,E_T_c_s,") and len(runs[0].splitlines()) == 64
    record(8, "deterministic simulated sweep", ok, f"{len(runs[0])} bytes, identical={runs[0] == runs[1]}")
