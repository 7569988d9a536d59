"""Parameter sweeps over uniform networks and their CSV / plot-data output.

Built-in presets:

* ``fig5``: switch sojourn time against packet-in probability, one switch,
  lambda in {20K, 25K, 30K}.
* ``fig6``: controller sojourn time against the number of switches (1..50),
  p = 0.1, lambda in {20K, 25K, 30K}.
* ``fig8``: controller sojourn time against packet-in probability, ten
  switches, lambda in {10K, 15K, 20K}.

All use mu1 = 32000, mu2 = 64000 and mu_c = 256000 (decimal K).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import QueueingError
from .network import NetworkScenario, Violation, analyze_scenario, validate_scenario
from .simulator import SimConfig, run_simulation

SWEPT_VARIABLES = ("p_packet_in", "n_switches", "lambda")
OUTPUTS = ("analytic", "simulate", "both")
METRICS = ("E_T_si", "E_T_s", "E_T_c", "E_T_sum")
UNSTABLE = "unstable"
NOT_APPLICABLE = "na"
_ROUND = 12


class ReportError(Exception):
    pass


@dataclass(frozen=True)
class FixedParams:
    n_switches: int
    lam: float
    p_packet_in: float
    mu1: float
    mu2: float
    mu_c: float


@dataclass(frozen=True)
class SweepSpec:
    preset: str
    swept_variable: str
    start: float
    stop: float
    step: float
    fixed: FixedParams
    series_lambdas: tuple = ()
    outputs: str = "analytic"
    sim_packets: int = 100_000
    seed: int = 42
    metric: str = "E_T_sum"

    @property
    def simulate(self) -> bool:
        return self.outputs in ("simulate", "both")

    def points(self) -> list:
        if not self.step > 0 or self.stop < self.start:
            return []
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        pts = [round(self.start + k * self.step, _ROUND) for k in range(count)]
        if self.swept_variable == "n_switches":
            return [int(round(x)) for x in pts]
        return pts

    def series(self) -> tuple:
        if self.swept_variable == "lambda" or not self.series_lambdas:
            return (self.fixed.lam,)
        return tuple(self.series_lambdas)

    def scenario_at(self, lam: float, x) -> NetworkScenario:
        f = self.fixed
        values = {"n_switches": f.n_switches, "lambda": lam, "p_packet_in": f.p_packet_in}
        values[self.swept_variable] = x
        return NetworkScenario.uniform(
            int(values["n_switches"]), values["lambda"], values["p_packet_in"], f.mu1, f.mu2, f.mu_c
        )


_MU = dict(mu1=32000.0, mu2=64000.0, mu_c=256000.0)

PRESETS = {
    "fig5": SweepSpec(
        preset="fig5",
        swept_variable="p_packet_in",
        start=0.0,
        stop=1.0,
        step=0.05,
        fixed=FixedParams(n_switches=1, lam=30000.0, p_packet_in=0.1, **_MU),
        series_lambdas=(20000.0, 25000.0, 30000.0),
        metric="E_T_si",
    ),
    "fig6": SweepSpec(
        preset="fig6",
        swept_variable="n_switches",
        start=1,
        stop=50,
        step=1,
        fixed=FixedParams(n_switches=1, lam=30000.0, p_packet_in=0.1, **_MU),
        series_lambdas=(20000.0, 25000.0, 30000.0),
        metric="E_T_c",
    ),
    "fig8": SweepSpec(
        preset="fig8",
        swept_variable="p_packet_in",
        start=0.0,
        stop=1.0,
        step=0.05,
        fixed=FixedParams(n_switches=10, lam=20000.0, p_packet_in=0.1, **_MU),
        series_lambdas=(10000.0, 15000.0, 20000.0),
        metric="E_T_c",
    ),
}


def preset(name: str, **overrides) -> SweepSpec:
    return replace(PRESETS[name], **overrides)


def validate_sweep(spec: SweepSpec) -> list[Violation]:
    """Spec-level problems.  Load (stability) violations at individual
    points are not errors; those points are marked unstable in the output."""
    out = []
    if spec.swept_variable not in SWEPT_VARIABLES:
        out.append(Violation("sweep", "unknown swept_variable", spec.swept_variable))
        return out
    if not spec.step > 0:
        out.append(Violation("sweep", "range step must be > 0", spec.step))
    elif spec.stop < spec.start:
        out.append(Violation("sweep", "range must be non-empty (stop >= start)", spec.stop))
    if spec.outputs not in OUTPUTS:
        out.append(Violation("sweep", "outputs must be analytic, simulate or both", spec.outputs))
    if spec.metric not in METRICS:
        out.append(Violation("sweep", f"metric must be one of {', '.join(METRICS)}", spec.metric))
    if spec.simulate and spec.sim_packets < 200:
        out.append(Violation("sweep", "sim_packets must be >= 200", spec.sim_packets))
    if spec.swept_variable == "lambda" and spec.series_lambdas:
        out.append(Violation("sweep", "series_lambdas cannot be combined with a lambda sweep", 0))
    if spec.swept_variable == "n_switches":
        for v in (spec.start, spec.step):
            if v != int(v):
                out.append(Violation("sweep", "n_switches range must be integral", v))
        if spec.start < 1:
            out.append(Violation("sweep", "n_switches must be >= 1", spec.start))
    elif spec.fixed.n_switches < 1:
        out.append(Violation("sweep", "fixed n_switches must be >= 1", spec.fixed.n_switches))
    if out:
        return out
    for lam in spec.series():
        for x in spec.points():
            for v in validate_scenario(spec.scenario_at(lam, x)):
                if v.kind != "stability":
                    out.append(
                        Violation(f"point {spec.swept_variable}={x} lambda={lam} {v.entity}", v.invariant, v.value)
                    )
    return out


@dataclass(frozen=True)
class SweepRow:
    series_lambda: float
    x: float
    n_switches: int
    p_packet_in: float
    lam: float
    utilization: float
    controller_utilization: float
    stable: bool
    E_T_si: Optional[float] = None
    E_T_s: Optional[float] = None
    E_T_c: Optional[float] = None
    E_T_sum: Optional[float] = None
    sim: Optional[dict] = None


@dataclass
class SweepTable:
    spec: SweepSpec
    rows: list = field(default_factory=list)


def _point_seed(seed: int, series_idx: int, point_idx: int) -> int:
    ss = np.random.SeedSequence([seed, series_idx, point_idx])
    return int(ss.generate_state(1, np.uint64)[0])


def _simulate_point(spec: SweepSpec, scenario: NetworkScenario, seed: int) -> dict:
    res = run_simulation(SimConfig(scenario, spec.sim_packets, seed=seed))
    sw = res.per_switch_mean_sojourn[0]
    out = {"E_T_si": sw.mean, "E_T_si_hw": sw.half_width, "E_T_c": None, "E_T_c_hw": None}
    if res.controller_mean_sojourn is not None:
        out["E_T_c"] = res.controller_mean_sojourn.mean
        out["E_T_c_hw"] = res.controller_mean_sojourn.half_width
    return out


def run_sweep(spec: SweepSpec) -> SweepTable:
    """Evaluate every sweep point, series by series, ascending in x."""
    table = SweepTable(spec)
    for si, lam in enumerate(spec.series()):
        for pi, x in enumerate(spec.points()):
            sc = spec.scenario_at(lam, x)
            sw = sc.switches[0]
            lambda_c = sum(s.lam * s.service.p_packet_in for s in sc.switches)
            base = dict(
                series_lambda=lam,
                x=x,
                n_switches=sc.n,
                p_packet_in=sw.service.p_packet_in,
                lam=sw.lam,
                utilization=sw.utilization(),
                controller_utilization=lambda_c / sc.controller.mu_c,
            )
            if validate_scenario(sc):
                table.rows.append(SweepRow(stable=False, **base))
                continue
            try:
                rep = analyze_scenario(sc)
            except QueueingError:
                table.rows.append(SweepRow(stable=False, **base))
                continue
            sim = None
            if spec.simulate:
                sim = _simulate_point(spec, sc, _point_seed(spec.seed, si, pi))
            table.rows.append(
                SweepRow(
                    stable=True,
                    E_T_si=rep.per_switch[0].mean_sojourn_s,
                    E_T_s=rep.weighted_switch_delay,
                    E_T_c=rep.controller.mean_sojourn_s,
                    E_T_sum=rep.per_switch_total[0],
                    sim=sim,
                    **base,
                )
            )
    return table


_X_NAME = {"p_packet_in": "p", "n_switches": "n", "lambda": "lambda"}


def _columns(spec: SweepSpec) -> list[str]:
    """Logical CSV columns; delay columns get a unit suffix at emit time."""
    x = _X_NAME[spec.swept_variable]
    if spec.preset == "fig5":
        cols = ["p", "lambda", "E_T_si", "utilization", "stable"]
        sim = ["sim_E_T_si", "sim_E_T_si_hw"]
    elif spec.preset in ("fig6", "fig8"):
        cols = [x, "lambda", "E_T_c", "controller_utilization", "stable"]
        sim = ["sim_E_T_c", "sim_E_T_c_hw"]
    else:
        cols = [x] + [c for c in ("n", "p", "lambda") if c != x]
        cols += ["E_T_si", "E_T_s", "E_T_c", "E_T_sum", "utilization", "controller_utilization", "stable"]
        sim = ["sim_E_T_si", "sim_E_T_si_hw", "sim_E_T_c", "sim_E_T_c_hw"]
    return cols + (sim if spec.simulate else [])


_DELAYS = {"E_T_si", "E_T_s", "E_T_c", "E_T_sum"}


def _is_delay(col: str) -> bool:
    base = col[4:] if col.startswith("sim_") else col
    base = base[:-3] if base.endswith("_hw") else base
    return base in _DELAYS


def _fmt(value: float) -> str:
    return repr(float(value))


def _cell(row: SweepRow, col: str, scale: float) -> str:
    if col == "p":
        return _fmt(row.p_packet_in)
    if col == "n":
        return str(row.n_switches)
    if col == "lambda":
        return _fmt(row.lam)
    if col == "utilization":
        return _fmt(row.utilization)
    if col == "controller_utilization":
        return _fmt(row.controller_utilization)
    if col == "stable":
        return "yes" if row.stable else "no"
    if not row.stable:
        return UNSTABLE
    if col.startswith("sim_"):
        if row.sim is None:
            return NOT_APPLICABLE
        v = row.sim.get(col[4:])
        return NOT_APPLICABLE if v is None else _fmt(v * scale)
    return _fmt(getattr(row, col) * scale)


def _header(col: str, unit: str) -> str:
    return f"{col}_{unit}" if _is_delay(col) else col


def render_csv(table: SweepTable, unit: str = "s") -> str:
    if not table.rows:
        raise ReportError("empty sweep")
    scale = _unit_scale(unit)
    cols = _columns(table.spec)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([_header(c, unit) for c in cols])
    for row in table.rows:
        w.writerow([_cell(row, c, scale) for c in cols])
    return buf.getvalue()


def render_plot_data(table: SweepTable, unit: str = "s") -> str:
    """One x column followed by one column per lambda series."""
    if not table.rows:
        raise ReportError("empty sweep")
    scale = _unit_scale(unit)
    spec = table.spec
    metric = spec.metric
    series = spec.series()
    xs = spec.points()
    by_key = {(r.series_lambda, r.x): r for r in table.rows}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if spec.swept_variable == "lambda":
        w.writerow(["lambda", f"{metric}_{unit}"])
    else:
        w.writerow([_X_NAME[spec.swept_variable]] + [f"{metric}_{unit}@lambda={lam:g}" for lam in series])
    for x in xs:
        cells = [str(x) if isinstance(x, int) else _fmt(x)]
        for lam in series:
            row = by_key[(lam, x)]
            cells.append(_fmt(getattr(row, metric) * scale) if row.stable else UNSTABLE)
        w.writerow(cells)
    return buf.getvalue()


def _unit_scale(unit: str) -> float:
    if unit == "s":
        return 1.0
    if unit == "ms":
        return 1e3
    raise ReportError(f"unknown unit {unit!r}")


def emit_report(table: SweepTable, fmt: str, out, unit: str = "s") -> Path:
    if fmt == "csv":
        text = render_csv(table, unit)
    elif fmt == "plot-data":
        text = render_plot_data(table, unit)
    else:
        raise ReportError(f"unknown format {fmt!r}")
    path = Path(out)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportError(f"{path}: {exc.strerror or exc}") from None
    return path
