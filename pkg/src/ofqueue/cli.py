"""Command line entry point.

Exit codes: 0 success, 1 validation failure (including unstable
scenarios), 2 I/O or parse failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .errors import QueueingError
from .network import NetworkScenario, analyze_scenario
from .scenario_io import (
    ScenarioParseError,
    ScenarioValidationError,
    parse_scenario_file,
)
from .simulator import VARIANTS, SimConfig, run_simulation
from .sweep import PRESETS, ReportError, SweepSpec, emit_report, render_csv, run_sweep

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _report_dict(scenario: NetworkScenario) -> dict:
    rep = analyze_scenario(scenario)
    return {
        "switches": [
            {
                "index": i,
                "E_T_si_s": s.mean_sojourn_s,
                "E_N_i": s.mean_queue_len,
                "utilization": s.utilization,
                "E_T_sum_s": rep.per_switch_total[i],
                "E_T_sum_expected_s": rep.per_switch_total_expected[i],
            }
            for i, s in enumerate(rep.per_switch)
        ],
        "controller": {
            "lambda_c": rep.controller.packet_in_rate,
            "E_T_c_s": rep.controller.mean_sojourn_s,
            "E_N_c": rep.controller.mean_queue_len,
            "utilization": rep.controller.utilization,
        },
        "E_T_s_s": rep.weighted_switch_delay,
    }


def _print_report(data: dict, ms: bool) -> None:
    scale, unit = (1e3, "ms") if ms else (1.0, "s")
    c = data["controller"]
    print(f"switch  utilization  E[N_i]        E[T_si] ({unit})   E[T_sum] ({unit})")
    for s in data["switches"]:
        print(
            f"{s['index']:>6}  {s['utilization']:<11.6f}  {s['E_N_i']:<12.6g}  "
            f"{s['E_T_si_s'] * scale:<15.6g}  {s['E_T_sum_s'] * scale:.6g}"
        )
    print(f"weighted switch delay E[T_s]: {data['E_T_s_s'] * scale:.6g} {unit}")
    print(
        f"controller: lambda_c={c['lambda_c']:g}/s utilization={c['utilization']:.6f} "
        f"E[N_c]={c['E_N_c']:.6g} E[T_c]={c['E_T_c_s'] * scale:.6g} {unit}"
    )


def _load(path):
    """Parse a file; returns (object, exit code or None)."""
    try:
        return parse_scenario_file(path), None
    except ScenarioParseError as exc:
        _err(str(exc))
        return None, EXIT_IO
    except ScenarioValidationError as exc:
        _err(str(exc))
        return None, EXIT_INVALID


def _sweep_spec(args) -> tuple[SweepSpec | None, int | None]:
    if args.spec:
        spec, code = _load(args.spec)
        if code is not None:
            return None, code
        if not isinstance(spec, SweepSpec):
            _err(f"{args.spec}: expected a sweep file, got a scenario")
            return None, EXIT_INVALID
    else:
        spec = PRESETS[args.preset or "fig5"]
    changes = {}
    if args.simulate:
        changes["outputs"] = "both"
    if args.packets is not None:
        changes["sim_packets"] = args.packets
    if args.seed is not None:
        changes["seed"] = args.seed
    return replace(spec, **changes), None


def cmd_analyze(args) -> int:
    obj, code = _load(args.file)
    if code is not None:
        return code
    if isinstance(obj, SweepSpec):
        sys.stdout.write(render_csv(run_sweep(obj), "ms" if args.ms else "s"))
        return EXIT_OK
    try:
        data = _report_dict(obj)
    except QueueingError as exc:
        _err(str(exc))
        return EXIT_INVALID
    if args.json:
        print(json.dumps(data, indent=2))
    else:
        _print_report(data, args.ms)
    return EXIT_OK


def cmd_validate(args) -> int:
    obj, code = _load(args.file)
    if code is not None:
        return code
    kind = "sweep" if isinstance(obj, SweepSpec) else "scenario"
    print(f"{args.file}: valid {kind}")
    return EXIT_OK


def _run_and_emit(args, fmt, out) -> int:
    spec, code = _sweep_spec(args)
    if code is not None:
        return code
    unit = "ms" if args.ms else "s"
    table = run_sweep(spec)
    try:
        if out is None:
            sys.stdout.write(render_csv(table, unit))
        else:
            emit_report(table, fmt, out, unit)
    except ReportError as exc:
        _err(str(exc))
        return EXIT_IO
    return EXIT_OK


def cmd_sweep(args) -> int:
    return _run_and_emit(args, "csv", args.out)


def cmd_emit(args) -> int:
    return _run_and_emit(args, args.format, args.out)


def cmd_simulate(args) -> int:
    obj, code = _load(args.file)
    if code is not None:
        return code
    if not isinstance(obj, NetworkScenario):
        _err(f"{args.file}: simulate needs a scenario file")
        return EXIT_INVALID
    try:
        res = run_simulation(
            SimConfig(obj, args.packets, seed=args.seed, variant=args.variant)
        )
    except QueueingError as exc:
        _err(str(exc))
        return EXIT_INVALID
    ctrl = res.controller_mean_sojourn
    data = {
        "switches": [
            {
                "index": i,
                "E_T_si_s": est.mean,
                "E_T_si_hw_s": est.half_width,
                "E_N_i_time_avg": res.per_switch_mean_queue_len[i],
                "packet_in_fraction": res.per_switch_packet_in_fraction[i],
                "E_T_sum_s": res.per_switch_mean_total[i],
                "completed": res.completed_packets[i],
            }
            for i, est in enumerate(res.per_switch_mean_sojourn)
        ],
        "controller": None
        if ctrl is None
        else {"E_T_c_s": ctrl.mean, "E_T_c_hw_s": ctrl.half_width, "completed": res.controller_completed},
        "metadata": res.metadata,
    }
    print(json.dumps(data, indent=2))
    return EXIT_OK


def _add_sweep_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in sweep (default fig5)")
    src.add_argument("--spec", metavar="FILE", help="sweep file")
    p.add_argument("--simulate", action="store_true", help="add simulated means and CIs")
    p.add_argument("--packets", type=int, help="simulated packets per switch per point")
    p.add_argument("--seed", type=int, help="base seed for simulation")
    p.add_argument("--ms", action="store_true", help="report delays in milliseconds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ofqueue", description="Queueing model of packet delay in OpenFlow networks."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="solve a scenario (or run a sweep file)")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.add_argument("--ms", action="store_true", help="report delays in milliseconds")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="run a sweep and write CSV")
    _add_sweep_args(p)
    p.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check a scenario or sweep file")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("emit", help="run a sweep and write CSV or plot data to a file")
    _add_sweep_args(p)
    p.add_argument("--format", choices=["csv", "plot-data"], required=True)
    p.add_argument("--out", metavar="PATH", required=True)
    p.set_defaults(func=cmd_emit)

    p = sub.add_parser("simulate", help="simulate a scenario file")
    p.add_argument("file")
    p.add_argument("--packets", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--variant", choices=VARIANTS, default="paper-additive")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
