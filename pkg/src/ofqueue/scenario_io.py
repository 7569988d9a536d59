"""JSON scenario and sweep files.

Scenario file::

    {
      "kind": "scenario",
      "controller": {"mu_c": 256000},
      "switches": [
        {"lambda": 20000, "p_packet_in": 0.1, "mu1": 32000, "mu2": 64000, "repeat": 10}
      ]
    }

``repeat`` (default 1) expands one entry into that many identical switches.
Rates are packets (or messages) per second.

Sweep file: ``{"kind": "sweep", "preset": "fig8"}`` loads a built-in preset;
any other key overrides it (``fixed`` is merged key by key).  With
``"preset": "custom"`` every field must be given, see ``SweepFile``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .controller import ControllerParams
from .hyperexp import HyperExpService
from .network import NetworkScenario, SwitchParams, Violation, validate_scenario
from .sweep import PRESETS, FixedParams, SweepSpec, validate_sweep


class ScenarioParseError(Exception):
    """Malformed file: bad JSON, unknown keys, wrong types, unreadable path."""


class ScenarioValidationError(Exception):
    def __init__(self, source, violations: list[Violation]):
        self.violations = violations
        lines = "\n".join(f"  {v}" for v in violations)
        super().__init__(f"{source}: invalid scenario\n{lines}")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True, populate_by_name=True)


class SwitchEntry(_Strict):
    lam: float = Field(alias="lambda")
    p_packet_in: float
    mu1: float
    mu2: float
    repeat: int = 1


class ControllerEntry(_Strict):
    mu_c: float


class ScenarioFile(_Strict):
    kind: Literal["scenario"]
    controller: ControllerEntry
    switches: list[SwitchEntry]


class RangeEntry(_Strict):
    start: float
    stop: float
    step: float


class FixedEntry(_Strict):
    n_switches: Optional[int] = None
    lam: Optional[float] = Field(default=None, alias="lambda")
    p_packet_in: Optional[float] = None
    mu1: Optional[float] = None
    mu2: Optional[float] = None
    mu_c: Optional[float] = None


class SweepFile(_Strict):
    kind: Literal["sweep"]
    preset: Literal["fig5", "fig6", "fig8", "custom"] = "custom"
    swept_variable: Optional[Literal["p_packet_in", "n_switches", "lambda"]] = None
    range: Optional[RangeEntry] = None
    fixed: Optional[FixedEntry] = None
    series_lambdas: Optional[list[float]] = None
    outputs: Optional[Literal["analytic", "simulate", "both"]] = None
    sim_packets: Optional[int] = None
    seed: Optional[int] = None
    metric: Optional[Literal["E_T_si", "E_T_s", "E_T_c", "E_T_sum"]] = None


def _format_pydantic(source, exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err["loc"])
        parts.append(f"{source}: at {loc.lstrip('.') or '<root>'}: {err['msg']}")
    return "\n".join(parts)


def _load_json(text: str, source):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(
            f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}"
        ) from None


def _scenario_from_model(model: ScenarioFile) -> NetworkScenario:
    switches = []
    for entry in model.switches:
        sw = SwitchParams(entry.lam, HyperExpService(entry.p_packet_in, entry.mu1, entry.mu2))
        switches.extend([sw] * entry.repeat)
    return NetworkScenario(tuple(switches), ControllerParams(model.controller.mu_c))


def _sweep_from_model(model: SweepFile) -> SweepSpec:
    if model.preset != "custom":
        base = PRESETS[model.preset]
    else:
        missing = [
            k for k in ("swept_variable", "range", "fixed") if getattr(model, k) is None
        ]
        if missing:
            raise ScenarioParseError(f"custom sweep is missing: {', '.join(missing)}")
        base = None

    fixed_over = model.fixed.model_dump(exclude_none=True) if model.fixed else {}
    if base is None:
        absent = [k for k in FixedEntry.model_fields if k not in fixed_over]
        if absent:
            names = ["lambda" if k == "lam" else k for k in absent]
            raise ScenarioParseError(f"custom sweep fixed params missing: {', '.join(names)}")
        fixed = FixedParams(**fixed_over)
    else:
        fixed = FixedParams(**{**base.fixed.__dict__, **fixed_over})

    def pick(name, default):
        val = getattr(model, name)
        return default if val is None else val

    swept = pick("swept_variable", base.swept_variable if base else None)
    if model.range is not None:
        rng = (model.range.start, model.range.stop, model.range.step)
    else:
        rng = (base.start, base.stop, base.step)
    series = model.series_lambdas
    if series is None:
        series = list(base.series_lambdas) if base and swept != "lambda" else []
    return SweepSpec(
        preset=model.preset,
        swept_variable=swept,
        start=rng[0],
        stop=rng[1],
        step=rng[2],
        fixed=fixed,
        series_lambdas=tuple(series),
        outputs=pick("outputs", base.outputs if base else "analytic"),
        sim_packets=pick("sim_packets", base.sim_packets if base else SweepSpec.sim_packets),
        seed=pick("seed", base.seed if base else SweepSpec.seed),
        metric=pick("metric", base.metric if base else "E_T_sum"),
    )


def parse_text(text: str, source="<string>") -> Union[NetworkScenario, SweepSpec]:
    raw = _load_json(text, source)
    if not isinstance(raw, dict):
        raise ScenarioParseError(f"{source}: top level must be a JSON object")
    kind = raw.get("kind")
    model_cls = {"scenario": ScenarioFile, "sweep": SweepFile}.get(kind)
    if model_cls is None:
        raise ScenarioParseError(f'{source}: at kind: expected "scenario" or "sweep", got {kind!r}')
    try:
        model = model_cls.model_validate(raw)
    except ValidationError as exc:
        raise ScenarioParseError(_format_pydantic(source, exc)) from None

    if isinstance(model, ScenarioFile):
        bad_repeat = [i for i, e in enumerate(model.switches) if e.repeat < 1]
        if bad_repeat:
            raise ScenarioParseError(f"{source}: at switches[{bad_repeat[0]}].repeat: must be >= 1")
        scenario = _scenario_from_model(model)
        problems = validate_scenario(scenario)
        if problems:
            raise ScenarioValidationError(source, problems)
        return scenario

    try:
        spec = _sweep_from_model(model)
    except ScenarioParseError as exc:
        raise ScenarioParseError(f"{source}: {exc}") from None
    problems = validate_sweep(spec)
    if problems:
        raise ScenarioValidationError(source, problems)
    return spec


def parse_scenario_file(path) -> Union[NetworkScenario, SweepSpec]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioParseError(f"{path}: cannot read file: {exc.strerror or exc}") from None
    return parse_text(text, source=str(path))


def scenario_to_dict(scenario: NetworkScenario) -> dict:
    """Serialisable form; consecutive identical switches share one entry."""
    entries: list[dict] = []
    prev = None
    for sw in scenario.switches:
        if sw == prev:
            entries[-1]["repeat"] += 1
            continue
        svc = sw.service
        entries.append(
            {"lambda": sw.lam, "p_packet_in": svc.p_packet_in, "mu1": svc.mu1, "mu2": svc.mu2, "repeat": 1}
        )
        prev = sw
    return {"kind": "scenario", "controller": {"mu_c": scenario.controller.mu_c}, "switches": entries}


def sweep_to_dict(spec: SweepSpec) -> dict:
    f = spec.fixed
    return {
        "kind": "sweep",
        "preset": spec.preset,
        "swept_variable": spec.swept_variable,
        "range": {"start": spec.start, "stop": spec.stop, "step": spec.step},
        "fixed": {
            "n_switches": f.n_switches,
            "lambda": f.lam,
            "p_packet_in": f.p_packet_in,
            "mu1": f.mu1,
            "mu2": f.mu2,
            "mu_c": f.mu_c,
        },
        "series_lambdas": list(spec.series_lambdas),
        "outputs": spec.outputs,
        "sim_packets": spec.sim_packets,
        "seed": spec.seed,
        "metric": spec.metric,
    }


def dumps(obj: Union[NetworkScenario, SweepSpec]) -> str:
    data = scenario_to_dict(obj) if isinstance(obj, NetworkScenario) else sweep_to_dict(obj)
    return json.dumps(data, indent=2) + "\n"
