"""Composition of switch and controller queues over a whole network."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .controller import ControllerParams, controller_mean_queue, controller_mean_sojourn
from .errors import InvalidParameterError, QueueingError, UnstableQueueError
from .hyperexp import STABILITY_GUARD, HyperExpService, QueueMetrics, solve_switch_queue


@dataclass(frozen=True)
class SwitchParams:
    lam: float
    service: HyperExpService

    @property
    def p_packet_in(self) -> float:
        return self.service.p_packet_in

    def utilization(self) -> float:
        return self.service.utilization(self.lam)


@dataclass(frozen=True)
class NetworkScenario:
    """``n`` switches sharing one controller."""

    switches: tuple[SwitchParams, ...]
    controller: ControllerParams

    def __post_init__(self):
        # accept any sequence but store a tuple so scenarios stay hashable
        object.__setattr__(self, "switches", tuple(self.switches))

    @property
    def n(self) -> int:
        return len(self.switches)

    @classmethod
    def uniform(cls, n, lam, p_packet_in, mu1, mu2, mu_c):
        sw = SwitchParams(lam, HyperExpService(p_packet_in, mu1, mu2))
        return cls((sw,) * n, ControllerParams(mu_c))


@dataclass(frozen=True)
class Violation:
    """One broken invariant.  ``kind`` is "stability" for load violations
    (the parameters are meaningful but the queue would grow without bound)
    and "parameter" for values outside their domain."""

    entity: str
    invariant: str
    value: float
    kind: str = "parameter"

    def __str__(self):
        return f"{self.entity}: {self.invariant} (value {self.value!r})"


@dataclass(frozen=True)
class SwitchReport:
    mean_sojourn_s: float
    mean_queue_len: float
    utilization: float


@dataclass(frozen=True)
class ControllerReport:
    mean_sojourn_s: float
    mean_queue_len: float
    utilization: float
    packet_in_rate: float


@dataclass(frozen=True)
class ScenarioReport:
    per_switch: tuple[SwitchReport, ...]
    controller: ControllerReport
    weighted_switch_delay: float
    per_switch_total: tuple[float, ...]
    per_switch_total_expected: tuple[float, ...]


def validate_scenario(scenario: NetworkScenario) -> list[Violation]:
    """Every broken scenario invariant, as data.  Empty means valid."""
    out: list[Violation] = []
    if scenario.n < 1:
        out.append(Violation("scenario", "needs at least one switch", scenario.n))
    lambda_c = 0.0
    rates_ok = True
    for i, sw in enumerate(scenario.switches):
        name = f"switch {i}"
        svc = sw.service
        before = len(out)
        if not sw.lam > 0 or math.isinf(sw.lam):
            out.append(Violation(name, "arrival rate lambda must be > 0", sw.lam))
        if not 0.0 <= svc.p_packet_in <= 1.0:
            out.append(Violation(name, "p_packet_in probability out of range [0, 1]", svc.p_packet_in))
        for label, mu in (("mu1", svc.mu1), ("mu2", svc.mu2)):
            if not mu > 0 or math.isinf(mu):
                out.append(Violation(name, f"{label} must be > 0", mu))
        if len(out) > before:
            rates_ok = False
        else:
            u = sw.utilization()
            if u >= 1.0 - STABILITY_GUARD:
                out.append(Violation(name, "utilization must be < 1", u, "stability"))
            lambda_c += sw.lam * svc.p_packet_in
    mu_c = scenario.controller.mu_c
    if not mu_c > 0 or math.isinf(mu_c):
        out.append(Violation("controller", "mu_c must be > 0", mu_c))
    elif rates_ok and lambda_c >= mu_c:
        out.append(
            Violation(
                "controller", f"packet-in rate lambda_c must be < mu_c={mu_c!r}", lambda_c, "stability"
            )
        )
    return out


def aggregate_packet_in_rate(scenario: NetworkScenario) -> float:
    """Total packet-in message rate offered to the controller."""
    if scenario.n < 1:
        raise InvalidParameterError("scenario needs at least one switch")
    return math.fsum(sw.lam * sw.service.p_packet_in for sw in scenario.switches)


@lru_cache(maxsize=4096)
def _switch_metrics(svc: HyperExpService, lam: float) -> QueueMetrics:
    return solve_switch_queue(svc, lam)[1]


def switch_metrics(scenario: NetworkScenario, i: int) -> QueueMetrics:
    if not 0 <= i < scenario.n:
        raise IndexError(f"switch index {i} out of range for {scenario.n} switches")
    sw = scenario.switches[i]
    try:
        return _switch_metrics(sw.service, sw.lam)
    except UnstableQueueError as exc:
        raise UnstableQueueError(
            f"switch {i}: {exc}", utilization=exc.utilization, entity=f"switch {i}"
        ) from None
    except QueueingError as exc:
        raise type(exc)(f"switch {i}: {exc}") from None


def weighted_switch_delay(scenario: NetworkScenario) -> float:
    """Traffic-weighted mean switch sojourn time (seconds)."""
    if scenario.n < 1:
        raise InvalidParameterError("scenario needs at least one switch")
    total = math.fsum(sw.lam for sw in scenario.switches)
    return math.fsum(
        sw.lam / total * switch_metrics(scenario, i).mean_sojourn_s
        for i, sw in enumerate(scenario.switches)
    )


def _controller_delay(scenario: NetworkScenario) -> float:
    return controller_mean_sojourn(scenario.controller, aggregate_packet_in_rate(scenario))


def total_delay_per_switch(scenario: NetworkScenario, i: int, expected: bool = False) -> float:
    """Switch sojourn plus controller sojourn for packets entering switch ``i``.

    By default the controller term is added unconditionally to every packet.
    ``expected=True`` weights it by the switch's packet-in probability
    instead (an extension: only packet-in packets visit the controller).
    """
    t_switch = switch_metrics(scenario, i).mean_sojourn_s
    t_ctrl = _controller_delay(scenario)
    if expected:
        return scenario.switches[i].service.p_packet_in * t_ctrl + t_switch
    return t_ctrl + t_switch


def analyze_scenario(scenario: NetworkScenario) -> ScenarioReport:
    lambda_c = aggregate_packet_in_rate(scenario)
    switches = []
    for i in range(scenario.n):
        m = switch_metrics(scenario, i)
        switches.append(SwitchReport(m.mean_sojourn_s, m.mean_queue_len, m.utilization))
    t_c = controller_mean_sojourn(scenario.controller, lambda_c)
    ctrl = ControllerReport(
        mean_sojourn_s=t_c,
        mean_queue_len=controller_mean_queue(scenario.controller, lambda_c),
        utilization=lambda_c / scenario.controller.mu_c,
        packet_in_rate=lambda_c,
    )
    return ScenarioReport(
        per_switch=tuple(switches),
        controller=ctrl,
        weighted_switch_delay=weighted_switch_delay(scenario),
        per_switch_total=tuple(t_c + s.mean_sojourn_s for s in switches),
        per_switch_total_expected=tuple(
            sw.service.p_packet_in * t_c + s.mean_sojourn_s
            for sw, s in zip(scenario.switches, switches)
        ),
    )
