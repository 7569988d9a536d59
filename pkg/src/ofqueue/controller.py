"""M/M/1 model of the controller's packet-in queue."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParameterError, UnstableQueueError


@dataclass(frozen=True)
class ControllerParams:
    """Controller service rate for packet-in messages (messages/s).

    The rate already includes switch-to-controller transmission time.
    """

    mu_c: float

    def violations(self) -> list[str]:
        if not self.mu_c > 0 or math.isinf(self.mu_c):
            return [f"mu_c={self.mu_c!r}: service rate must be positive and finite"]
        return []

    def check(self) -> None:
        problems = self.violations()
        if problems:
            raise InvalidParameterError("; ".join(problems))


def controller_utilization(params: ControllerParams, lambda_c: float) -> float:
    return lambda_c / params.mu_c


def _check(params: ControllerParams, lambda_c: float) -> None:
    params.check()
    if not lambda_c >= 0:
        raise InvalidParameterError(f"packet-in rate must be >= 0, got {lambda_c!r}")
    if lambda_c >= params.mu_c:
        raise UnstableQueueError(
            f"controller unstable: packet-in rate {lambda_c!r} >= mu_c {params.mu_c!r}",
            utilization=lambda_c / params.mu_c,
            entity="controller",
        )


def controller_mean_queue(params: ControllerParams, lambda_c: float) -> float:
    """Mean number of packet-in messages at the controller."""
    _check(params, lambda_c)
    return lambda_c / (params.mu_c - lambda_c)


def controller_mean_sojourn(params: ControllerParams, lambda_c: float) -> float:
    """Mean time a packet-in message spends at the controller (seconds)."""
    _check(params, lambda_c)
    return 1.0 / (params.mu_c - lambda_c)
