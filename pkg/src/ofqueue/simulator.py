"""Seeded packet-level simulation of switches feeding one controller.

Each switch is a FIFO single-server queue with Poisson arrivals and
two-class exponential service; packet-in packets also send a message to a
FIFO exponential controller.  Two engines produce the same sample path from
the same random draws:

* ``"vectorized"`` (default) advances each FIFO station in closed form,
  ``D_k = max(A_k, D_{k-1}) + S_k`` written as a running maximum.
* ``"event"`` is a heap-ordered event loop, ties broken by
  ``(timestamp, sequence number)``.  It is slow and kept as a cross-check.

Variants: ``paper-additive`` sends the packet-in message when the packet
arrives at the switch (the thinned Poisson stream the analytic model
assumes) and scores a packet's total delay as mean switch sojourn plus mean
controller sojourn.  ``feedback`` sends the message when the packet leaves
the switch and scores each packet-in packet with its own controller delay.
"""

from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import stats

from .errors import InvalidParameterError
from .hyperexp import HyperExpService
from .network import NetworkScenario, validate_scenario

PRNG_ALGORITHM = "numpy PCG64, one stream per station via SeedSequence(seed).spawn(n + 1)"
VARIANTS = ("paper-additive", "feedback")
PACKET_IN = "packet-in"
DIRECT = "direct"

_TWO_M53 = 2.0**-53

InterarrivalSampler = Callable[[np.random.Generator, float, int], np.ndarray]


class SimulationWarning(UserWarning):
    pass


def open_uniforms(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform variates on the open interval (0, 1)."""
    return (rng.integers(0, 2**53, size=size, dtype=np.int64) + 0.5) * _TWO_M53


def exponential_interarrivals(rng: np.random.Generator, rate: float, size: int) -> np.ndarray:
    return -np.log(open_uniforms(rng, size)) / rate


def sample_service(phase: str, svc: HyperExpService, uniform: float) -> float:
    """Inverse-transform exponential service time for one packet."""
    if not 0.0 < uniform < 1.0:
        raise InvalidParameterError(f"uniform variate must lie in (0, 1), got {uniform!r}")
    if phase == PACKET_IN:
        mu = svc.mu1
    elif phase == DIRECT:
        mu = svc.mu2
    else:
        raise InvalidParameterError(f"unknown service phase {phase!r}")
    return -math.log(uniform) / mu


def _service_times(is_packet_in: np.ndarray, svc: HyperExpService, u: np.ndarray) -> np.ndarray:
    # same formula as sample_service, elementwise
    rate = np.where(is_packet_in, svc.mu1, svc.mu2)
    return -np.log(u) / rate


@dataclass(frozen=True)
class SimConfig:
    scenario: NetworkScenario
    horizon_packets: int
    warmup_packets: Optional[int] = None
    seed: int = 0
    variant: str = "paper-additive"
    interarrival: InterarrivalSampler = exponential_interarrivals
    batches: int = 20

    @property
    def warmup(self) -> int:
        if self.warmup_packets is None:
            return self.horizon_packets // 10
        return self.warmup_packets


@dataclass(frozen=True)
class Estimate:
    mean: float
    half_width: float

    def covers(self, value: float) -> bool:
        return abs(self.mean - value) <= self.half_width


@dataclass(frozen=True)
class SimResult:
    per_switch_mean_sojourn: tuple[Estimate, ...]
    controller_mean_sojourn: Optional[Estimate]
    per_switch_mean_queue_len: tuple[float, ...]
    per_switch_arrival_queue_len: tuple[Estimate, ...]
    per_switch_packet_in_fraction: tuple[float, ...]
    per_switch_mean_total: tuple[float, ...]
    completed_packets: tuple[int, ...]
    controller_completed: int
    metadata: dict = field(default_factory=dict)


def batch_means(x: np.ndarray, batches: int = 20, confidence: float = 0.95) -> Estimate:
    """Sample mean with a non-overlapping batch-means confidence half-width."""
    x = np.asarray(x, dtype=float)
    size = len(x) // batches
    if batches < 2 or size < 1:
        raise InvalidParameterError(f"need at least {batches} observations for {batches} batches")
    bm = x[: size * batches].reshape(batches, size).mean(axis=1)
    q = stats.t.ppf(0.5 + confidence / 2.0, batches - 1)
    half = float(q * bm.std(ddof=1) / math.sqrt(batches))
    return Estimate(float(x.mean()), half)


@dataclass
class _Streams:
    arrivals: list  # per switch, arrival epochs
    packet_in: list  # per switch, bool class flags
    service: list  # per switch, service times
    ctrl_service: np.ndarray  # k-th controller message served gets ctrl_service[k]
    t_end: float  # controller messages after this epoch are not simulated


@dataclass
class _Paths:
    departures: list
    ctrl_arrivals: np.ndarray  # in service order
    ctrl_departures: np.ndarray
    ctrl_source: np.ndarray  # (switch, packet) of each message, in service order


def _draw(config: SimConfig) -> _Streams:
    sc = config.scenario
    n_pk = config.horizon_packets
    children = np.random.SeedSequence(config.seed).spawn(sc.n + 1)
    arrivals, packet_in, service = [], [], []
    for sw, child in zip(sc.switches, children[:-1]):
        rng = np.random.Generator(np.random.PCG64(child))
        gaps = np.asarray(config.interarrival(rng, sw.lam, n_pk), dtype=float)
        if gaps.shape != (n_pk,):
            raise InvalidParameterError("interarrival sampler returned the wrong number of gaps")
        arrivals.append(np.cumsum(gaps))
        cls = open_uniforms(rng, n_pk) < sw.service.p_packet_in
        packet_in.append(cls)
        service.append(_service_times(cls, sw.service, open_uniforms(rng, n_pk)))
    t_end = min(a[-1] for a in arrivals)
    # upper bound on the messages that can reach the controller
    n_msgs = int(sum(int(c.sum()) for c in packet_in))
    ctrl_rng = np.random.Generator(np.random.PCG64(children[-1]))
    ctrl_service = -np.log(open_uniforms(ctrl_rng, n_msgs)) / sc.controller.mu_c
    return _Streams(arrivals, packet_in, service, ctrl_service, t_end)


def _fifo(arrivals: np.ndarray, service: np.ndarray) -> np.ndarray:
    # D_k = C_k + max_{j<=k}(A_j - C_{j-1}), C = cumulative service
    csum = np.cumsum(service)
    prev = np.concatenate(([0.0], csum[:-1]))
    return csum + np.maximum.accumulate(arrivals - prev)


def _run_vectorized(streams: _Streams, variant: str) -> _Paths:
    departures = [_fifo(a, s) for a, s in zip(streams.arrivals, streams.service)]
    times, sw_idx, pk_idx = [], [], []
    for i, (a, d, cls) in enumerate(zip(streams.arrivals, departures, streams.packet_in)):
        idx = np.flatnonzero(cls)
        t = a[idx] if variant == "paper-additive" else d[idx]
        keep = t <= streams.t_end
        times.append(t[keep])
        pk_idx.append(idx[keep])
        sw_idx.append(np.full(keep.sum(), i, dtype=np.int64))
    times = np.concatenate(times)
    sw_idx = np.concatenate(sw_idx)
    pk_idx = np.concatenate(pk_idx)
    seq = np.arange(len(times))
    order = np.lexsort((seq, times))
    c_arr = times[order]
    c_dep = _fifo(c_arr, streams.ctrl_service[: len(c_arr)])
    src = np.stack([sw_idx[order], pk_idx[order]], axis=1)
    return _Paths(departures, c_arr, c_dep, src)


_ARRIVE, _DEPART, _CTRL_ARRIVE, _CTRL_DEPART = range(4)


def _run_events(streams: _Streams, variant: str) -> _Paths:
    n = len(streams.arrivals)
    departures = [np.empty_like(a) for a in streams.arrivals]
    queues = [[] for _ in range(n)]  # waiting packet indices, FIFO via head pointer
    heads = [0] * n
    busy = [False] * n
    ctrl_wait: list = []
    ctrl_head = 0
    ctrl_busy = False
    c_arr, c_dep, c_src = [], [], []
    heap: list = []
    seq = 0

    def push(t, kind, a, b):
        nonlocal seq
        heapq.heappush(heap, (t, seq, kind, a, b))
        seq += 1

    for i in range(n):
        push(streams.arrivals[i][0], _ARRIVE, i, 0)

    while heap:
        t, _, kind, a, b = heapq.heappop(heap)
        if kind == _ARRIVE:
            i, k = a, b
            if busy[i]:
                queues[i].append(k)
            else:
                busy[i] = True
                push(t + streams.service[i][k], _DEPART, i, k)
            if k + 1 < len(streams.arrivals[i]):
                push(streams.arrivals[i][k + 1], _ARRIVE, i, k + 1)
            if variant == "paper-additive" and streams.packet_in[i][k] and t <= streams.t_end:
                push(t, _CTRL_ARRIVE, i, k)
        elif kind == _DEPART:
            i, k = a, b
            departures[i][k] = t
            if heads[i] < len(queues[i]):
                nxt = queues[i][heads[i]]
                heads[i] += 1
                push(t + streams.service[i][nxt], _DEPART, i, nxt)
            else:
                busy[i] = False
            if variant == "feedback" and streams.packet_in[i][k] and t <= streams.t_end:
                push(t, _CTRL_ARRIVE, i, k)
        elif kind == _CTRL_ARRIVE:
            pos = len(c_arr)
            c_arr.append(t)
            c_src.append((a, b))
            c_dep.append(math.nan)
            if ctrl_busy:
                ctrl_wait.append(pos)
            else:
                ctrl_busy = True
                push(t + streams.ctrl_service[pos], _CTRL_DEPART, pos, 0)
        else:
            c_dep[a] = t
            if ctrl_head < len(ctrl_wait):
                nxt = ctrl_wait[ctrl_head]
                ctrl_head += 1
                push(t + streams.ctrl_service[nxt], _CTRL_DEPART, nxt, 0)
            else:
                ctrl_busy = False

    src = np.array(c_src, dtype=np.int64).reshape(-1, 2)
    return _Paths(departures, np.array(c_arr), np.array(c_dep), src)


def _time_average_in_system(a: np.ndarray, d: np.ndarray, t0: float, t1: float) -> float:
    overlap = np.minimum(d, t1) - np.maximum(a, t0)
    return float(np.clip(overlap, 0.0, None).sum() / (t1 - t0))


def run_simulation(config: SimConfig, engine: str = "vectorized") -> SimResult:
    sc = config.scenario
    n_pk, warm = config.horizon_packets, config.warmup
    if n_pk <= 0:
        raise InvalidParameterError("horizon_packets must be positive")
    if not 0 <= warm < n_pk:
        raise InvalidParameterError("need horizon_packets > warmup_packets >= 0")
    if n_pk - warm < config.batches:
        raise InvalidParameterError("too few measured packets for the batch count")
    if config.variant not in VARIANTS:
        raise InvalidParameterError(f"unknown variant {config.variant!r}")
    if sc.n < 1:
        raise InvalidParameterError("scenario needs at least one switch")
    for sw in sc.switches:
        sw.service.check()
        if not sw.lam > 0:
            raise InvalidParameterError(f"arrival rate must be positive, got {sw.lam!r}")
    sc.controller.check()
    problems = validate_scenario(sc)
    if problems:
        warnings.warn(
            "simulating an unstable scenario, queues may grow without bound: "
            + "; ".join(map(str, problems)),
            SimulationWarning,
            stacklevel=2,
        )

    streams = _draw(config)
    if engine == "vectorized":
        paths = _run_vectorized(streams, config.variant)
    elif engine == "event":
        paths = _run_events(streams, config.variant)
    else:
        raise InvalidParameterError(f"unknown engine {engine!r}")

    n_msgs = len(paths.ctrl_arrivals)
    ctrl_soj = paths.ctrl_departures - paths.ctrl_arrivals
    ctrl_warm = (n_msgs * warm) // n_pk
    ctrl_est = None
    if n_msgs - ctrl_warm >= config.batches:
        ctrl_est = batch_means(ctrl_soj[ctrl_warm:], config.batches)

    if config.variant == "feedback":
        # controller delay of each packet-in packet, NaN where its message was cut
        msg_delay = [np.full(n_pk, math.nan) for _ in range(sc.n)]
        for i in range(sc.n):
            mine = paths.ctrl_source[:, 0] == i
            msg_delay[i][paths.ctrl_source[mine, 1]] = ctrl_soj[mine]

    sojourn, queue_t, queue_a, frac, totals = [], [], [], [], []
    for i, sw in enumerate(sc.switches):
        a, d = streams.arrivals[i], paths.departures[i]
        soj = (d - a)[warm:]
        est = batch_means(soj, config.batches)
        sojourn.append(est)
        queue_t.append(_time_average_in_system(a, d, a[warm], a[-1]))
        # packets ahead of arrival k: k minus departures strictly before it
        seen = np.arange(n_pk) - np.searchsorted(d, a, side="left")
        queue_a.append(batch_means(seen[warm:], config.batches))
        frac.append(float(streams.packet_in[i][warm:].mean()))
        if config.variant == "paper-additive":
            ctrl_mean = ctrl_est.mean if ctrl_est is not None else 1.0 / sc.controller.mu_c
            totals.append(est.mean + ctrl_mean)
        else:
            extra = np.where(streams.packet_in[i], msg_delay[i], 0.0)[warm:]
            ok = ~np.isnan(extra)
            totals.append(float((soj[ok] + extra[ok]).mean()))

    return SimResult(
        per_switch_mean_sojourn=tuple(sojourn),
        controller_mean_sojourn=ctrl_est,
        per_switch_mean_queue_len=tuple(queue_t),
        per_switch_arrival_queue_len=tuple(queue_a),
        per_switch_packet_in_fraction=tuple(frac),
        per_switch_mean_total=tuple(totals),
        completed_packets=tuple(n_pk - warm for _ in sc.switches),
        controller_completed=n_msgs - ctrl_warm,
        metadata={
            "prng": PRNG_ALGORITHM,
            "seed": config.seed,
            "variant": config.variant,
            "engine": engine,
            "batches": config.batches,
            "confidence": 0.95,
        },
    )
