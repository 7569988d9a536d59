"""Analytic and simulated packet delay in OpenFlow networks.

Switches are M/H2/1 queues (solved by the matrix-geometric method), the
controller is an M/M/1 queue fed by the packet-in messages of all switches.
"""

from .controller import ControllerParams, controller_mean_queue, controller_mean_sojourn
from .errors import (
    ConvergenceError,
    InvalidParameterError,
    QueueingError,
    SingularMatrixError,
    UnstableQueueError,
)
from .hyperexp import (
    HyperExpService,
    QbdBlocks,
    QueueMetrics,
    StationaryDistribution,
    build_qbd_blocks,
    pollaczek_khinchine_mean,
    solve_rate_matrix,
    solve_switch_queue,
)
from .network import (
    NetworkScenario,
    ScenarioReport,
    SwitchParams,
    Violation,
    aggregate_packet_in_rate,
    analyze_scenario,
    total_delay_per_switch,
    validate_scenario,
    weighted_switch_delay,
)
from .simulator import SimConfig, SimResult, run_simulation, sample_service
from .sweep import PRESETS, SweepSpec, emit_report, run_sweep

__version__ = "0.1.0"
