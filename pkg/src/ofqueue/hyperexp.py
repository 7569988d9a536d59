"""M/H2/1 switch queue solved as a quasi-birth-death process.

Levels count packets in the switch, phases track the service class of the
packet in service (phase 0: packet-in path at ``mu1``, phase 1: direct
forwarding at ``mu2``).  The rate matrix R is found by the natural
fixed-point iteration and the stationary distribution is matrix-geometric:
``pi_k = pi_1 @ R**(k-1)`` for k >= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    InvalidParameterError,
    SingularMatrixError,
    UnstableQueueError,
)

# Loads within this distance of 1 are treated as unstable: (I - R) becomes
# numerically singular there.
STABILITY_GUARD = 1e-9
DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000
_DET_FLOOR = 1e-300
# R entries lie in [0, 1), so a step this small is at the rounding floor.
_EPS_STEP = 4 * np.finfo(float).eps
_STALL_STEPS = 25


@dataclass(frozen=True)
class HyperExpService:
    """Two-phase hyperexponential service law of one switch."""

    p_packet_in: float
    mu1: float
    mu2: float

    def violations(self) -> list[str]:
        out = []
        if not (0.0 <= self.p_packet_in <= 1.0) or math.isnan(self.p_packet_in):
            out.append(f"p_packet_in={self.p_packet_in!r}: probability out of range [0, 1]")
        if not self.mu1 > 0 or math.isinf(self.mu1):
            out.append(f"mu1={self.mu1!r}: service rate must be positive and finite")
        if not self.mu2 > 0 or math.isinf(self.mu2):
            out.append(f"mu2={self.mu2!r}: service rate must be positive and finite")
        return out

    def check(self) -> None:
        problems = self.violations()
        if problems:
            raise InvalidParameterError("; ".join(problems))

    @property
    def phase_probs(self) -> tuple[float, float]:
        return (self.p_packet_in, 1.0 - self.p_packet_in)

    @property
    def rates(self) -> tuple[float, float]:
        return (self.mu1, self.mu2)

    def mean_service_time(self) -> float:
        p = self.p_packet_in
        return p / self.mu1 + (1.0 - p) / self.mu2

    def second_moment(self) -> float:
        p = self.p_packet_in
        return 2.0 * p / self.mu1**2 + 2.0 * (1.0 - p) / self.mu2**2

    def utilization(self, lam: float) -> float:
        return lam * self.mean_service_time()


@dataclass(frozen=True)
class QbdBlocks:
    """Generator blocks of the level-independent part and the empty level.

    ``a0``/``a1``/``a2`` move one level up / stay / one level down for
    levels >= 1 (``a2`` is only used from level 2 down).  The empty level is a
    single state: ``boundary_b00`` is 1x1, ``boundary_b01`` 1x2 and
    ``boundary_b10`` 2x1.
    """

    a0: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    boundary_b00: np.ndarray
    boundary_b01: np.ndarray
    boundary_b10: np.ndarray
    arrival_rate: float
    utilization: float

    def generator(self, levels: int) -> np.ndarray:
        """Dense generator truncated after ``levels`` non-empty levels.

        The last level keeps its ``a0`` term out of the matrix, so only rows
        below the truncation are conservative.  Used by tests.
        """
        size = 1 + 2 * levels
        q = np.zeros((size, size))
        q[0, 0] = self.boundary_b00[0, 0]
        q[0, 1:3] = self.boundary_b01[0]
        q[1:3, 0] = self.boundary_b10[:, 0]
        for k in range(levels):
            lo = 1 + 2 * k
            q[lo:lo + 2, lo:lo + 2] = self.a1
            if k + 1 < levels:
                q[lo:lo + 2, lo + 2:lo + 4] = self.a0
            if k > 0:
                q[lo:lo + 2, lo - 2:lo] = self.a2
        return q


@dataclass(frozen=True)
class StationaryDistribution:
    pi0: float
    pi1: np.ndarray
    rate_matrix_r: np.ndarray
    spectral_radius_r: float

    def phase_vector(self, k: int) -> np.ndarray:
        if k < 1:
            raise ValueError("phase vectors exist for levels k >= 1")
        return self.pi1 @ np.linalg.matrix_power(self.rate_matrix_r, k - 1)

    def level_probability(self, k: int) -> float:
        """Probability of exactly ``k`` packets (phase-marginal)."""
        if k == 0:
            return self.pi0
        return float(self.phase_vector(k).sum())

    def level_probabilities(self, kmax: int) -> np.ndarray:
        out = np.empty(kmax + 1)
        out[0] = self.pi0
        v = self.pi1.copy()
        for k in range(1, kmax + 1):
            out[k] = v.sum()
            v = v @ self.rate_matrix_r
        return out

    def total_mass(self) -> float:
        n = inv2(np.eye(2) - self.rate_matrix_r)
        return float(self.pi0 + self.pi1 @ n @ np.ones(2))


@dataclass(frozen=True)
class QueueMetrics:
    utilization: float
    mean_queue_len: float
    mean_sojourn_s: float
    arrival_rate: float


def inv2(m: np.ndarray) -> np.ndarray:
    """Inverse of a 2x2 matrix via the adjugate."""
    a, b = m[0, 0], m[0, 1]
    c, d = m[1, 0], m[1, 1]
    det = a * d - b * c
    if abs(det) < _DET_FLOOR:
        raise SingularMatrixError(f"2x2 block is singular (det={det!r})")
    return np.array([[d, -b], [-c, a]]) / det


def spectral_radius2(m: np.ndarray) -> float:
    tr = m[0, 0] + m[1, 1]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = tr * tr / 4.0 - det
    if disc >= 0:
        root = math.sqrt(disc)
        return max(abs(tr / 2.0 + root), abs(tr / 2.0 - root))
    # complex pair: |lambda|^2 = det
    return math.sqrt(det)


def _check_stable(svc: HyperExpService, lam: float) -> float:
    u = svc.utilization(lam)
    if u >= 1.0 - STABILITY_GUARD:
        raise UnstableQueueError(
            f"switch queue unstable: utilization {u:.9g} >= 1", utilization=u
        )
    return u


def build_qbd_blocks(svc: HyperExpService, lam: float) -> QbdBlocks:
    svc.check()
    if not lam > 0 or math.isinf(lam):
        raise InvalidParameterError(f"arrival rate must be positive and finite, got {lam!r}")
    beta = np.array(svc.phase_probs)
    mu = np.array(svc.rates)
    a0 = lam * np.eye(2)
    a1 = -np.diag(lam + mu)
    a2 = np.outer(mu, beta)
    b00 = np.array([[-lam]])
    b01 = lam * beta[np.newaxis, :]
    b10 = mu[:, np.newaxis]
    return QbdBlocks(
        a0=a0,
        a1=a1,
        a2=a2,
        boundary_b00=b00,
        boundary_b01=b01,
        boundary_b10=b10,
        arrival_rate=float(lam),
        utilization=svc.utilization(lam),
    )


def rate_matrix_residual(r: np.ndarray, blocks: QbdBlocks) -> float:
    res = r @ r @ blocks.a2 + r @ blocks.a1 + blocks.a0
    return float(np.abs(res).max())


def solve_rate_matrix(
    blocks: QbdBlocks, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> np.ndarray:
    """Minimal nonnegative solution of ``R^2 A2 + R A1 + A0 = 0``.

    Iterates ``R <- -(A0 + R^2 A2) A1^-1`` from zero.  Once successive
    iterates differ by at most ``tol`` and the residual is within
    ``tol * max|A0|``, iteration continues until the step stops shrinking,
    i.e. R is converged to working precision.  Near-critical loads need this:
    the error left after a ``tol``-sized step is about ``tol / (1 - sp(R))``.
    """
    if not tol > 0:
        raise InvalidParameterError("tol must be positive")
    if blocks.utilization >= 1.0 - STABILITY_GUARD:
        raise UnstableQueueError(
            f"switch queue unstable: utilization {blocks.utilization:.9g} >= 1",
            utilization=blocks.utilization,
        )
    a1_inv = inv2(blocks.a1)
    # Unrolled 2x2 products: numpy call overhead dominates at this size and
    # near-critical loads need tens of thousands of iterations.
    p00, p01 = -blocks.a0[0, 0], -blocks.a0[0, 1]
    p10, p11 = -blocks.a0[1, 0], -blocks.a0[1, 1]
    q = blocks.a2
    q00, q01, q10, q11 = q[0, 0], q[0, 1], q[1, 0], q[1, 1]
    m00, m01, m10, m11 = a1_inv[0, 0], a1_inv[0, 1], a1_inv[1, 0], a1_inv[1, 1]
    a0_scale = float(np.abs(blocks.a0).max())

    r00 = r01 = r10 = r11 = 0.0
    converged = False
    best_diff = math.inf
    stalled = 0
    for _ in range(max_iter):
        s00 = r00 * r00 + r01 * r10
        s01 = r00 * r01 + r01 * r11
        s10 = r10 * r00 + r11 * r10
        s11 = r10 * r01 + r11 * r11
        t00 = p00 - (s00 * q00 + s01 * q10)
        t01 = p01 - (s00 * q01 + s01 * q11)
        t10 = p10 - (s10 * q00 + s11 * q10)
        t11 = p11 - (s10 * q01 + s11 * q11)
        n00 = t00 * m00 + t01 * m10
        n01 = t00 * m01 + t01 * m11
        n10 = t10 * m00 + t11 * m10
        n11 = t10 * m01 + t11 * m11
        diff = max(abs(n00 - r00), abs(n01 - r01), abs(n10 - r10), abs(n11 - r11))
        r00, r01, r10, r11 = n00, n01, n10, n11
        if diff < best_diff:
            best_diff, stalled = diff, 0
        else:
            stalled += 1
        if converged and (diff <= _EPS_STEP or stalled >= _STALL_STEPS):
            break
        if not converged and diff <= tol:
            r = np.array([[r00, r01], [r10, r11]])
            converged = rate_matrix_residual(r, blocks) <= tol * a0_scale
    if not converged:
        raise ConvergenceError(
            f"rate matrix iteration did not converge in {max_iter} steps"
            f" (last step {diff:.3g})"
        )
    r = np.array([[r00, r01], [r10, r11]])
    # Iterates increase monotonically from 0, so negatives are rounding noise.
    np.clip(r, 0.0, None, out=r)
    return r


def solve_switch_queue(
    svc: HyperExpService,
    lam: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[StationaryDistribution, QueueMetrics]:
    blocks = build_qbd_blocks(svc, lam)
    u = _check_stable(svc, lam)
    r = solve_rate_matrix(blocks, tol=tol, max_iter=max_iter)
    eye = np.eye(2)
    n_inv = inv2(eye - r)
    ones = np.ones(2)

    # Boundary equations pi0*B00 + pi1*B10 = 0 and pi0*B01 + pi1*(A1 + R A2) = 0;
    # the first column is swapped for the normalisation condition.
    m = np.zeros((3, 3))
    m[0, 0] = blocks.boundary_b00[0, 0]
    m[0, 1:] = blocks.boundary_b01[0]
    m[1:, 0] = blocks.boundary_b10[:, 0]
    m[1:, 1:] = blocks.a1 + r @ blocks.a2
    m[0, 0] = 1.0
    m[1:, 0] = n_inv @ ones
    rhs = np.array([1.0, 0.0, 0.0])
    x = np.linalg.solve(m.T, rhs)
    pi0 = float(x[0])
    pi1 = x[1:].copy()

    mean_n = float(pi1 @ n_inv @ n_inv @ ones)
    for arr in (pi1, r):
        arr.setflags(write=False)
    dist = StationaryDistribution(
        pi0=pi0, pi1=pi1, rate_matrix_r=r, spectral_radius_r=spectral_radius2(r)
    )
    metrics = QueueMetrics(
        utilization=u, mean_queue_len=mean_n, mean_sojourn_s=mean_n / lam, arrival_rate=float(lam)
    )
    return dist, metrics


def pollaczek_khinchine_mean(svc: HyperExpService, lam: float) -> QueueMetrics:
    """Closed-form M/G/1 mean occupancy for the same service law."""
    svc.check()
    if not lam > 0:
        raise InvalidParameterError(f"arrival rate must be positive, got {lam!r}")
    u = _check_stable(svc, lam)
    mean_n = u + lam * lam * svc.second_moment() / (2.0 * (1.0 - u))
    return QueueMetrics(
        utilization=u, mean_queue_len=mean_n, mean_sojourn_s=mean_n / lam, arrival_rate=float(lam)
    )
