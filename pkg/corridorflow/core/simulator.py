"""
Closed-loop simulation: handoff, waypoint, safety filter and an explicit
Euler step, repeated until the goal predicate holds, the filter fails or
the step budget runs out.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .corridor import Corridor, CorridorState, advance, initial_state, validate
from .geometry import barrier_arrays
from .kinematics import (
    DEFAULT_GOAL_TOL,
    DEFAULT_STEPS_PER_JOINT,
    Configuration,
    RobotModel,
    WorkspaceCloud,
    edge_points,
    in_goal_region,
    link_segments,
    reference_point,
    workspace_cloud,
)
from .models import RunStatus
from .safety import SafetyConfig, SafetyFilter
from ..utils.exceptions import (
    CorridorError,
    InfeasibleControlError,
    InvalidConfigurationError,
    UnsafeStateError,
    ValidationError,
)
from ..utils.validators import as_vector, validate_positive

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    max_steps: int = 20_000
    goal_tol: float = DEFAULT_GOAL_TOL
    safety: SafetyConfig = field(default_factory=SafetyConfig)
    record_every: int = 1
    workspace_resolution: int = DEFAULT_STEPS_PER_JOINT
    # Off: solve_time_s is written as 0 so traces compare byte for byte
    record_timing: bool = True
    audit_links: bool = True

    def __post_init__(self):
        validate_positive(self.dt, "dt", error=InvalidConfigurationError)
        if self.max_steps < 1:
            raise InvalidConfigurationError("max_steps must be >= 1")
        validate_positive(self.goal_tol, "goal_tol", error=InvalidConfigurationError)
        if self.record_every < 1:
            raise InvalidConfigurationError("record_every must be >= 1")
        if self.workspace_resolution < 2:
            raise InvalidConfigurationError("workspace_resolution must be >= 2")


@dataclass(frozen=True, eq=False)
class TraceRow:
    t: float
    state: np.ndarray
    u: np.ndarray
    active_set: int
    min_h: np.ndarray
    min_dist: float
    solve_time: float

    def configuration(self) -> Configuration:
        return Configuration(self.state[:2], self.state[2:])


@dataclass(frozen=True)
class ClampEvent:
    step: int
    joint: int
    angle: float


@dataclass(frozen=True)
class TimingStats:
    mean: float = 0.0
    median: float = 0.0
    p99: float = 0.0
    count: int = 0

    @classmethod
    def from_samples(cls, samples: Sequence[float]) -> "TimingStats":
        if len(samples) == 0:
            return cls()
        arr = np.asarray(samples, dtype=float)
        return cls(
            float(arr.mean()),
            float(np.median(arr)),
            float(np.percentile(arr, 99)),
            int(arr.shape[0]),
        )


@dataclass
class SimResult:
    status: RunStatus
    steps: int
    trace: List[TraceRow]
    timing: TimingStats
    final: Configuration
    solve_times: List[float] = field(default_factory=list)
    constraint_counts: List[int] = field(default_factory=list)
    clamp_events: List[ClampEvent] = field(default_factory=list)
    handoffs: List[Tuple[int, int]] = field(default_factory=list)
    link_violations: Optional[int] = None
    message: str = ""

    @property
    def reached_goal(self) -> bool:
        return self.status is RunStatus.REACHED_GOAL

    @property
    def min_distance(self) -> float:
        return min(row.min_dist for row in self.trace)


def _integrate(
    model: RobotModel, q: Configuration, u, dt: float
) -> Tuple[Configuration, List[Tuple[int, float]]]:
    u = as_vector(u, "u", model.input_dim)

    if model.is_rod:
        base = q.base + u[:2] * dt
        return Configuration(base, q.angles + u[2] * dt), []

    angles = q.angles.copy()
    joints = list(model.active_joint_indices)
    angles[joints] += u[: len(joints)] * dt
    base = q.base + u[len(joints) :] * dt

    clamped = []
    limits = model.joint_limits()
    for j in joints:
        lo, hi = limits[j]
        if angles[j] < lo or angles[j] > hi:
            angles[j] = min(max(angles[j], lo), hi)
            clamped.append((j, float(angles[j])))
    return Configuration(base, angles), clamped


def step(model: RobotModel, q: Configuration, u, dt: float) -> Configuration:
    """
    One explicit Euler step.

    Arm: active joint angles advance by their rates (clamped to the joint
    limits) and the base by (v_x, v_y). Rod: centre by (v_x, v_y), phi by omega.
    """
    q_next, clamped = _integrate(model, q, u, dt)
    for joint, angle in clamped:
        logger.debug("joint %d clamped at limit %.6f rad", joint + 1, angle)
    return q_next


def edge_min_barriers(
    model: RobotModel, q: Configuration, corridor: Corridor, state: CorridorState
) -> np.ndarray:
    """Per-edge minimum barrier value against the assigned sets."""
    points = edge_points(model, q)
    out = np.empty(points.shape[0])
    for k, (p, i) in enumerate(zip(points, state.assignment)):
        set_ = corridor.sets[i]
        values, _ = barrier_arrays(set_, p[: set_.dim])
        out[k] = float(values.min())
    return out


class GoalTest:
    """Goal predicate: workspace reach for arms, centre distance for rods."""

    def __init__(self, model: RobotModel, corridor: Corridor, q0: Configuration, cfg: SimConfig):
        self.model = model
        self.goal = corridor.goal
        self.tol = cfg.goal_tol
        self.cloud: Optional[WorkspaceCloud] = None
        if not model.is_rod:
            self.cloud = workspace_cloud(
                model, cfg.workspace_resolution, frozen_angles=q0.angles
            )

    def __call__(self, q: Configuration) -> bool:
        if self.model.is_rod:
            return float(np.linalg.norm(q.base - self.goal[:2])) <= self.tol
        return in_goal_region(self.model, q, self.goal, self.cloud, self.tol)


class _Recorder:
    def __init__(self, model: RobotModel, corridor: Corridor, cfg: SimConfig):
        self.model = model
        self.corridor = corridor
        self.cfg = cfg
        self.rows: List[TraceRow] = []

    def add(self, k, q, u, state, min_h=None, solve_time=0.0):
        if min_h is None:
            min_h = edge_min_barriers(self.model, q, self.corridor, state)
        self.rows.append(
            TraceRow(
                t=k * self.cfg.dt,
                state=q.vector(),
                u=np.asarray(u, dtype=float).copy(),
                active_set=state.index,
                min_h=np.asarray(min_h, dtype=float).copy(),
                min_dist=float(np.min(min_h)),
                solve_time=solve_time if self.cfg.record_timing else 0.0,
            )
        )


def check_start(model: RobotModel, corridor: Corridor, q0: Configuration) -> None:
    """Raise when the corridor is invalid or q0 starts outside its first set."""
    model.validate_configuration(q0)
    report = validate(corridor, edge_points(model, q0))
    corridor_problems = [p for p in report.failures() if not p.startswith("start")]
    if corridor_problems:
        raise CorridorError("Invalid corridor: " + "; ".join(corridor_problems))
    if report.start_in_first is False:
        raise UnsafeStateError(
            f"Start configuration is outside the first set "
            f"(edge points {list(report.start_outside)})",
            edge=report.start_outside[0],
            set_index=0,
        )


def run_scenario(
    model: RobotModel,
    corridor: Corridor,
    q0: Configuration,
    cfg: SimConfig,
    goal_test: Optional[GoalTest] = None,
) -> SimResult:
    """
    Simulate the filtered closed loop from q0.

    Rows are recorded every cfg.record_every steps; the first and the final
    state are always recorded.
    """
    check_start(model, corridor, q0)
    reached = goal_test if goal_test is not None else GoalTest(model, corridor, q0, cfg)
    safety = SafetyFilter(model, cfg.safety)
    recorder = _Recorder(model, corridor, cfg)
    zero = np.zeros(model.input_dim)

    q = q0
    state = initial_state(corridor, reference_point(model, q), model.edge_count)
    result = SimResult(RunStatus.TIMEOUT, 0, recorder.rows, TimingStats(), q0)

    if reached(q):
        recorder.add(0, q, zero, state)
        result.status = RunStatus.REACHED_GOAL
        return result

    k = 0
    while k < cfg.max_steps:
        previous = state.index
        state = advance(corridor, state, edge_points(model, q), reference_point(model, q))
        if state.index != previous:
            result.handoffs.append((k, state.index))

        try:
            u, diag = safety.filter(
                q, state.active_sets(corridor), state.waypoint, state.set_indices()
            )
        except (InfeasibleControlError, UnsafeStateError) as e:
            logger.warning("step %d: %s", k, e)
            result.status = RunStatus.INFEASIBLE
            result.message = str(e)
            break

        result.solve_times.append(diag.solve_time)
        result.constraint_counts.append(diag.constraint_count)
        if k % cfg.record_every == 0:
            recorder.add(k, q, u, state, diag.edge_min_barrier, diag.solve_time)

        q, clamped = _integrate(model, q, u, cfg.dt)
        for joint, angle in clamped:
            logger.debug("step %d: joint %d clamped at %.6f rad", k, joint + 1, angle)
            result.clamp_events.append(ClampEvent(k, joint, angle))
        k += 1

        if reached(q):
            result.status = RunStatus.REACHED_GOAL
            break

    if not recorder.rows or recorder.rows[-1].t != k * cfg.dt:
        recorder.add(k, q, zero, state)

    result.steps = k
    result.final = q
    result.timing = TimingStats.from_samples(result.solve_times)
    if cfg.audit_links:
        result.link_violations = len(audit_links(model, corridor, recorder.rows))
    logger.info(
        "run finished: %s after %d steps (median solve %.3e s)",
        result.status.value, k, result.timing.median,
    )
    return result


@dataclass(frozen=True)
class BenchRow:
    joints: int
    median: float
    p99: float
    constraints: int
    steps: Tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "joints": self.joints,
            "median_s": self.median,
            "p99_s": self.p99,
            "constraints": self.constraints,
            "steps": list(self.steps),
        }


def benchmark_scaling(
    model: RobotModel,
    corridor: Corridor,
    q0: Configuration,
    cfg: SimConfig,
    joint_counts: Sequence[int] = (1, 2, 3, 4),
    repeats: int = 3,
) -> List[BenchRow]:
    """
    Per-step safety filter time for arms with 1..4 rotating joints.

    Inactive joints keep their q0 angles. Every joint count gets an untimed
    warm-up run and repeats are interleaved round-robin across the counts.
    The median is taken over the per-repeat medians; p99 over every sample
    of the joint count. Rows follow the order of joint_counts.
    """
    if model.is_rod:
        raise ValidationError("Scaling benchmarks need a mobile arm")
    if repeats < 1:
        raise ValidationError("repeats must be >= 1")
    if not joint_counts:
        raise ValidationError("At least one joint count is required")

    arms = {n: model.with_active_joints(n) for n in joint_counts}
    goal_tests = {n: GoalTest(arm, corridor, q0, cfg) for n, arm in arms.items()}

    warm = replace(cfg, max_steps=min(cfg.max_steps, 20), audit_links=False)
    for n, arm in arms.items():
        run_scenario(arm, corridor, q0, warm, goal_tests[n])

    medians = {n: [] for n in arms}
    pooled = {n: [] for n in arms}
    steps = {n: [] for n in arms}
    constraints = {n: 0 for n in arms}
    for r in range(repeats):
        for n, arm in arms.items():
            result = run_scenario(arm, corridor, q0, cfg, goal_tests[n])
            medians[n].append(result.timing.median)
            pooled[n].extend(result.solve_times)
            steps[n].append(result.steps)
            if result.constraint_counts:
                constraints[n] = result.constraint_counts[0]
            logger.debug("bench joints=%d repeat=%d steps=%d", n, r, result.steps)

    table = []
    for n in arms:
        stats = TimingStats.from_samples(pooled[n])
        table.append(
            BenchRow(n, float(np.median(medians[n])), stats.p99, constraints[n], tuple(steps[n]))
        )
    return table


@dataclass(frozen=True)
class ScalingTrend:
    """How the median step time grows from the fewest to the most joints."""

    ratio: float
    monotonic: bool
    limit: float

    @property
    def within_limit(self) -> bool:
        return self.ratio < self.limit

    def summary(self) -> str:
        order = "non-decreasing" if self.monotonic else "not monotonic"
        verdict = "within" if self.within_limit else "above"
        return (
            f"median ratio {self.ratio:.2f}x ({verdict} {self.limit:.1f}x), "
            f"medians {order}"
        )


def scaling_trend(table: Sequence[BenchRow], limit: float = 2.0) -> ScalingTrend:
    """Median growth over a benchmark table, rows ordered by joint count."""
    if not table:
        raise ValidationError("Benchmark table is empty")
    validate_positive(limit, "limit")
    rows = sorted(table, key=lambda row: row.joints)
    medians = [row.median for row in rows]
    if medians[0] <= 0:
        raise ValidationError("Benchmark medians must be positive")
    monotonic = all(b >= a for a, b in zip(medians, medians[1:]))
    return ScalingTrend(medians[-1] / medians[0], monotonic, float(limit))


def min_distance_series(trace: Sequence[TraceRow]) -> List[List[Tuple[float, float]]]:
    """One (t, min H) series per edge point."""
    if not trace:
        raise ValidationError("Trace is empty")
    edges = trace[0].min_h.shape[0]
    return [[(row.t, float(row.min_h[e])) for row in trace] for e in range(edges)]


@dataclass(frozen=True)
class LinkViolation:
    t: float
    link: int
    set_index: int


def audit_links(
    model: RobotModel,
    corridor: Corridor,
    trace: Sequence[TraceRow],
    samples: int = 100,
    tolerance: float = 1e-4,
) -> List[LinkViolation]:
    """
    Link segments of recorded states that leave their active set.

    A segment passes when every sample lies within tolerance of the set.
    """
    violations = []
    for row in trace:
        set_ = corridor.sets[row.active_set]
        for link, (p, q) in enumerate(link_segments(model, row.configuration())):
            p, q = p[: set_.dim], q[: set_.dim]
            lam = np.linspace(0.0, 1.0, samples)[:, None]
            values, _ = barrier_arrays(set_, lam * p + (1.0 - lam) * q)
            if values.min() < -tolerance:
                violations.append(LinkViolation(row.t, link, row.active_set))
    return violations

