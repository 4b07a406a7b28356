"""
CBF constraint assembly, nominal proportional control and the safety filter.

The plant is driftless (velocity-controlled kinematics), so for an edge point
k with barrier H the CBF condition reduces to the linear row

    grad H(x_k)^T J_k u  >=  -gamma * H(x_k)

and u = 0 is always admissible while every edge point is inside its set.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .geometry import ConvexSet, barrier_arrays
from .kinematics import (
    Configuration,
    RobotModel,
    edge_kinematics,
    reference_jacobian,
    reference_point,
)
from .models import InfeasibilityPolicy, SolveStatus
from .qp_solver import LeastDistanceSolver, QpProblem, QpSolution
from ..utils.exceptions import (
    InfeasibleControlError,
    InvalidConfigurationError,
    UnsafeStateError,
)
from ..utils.validators import as_vector, validate_positive

logger = logging.getLogger(__name__)

# Pseudo set index used for joint-limit rows
JOINT_LIMIT_SET = -1


@dataclass(frozen=True)
class ClassKappa:
    """Linear extended class-K function alpha(H) = gamma * H."""

    gamma: float = 1.0

    def __post_init__(self):
        validate_positive(self.gamma, "gamma", error=InvalidConfigurationError)

    def __call__(self, value):
        return self.gamma * value


@dataclass(frozen=True)
class CbfRow:
    coefficients: np.ndarray
    offset: float
    edge: int
    set_index: int
    face: int
    barrier: float


@dataclass(frozen=True)
class SafetyConfig:
    k_p: float = 1.0
    kappa: ClassKappa = field(default_factory=ClassKappa)
    damping: float = 0.01
    policy: InfeasibilityPolicy = InfeasibilityPolicy.HALT
    joint_limit_cbf: bool = True
    max_speed: Optional[float] = None
    unsafe_tolerance: float = 1e-4

    def __post_init__(self):
        err = InvalidConfigurationError
        validate_positive(self.k_p, "k_p", error=err)
        validate_positive(self.damping, "damping", allow_zero=True, error=err)
        if self.max_speed is not None:
            validate_positive(self.max_speed, "max_speed", error=err)
        validate_positive(self.unsafe_tolerance, "unsafe_tolerance", allow_zero=True, error=err)


@dataclass
class SafetyDiagnostics:
    edge_min_barrier: np.ndarray
    constraint_count: int
    active_count: int
    solve_time: float
    status: SolveStatus
    iterations: int = 0
    fallback: bool = False


def nominal_control(
    model: RobotModel, q: Configuration, waypoint, cfg: SafetyConfig
) -> np.ndarray:
    """
    Proportional task velocity toward waypoint, mapped into input space.

    Rod: u_p = (v_x, v_y, 0). Arm: damped least squares through the
    end-effector Jacobian, u_p = J^T (J J^T + lambda^2 I)^-1 v.
    """
    target = as_vector(waypoint, "waypoint", 3)
    x_ref = reference_point(model, q)
    v = cfg.k_p * (target - x_ref)
    if model.is_rod:
        v[2] = 0.0

    if cfg.max_speed is not None:
        speed = float(np.linalg.norm(v))
        if speed > cfg.max_speed:
            v *= cfg.max_speed / speed

    if model.is_rod:
        return np.array([v[0], v[1], 0.0])

    J = reference_jacobian(model, q)
    JJt = J @ J.T + cfg.damping**2 * np.eye(3)
    return J.T @ np.linalg.lstsq(JJt, v, rcond=None)[0]


def _edge_rows(
    model: RobotModel,
    q: Configuration,
    active_sets: Sequence[Sequence[ConvexSet]],
    kappa: ClassKappa,
    set_indices: Optional[Sequence[Sequence[int]]],
    unsafe_tolerance: float,
):
    points, jacs = edge_kinematics(model, q)
    if len(active_sets) != points.shape[0]:
        raise InvalidConfigurationError(
            f"Expected active sets for {points.shape[0]} edge points, got {len(active_sets)}"
        )

    coeffs, offsets, meta, barriers = [], [], [], []
    edge_min = np.full(points.shape[0], np.inf)

    first = active_sets[0][0] if active_sets and active_sets[0] else None
    if first is not None and all(len(s) == 1 and s[0] is first for s in active_sets):
        return _shared_set_rows(points, jacs, first, kappa, set_indices, unsafe_tolerance)

    for k, sets in enumerate(active_sets):
        if not sets:
            raise InvalidConfigurationError(f"Edge point {k} has no active set")
        for pos, set_ in enumerate(sets):
            set_index = set_indices[k][pos] if set_indices is not None else pos
            n = set_.dim
            values, grads = barrier_arrays(set_, points[k, :n])
            values, grads = values[0], grads[0]

            worst = float(np.min(values))
            if worst < -unsafe_tolerance:
                raise UnsafeStateError(
                    f"Edge point {k} is outside set {set_index} (H = {worst:.3e})",
                    edge=k,
                    set_index=set_index,
                )
            edge_min[k] = min(edge_min[k], worst)

            coeffs.append(grads @ jacs[k, :n, :])
            offsets.append(-kappa(values))
            barriers.append(values)
            meta.extend((k, set_index, face) for face in range(values.shape[0]))

    return coeffs, offsets, barriers, meta, edge_min


def _shared_set_rows(points, jacs, set_, kappa, set_indices, unsafe_tolerance):
    """Vectorised rows when every edge point shares one active set."""
    n = set_.dim
    E = points.shape[0]
    values, grads = barrier_arrays(set_, points[:, :n])
    faces = values.shape[1]

    edge_min = values.min(axis=1)
    worst = int(np.argmin(edge_min))
    if edge_min[worst] < -unsafe_tolerance:
        set_index = set_indices[worst][0] if set_indices is not None else 0
        raise UnsafeStateError(
            f"Edge point {worst} is outside set {set_index} (H = {edge_min[worst]:.3e})",
            edge=worst,
            set_index=set_index,
        )

    G = np.einsum("efn,enm->efm", grads, jacs[:, :n, :]).reshape(E * faces, -1)
    meta = [
        (k, set_indices[k][0] if set_indices is not None else 0, face)
        for k in range(E)
        for face in range(faces)
    ]
    flat = values.reshape(-1)
    return [G], [-kappa(flat)], [flat], meta, edge_min


def _joint_limit_rows(model: RobotModel, q: Configuration, kappa: ClassKappa):
    limits = model.joint_limits()
    m = model.input_dim
    coeffs, offsets, barriers = [], [], []
    for col, joint in enumerate(model.active_joint_indices):
        lo, hi = limits[joint]
        theta = q.angles[joint]
        for sign, h in ((-1.0, hi - theta), (1.0, theta - lo)):
            row = np.zeros(m)
            row[col] = sign
            coeffs.append(row)
            offsets.append(-kappa(h))
            barriers.append(h)
    return coeffs, offsets, barriers


def assemble_constraints(
    model: RobotModel,
    q: Configuration,
    active_sets: Sequence[Sequence[ConvexSet]],
    kappa: ClassKappa,
    set_indices: Optional[Sequence[Sequence[int]]] = None,
    joint_limits: bool = False,
    unsafe_tolerance: float = 0.0,
) -> List[CbfRow]:
    """
    One CBF row per (edge point, active set, barrier face).

    Rows come out in (edge, set, face) lexicographic order, followed by the
    optional joint-limit rows (set index JOINT_LIMIT_SET, edge = joint).
    """
    coeffs, offsets, barriers, meta, _ = _edge_rows(
        model, q, active_sets, kappa, set_indices, unsafe_tolerance
    )
    G = np.vstack(coeffs)
    h = np.concatenate(offsets)
    H = np.concatenate(barriers)
    rows = [
        CbfRow(G[i], float(h[i]), edge, set_index, face, float(H[i]))
        for i, (edge, set_index, face) in enumerate(meta)
    ]

    if joint_limits and not model.is_rod:
        jc, jo, jb = _joint_limit_rows(model, q, kappa)
        for i, (c, o, b) in enumerate(zip(jc, jo, jb)):
            joint = model.active_joint_indices[i // 2]
            rows.append(CbfRow(c, float(o), joint, JOINT_LIMIT_SET, i % 2, float(b)))
    return rows


class SafetyFilter:
    """
    Safety filter owning one QP solver; use one instance per simulation loop.
    """

    def __init__(self, model: RobotModel, cfg: SafetyConfig):
        self.model = model
        self.cfg = cfg
        self.solver = LeastDistanceSolver()

    def constraint_matrices(self, q, active_sets, set_indices=None):
        coeffs, offsets, _, meta, edge_min = _edge_rows(
            self.model, q, active_sets, self.cfg.kappa, set_indices,
            self.cfg.unsafe_tolerance,
        )
        if self.cfg.joint_limit_cbf and not self.model.is_rod:
            jc, jo, _ = _joint_limit_rows(self.model, q, self.cfg.kappa)
            coeffs.extend(np.atleast_2d(c) for c in jc)
            offsets.extend(np.atleast_1d(o) for o in jo)
            meta = meta + [
                (self.model.active_joint_indices[i // 2], JOINT_LIMIT_SET, i % 2)
                for i in range(len(jc))
            ]
        return np.vstack(coeffs), np.concatenate(offsets), meta, edge_min

    def filter(
        self, q: Configuration, active_sets, waypoint, set_indices=None
    ) -> Tuple[np.ndarray, SafetyDiagnostics]:
        started = time.perf_counter()
        G, h, meta, edge_min = self.constraint_matrices(q, active_sets, set_indices)
        u_p = nominal_control(self.model, q, waypoint, self.cfg)
        solution: QpSolution = self.solver.solve(QpProblem(u_p, G, h))
        elapsed = time.perf_counter() - started

        diagnostics = SafetyDiagnostics(
            edge_min_barrier=edge_min,
            constraint_count=G.shape[0],
            active_count=len(solution.active_rows),
            solve_time=elapsed,
            status=solution.status,
            iterations=solution.iterations,
        )

        if solution.optimal:
            return solution.u_star, diagnostics

        rows = list(solution.active_rows)
        if solution.blocking_row is not None:
            rows.append(solution.blocking_row)
        blocking = tuple(meta[i] for i in rows)
        if self.cfg.policy is InfeasibilityPolicy.ZERO_INPUT:
            logger.warning(
                "safety QP %s; applying zero input", solution.status.value
            )
            diagnostics.fallback = True
            return np.zeros(self.model.input_dim), diagnostics

        raise InfeasibleControlError(
            f"No admissible control ({solution.status.value}); "
            f"active rows (edge, set, face): {list(blocking)}",
            rows=blocking,
        )


def safe_control(
    model: RobotModel,
    q: Configuration,
    active_sets,
    waypoint,
    cfg: SafetyConfig,
    solver: Optional[SafetyFilter] = None,
    set_indices=None,
) -> Tuple[np.ndarray, SafetyDiagnostics]:
    """Filtered control u* and diagnostics (see SafetyFilter.filter)."""
    safety = solver if solver is not None else SafetyFilter(model, cfg)
    return safety.filter(q, active_sets, waypoint, set_indices)
