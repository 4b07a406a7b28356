"""
Homogeneous transforms, modified-DH forward kinematics, edge points and
their Jacobians, workspace sampling and the camera-to-arm transform.

Two robot variants share one interface:

- PLANAR_ROD: a rigid rod of length l in the plane. Configuration.base is the
  rod centre, Configuration.angles = [phi]; input u = (v_x, v_y, omega).
- MOBILE_ARM: a six-row modified-DH arm on a holonomic planar base.
  Configuration.angles holds all six joint angles; only the active joints
  (J1, J2, J3, J5 in that order, first N_j of them) rotate. Input
  u = (active joint rates..., v_x, v_y).
"""

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from .models import RobotKind
from ..utils.exceptions import ValidationError
from ..utils.validators import as_vector

logger = logging.getLogger(__name__)

MM = 1e-3
DEFAULT_STEPS_PER_JOINT = 25
DEFAULT_GOAL_TOL = 0.02

# Joint indices (0-based) that may rotate, in activation order: J1, J2, J3, J5
ACTIVE_JOINT_ORDER = (0, 1, 2, 4)
# Frames whose origins are edge points: J1, J2, J3, J5, J6 (frame 0 is the base)
EDGE_FRAME_ORDER = (1, 2, 3, 5, 6)

# Reference arm table: (theta_offset, d [mm], a [mm], alpha, range [deg])
REFERENCE_ARM_TABLE = (
    (0.0, 80.0, 0.0, 0.0, (-100.0, 100.0)),
    (-np.pi / 2, 0.0, 32.0, -np.pi / 2, (-60.0, 90.0)),
    (0.0, 0.0, 108.0, 0.0, (-180.0, 50.0)),
    (0.0, 176.0, 20.0, -np.pi / 2, (-180.0, 180.0)),
    (np.pi / 2, 0.0, 0.0, np.pi / 2, (-180.0, 40.0)),
    (0.0, -20.0, 0.0, np.pi / 2, (-180.0, 180.0)),
)

HomTransform = np.ndarray


# Homogeneous transforms
def rot_x(angle: float) -> HomTransform:
    c, s = np.cos(angle), np.sin(angle)
    return np.array(
        [[1.0, 0.0, 0.0, 0.0], [0.0, c, -s, 0.0], [0.0, s, c, 0.0], [0.0, 0.0, 0.0, 1.0]]
    )


def rot_z(angle: float) -> HomTransform:
    c, s = np.cos(angle), np.sin(angle)
    return np.array(
        [[c, -s, 0.0, 0.0], [s, c, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]
    )


def translation(x: float = 0.0, y: float = 0.0, z: float = 0.0) -> HomTransform:
    t = np.eye(4)
    t[:3, 3] = (x, y, z)
    return t


def hom_compose(a: HomTransform, b: HomTransform) -> HomTransform:
    """Transform applying b first, then a (matrix product a @ b)."""
    return np.asarray(a, dtype=float) @ np.asarray(b, dtype=float)


def hom_apply(t: HomTransform, p) -> np.ndarray:
    """Map a 3-D point through t: R p + offset."""
    p = as_vector(p, "point", 3)
    return t[:3, :3] @ p + t[:3, 3]


def is_valid_transform(t: HomTransform, tol: float = 1e-9) -> bool:
    """Bottom row (0,0,0,1), orthonormal rotation with det +1."""
    t = np.asarray(t, dtype=float)
    if t.shape != (4, 4) or not np.allclose(t[3], (0.0, 0.0, 0.0, 1.0), atol=tol):
        return False
    R = t[:3, :3]
    return bool(
        np.allclose(R.T @ R, np.eye(3), atol=tol)
        and abs(np.linalg.det(R) - 1.0) <= tol
    )


# Robot description
@dataclass(frozen=True)
class DHRow:
    """One modified-DH row: Rx(alpha) Tx(a) Rz(theta_offset + theta) Tz(d)."""

    theta_offset: float
    d: float
    a: float
    alpha: float
    limits: Tuple[float, float] = (-np.pi, np.pi)

    def __post_init__(self):
        lo, hi = self.limits
        if not lo < hi:
            raise ValidationError(f"Joint limits must satisfy min < max, got {self.limits}")
        object.__setattr__(self, "limits", (float(lo), float(hi)))

    def scaled(self, factor: float) -> "DHRow":
        return replace(self, d=self.d * factor, a=self.a * factor)

    def to_dict(self) -> dict:
        return {
            "theta_offset": self.theta_offset,
            "d": self.d,
            "a": self.a,
            "alpha": self.alpha,
            "limits": list(self.limits),
        }


def dh_link_transform(row: DHRow, theta: float) -> HomTransform:
    t = rot_x(row.alpha)
    t[0, 3] = row.a
    return t @ rot_z(row.theta_offset + theta) @ translation(z=row.d)


def _batched_link_transforms(row: DHRow, thetas: np.ndarray) -> np.ndarray:
    """dh_link_transform for a vector of angles; shape (k, 4, 4)."""
    k = thetas.shape[0]
    th = row.theta_offset + thetas
    ct, st = np.cos(th), np.sin(th)
    ca, sa = np.cos(row.alpha), np.sin(row.alpha)

    t = np.zeros((k, 4, 4))
    t[:, 0, 0] = ct
    t[:, 0, 1] = -st
    t[:, 0, 3] = row.a
    t[:, 1, 0] = st * ca
    t[:, 1, 1] = ct * ca
    t[:, 1, 2] = -sa
    t[:, 1, 3] = -sa * row.d
    t[:, 2, 0] = st * sa
    t[:, 2, 1] = ct * sa
    t[:, 2, 2] = ca
    t[:, 2, 3] = ca * row.d
    t[:, 3, 3] = 1.0
    return t


@dataclass(frozen=True)
class CameraMount:
    """Fixed camera mount: offsets l1, l2 and mount angle theta."""

    l1: float
    l2: float
    theta: float

    def __post_init__(self):
        if not self.l1**2 + self.l2**2 > 0:
            raise ValidationError("Camera mount needs l1^2 + l2^2 > 0")

    @property
    def reach(self) -> float:
        return float(np.hypot(self.l1, self.l2))

    def to_dict(self) -> dict:
        return {"l1": self.l1, "l2": self.l2, "theta": self.theta}


@dataclass(frozen=True)
class Configuration:
    """Base position (x, y) and joint angles (rod: [phi])."""

    base: np.ndarray
    angles: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", as_vector(self.base, "base position", 2))
        object.__setattr__(self, "angles", as_vector(self.angles, "joint angles"))

    def with_angles(self, angles) -> "Configuration":
        return Configuration(self.base, angles)

    def with_base(self, base) -> "Configuration":
        return Configuration(base, self.angles)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.base, self.angles])

    def to_dict(self) -> dict:
        return {"base": self.base.tolist(), "angles": self.angles.tolist()}

    def __eq__(self, other) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return np.array_equal(self.base, other.base) and np.array_equal(
            self.angles, other.angles
        )


@dataclass(frozen=True, eq=False)
class RobotModel:
    kind: RobotKind
    length: float = 0.0
    dh_rows: Tuple[DHRow, ...] = ()
    active_joints: int = 0
    edge_frames: Optional[Tuple[int, ...]] = None
    camera: Optional[CameraMount] = None

    def __post_init__(self):
        if self.kind is RobotKind.PLANAR_ROD:
            if not self.length > 0:
                raise ValidationError("Rod length must be > 0")
            return

        if not 1 <= len(self.dh_rows) <= 6:
            raise ValidationError("A mobile arm needs between 1 and 6 DH rows")
        if self.active_joints not in (1, 2, 3, 4):
            raise ValidationError(
                f"Active joint count must be 1..4, got {self.active_joints}"
            )
        if max(self.active_joint_indices) >= len(self.dh_rows):
            raise ValidationError("Active joints exceed the DH table")

        frames = self.edge_frames
        if frames is None:
            frames = EDGE_FRAME_ORDER[: self.active_joints + 1]
        frames = tuple(int(f) for f in frames)
        if any(f < 1 or f > len(self.dh_rows) for f in frames):
            raise ValidationError(f"Edge frames must lie in 1..{len(self.dh_rows)}")
        object.__setattr__(self, "edge_frames", frames)

    @classmethod
    def rod(cls, length: float) -> "RobotModel":
        return cls(RobotKind.PLANAR_ROD, length=float(length))

    @classmethod
    def reference_arm(
        cls,
        active_joints: int = 4,
        camera: Optional[CameraMount] = None,
        edge_frames: Optional[Sequence[int]] = None,
    ) -> "RobotModel":
        rows = tuple(
            DHRow(off, d, a, alpha, tuple(np.deg2rad(rng))).scaled(MM)
            for off, d, a, alpha, rng in REFERENCE_ARM_TABLE
        )
        return cls(
            RobotKind.MOBILE_ARM,
            dh_rows=rows,
            active_joints=active_joints,
            edge_frames=tuple(edge_frames) if edge_frames else None,
            camera=camera,
        )

    def with_active_joints(self, active_joints: int) -> "RobotModel":
        """Same arm with a different number of rotating joints (default edge set)."""
        return replace(self, active_joints=active_joints, edge_frames=None)

    @property
    def is_rod(self) -> bool:
        return self.kind is RobotKind.PLANAR_ROD

    @property
    def active_joint_indices(self) -> Tuple[int, ...]:
        if self.is_rod:
            return (0,)
        return ACTIVE_JOINT_ORDER[: self.active_joints]

    @property
    def input_dim(self) -> int:
        return 3 if self.is_rod else self.active_joints + 2

    @property
    def angle_count(self) -> int:
        return 1 if self.is_rod else len(self.dh_rows)

    @property
    def edge_count(self) -> int:
        return 2 if self.is_rod else len(self.edge_frames) + 1

    @property
    def link_count(self) -> int:
        return self.edge_count - 1

    @cached_property
    def link_lengths(self) -> np.ndarray:
        """Distances between consecutive edge points (configuration independent)."""
        if self.is_rod:
            return np.array([self.length])
        zero = Configuration(np.zeros(2), self.default_angles())
        pts = edge_points(self, zero)
        return np.linalg.norm(np.diff(pts, axis=0), axis=1)

    @cached_property
    def total_reach(self) -> float:
        """Upper bound on end-effector distance from the base frame origin."""
        if self.is_rod:
            return self.length / 2
        return float(sum(np.hypot(r.a, r.d) for r in self.dh_rows))

    def default_angles(self) -> np.ndarray:
        return np.zeros(self.angle_count)

    def joint_limits(self) -> np.ndarray:
        """(angle_count, 2) array of [min, max]; unlimited for the rod."""
        if self.is_rod:
            return np.array([[-np.inf, np.inf]])
        return np.array([row.limits for row in self.dh_rows])

    def input_labels(self) -> List[str]:
        if self.is_rod:
            return ["v_x", "v_y", "omega"]
        return [f"dtheta{i + 1}" for i in self.active_joint_indices] + ["v_x", "v_y"]

    def state_labels(self) -> List[str]:
        if self.is_rod:
            return ["x", "y", "phi"]
        return ["x", "y"] + [f"theta{i + 1}" for i in range(self.angle_count)]

    def validate_configuration(self, q: Configuration) -> None:
        if q.angles.shape[0] != self.angle_count:
            raise ValidationError(
                f"Configuration has {q.angles.shape[0]} angles, model expects "
                f"{self.angle_count}"
            )

    def to_dict(self) -> dict:
        if self.is_rod:
            return {"type": "rod", "length": self.length}
        data = {
            "type": "arm",
            "dh": [row.to_dict() for row in self.dh_rows],
            "active_joints": self.active_joints,
            "edge_frames": list(self.edge_frames),
        }
        if self.camera is not None:
            data["camera"] = self.camera.to_dict()
        return data

    def __eq__(self, other) -> bool:
        if not isinstance(other, RobotModel):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(self.to_dict()))


# Forward kinematics
def base_transform(q: Configuration) -> HomTransform:
    return translation(q.base[0], q.base[1], 0.0)


def _rod_axis(model: RobotModel, q: Configuration) -> np.ndarray:
    phi = q.angles[0]
    return 0.5 * model.length * np.array([np.cos(phi), np.sin(phi), 0.0])


def forward_kinematics(model: RobotModel, q: Configuration) -> List[HomTransform]:
    """
    World transforms of every frame, base frame first.

    Arm: base frame then one frame per DH row. Rod: centre frame (rotated by
    phi) then the two endpoint frames.
    """
    model.validate_configuration(q)
    base = base_transform(q)

    if model.is_rod:
        centre = hom_compose(base, rot_z(q.angles[0]))
        half = 0.5 * model.length
        return [
            centre,
            hom_compose(centre, translation(-half)),
            hom_compose(centre, translation(half)),
        ]

    frames = [base]
    current = base
    for row, theta in zip(model.dh_rows, q.angles):
        current = hom_compose(current, dh_link_transform(row, theta))
        frames.append(current)
    return frames


def edge_points(model: RobotModel, q: Configuration) -> np.ndarray:
    """World positions of the edge points, shape (edge_count, 3)."""
    if model.is_rod:
        model.validate_configuration(q)
        centre = np.array([q.base[0], q.base[1], 0.0])
        r = _rod_axis(model, q)
        return np.vstack([centre - r, centre + r])

    frames = forward_kinematics(model, q)
    points = [frames[0][:3, 3]] + [frames[f][:3, 3] for f in model.edge_frames]
    return np.vstack(points)


def reference_point(model: RobotModel, q: Configuration) -> np.ndarray:
    """Rod centre or arm end effector (the last edge point)."""
    if model.is_rod:
        return np.array([q.base[0], q.base[1], 0.0])
    return edge_points(model, q)[-1]


def link_segments(model: RobotModel, q: Configuration) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Consecutive edge-point pairs, i.e. the link segments."""
    pts = edge_points(model, q)
    return [(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]


def edge_kinematics(model: RobotModel, q: Configuration) -> Tuple[np.ndarray, np.ndarray]:
    """
    Edge points and all their Jacobians in one pass.

    Returns (points, jacobians) with shapes (E, 3) and (E, 3, m).
    """
    m = model.input_dim

    if model.is_rod:
        points = edge_points(model, q)
        r = _rod_axis(model, q)
        jac = np.zeros((2, 3, m))
        for k, sign in enumerate((-1.0, 1.0)):
            jac[k, 0, 0] = 1.0
            jac[k, 1, 1] = 1.0
            # d/dphi of centre + sign * r
            jac[k, 0, 2] = -sign * r[1]
            jac[k, 1, 2] = sign * r[0]
        return points, jac

    frames = forward_kinematics(model, q)
    edge_frames = (0,) + model.edge_frames
    points = np.vstack([frames[f][:3, 3] for f in edge_frames])

    joints = model.active_joint_indices
    # Joint i (0-based) rotates about z of frame i + 1 through its origin
    axes = np.vstack([frames[i + 1][:3, 2] for i in joints])
    origins = np.vstack([frames[i + 1][:3, 3] for i in joints])
    cols = np.cross(axes[None, :, :], points[:, None, :] - origins[None, :, :])
    # Only joints proximal to an edge point move it
    distal = np.array(edge_frames)[:, None] < (np.array(joints)[None, :] + 1)
    cols[distal] = 0.0

    jac = np.zeros((len(edge_frames), 3, m))
    jac[:, :, : len(joints)] = np.transpose(cols, (0, 2, 1))
    jac[:, 0, -2] = 1.0
    jac[:, 1, -1] = 1.0
    return points, jac


def edge_point_jacobian(model: RobotModel, q: Configuration, k: int) -> np.ndarray:
    """3 x m matrix mapping u to the world velocity of edge point k."""
    if not 0 <= k < model.edge_count:
        raise ValidationError(
            f"Edge index {k} out of range for {model.edge_count} edge points"
        )
    _, jac = edge_kinematics(model, q)
    return jac[k]


def reference_jacobian(model: RobotModel, q: Configuration) -> np.ndarray:
    if model.is_rod:
        jac = np.zeros((3, 3))
        jac[0, 0] = jac[1, 1] = 1.0
        return jac
    return edge_point_jacobian(model, q, model.edge_count - 1)


# Workspace
@dataclass(frozen=True, eq=False)
class WorkspaceCloud:
    """End-effector samples in the arm base frame with a lazy KD-tree."""

    points: np.ndarray
    steps_per_joint: int = 0

    def __len__(self) -> int:
        return self.points.shape[0]

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.points)

    def nearest_distance(self, point) -> float:
        dist, _ = self.tree.query(np.asarray(point, dtype=float))
        return float(dist)


def workspace_cloud(
    model: RobotModel,
    steps_per_joint: int = DEFAULT_STEPS_PER_JOINT,
    frozen_angles: Optional[np.ndarray] = None,
    chunk: int = 50_000,
) -> WorkspaceCloud:
    """
    End-effector positions over the grid of active joint angles.

    The grid spans each active joint's limits with steps_per_joint samples,
    ordered row-major (first active joint slowest). Inactive joints stay at
    frozen_angles. Points are expressed in the arm base frame.
    """
    if model.is_rod:
        raise ValidationError("Workspace clouds are defined for mobile arms only")
    if steps_per_joint < 2:
        raise ValidationError("steps_per_joint must be >= 2")

    frozen = model.default_angles() if frozen_angles is None else np.asarray(frozen_angles, float)
    joints = model.active_joint_indices
    axes = [
        np.linspace(model.dh_rows[i].limits[0], model.dh_rows[i].limits[1], steps_per_joint)
        for i in joints
    ]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(joints))

    last_frame = model.edge_frames[-1]
    rows = model.dh_rows[:last_frame]
    out = np.empty((grid.shape[0], 3))

    for start in range(0, grid.shape[0], chunk):
        block = grid[start : start + chunk]
        angles = np.tile(frozen[: len(rows)], (block.shape[0], 1))
        for col, i in enumerate(joints):
            if i < len(rows):
                angles[:, i] = block[:, col]

        current = np.broadcast_to(np.eye(4), (block.shape[0], 4, 4))
        for j, row in enumerate(rows):
            current = current @ _batched_link_transforms(row, angles[:, j])
        out[start : start + block.shape[0]] = current[:, :3, 3]

    logger.debug("workspace cloud: %d samples", out.shape[0])
    return WorkspaceCloud(out, steps_per_joint)


def in_goal_region(
    model: RobotModel,
    q: Configuration,
    x_goal,
    cloud: Union[WorkspaceCloud, np.ndarray],
    tol: float = DEFAULT_GOAL_TOL,
) -> bool:
    """Whether x_goal lies within tol of the workspace cloud placed at q."""
    if not isinstance(cloud, WorkspaceCloud):
        cloud = WorkspaceCloud(np.atleast_2d(np.asarray(cloud, dtype=float)))
    if len(cloud) == 0 or cloud.points.size == 0:
        raise ValidationError("Workspace cloud is empty")

    goal = as_vector(x_goal, "goal", 3)
    # Base frame is a pure translation of the world frame
    local = goal - np.array([q.base[0], q.base[1], 0.0])
    return cloud.nearest_distance(local) <= tol


# Camera mount
def camera_to_arm_transform(mount: CameraMount, alpha: float) -> HomTransform:
    """Camera frame to arm frame for joint-3 angle alpha."""
    c, s = np.cos(alpha), np.sin(alpha)
    r = mount.reach
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, c, s, -r * np.cos(alpha + mount.theta)],
            [0.0, -s, c, r * np.sin(alpha + mount.theta)],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def camera_point_to_arm(mount: CameraMount, alpha: float, point) -> np.ndarray:
    return hom_apply(camera_to_arm_transform(mount, alpha), point)
