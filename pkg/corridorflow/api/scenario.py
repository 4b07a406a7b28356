"""
Scenario files: robot, start configuration, corridor and run settings in one
JSON document.

A corridor is either an explicit set list or a reference to an occupancy
grid file (resolved relative to the scenario file):

    "corridor": {"grid": "maze.txt", "cell_size": 2.5,
                 "start_cell": [5, 1], "goal_cell": [1, 7]}
"""

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import numpy as np

from .grid import OccupancyGrid, load_grid
from ..core.corridor import Corridor, grid_maze_decompose
from ..core.geometry import DEFAULT_MARGIN
from ..core.kinematics import CameraMount, Configuration, DHRow, RobotModel
from ..core.models import InfeasibilityPolicy, RobotKind, parse_enum
from ..core.safety import ClassKappa, SafetyConfig
from ..core.simulator import SimConfig
from ..utils.exceptions import CorridorFlowError, ScenarioError
from ..utils.validators import non_finite_field, validate_file_exists

logger = logging.getLogger(__name__)

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

_ROBOT_KEYS = {"type", "length", "active_joints", "dh", "edge_frames", "camera"}
_SAFETY_KEYS = {
    "k_p", "gamma", "damping", "policy", "joint_limit_cbf", "max_speed",
    "unsafe_tolerance",
}
_SIM_KEYS = {"dt", "max_steps", "goal_tol", "record_every", "workspace_resolution"}
_GRID_KEYS = {"grid", "cell_size", "start_cell", "goal_cell", "margin"}
_TOP_KEYS = {"name", "robot", "start", "corridor", "safety", "sim", "seed"}


@dataclass
class Scenario:
    name: str
    model: RobotModel
    corridor: Corridor
    start: Configuration
    safety: SafetyConfig = field(default_factory=SafetyConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    seed: int = 0
    # Original grid reference, kept so dumps stay compact
    grid_ref: Optional[Dict[str, Any]] = None

    def with_active_joints(self, joints: int) -> "Scenario":
        return Scenario(
            self.name, self.model.with_active_joints(joints), self.corridor,
            self.start, self.safety, self.sim, self.seed, self.grid_ref,
        )

    def to_dict(self) -> dict:
        safety = {
            "k_p": self.safety.k_p,
            "gamma": self.safety.kappa.gamma,
            "damping": self.safety.damping,
            "policy": self.safety.policy.value,
            "joint_limit_cbf": self.safety.joint_limit_cbf,
            "max_speed": self.safety.max_speed,
            "unsafe_tolerance": self.safety.unsafe_tolerance,
        }
        sim = {
            "dt": self.sim.dt,
            "max_steps": self.sim.max_steps,
            "goal_tol": self.sim.goal_tol,
            "record_every": self.sim.record_every,
            "workspace_resolution": self.sim.workspace_resolution,
        }
        return {
            "name": self.name,
            "robot": self.model.to_dict(),
            "start": self.start.to_dict(),
            "corridor": dict(self.grid_ref) if self.grid_ref else self.corridor.to_dict(),
            "safety": safety,
            "sim": sim,
            "seed": self.seed,
        }


def _check_keys(section: dict, allowed: Iterable[str], path: str) -> None:
    if not isinstance(section, dict):
        raise ScenarioError(f"Field '{path}' must be an object")
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ScenarioError(f"Unknown field(s) in '{path}': {', '.join(unknown)}")


def build_model(data: dict) -> RobotModel:
    _check_keys(data, _ROBOT_KEYS, "robot")
    kind = parse_enum(RobotKind, data.get("type", ""), "robot type")
    if kind is RobotKind.PLANAR_ROD:
        if "length" not in data:
            raise ScenarioError("Field 'robot.length' is required for a rod")
        return RobotModel.rod(float(data["length"]))

    camera = CameraMount(**data["camera"]) if "camera" in data else None
    active = int(data.get("active_joints", 4))
    if "dh" not in data:
        return RobotModel.reference_arm(active, camera, data.get("edge_frames"))

    rows = []
    for k, row in enumerate(data["dh"]):
        try:
            rows.append(DHRow(
                float(row["theta_offset"]), float(row["d"]), float(row["a"]),
                float(row["alpha"]), tuple(row.get("limits", (-np.pi, np.pi))),
            ))
        except (KeyError, TypeError) as e:
            raise ScenarioError(f"Field 'robot.dh[{k}]' is invalid: {e}") from e
    frames = data.get("edge_frames")
    return RobotModel(
        RobotKind.MOBILE_ARM,
        dh_rows=tuple(rows),
        active_joints=active,
        edge_frames=tuple(frames) if frames else None,
        camera=camera,
    )


def build_safety(data: dict) -> SafetyConfig:
    _check_keys(data, _SAFETY_KEYS, "safety")
    max_speed = data.get("max_speed")
    return SafetyConfig(
        k_p=float(data.get("k_p", 1.0)),
        kappa=ClassKappa(float(data.get("gamma", 1.0))),
        damping=float(data.get("damping", 0.01)),
        policy=parse_enum(InfeasibilityPolicy, data.get("policy", "halt"), "policy"),
        joint_limit_cbf=bool(data.get("joint_limit_cbf", True)),
        max_speed=None if max_speed is None else float(max_speed),
        unsafe_tolerance=float(data.get("unsafe_tolerance", 1e-4)),
    )


def build_sim(data: dict, safety: SafetyConfig) -> SimConfig:
    _check_keys(data, _SIM_KEYS, "sim")
    defaults = SimConfig()
    return SimConfig(
        dt=float(data.get("dt", defaults.dt)),
        max_steps=int(data.get("max_steps", defaults.max_steps)),
        goal_tol=float(data.get("goal_tol", defaults.goal_tol)),
        safety=safety,
        record_every=int(data.get("record_every", defaults.record_every)),
        workspace_resolution=int(
            data.get("workspace_resolution", defaults.workspace_resolution)
        ),
    )


def build_corridor(data: dict, base_dir: Path):
    """Corridor plus the grid (when the corridor comes from one)."""
    if "grid" not in data:
        _check_keys(data, {"sets", "goal", "margin"}, "corridor")
        return Corridor.from_dict(data), None

    _check_keys(data, _GRID_KEYS, "corridor")
    grid_path = base_dir / data["grid"]
    validate_file_exists(grid_path, "grid file")
    grid = load_grid(grid_path)
    start = data.get("start_cell", grid.start)
    goal = data.get("goal_cell", grid.goal)
    if start is None or goal is None:
        raise ScenarioError("Grid corridor needs start_cell and goal_cell (or S/G markers)")

    corridor = grid_maze_decompose(
        grid.free,
        tuple(start),
        tuple(goal),
        float(data.get("cell_size", 1.0)),
        float(data.get("margin", DEFAULT_MARGIN)),
    )
    return corridor, grid


def build_start(data: Optional[dict], model: RobotModel, grid: Optional[OccupancyGrid],
                corridor_data: dict) -> Configuration:
    if data is None:
        if grid is None:
            raise ScenarioError("Field 'start' is required")
        cell = tuple(corridor_data.get("start_cell", grid.start))
        base = grid.center(cell, float(corridor_data.get("cell_size", 1.0)))
        return Configuration(base, model.default_angles())

    _check_keys(data, {"base", "angles"}, "start")
    angles = data.get("angles")
    if angles is None:
        angles = model.default_angles()
    q = Configuration(data.get("base", [0.0, 0.0]), angles)
    model.validate_configuration(q)
    return q


def scenario_from_dict(data: dict, base_dir: Path = SCENARIO_DIR, name: str = "") -> Scenario:
    _check_keys(data, _TOP_KEYS, "scenario")
    bad = non_finite_field(data)
    if bad is not None:
        raise ScenarioError(f"Field '{bad}' must be a finite number")
    for key in ("robot", "corridor"):
        if key not in data:
            raise ScenarioError(f"Field '{key}' is required")

    section = "robot"
    try:
        model = build_model(data["robot"])
        section = "corridor"
        corridor, grid = build_corridor(data["corridor"], Path(base_dir))
        section = "start"
        start = build_start(data.get("start"), model, grid, data["corridor"])
        section = "safety"
        safety = build_safety(data.get("safety", {}))
        section = "sim"
        sim = build_sim(data.get("sim", {}), safety)
    except ScenarioError:
        raise
    except CorridorFlowError as e:
        raise ScenarioError(f"Invalid field '{section}': {e}") from e
    except (TypeError, ValueError, KeyError) as e:
        raise ScenarioError(f"Invalid field '{section}': {e}") from e

    return Scenario(
        name=str(data.get("name", name)),
        model=model,
        corridor=corridor,
        start=start,
        safety=safety,
        sim=sim,
        seed=int(data.get("seed", 0)),
        grid_ref=_grid_ref(data["corridor"], base_dir) if grid is not None else None,
    )


def _grid_ref(data: dict, base_dir) -> dict:
    ref = dict(data)
    ref["grid"] = str((Path(base_dir) / data["grid"]).resolve())
    return ref


def loads_scenario(text: str, base_dir: Path = SCENARIO_DIR, name: str = "") -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        lines = text.splitlines()
        line = lines[e.lineno - 1].strip() if 0 < e.lineno <= len(lines) else ""
        raise ScenarioError(f"Error parsing line {e.lineno}: {line} ({e.msg})") from e
    return scenario_from_dict(data, base_dir, name)


def load_scenario(path) -> Scenario:
    """Load a scenario file; bare names resolve to the bundled scenarios."""
    path = resolve_scenario_path(path)
    logger.debug("loading scenario %s", path)
    return loads_scenario(path.read_text(), path.parent, path.stem)


def dump_scenario(scenario: Scenario, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = scenario.to_dict()
    if scenario.grid_ref:
        # Grid files are referenced relative to the scenario file
        data["corridor"]["grid"] = os.path.relpath(
            scenario.grid_ref["grid"], path.parent.resolve()
        )
    path.write_text(json.dumps(data, indent=2) + "\n")
    return path


def resolve_scenario_path(path) -> Path:
    path = Path(path)
    if path.is_file():
        return path
    bundled = SCENARIO_DIR / path.name
    if not bundled.suffix:
        bundled = bundled.with_suffix(".json")
    if bundled.is_file():
        return bundled
    raise ScenarioError(f"Scenario file not found: {path}")


def bundled_scenarios():
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.json"))
