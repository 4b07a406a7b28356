"""
Configuration-aware safe control of articulated robots through corridors of
convex sets.

---
Demo: a rigid rod crossing the bundled maze.


from corridorflow import load_scenario, run_scenario

scenario = load_scenario("maze_rod_l1")
result = run_scenario(scenario.model, scenario.corridor, scenario.start, scenario.sim)
print(result.status, result.steps, result.min_distance)

Or build the pieces directly:

from corridorflow import create_rod, create_corridor, ConvexSet

rod = create_rod(1.0)
corridor = create_corridor(
    [ConvexSet.box([0, 0], [4, 2]), ConvexSet.box([2, 0], [4, 6])],
    goal=[3, 5, 0],
)
"""

from .core.geometry import ConvexSet, contains, farthest_point_along, intersection_nonempty
from .core.kinematics import Configuration, RobotModel, edge_points, forward_kinematics
from .core.corridor import Corridor, grid_maze_decompose, select_waypoint, validate
from .core.safety import ClassKappa, SafetyConfig, safe_control
from .core.simulator import SimConfig, SimResult, benchmark_scaling, run_scenario
from .api.scenario import Scenario, dump_scenario, load_scenario

__version__ = "0.1.0"
__all__ = [
    "ConvexSet",
    "Configuration",
    "RobotModel",
    "Corridor",
    "ClassKappa",
    "SafetyConfig",
    "SimConfig",
    "SimResult",
    "Scenario",
    "contains",
    "farthest_point_along",
    "intersection_nonempty",
    "edge_points",
    "forward_kinematics",
    "grid_maze_decompose",
    "select_waypoint",
    "validate",
    "safe_control",
    "run_scenario",
    "benchmark_scaling",
    "load_scenario",
    "dump_scenario",
    "create_rod",
    "create_arm",
    "create_corridor",
]


# Convenience functions
def create_rod(length: float) -> RobotModel:
    """Create a planar rigid rod of the given length."""
    return RobotModel.rod(length)


def create_arm(active_joints: int = 4) -> RobotModel:
    """Create the reference mobile arm with 1..4 rotating joints."""
    return RobotModel.reference_arm(active_joints)


def create_corridor(sets, goal, margin: float = 0.05) -> Corridor:
    """Create a corridor from an ordered list of convex sets."""
    return Corridor(tuple(sets), goal, margin)
