from corridorflow import (
    Configuration,
    ConvexSet,
    SimConfig,
    create_corridor,
    create_rod,
    load_scenario,
    run_scenario,
)
from corridorflow.core.simulator import min_distance_series
from corridorflow.exporters.csv_export import export_trace


def demo_rod_maze():
    # Rigid rod through the bundled maze.
    print("=== Rod Maze Demo ===")
    scenario = load_scenario("maze_rod_l1")
    result = run_scenario(scenario.model, scenario.corridor, scenario.start, scenario.sim)

    print(f"status: {result.status.value}  steps: {result.steps}")
    print(f"handoffs: {result.handoffs}")
    print(f"min distance: {result.min_distance:.4f}")
    export_trace(scenario.model, result.trace, "rod_maze_trace.csv")
    print("Generated rod_maze_trace.csv\n")


def demo_hand_built_corridor():
    # Two overlapping boxes forming an L.
    print("=== Hand-built Corridor Demo ===")
    rod = create_rod(1.0)
    corridor = create_corridor(
        [ConvexSet.box([0, 0], [4, 2]), ConvexSet.box([2, 0], [4, 6])],
        goal=[3, 5, 0],
    )
    start = Configuration([1.0, 1.0], [0.0])
    result = run_scenario(rod, corridor, start, SimConfig(dt=0.01, max_steps=5000))

    print(f"status: {result.status.value}  steps: {result.steps}")
    for k, series in enumerate(min_distance_series(result.trace)):
        print(f"edge {k}: lowest barrier {min(h for _, h in series):.4f}")
    print()


def demo_mobile_arm():
    # Mobile base with three rotating joints, then the same scenario with four.
    print("=== Mobile Arm Demo ===")
    scenario = load_scenario("arm3")
    for joints in (3, 4):
        variant = scenario.with_active_joints(joints)
        result = run_scenario(variant.model, variant.corridor, variant.start, variant.sim)
        print(
            f"{joints} joints: {result.status.value} after {result.steps} steps, "
            f"median solve {result.timing.median * 1e6:.1f} us"
        )


if __name__ == "__main__":
    demo_rod_maze()
    # demo_hand_built_corridor()
    # demo_mobile_arm()
