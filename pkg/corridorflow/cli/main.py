"""
Main CLI entry point for corridorflow.
"""

import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import click
import numpy as np

from .. import __version__
from ..api.scenario import Scenario, load_scenario
from ..core.corridor import validate
from ..core.kinematics import camera_point_to_arm, edge_points, in_goal_region, workspace_cloud
from ..core.models import EXIT_INVALID_INPUT
from ..core.simulator import benchmark_scaling, run_scenario, scaling_trend
from ..exporters.csv_export import BenchmarkExporter, TraceExporter, WorkspaceExporter
from ..utils.colors import fg, paint, rs
from ..utils.exceptions import CorridorFlowError, ScenarioError
from ..utils.log import configure_logging
from ..utils.validators import parse_joint_counts

OUTPUT_ENV = "CORRIDORFLOW_OUTPUT_DIR"

out_dir_option = click.option(
    "--out-dir",
    type=click.Path(file_okay=False),
    default=".",
    envvar=OUTPUT_ENV,
    show_envvar=True,
    help="Directory for default output files",
)


def _fail(e: Exception) -> None:
    click.echo(f"{fg.RED}Error: {fg.YELLOW}{e}{rs}", err=True)
    sys.exit(EXIT_INVALID_INPUT)


def _output_path(explicit: Optional[str], out_dir: str, default_name: str) -> str:
    if explicit:
        return explicit
    return str(Path(out_dir) / default_name)


def _load(path: str) -> Scenario:
    scenario = load_scenario(path)
    click.echo(f"Scenario {fg.BLUE}{scenario.name}{rs} ({scenario.model.kind.value})")
    return scenario


@click.group()
@click.version_option(version=__version__, prog_name="corridorflow")
@click.option("-v", "--verbose", count=True, help="Log more (-v info, -vv debug)")
def cli(verbose: int):
    """corridorflow - configuration-aware safe control through convex corridors."""
    configure_logging(verbose)


@cli.command()
@click.argument("scenario_path")
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), help="Trace CSV path")
@click.option(
    "--timing/--no-timing",
    default=False,
    help="Write measured solve times into the trace (traces then differ between runs)",
)
@out_dir_option
def run(scenario_path: str, trace_path: Optional[str], timing: bool, out_dir: str):
    """Simulate a scenario and write its trace CSV."""

    try:
        scenario = _load(scenario_path)
        sim = replace(scenario.sim, record_timing=timing)
        result = run_scenario(scenario.model, scenario.corridor, scenario.start, sim)
        trace_path = _output_path(trace_path, out_dir, f"{scenario.name}_trace.csv")
        TraceExporter(scenario.model).export(result.trace, trace_path)
    except CorridorFlowError as e:
        _fail(e)

    status = result.status.value
    click.echo(f"Status: {paint(status, status)}")
    click.echo(f"  steps: {result.steps}  handoffs: {len(result.handoffs)}")
    click.echo(f"  min distance: {result.min_distance:.6g}")
    if result.link_violations is not None:
        click.echo(f"  link violations: {result.link_violations}")
    click.echo(
        f"  solve time [s]: mean={result.timing.mean:.3e} "
        f"median={result.timing.median:.3e} p99={result.timing.p99:.3e}"
    )
    if result.message:
        click.echo(f"  {fg.YELLOW}{result.message}{rs}")
    click.echo(f"  trace: {fg.BLUE}{trace_path}{rs}")
    sys.exit(result.status.exit_code)


@cli.command()
@click.argument("scenario_path")
def check(scenario_path: str):
    """Validate a scenario's corridor and start configuration."""

    try:
        scenario = _load(scenario_path)
        report = validate(
            scenario.corridor, edge_points(scenario.model, scenario.start)
        )
    except CorridorFlowError as e:
        _fail(e)

    mark = {True: f"{fg.GREEN}ok{rs}", False: f"{fg.RED}FAIL{rs}"}
    click.echo(f"Corridor of {len(scenario.corridor)} sets")
    for i, j, connected in report.pairs:
        click.echo(f"  sets {i} -> {j}: {mark[connected]}")
    click.echo(f"  goal in last set: {mark[report.goal_in_last]}")
    click.echo(f"  start in first set: {mark[bool(report.start_in_first)]}")

    if not report.ok:
        for problem in report.failures():
            click.echo(f"{fg.RED}Error: {fg.YELLOW}{problem}{rs}", err=True)
        sys.exit(EXIT_INVALID_INPUT)
    click.echo(f"{fg.GREEN}✓{rs} Scenario is valid")


@cli.command()
@click.argument("scenario_path")
@click.option("--joints", "-j", default="1,2,3,4", help="Comma separated joint counts (1..4)")
@click.option("--repeats", "-r", default=3, type=click.IntRange(min=1), help="Runs per joint count")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="Benchmark CSV path")
@click.option("--seed", type=int, default=None, help="Seed for the joint-count run order")
@out_dir_option
def bench(
    scenario_path: str,
    joints: str,
    repeats: int,
    out_path: Optional[str],
    seed: Optional[int],
    out_dir: str,
):
    """Measure per-step safety filter time against the number of joints."""

    try:
        counts = parse_joint_counts(joints)
        scenario = _load(scenario_path)
        if scenario.model.is_rod:
            raise ScenarioError("The benchmark needs a mobile arm scenario")

        rng = np.random.default_rng(scenario.seed if seed is None else seed)
        order = [int(n) for n in rng.permutation(counts)]
        sim = replace(scenario.sim, audit_links=False)
        table = benchmark_scaling(
            scenario.model, scenario.corridor, scenario.start, sim, order, repeats
        )
        table.sort(key=lambda row: row.joints)
        out_path = _output_path(out_path, out_dir, f"{scenario.name}_bench.csv")
        BenchmarkExporter().export(table, out_path)
    except CorridorFlowError as e:
        _fail(e)

    click.echo(f"{'joints':>6} {'median [s]':>12} {'p99 [s]':>12} {'rows':>5} steps")
    for row in table:
        steps = ",".join(str(s) for s in row.steps)
        click.echo(
            f"{row.joints:>6} {row.median:>12.4e} {row.p99:>12.4e} {row.constraints:>5} {steps}"
        )
    if len(table) > 1:
        click.echo(f"Trend: {scaling_trend(table).summary()}")
    click.echo(f"Benchmark written to {fg.BLUE}{out_path}{rs}")


@cli.command()
@click.argument("scenario_path")
@click.option("--resolution", "-n", default=None, type=int, help="Samples per active joint")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="Workspace CSV path")
@out_dir_option
def workspace(scenario_path: str, resolution: Optional[int], out_path: Optional[str], out_dir: str):
    """Export the arm's workspace cloud (arm base frame) as x,y,z CSV."""

    try:
        scenario = _load(scenario_path)
        steps = scenario.sim.workspace_resolution if resolution is None else resolution
        cloud = workspace_cloud(scenario.model, steps, frozen_angles=scenario.start.angles)
        out_path = _output_path(out_path, out_dir, f"{scenario.name}_workspace.csv")
        WorkspaceExporter().export(cloud, out_path)
    except CorridorFlowError as e:
        _fail(e)

    click.echo(f"{len(cloud)} workspace points written to {fg.BLUE}{out_path}{rs}")


@cli.command()
@click.argument("scenario_path")
@click.argument("point", nargs=3, type=float)
@click.option("--alpha", default=0.0, type=float, help="Joint-3 angle at capture time [rad]")
def locate(scenario_path: str, point, alpha: float):
    """Map a camera-frame POINT into the arm frame and test it against the goal region."""

    try:
        scenario = _load(scenario_path)
        model = scenario.model
        if model.is_rod or model.camera is None:
            raise ScenarioError("Scenario robot has no camera mount")

        local = camera_point_to_arm(model.camera, alpha, point)
        world = local + np.array([scenario.start.base[0], scenario.start.base[1], 0.0])
        cloud = workspace_cloud(
            model, scenario.sim.workspace_resolution, frozen_angles=scenario.start.angles
        )
        inside = in_goal_region(model, scenario.start, world, cloud, scenario.sim.goal_tol)
    except CorridorFlowError as e:
        _fail(e)

    click.echo(f"arm frame: ({local[0]:.6f}, {local[1]:.6f}, {local[2]:.6f})")
    if inside:
        click.echo(f"{fg.GREEN}✓{rs} reachable from the start configuration")
        sys.exit(0)
    click.echo(f"{fg.YELLOW}not reachable from the start configuration{rs}")
    sys.exit(1)


if __name__ == "__main__":
    cli()
