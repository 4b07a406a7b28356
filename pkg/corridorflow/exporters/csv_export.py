"""
CSV exporters for run traces, scaling benchmarks and workspace clouds.
"""

import csv
from abc import abstractmethod
from typing import Iterable, List, Sequence

from .base import FileExporter
from ..core.kinematics import RobotModel, WorkspaceCloud
from ..core.simulator import BenchRow, TraceRow

BENCH_HEADER = ["joints", "median_s", "p99_s", "constraints"]
WORKSPACE_HEADER = ["x", "y", "z"]


def fmt(value) -> str:
    """Float with 17 significant digits (exact round trip)."""
    return format(float(value), ".17g")


def trace_header(model: RobotModel) -> List[str]:
    edges = [f"minH_e{k}" for k in range(model.edge_count)]
    return (
        ["t"]
        + model.state_labels()
        + [f"u_{label}" for label in model.input_labels()]
        + ["active_set"]
        + edges
        + ["min_dist", "solve_time_s"]
    )


class CsvExporter(FileExporter):
    """Writes a header row followed by formatted data rows."""

    @abstractmethod
    def header(self) -> List[str]:
        """Column names."""

    @abstractmethod
    def rows(self, payload) -> Iterable[List[str]]:
        """One list of formatted cells per record."""

    def export(self, payload, output_path: str) -> str:
        def write(f):
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(self.header())
            writer.writerows(self.rows(payload))

        return self._write(output_path, write)


class TraceExporter(CsvExporter):
    def __init__(self, model: RobotModel):
        self.model = model

    def header(self) -> List[str]:
        return trace_header(self.model)

    def rows(self, trace: Sequence[TraceRow]):
        for row in trace:
            yield (
                [fmt(row.t)]
                + [fmt(v) for v in row.state]
                + [fmt(v) for v in row.u]
                + [str(row.active_set)]
                + [fmt(v) for v in row.min_h]
                + [fmt(row.min_dist), fmt(row.solve_time)]
            )


class BenchmarkExporter(CsvExporter):
    def header(self) -> List[str]:
        return list(BENCH_HEADER)

    def rows(self, table: Sequence[BenchRow]):
        for row in table:
            yield [str(row.joints), fmt(row.median), fmt(row.p99), str(row.constraints)]


class WorkspaceExporter(CsvExporter):
    def header(self) -> List[str]:
        return list(WORKSPACE_HEADER)

    def rows(self, cloud: WorkspaceCloud):
        for x, y, z in cloud.points:
            yield [fmt(x), fmt(y), fmt(z)]


def export_trace(model: RobotModel, trace: Sequence[TraceRow], output_path: str) -> str:
    return TraceExporter(model).export(trace, output_path)
