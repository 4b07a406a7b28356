"""
Corridors of convex safe sets: waypoint selection, set handoff, validation
and decomposition of occupancy-grid mazes into overlapping boxes.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .geometry import (
    DEFAULT_MARGIN,
    ConvexSet,
    contains,
    farthest_point_along,
    intersection_nonempty,
)
from ..utils.exceptions import CorridorError, NoPathError, ValidationError
from ..utils.validators import as_vector

logger = logging.getLogger(__name__)

Cell = Tuple[int, int]
FREE = "."
BLOCKED = "#"


@dataclass(frozen=True, eq=False)
class Corridor:
    """Ordered convex sets C_0 .. C_N leading to a goal position."""

    sets: Tuple[ConvexSet, ...]
    goal: np.ndarray
    margin: float = DEFAULT_MARGIN

    def __post_init__(self):
        sets = tuple(self.sets)
        if not sets:
            raise CorridorError("A corridor needs at least one set")
        dims = {s.dim for s in sets}
        if len(dims) != 1:
            raise CorridorError(f"Corridor sets have mixed dimensions {sorted(dims)}")
        if sets[0].dim not in (2, 3):
            raise CorridorError("Corridor sets must be 2- or 3-dimensional")
        if not 0.0 <= self.margin < 1.0:
            raise CorridorError(f"margin must lie in [0, 1), got {self.margin}")

        object.__setattr__(self, "sets", sets)
        object.__setattr__(self, "goal", as_vector(self.goal, "goal", 3))

    @property
    def last(self) -> int:
        """Index N of the final set."""
        return len(self.sets) - 1

    @property
    def dim(self) -> int:
        return self.sets[0].dim

    def project(self, point) -> np.ndarray:
        """Coordinates of a 3-D point that the sets constrain."""
        return np.asarray(point, dtype=float)[: self.dim]

    def goal_in(self, i: int, margin: float = 0.0) -> bool:
        """
        Whether the goal lies in C_i shrunk toward its centre by margin.

        The shrunk set holds exactly the points farthest_point_along can
        return for the same margin.
        """
        set_ = self.sets[i]
        goal = self.project(self.goal)
        if margin > 0.0:
            goal = set_.center + (goal - set_.center) / (1.0 - margin)
        return contains(set_, goal)

    def to_dict(self) -> dict:
        return {
            "sets": [s.to_dict() for s in self.sets],
            "goal": self.goal.tolist(),
            "margin": self.margin,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Corridor":
        try:
            sets = [ConvexSet.from_dict(entry) for entry in data["sets"]]
            return cls(sets, data["goal"], float(data.get("margin", DEFAULT_MARGIN)))
        except KeyError as e:
            raise CorridorError(f"Corridor is missing field {e}") from e

    def __len__(self) -> int:
        return len(self.sets)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Corridor):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(self.to_dict()))


@dataclass(frozen=True, eq=False)
class CorridorState:
    """Active set index, its waypoint and the set assigned to each edge point."""

    index: int
    waypoint: np.ndarray
    assignment: Tuple[int, ...]

    def active_sets(self, corridor: Corridor) -> List[List[ConvexSet]]:
        return [[corridor.sets[i]] for i in self.assignment]

    def set_indices(self) -> List[List[int]]:
        return [[i] for i in self.assignment]


@dataclass
class CorridorReport:
    """Outcome of validate(); failures are listed rather than raised."""

    pairs: List[Tuple[int, int, bool]] = field(default_factory=list)
    goal_in_last: bool = False
    start_in_first: Optional[bool] = None
    start_outside: Tuple[int, ...] = ()

    @property
    def ok(self) -> bool:
        return (
            all(flag for _, _, flag in self.pairs)
            and self.goal_in_last
            and self.start_in_first is not False
        )

    def failures(self) -> List[str]:
        problems = [f"sets {i} and {j} do not intersect" for i, j, flag in self.pairs if not flag]
        if not self.goal_in_last:
            problems.append("goal is outside the last set")
        if self.start_in_first is False:
            problems.append(f"start edge points {list(self.start_outside)} are outside set 0")
        return problems

    def to_dict(self) -> dict:
        return {
            "pairs": [{"from": i, "to": j, "connected": flag} for i, j, flag in self.pairs],
            "goal_in_last": self.goal_in_last,
            "start_in_first": self.start_in_first,
            "start_outside": list(self.start_outside),
            "ok": self.ok,
        }


def select_waypoint(corridor: Corridor, i: int, x_ref) -> np.ndarray:
    """
    Waypoint inside C_i for a reference point at x_ref.

    The goal itself when it lies in C_i, at least margin deep unless C_i is
    the last set; otherwise the margin-pulled support point of C_i in the
    direction from x_ref toward the centre of C_{i+1}.
    """
    if not 0 <= i <= corridor.last:
        raise CorridorError(f"Set index {i} outside 0..{corridor.last}")

    x = as_vector(x_ref, "reference point", 3)
    current = corridor.sets[i]
    margin = 0.0 if i == corridor.last else corridor.margin
    if corridor.goal_in(i, margin):
        return corridor.goal.copy()
    if i == corridor.last:
        raise CorridorError("Goal lies outside the final set of the corridor")

    nxt = corridor.sets[i + 1]
    d = nxt.center - corridor.project(x)
    norm = np.linalg.norm(d)
    if norm < 1e-12:
        d = nxt.center - current.center
        norm = np.linalg.norm(d)
    if norm < 1e-12:
        point = current.center.copy()
    else:
        point = farthest_point_along(current, d / norm, corridor.margin)

    # Unconstrained coordinates follow the reference point
    return np.concatenate([point, x[corridor.dim :]])


def initial_state(corridor: Corridor, x_ref, edge_count: int) -> CorridorState:
    return CorridorState(0, select_waypoint(corridor, 0, x_ref), (0,) * edge_count)


def advance(
    corridor: Corridor,
    state: CorridorState,
    edge_pts: Sequence,
    x_ref=None,
) -> CorridorState:
    """
    Hand off to C_{i+1} once every edge point lies inside it.

    At most one step per call. The waypoint is recomputed from x_ref (the
    mean edge point when omitted) only when the index changes.
    """
    i = state.index
    if i >= corridor.last:
        return state

    points = np.atleast_2d(np.asarray(edge_pts, dtype=float))
    nxt = corridor.sets[i + 1]
    if not all(contains(nxt, corridor.project(p)) for p in points):
        return state

    ref = points.mean(axis=0) if x_ref is None else x_ref
    waypoint = select_waypoint(corridor, i + 1, ref)
    logger.info("handoff: set %d -> %d", i, i + 1)
    return CorridorState(i + 1, waypoint, (i + 1,) * points.shape[0])


def validate(corridor: Corridor, start_points: Optional[Sequence] = None) -> CorridorReport:
    """Pairwise connectivity, goal membership and (optionally) start membership."""
    report = CorridorReport()
    for i in range(corridor.last):
        a, b = corridor.sets[i], corridor.sets[i + 1]
        report.pairs.append((i, i + 1, intersection_nonempty(a, b)))
    report.goal_in_last = corridor.goal_in(corridor.last)

    if start_points is not None:
        points = np.atleast_2d(np.asarray(start_points, dtype=float))
        outside = tuple(
            k for k, p in enumerate(points)
            if not contains(corridor.sets[0], corridor.project(p))
        )
        report.start_in_first = not outside
        report.start_outside = outside

    for message in report.failures():
        logger.debug("corridor check: %s", message)
    return report


# Occupancy grids
def as_occupancy(grid: Union[np.ndarray, Sequence[str]]) -> np.ndarray:
    """Boolean free-cell array from text rows ('.' free, '#' blocked) or an array."""
    if isinstance(grid, np.ndarray):
        free = grid.astype(bool)
    else:
        rows = [str(r) for r in grid]
        if not rows or any(len(r) != len(rows[0]) for r in rows):
            raise ValidationError("Grid rows must be non-empty and of equal length")
        bad = {ch for r in rows for ch in r} - {FREE, BLOCKED}
        if bad:
            raise ValidationError(f"Unknown grid characters: {sorted(bad)}")
        free = np.array([[ch == FREE for ch in r] for r in rows], dtype=bool)

    if free.ndim != 2 or free.size == 0:
        raise ValidationError("Grid must be a non-empty 2-D array")
    return free


def cell_bounds(shape: Tuple[int, int], cell: Cell, cell_size: float):
    """World (lo, hi) corners of a cell; row 0 is the top of the map."""
    rows = shape[0]
    r, c = cell
    lo = np.array([c * cell_size, (rows - 1 - r) * cell_size])
    return lo, lo + cell_size


def cell_center(shape: Tuple[int, int], cell: Cell, cell_size: float) -> np.ndarray:
    lo, hi = cell_bounds(shape, cell, cell_size)
    return 0.5 * (lo + hi)


def shortest_cell_path(free: np.ndarray, start: Cell, goal: Cell) -> List[Cell]:
    """Breadth-first shortest 4-connected path from start to goal (inclusive)."""
    for name, cell in (("start", start), ("goal", goal)):
        r, c = cell
        if not (0 <= r < free.shape[0] and 0 <= c < free.shape[1]):
            raise ValidationError(f"{name} cell {cell} is outside the grid")
        if not free[r, c]:
            raise NoPathError(f"{name} cell {cell} is blocked")

    parents: Dict[Cell, Optional[Cell]] = {start: None}
    queue = deque([start])
    while queue:
        current = queue.popleft()
        if current == goal:
            path = []
            while current is not None:
                path.append(current)
                current = parents[current]
            return path[::-1]

        r, c = current
        for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if 0 <= nr < free.shape[0] and 0 <= nc < free.shape[1]:
                if free[nr, nc] and (nr, nc) not in parents:
                    parents[(nr, nc)] = current
                    queue.append((nr, nc))

    raise NoPathError(f"No free path from {start} to {goal}")


def _block_free(free: np.ndarray, r0: int, r1: int, c0: int, c1: int) -> bool:
    if r0 < 0 or c0 < 0 or r1 >= free.shape[0] or c1 >= free.shape[1]:
        return False
    return bool(free[r0 : r1 + 1, c0 : c1 + 1].all())


def _grow(free: np.ndarray, rect: List[int]) -> List[int]:
    """Grow [r0, r1, c0, c1] one row/column at a time until no side can move."""
    r0, r1, c0, c1 = rect
    grown = True
    while grown:
        grown = False
        if _block_free(free, r0 - 1, r0 - 1, c0, c1):
            r0 -= 1
            grown = True
        if _block_free(free, r1 + 1, r1 + 1, c0, c1):
            r1 += 1
            grown = True
        if _block_free(free, r0, r1, c0 - 1, c0 - 1):
            c0 -= 1
            grown = True
        if _block_free(free, r0, r1, c1 + 1, c1 + 1):
            c1 += 1
            grown = True
    return [r0, r1, c0, c1]


def _inside(rect: List[int], cell: Cell) -> bool:
    return rect[0] <= cell[0] <= rect[1] and rect[2] <= cell[1] <= rect[3]


def grid_rectangles(free: np.ndarray, path: List[Cell]) -> List[List[int]]:
    """
    Greedy cover of a cell path by maximal free rectangles [r0, r1, c0, c1].

    Each rectangle starts at the last path cell covered by its predecessor,
    so consecutive rectangles share at least that cell.
    """
    rects = []
    i = 0
    while True:
        r0 = r1 = path[i][0]
        c0 = c1 = path[i][1]
        j = i
        while j + 1 < len(path):
            r, c = path[j + 1]
            nr0, nr1 = min(r0, r), max(r1, r)
            nc0, nc1 = min(c0, c), max(c1, c)
            if not _block_free(free, nr0, nr1, nc0, nc1):
                break
            r0, r1, c0, c1 = nr0, nr1, nc0, nc1
            j += 1

        rect = _grow(free, [r0, r1, c0, c1])
        while j + 1 < len(path) and _inside(rect, path[j + 1]):
            j += 1
        rects.append(rect)
        if j == len(path) - 1:
            return rects
        i = j


def grid_maze_decompose(
    grid: Union[np.ndarray, Sequence[str]],
    start: Cell,
    goal: Cell,
    cell_size: float = 1.0,
    margin: float = DEFAULT_MARGIN,
) -> Corridor:
    """
    Corridor of 2-D boxes covering the shortest free path of an occupancy grid.

    The corridor goal is the centre of the goal cell (z = 0).
    """
    if not cell_size > 0:
        raise ValidationError(f"cell_size must be > 0, got {cell_size}")
    free = as_occupancy(grid)
    path = shortest_cell_path(free, tuple(start), tuple(goal))

    sets = []
    for k, (r0, r1, c0, c1) in enumerate(grid_rectangles(free, path)):
        lo, _ = cell_bounds(free.shape, (r1, c0), cell_size)
        _, hi = cell_bounds(free.shape, (r0, c1), cell_size)
        sets.append(ConvexSet.box(lo, hi, name=f"rect{k}"))

    goal_xy = cell_center(free.shape, tuple(goal), cell_size)
    logger.debug("grid path of %d cells covered by %d boxes", len(path), len(sets))
    return Corridor(tuple(sets), np.array([goal_xy[0], goal_xy[1], 0.0]), margin)
