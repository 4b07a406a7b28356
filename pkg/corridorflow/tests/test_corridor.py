"""
Tests for corridor waypoints, handoff, validation and grid decomposition.
"""

import numpy as np
import pytest

from ..api.grid import load_grid
from ..api.scenario import SCENARIO_DIR
from ..core.corridor import (
    Corridor,
    CorridorState,
    advance,
    cell_bounds,
    grid_maze_decompose,
    grid_rectangles,
    initial_state,
    select_waypoint,
    shortest_cell_path,
    validate,
)
from ..core.geometry import ConvexSet, contains, min_barrier
from ..utils.exceptions import CorridorError, NoPathError, ValidationError


def two_boxes(goal=(1.5, 0.5, 0.0)):
    return Corridor(
        (ConvexSet.box([0.0, 0.0], [1.0, 1.0]), ConvexSet.box([1.0, 0.0], [2.0, 1.0])),
        goal,
        margin=0.05,
    )


class TestCorridor:
    def test_needs_sets(self):
        with pytest.raises(CorridorError):
            Corridor((), [0.0, 0.0, 0.0])

    def test_mixed_dimensions(self):
        sets = (ConvexSet.box([0, 0], [1, 1]), ConvexSet.box([0, 0, 0], [1, 1, 1]))
        with pytest.raises(CorridorError):
            Corridor(sets, [0.0, 0.0, 0.0])

    def test_margin_range(self):
        with pytest.raises(CorridorError):
            Corridor((ConvexSet.box([0, 0], [1, 1]),), [0.5, 0.5, 0.0], margin=1.0)

    def test_round_trip(self):
        corridor = two_boxes()
        assert Corridor.from_dict(corridor.to_dict()) == corridor
        assert len(corridor) == 2
        assert corridor.last == 1

    def test_missing_field(self):
        with pytest.raises(CorridorError):
            Corridor.from_dict({"sets": []})


class TestSelectWaypoint:
    def test_support_toward_next_set(self):
        waypoint = select_waypoint(two_boxes(), 0, [0.5, 0.5, 0.0])
        np.testing.assert_allclose(waypoint[:2], [0.975, 0.025], atol=1e-9)

    def test_waypoint_keeps_margin(self):
        corridor = two_boxes()
        box = corridor.sets[0]
        waypoint = select_waypoint(corridor, 0, [0.2, 0.7, 0.3])
        assert min_barrier(box, waypoint[:2]) >= corridor.margin * box.inradius - 1e-9
        assert waypoint[2] == pytest.approx(0.3)

    def test_goal_in_set_is_returned(self):
        waypoint = select_waypoint(two_boxes(), 1, [1.2, 0.5, 0.0])
        np.testing.assert_allclose(waypoint, [1.5, 0.5, 0.0])

    def test_goal_in_first_set(self):
        corridor = two_boxes(goal=(0.25, 0.25, 0.0))
        np.testing.assert_allclose(select_waypoint(corridor, 0, [0.5, 0.5, 0.0]), [0.25, 0.25, 0.0])

    def test_goal_on_shared_face(self):
        corridor = two_boxes(goal=(1.0, 0.5, 0.0))
        assert corridor.goal_in(0)
        assert not corridor.goal_in(0, corridor.margin)
        waypoint = select_waypoint(corridor, 0, [0.5, 0.5, 0.0])
        np.testing.assert_allclose(waypoint[:2], [0.975, 0.025], atol=1e-9)
        np.testing.assert_allclose(select_waypoint(corridor, 1, [1.2, 0.5, 0.0]), [1.0, 0.5, 0.0])

    def test_goal_in_margin_band(self):
        corridor = two_boxes(goal=(0.98, 0.5, 0.0))
        assert corridor.goal_in(0, 0.01)
        assert not corridor.goal_in(0, corridor.margin)

    def test_goal_outside_last_set(self):
        corridor = two_boxes(goal=(5.0, 5.0, 0.0))
        with pytest.raises(CorridorError):
            select_waypoint(corridor, 1, [1.5, 0.5, 0.0])

    def test_index_range(self):
        with pytest.raises(CorridorError):
            select_waypoint(two_boxes(), 2, [0.5, 0.5, 0.0])

    def test_ellipsoid_cell(self):
        corridor = Corridor(
            (ConvexSet.ellipsoid([0.0, 0.0], np.diag([0.25, 1.0])), ConvexSet.ball([3.0, 0.0], 1.5)),
            [3.0, 0.0, 0.0],
            margin=0.0,
        )
        np.testing.assert_allclose(
            select_waypoint(corridor, 0, [0.0, 0.0, 0.0])[:2], [2.0, 0.0], atol=1e-12
        )


class TestAdvance:
    def setup_method(self):
        self.corridor = two_boxes()
        self.state = initial_state(self.corridor, [0.5, 0.5, 0.0], 2)

    def test_initial_state(self):
        assert self.state.index == 0
        assert self.state.assignment == (0, 0)
        assert len(self.state.active_sets(self.corridor)) == 2

    def test_no_handoff_while_an_edge_is_outside(self):
        pts = [[0.9, 0.5, 0.0], [1.4, 0.5, 0.0]]
        assert advance(self.corridor, self.state, pts) is self.state

    def test_handoff_when_all_edges_inside(self):
        pts = [[1.0, 0.5, 0.0], [1.4, 0.5, 0.0]]
        nxt = advance(self.corridor, self.state, pts)
        assert nxt.index == 1
        assert nxt.assignment == (1, 1)
        assert nxt.set_indices() == [[1], [1]]
        np.testing.assert_allclose(nxt.waypoint, [1.5, 0.5, 0.0])

    def test_last_set_is_final(self):
        last = CorridorState(1, np.array([1.5, 0.5, 0.0]), (1, 1))
        assert advance(self.corridor, last, [[1.5, 0.5, 0.0], [1.6, 0.5, 0.0]]) is last

    def test_one_step_per_call(self):
        corridor = Corridor(
            tuple(ConvexSet.box([0.0, 0.0], [3.0, 1.0]) for _ in range(3)),
            [2.0, 0.5, 0.0],
        )
        state = CorridorState(0, np.zeros(3), (0, 0))
        nxt = advance(corridor, state, [[1.0, 0.5, 0.0], [2.0, 0.5, 0.0]])
        assert nxt.index == 1


class TestValidate:
    def test_valid_corridor(self):
        report = validate(two_boxes(), [[0.5, 0.5, 0.0]])
        assert report.ok
        assert report.failures() == []
        assert report.to_dict()["ok"] is True

    def test_disconnected_pair(self):
        corridor = Corridor(
            (ConvexSet.box([0, 0], [1, 1]), ConvexSet.box([2, 0], [3, 1])), [2.5, 0.5, 0.0]
        )
        report = validate(corridor)
        assert not report.ok
        assert report.pairs == [(0, 1, False)]
        assert "do not intersect" in report.failures()[0]

    def test_goal_outside_last(self):
        report = validate(two_boxes(goal=(5.0, 5.0, 0.0)))
        assert not report.goal_in_last

    def test_start_outside_first(self):
        report = validate(two_boxes(), [[0.5, 0.5, 0.0], [1.5, 0.5, 0.0]])
        assert report.start_in_first is False
        assert report.start_outside == (1,)
        assert report.failures()[0].startswith("start edge points")


class TestGridDecomposition:
    def test_straight_corridor_is_one_box(self):
        corridor = grid_maze_decompose(["..."], (0, 0), (0, 2))
        assert len(corridor) == 1
        np.testing.assert_allclose(corridor.sets[0].bounds[0], [0.0, 0.0])
        np.testing.assert_allclose(corridor.sets[0].bounds[1], [3.0, 1.0])
        np.testing.assert_allclose(corridor.goal, [2.5, 0.5, 0.0])

    def test_l_shape_is_two_boxes(self):
        corridor = grid_maze_decompose(["..", "#."], (0, 0), (1, 1))
        assert len(corridor) == 2
        np.testing.assert_allclose(corridor.sets[0].bounds[0], [0.0, 1.0])
        np.testing.assert_allclose(corridor.sets[0].bounds[1], [2.0, 2.0])
        np.testing.assert_allclose(corridor.sets[1].bounds[0], [1.0, 0.0])
        np.testing.assert_allclose(corridor.sets[1].bounds[1], [2.0, 2.0])
        assert validate(corridor).ok

    def test_blocked_goal(self):
        with pytest.raises(NoPathError):
            grid_maze_decompose(["..#"], (0, 0), (0, 2))

    def test_unreachable_goal(self):
        with pytest.raises(NoPathError):
            grid_maze_decompose([".#."], (0, 0), (0, 2))

    def test_cell_outside_grid(self):
        with pytest.raises(ValidationError):
            grid_maze_decompose(["..."], (0, 0), (3, 0))

    def test_bad_characters(self):
        with pytest.raises(ValidationError):
            grid_maze_decompose([".x."], (0, 0), (0, 2))

    def test_shortest_path(self):
        free = np.array([[True, True, True], [True, False, True], [True, True, True]])
        path = shortest_cell_path(free, (0, 0), (2, 2))
        assert len(path) == 5
        assert path[0] == (0, 0) and path[-1] == (2, 2)

    def test_consecutive_rectangles_share_a_path_cell(self):
        grid = load_grid(SCENARIO_DIR / "maze.txt")
        path = shortest_cell_path(grid.free, grid.start, grid.goal)
        rects = grid_rectangles(grid.free, path)
        for a, b in zip(rects, rects[1:]):
            shared = [
                cell for cell in path
                if a[0] <= cell[0] <= a[1] and a[2] <= cell[1] <= a[3]
                and b[0] <= cell[0] <= b[1] and b[2] <= cell[1] <= b[3]
            ]
            assert shared

    def test_bundled_maze(self):
        grid = load_grid(SCENARIO_DIR / "maze.txt")
        corridor = grid_maze_decompose(grid.free, grid.start, grid.goal, cell_size=2.5)
        assert len(corridor) == 5
        assert validate(corridor).ok
        start = grid.center(grid.start, 2.5)
        assert contains(corridor.sets[0], start)
        for set_ in corridor.sets:
            assert set_.inradius >= 1.25 - 1e-12

    def test_cell_bounds_orientation(self):
        lo, hi = cell_bounds((3, 4), (0, 1), 2.0)
        np.testing.assert_allclose(lo, [2.0, 4.0])
        np.testing.assert_allclose(hi, [4.0, 6.0])
