"""
Tests for convex sets, barriers and support points.
"""

import numpy as np
import pytest

from ..core.geometry import (
    ConvexSet,
    barrier_arrays,
    barrier_faces,
    contains,
    contains_segment,
    farthest_point_along,
    intersection_nonempty,
    min_barrier,
    sample_interior,
)
from ..core.models import SetKind
from ..utils.exceptions import EmptySetError, UnboundedSetError, ValidationError


def unit_sphere():
    return ConvexSet.ellipsoid(np.zeros(3), np.eye(3))


def unit_box():
    return ConvexSet.box([0.0, 0.0], [1.0, 1.0])


def tilted_ellipse():
    return ConvexSet.ellipsoid([0.5, -0.2], [[2.0, 0.3], [0.3, 1.0]])


def triangle():
    return ConvexSet.polytope([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]], [0.0, 0.0, 2.0])


class TestBarrierFaces:
    def test_sphere_center(self):
        faces = barrier_faces(unit_sphere(), [0.0, 0.0, 0.0])
        assert len(faces) == 1
        assert faces[0].value == pytest.approx(1.0)
        np.testing.assert_allclose(faces[0].gradient, np.zeros(3))

    def test_sphere_outside(self):
        face = barrier_faces(unit_sphere(), [2.0, 0.0, 0.0])[0]
        assert face.value == pytest.approx(-3.0)
        np.testing.assert_allclose(face.gradient, [-4.0, 0.0, 0.0])

    def test_box_center_faces(self):
        faces = barrier_faces(unit_box(), [0.5, 0.5])
        assert len(faces) == 4
        assert [f.value for f in faces] == pytest.approx([0.5] * 4)

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            barrier_faces(unit_box(), [0.0, 0.0, 0.0])

    def test_polytope_rows_are_normalised(self):
        poly = ConvexSet.polytope(
            [[2.0, 0.0], [-3.0, 0.0], [0.0, 5.0], [0.0, -1.0]], [2.0, 0.0, 5.0, 0.0]
        )
        np.testing.assert_allclose(np.linalg.norm(poly.A, axis=1), 1.0)
        np.testing.assert_allclose(poly.b, [1.0, 0.0, 1.0, 0.0])
        assert poly.kind is SetKind.POLYTOPE
        assert poly.face_count == 4

    def test_arrays_match_faces(self):
        points = np.array([[0.2, 0.3], [1.5, -0.5]])
        values, grads = barrier_arrays(triangle(), points)
        assert values.shape == (2, 3)
        assert grads.shape == (2, 3, 2)
        for k, p in enumerate(points):
            faces = barrier_faces(triangle(), p)
            assert values[k] == pytest.approx([f.value for f in faces])

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(0)
        step = 1e-6
        for set_ in (tilted_ellipse(), triangle(), unit_sphere()):
            for x in sample_interior(set_, rng, 20):
                values, grads = barrier_arrays(set_, x)
                fd = np.zeros_like(grads[0])
                for i in range(set_.dim):
                    e = np.zeros(set_.dim)
                    e[i] = step
                    hi, _ = barrier_arrays(set_, x + e)
                    lo, _ = barrier_arrays(set_, x - e)
                    fd[:, i] = (hi[0] - lo[0]) / (2 * step)
                np.testing.assert_allclose(fd, grads[0], rtol=1e-5, atol=1e-7)


class TestMembership:
    def test_min_barrier_examples(self):
        assert min_barrier(unit_box(), [0.1, 0.5]) == pytest.approx(0.1)
        assert min_barrier(unit_sphere(), [1.0, 0.0, 0.0]) == pytest.approx(0.0)
        assert min_barrier(unit_box(), [1.2, 0.5]) == pytest.approx(-0.2)

    def test_contains(self):
        assert contains(unit_sphere(), [0.0, 0.0, 0.0])
        assert contains(unit_sphere(), [1.0, 0.0, 0.0])
        assert not contains(unit_box(), [1.5, 0.5])
        assert contains(unit_box(), [1.0 + 1e-10, 0.5], tol=1e-9)
        assert [0.5, 0.5] in unit_box()

    def test_convex_combinations_stay_inside(self):
        rng = np.random.default_rng(1)
        for set_ in (tilted_ellipse(), triangle(), unit_box()):
            p, q = sample_interior(set_, rng, 2)
            for lam in np.linspace(0.0, 1.0, 100):
                assert contains(set_, lam * p + (1 - lam) * q, tol=1e-12)

    def test_segment_membership(self):
        assert contains_segment(unit_box(), [0.1, 0.1], [0.9, 0.9])
        assert not contains_segment(unit_box(), [0.1, 0.1], [1.5, 0.5])

    def test_sample_interior_count(self):
        rng = np.random.default_rng(2)
        pts = sample_interior(triangle(), rng, 50)
        assert pts.shape == (50, 2)
        assert all(contains(triangle(), p) for p in pts)


class TestFarthestPoint:
    def test_sphere(self):
        np.testing.assert_allclose(
            farthest_point_along(unit_sphere(), [1.0, 0.0, 0.0], margin=0.0),
            [1.0, 0.0, 0.0],
        )

    def test_ellipse_long_axis(self):
        ellipse = ConvexSet.ellipsoid([0.0, 0.0], np.diag([0.25, 1.0]))
        np.testing.assert_allclose(
            farthest_point_along(ellipse, [1.0, 0.0], margin=0.0), [2.0, 0.0], atol=1e-12
        )

    def test_box_lexicographic_tie_break(self):
        np.testing.assert_allclose(
            farthest_point_along(unit_box(), [1.0, 0.0], margin=0.0), [1.0, 0.0], atol=1e-9
        )

    def test_margin_pulls_toward_center(self):
        point = farthest_point_along(unit_box(), [1.0, 0.0], margin=0.05)
        np.testing.assert_allclose(point, [0.975, 0.025], atol=1e-9)

    def test_zero_margin_lands_on_boundary(self):
        rng = np.random.default_rng(3)
        for set_ in (tilted_ellipse(), unit_box(), triangle()):
            for _ in range(20):
                d = rng.normal(size=2)
                d /= np.linalg.norm(d)
                point = farthest_point_along(set_, d, margin=0.0)
                assert abs(min_barrier(set_, point)) < 1e-8

    def test_support_is_optimal(self):
        rng = np.random.default_rng(4)
        for set_ in (tilted_ellipse(), triangle()):
            samples = sample_interior(set_, rng, 1000)
            for _ in range(20):
                d = rng.normal(size=2)
                d /= np.linalg.norm(d)
                best = farthest_point_along(set_, d, margin=0.0)
                assert np.max(samples @ d) <= d @ best + 1e-9

    def test_unbounded_direction(self):
        strip = ConvexSet.polytope([[1.0, 0.0], [-1.0, 0.0]], [1.0, 0.0])
        with pytest.raises(UnboundedSetError):
            farthest_point_along(strip, [0.0, 1.0], margin=0.0)

    def test_rejects_non_unit_direction(self):
        with pytest.raises(ValidationError):
            farthest_point_along(unit_box(), [2.0, 0.0])

    def test_rejects_margin_of_one(self):
        with pytest.raises(ValidationError):
            farthest_point_along(unit_box(), [1.0, 0.0], margin=1.0)


class TestIntersection:
    def test_overlapping_boxes(self):
        other = ConvexSet.box([0.5, 0.5], [1.5, 1.5])
        assert intersection_nonempty(unit_box(), other)

    def test_touching_boxes(self):
        other = ConvexSet.box([1.0, 0.0], [2.0, 1.0])
        assert intersection_nonempty(unit_box(), other)

    def test_disjoint_boxes(self):
        other = ConvexSet.box([2.0, 2.0], [3.0, 3.0])
        assert not intersection_nonempty(unit_box(), other)

    def test_disk_and_box(self):
        disk = ConvexSet.ball([0.0, 0.0], 1.0)
        assert intersection_nonempty(disk, ConvexSet.box([0.5, 0.5], [1.5, 1.5]))
        assert not intersection_nonempty(disk, ConvexSet.box([2.0, 2.0], [3.0, 3.0]))

    def test_two_balls(self):
        a = ConvexSet.ball([0.0, 0.0], 1.0)
        assert intersection_nonempty(a, ConvexSet.ball([1.5, 0.0], 1.0))
        assert not intersection_nonempty(a, ConvexSet.ball([3.0, 0.0], 1.0))

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            intersection_nonempty(unit_box(), unit_sphere())


class TestConstruction:
    def test_round_trip_dicts(self):
        for set_ in (unit_box(), tilted_ellipse(), triangle()):
            assert ConvexSet.from_dict(set_.to_dict()) == set_

    def test_ball_entry(self):
        ball = ConvexSet.from_dict({"type": "ball", "center": [1.0, 2.0], "radius": 2.0})
        assert ball == ConvexSet.ball([1.0, 2.0], 2.0)
        assert ball.inradius == pytest.approx(2.0)

    def test_unit_rows_are_kept_bit_for_bit(self):
        once = triangle()
        twice = ConvexSet.polytope(once.A, once.b)
        np.testing.assert_array_equal(twice.A, once.A)
        np.testing.assert_array_equal(twice.b, once.b)
        np.testing.assert_allclose(np.linalg.norm(once.A, axis=1), 1.0, atol=1e-15)

    def test_repeated_round_trips_are_stable(self):
        set_ = ConvexSet.polytope([[3.0, 1.0], [-1.0, 2.0], [-1.0, -4.0]], [3.0, 2.0, 1.0])
        for _ in range(5):
            again = ConvexSet.from_dict(set_.to_dict())
            assert again == set_
            set_ = again

    def test_unknown_type(self):
        with pytest.raises(ValidationError):
            ConvexSet.from_dict({"type": "sphere", "center": [0, 0]})

    def test_missing_field(self):
        with pytest.raises(ValidationError):
            ConvexSet.from_dict({"type": "box", "min": [0, 0]})

    def test_empty_polytope(self):
        A = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]
        with pytest.raises(EmptySetError):
            ConvexSet.polytope(A, [0.0, -1.0, 1.0, 1.0])

    def test_bad_ellipsoid_shape(self):
        with pytest.raises(ValidationError):
            ConvexSet.ellipsoid([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(ValidationError):
            ConvexSet.ellipsoid([0.0, 0.0], [[1.0, 0.0], [0.0, -1.0]])

    def test_bad_box(self):
        with pytest.raises(ValidationError):
            ConvexSet.box([0.0, 0.0], [1.0, 0.0])

    def test_centers(self):
        np.testing.assert_allclose(unit_box().center, [0.5, 0.5])
        assert unit_box().inradius == pytest.approx(0.5)
        assert min_barrier(triangle(), triangle().center) > 0
