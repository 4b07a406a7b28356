"""
Convex obstacle-free sets and their barrier functions.

A set is the zero-superlevel set of its barrier H. Polytopes expose one
barrier per face (b_j - a_j^T x with unit rows, i.e. the Euclidean distance to
that face) so every constraint built from them stays linear and smooth;
ellipsoids expose the single algebraic barrier 1 - (x-c)^T P (x-c).
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional

import numpy as np
from scipy.optimize import linprog

from .models import SetKind, parse_enum
from .qp_solver import LeastDistanceSolver, QpProblem
from ..utils.exceptions import EmptySetError, UnboundedSetError, ValidationError
from ..utils.validators import as_matrix, as_vector, validate_dimension

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
DEFAULT_MARGIN = 0.05
DEFAULT_PROBES = 64
MEMBERSHIP_TOL = 1e-9
UNIT_ROW_TOL = 4 * np.finfo(float).eps


@dataclass(frozen=True)
class BarrierEvaluation:
    value: float
    gradient: np.ndarray


@dataclass(frozen=True, eq=False)
class ConvexSet:
    """
    Ellipsoid {x : (x-c)^T P (x-c) <= 1} or polytope {x : A x <= b}.

    Build through ConvexSet.ellipsoid / polytope / box / ball; the raw
    constructor is used by those after validation.
    """

    kind: SetKind
    center_point: Optional[np.ndarray] = None
    shape: Optional[np.ndarray] = None
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    bounds: Optional[tuple] = None
    name: str = ""
    _meta: Dict = field(default_factory=dict, repr=False)

    # Constructors
    @classmethod
    def ellipsoid(cls, center, shape, name: str = "") -> "ConvexSet":
        c = as_vector(center, "ellipsoid center")
        P = as_matrix(shape, "ellipsoid shape", (c.shape[0], c.shape[0]))

        if np.max(np.abs(P - P.T)) > SYMMETRY_TOL:
            raise ValidationError("Ellipsoid shape matrix must be symmetric")
        if np.min(np.linalg.eigvalsh(P)) <= 0:
            raise ValidationError("Ellipsoid shape matrix must be positive definite")

        c.setflags(write=False)
        P.setflags(write=False)
        return cls(SetKind.ELLIPSOID, center_point=c, shape=P, name=name)

    @classmethod
    def ball(cls, center, radius: float, name: str = "") -> "ConvexSet":
        c = as_vector(center, "ball center")
        if not radius > 0:
            raise ValidationError("Ball radius must be > 0")
        return cls.ellipsoid(c, np.eye(c.shape[0]) / radius**2, name=name)

    @classmethod
    def polytope(cls, A, b, name: str = "", bounds: Optional[tuple] = None) -> "ConvexSet":
        A = as_matrix(A, "polytope A")
        b = as_vector(b, "polytope b", A.shape[0])

        norms = np.linalg.norm(A, axis=1)
        if np.any(norms <= 0):
            raise ValidationError("Polytope rows must be nonzero")
        # Rows already unit up to rounding stay bit-identical
        norms = np.where(np.abs(norms - 1.0) > UNIT_ROW_TOL, norms, 1.0)
        A = A / norms[:, None]
        b = b / norms

        A.setflags(write=False)
        b.setflags(write=False)
        poly = cls(SetKind.POLYTOPE, A=A, b=b, bounds=bounds, name=name)
        # Validates nonemptiness up front
        poly._chebyshev()
        return poly

    @classmethod
    def box(cls, lo, hi, name: str = "") -> "ConvexSet":
        lo = as_vector(lo, "box min")
        hi = as_vector(hi, "box max", lo.shape[0])
        if np.any(hi <= lo):
            raise ValidationError("Box max must exceed box min in every coordinate")

        n = lo.shape[0]
        eye = np.eye(n)
        A = np.vstack([eye, -eye])
        b = np.concatenate([hi, -lo])
        lo.setflags(write=False)
        hi.setflags(write=False)
        return cls.polytope(A, b, name=name, bounds=(lo, hi))

    # Basic properties
    @property
    def dim(self) -> int:
        if self.kind is SetKind.ELLIPSOID:
            return self.center_point.shape[0]
        return self.A.shape[1]

    @property
    def is_box(self) -> bool:
        return self.bounds is not None

    @property
    def face_count(self) -> int:
        return 1 if self.kind is SetKind.ELLIPSOID else self.A.shape[0]

    @cached_property
    def center(self) -> np.ndarray:
        """Analytic centre (box centre, ellipsoid centre, log-barrier centre)."""
        if self.kind is SetKind.ELLIPSOID:
            return self.center_point
        if self.is_box:
            return 0.5 * (self.bounds[0] + self.bounds[1])
        return self._analytic_center()

    @cached_property
    def inradius(self) -> float:
        """Smallest face distance from the centre (ellipsoids: smallest semi-axis)."""
        if self.kind is SetKind.ELLIPSOID:
            return float(1.0 / np.sqrt(np.max(np.linalg.eigvalsh(self.shape))))
        return float(np.min(self.b - self.A @ self.center))

    def _chebyshev(self) -> np.ndarray:
        if "chebyshev" in self._meta:
            return self._meta["chebyshev"]

        # maximize r s.t. a_j^T x + r <= b_j  (unit rows)
        n = self.dim
        c = np.zeros(n + 1)
        c[-1] = -1.0
        A_ub = np.hstack([self.A, np.ones((self.A.shape[0], 1))])
        bounds = [(None, None)] * n + [(0, None)]
        res = linprog(c, A_ub=A_ub, b_ub=self.b, bounds=bounds, method="highs")

        if res.status == 2:
            raise EmptySetError(f"Polytope {self.name or ''} is empty".strip())
        if res.status == 3:
            # Unbounded inscribed radius: any feasible point will do
            res = linprog(
                np.zeros(n), A_ub=self.A, b_ub=self.b,
                bounds=[(None, None)] * n, method="highs",
            )
            if res.status != 0:
                raise EmptySetError("Polytope has no feasible point")
            point = res.x
        elif res.status != 0:
            raise EmptySetError(f"Chebyshev centre failed: {res.message}")
        else:
            if res.x[-1] <= 0:
                raise EmptySetError("Polytope has no interior point")
            point = res.x[:n]

        self._meta["chebyshev"] = point
        return point

    def _analytic_center(self, iterations: int = 50) -> np.ndarray:
        """Newton iterations on -sum(log(b - A x)) from the Chebyshev centre."""
        x = self._chebyshev().copy()
        for _ in range(iterations):
            s = self.b - self.A @ x
            grad = self.A.T @ (1.0 / s)
            hess = self.A.T @ (self.A / (s**2)[:, None])
            step = -np.linalg.solve(hess, grad)
            decrement = float(-grad @ step)
            if decrement < 1e-20:
                break
            # Backtrack to stay strictly inside
            t = 1.0
            while np.any(self.b - self.A @ (x + t * step) <= 0):
                t *= 0.5
            x = x + t * step
        return x

    # Serialisation in scenario schema
    def to_dict(self) -> dict:
        if self.kind is SetKind.ELLIPSOID:
            data = {
                "type": "ellipsoid",
                "center": self.center_point.tolist(),
                "shape": self.shape.tolist(),
            }
        elif self.is_box:
            data = {
                "type": "box",
                "min": self.bounds[0].tolist(),
                "max": self.bounds[1].tolist(),
            }
        else:
            data = {"type": "polytope", "A": self.A.tolist(), "b": self.b.tolist()}
        if self.name:
            data["name"] = self.name
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ConvexSet":
        if not isinstance(data, dict) or "type" not in data:
            raise ValidationError("Set entry must be an object with a 'type' field")
        name = data.get("name", "")
        kind = str(data["type"]).lower()
        try:
            if kind == "box":
                return cls.box(data["min"], data["max"], name=name)
            if kind == "ellipsoid":
                return cls.ellipsoid(data["center"], data["shape"], name=name)
            if kind == "ball":
                return cls.ball(data["center"], data["radius"], name=name)
            parse_enum(SetKind, kind, "set type")
            return cls.polytope(data["A"], data["b"], name=name)
        except KeyError as e:
            raise ValidationError(f"Set of type '{kind}' is missing field {e}") from e

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConvexSet):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(self.to_dict()))

    def __contains__(self, point) -> bool:
        return contains(self, point)


def _as_point(set_: ConvexSet, point) -> np.ndarray:
    x = as_vector(point, "point")
    validate_dimension(x, set_.dim)
    return x


def barrier_faces(set_: ConvexSet, point) -> List[BarrierEvaluation]:
    """One barrier per smooth piece: 1 for an ellipsoid, one per polytope face."""
    x = _as_point(set_, point)

    if set_.kind is SetKind.ELLIPSOID:
        e = x - set_.center_point
        Pe = set_.shape @ e
        return [BarrierEvaluation(float(1.0 - e @ Pe), -2.0 * Pe)]

    values = set_.b - set_.A @ x
    return [BarrierEvaluation(float(v), -a) for v, a in zip(values, set_.A)]


def barrier_arrays(set_: ConvexSet, points: np.ndarray):
    """
    Vectorised barrier_faces for many points.

    Returns (values, gradients) with shapes (k, faces) and (k, faces, n).
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if X.shape[1] != set_.dim:
        raise ValidationError(
            f"points have dimension {X.shape[1]}, set has dimension {set_.dim}"
        )

    if set_.kind is SetKind.ELLIPSOID:
        E = X - set_.center_point
        PE = E @ set_.shape
        values = 1.0 - np.einsum("ki,ki->k", E, PE)
        return values[:, None], (-2.0 * PE)[:, None, :]

    values = set_.b[None, :] - X @ set_.A.T
    grads = np.broadcast_to(-set_.A, (X.shape[0],) + set_.A.shape)
    return values, grads


def min_barrier(set_: ConvexSet, point) -> float:
    """
    Smallest barrier value at point.

    Signed Euclidean distance to the nearest face for polytopes; the
    dimensionless algebraic barrier for ellipsoids.
    """
    return min(face.value for face in barrier_faces(set_, point))


def contains(set_: ConvexSet, point, tol: float = 0.0) -> bool:
    """Closed membership test: min_barrier >= -tol."""
    return min_barrier(set_, point) >= -tol


def contains_segment(set_: ConvexSet, p, q, samples: int = 100) -> bool:
    """True when every sampled point of segment [p, q] lies in set_."""
    p = _as_point(set_, p)
    q = _as_point(set_, q)
    lam = np.linspace(0.0, 1.0, samples)[:, None]
    values, _ = barrier_arrays(set_, lam * p + (1.0 - lam) * q)
    return bool(np.all(values >= -MEMBERSHIP_TOL))


def farthest_point_along(set_: ConvexSet, direction, margin: float = DEFAULT_MARGIN) -> np.ndarray:
    """
    Support point of set_ in direction, pulled toward the centre by margin.

    Polytope optimisers are made unique by taking the lexicographically
    smallest point of the optimal face.
    """
    d = _as_point(set_, direction)
    norm = np.linalg.norm(d)
    if abs(norm - 1.0) > 1e-9:
        raise ValidationError(f"direction must have unit norm, got {norm}")
    if not 0.0 <= margin < 1.0:
        raise ValidationError(f"margin must lie in [0, 1), got {margin}")

    if set_.kind is SetKind.ELLIPSOID:
        Pinv_d = np.linalg.solve(set_.shape, d)
        scale = np.sqrt(d @ Pinv_d)
        return set_.center_point + (1.0 - margin) * Pinv_d / scale

    support = _polytope_support(set_, d)
    return support + margin * (set_.center - support)


def _polytope_support(set_: ConvexSet, d: np.ndarray) -> np.ndarray:
    n = set_.dim
    free = [(None, None)] * n
    res = linprog(-d, A_ub=set_.A, b_ub=set_.b, bounds=free, method="highs-ds")
    if res.status == 3:
        raise UnboundedSetError(f"Set is unbounded in direction {d.tolist()}")
    if res.status != 0:
        raise ValidationError(f"Support query failed: {res.message}")

    best = res.x
    A_eq = [d]
    b_eq = [float(d @ best)]
    # Walk the optimal face to its lexicographically smallest point
    for k in range(n):
        c = np.zeros(n)
        c[k] = 1.0
        step = linprog(
            c, A_ub=set_.A, b_ub=set_.b, A_eq=np.array(A_eq), b_eq=np.array(b_eq),
            bounds=free, method="highs-ds",
        )
        if step.status != 0:
            break
        best = step.x
        A_eq.append(c)
        b_eq.append(float(best[k]))
    return best


def intersection_nonempty(a: ConvexSet, b: ConvexSet, probes: int = DEFAULT_PROBES) -> bool:
    """
    Whether two sets share a point.

    Box pairs use exact interval overlap. Otherwise a least-distance QP over
    the polytope faces plus tangent cuts of any ellipsoid is solved
    repeatedly (at most probes rounds) until its solution lies in both sets
    or the cut polyhedron becomes empty.
    """
    if a.dim != b.dim:
        raise ValidationError(f"Set dimensions differ: {a.dim} vs {b.dim}")

    if a.is_box and b.is_box:
        lo = np.maximum(a.bounds[0], b.bounds[0])
        hi = np.minimum(a.bounds[1], b.bounds[1])
        return bool(np.all(lo <= hi))

    rows, offsets = [], []
    for s in (a, b):
        if s.kind is SetKind.POLYTOPE:
            rows.append(-s.A)
            offsets.append(-s.b)

    solver = LeastDistanceSolver()
    target = a.center.astype(float)
    for _ in range(probes):
        G = np.vstack(rows) if rows else np.zeros((0, a.dim))
        h = np.concatenate(offsets) if offsets else np.zeros(0)
        sol = solver.solve(QpProblem(target, G, h))
        if not sol.optimal:
            return False

        x = sol.u_star
        outside = [s for s in (a, b) if min_barrier(s, x) < -MEMBERSHIP_TOL]
        if not outside:
            return True

        for s in outside:
            # Tangent halfspace at the radial projection separates x from s
            e = x - s.center_point
            boundary = s.center_point + e / np.sqrt(e @ s.shape @ e)
            if min(min_barrier(a, boundary), min_barrier(b, boundary)) >= -MEMBERSHIP_TOL:
                return True
            normal = s.shape @ (boundary - s.center_point)
            rows.append(-normal[None, :])
            offsets.append(np.array([-float(normal @ boundary)]))

    logger.debug("intersection test undecided after %d probes", probes)
    return False


def sample_interior(set_: ConvexSet, rng: np.random.Generator, count: int) -> np.ndarray:
    """Uniform-ish random points of set_ (rejection from the bounding region)."""
    n = set_.dim
    if set_.kind is SetKind.ELLIPSOID:
        L = np.linalg.cholesky(np.linalg.inv(set_.shape))
        raw = rng.normal(size=(count, n))
        raw /= np.linalg.norm(raw, axis=1, keepdims=True)
        radii = rng.uniform(size=(count, 1)) ** (1.0 / n)
        return set_.center_point + (raw * radii) @ L.T

    lo, hi = _bounding_box(set_)
    points: List[np.ndarray] = []
    while sum(len(p) for p in points) < count:
        batch = rng.uniform(lo, hi, size=(4 * count, n))
        values, _ = barrier_arrays(set_, batch)
        points.append(batch[np.all(values >= 0, axis=1)])
    return np.vstack(points)[:count]


def _bounding_box(set_: ConvexSet):
    if set_.is_box:
        return set_.bounds
    n = set_.dim
    lo, hi = np.zeros(n), np.zeros(n)
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        hi[k] = _polytope_support(set_, e)[k]
        lo[k] = _polytope_support(set_, -e)[k]
    return lo, hi
