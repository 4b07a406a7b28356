"""
Dense least-distance QP solver.

Solves   minimize ||u - u_p||^2   subject to   G u >= h
with a dual active-set (Goldfarb-Idnani) iteration specialised to the
identity Hessian. Rows enter in most-violated order, ties broken by the
lowest row index, so identical inputs always follow the same path.

Once no row is violated the final active set is re-projected exactly and the
KKT residual checked. A result is Optimal only when that residual is within
tolerance; otherwise it is reported as IterationLimit with the residual kept.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .models import SolveStatus
from ..utils.exceptions import InvalidConfigurationError
from ..utils.validators import as_vector

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-9
# Step directions shorter than this are treated as zero (dependent rows)
_DEPENDENCE_EPS = 1e-12
_REFINEMENT_PASSES = 2


@dataclass(frozen=True)
class QpProblem:
    """Least-distance QP data: target u_p, rows G, offsets h."""

    target: np.ndarray
    G: np.ndarray
    h: np.ndarray
    max_iterations: Optional[int] = None
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        target = as_vector(self.target, "target")
        m = target.shape[0]
        G = np.asarray(self.G, dtype=float).reshape(-1, m)
        h = as_vector(self.h, "h")

        if G.shape[0] != h.shape[0]:
            raise InvalidConfigurationError(
                f"G has {G.shape[0]} rows but h has length {h.shape[0]}"
            )
        if not self.tolerance > 0:
            raise InvalidConfigurationError("tolerance must be > 0")

        max_iterations = self.max_iterations
        if max_iterations is None:
            max_iterations = 10 * (m + G.shape[0])
        if max_iterations < 1:
            raise InvalidConfigurationError("max_iterations must be >= 1")

        object.__setattr__(self, "target", target)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "max_iterations", int(max_iterations))

    @property
    def dim(self) -> int:
        return self.target.shape[0]

    @property
    def rows(self) -> int:
        return self.G.shape[0]


@dataclass(frozen=True)
class QpSolution:
    status: SolveStatus
    u_star: np.ndarray
    active_rows: Tuple[int, ...]
    iterations: int
    kkt_residual: float
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    # Row that could not be satisfied (Infeasible only)
    blocking_row: Optional[int] = None

    @property
    def optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


def kkt_residual(problem: QpProblem, u, multipliers) -> float:
    """
    Largest KKT violation of (u, multipliers) for problem.

    Combines the stationarity norm ||u - u_p - G^T lambda||, primal
    violation, dual negativity and complementary slackness.
    """
    u = as_vector(u, "u", problem.dim)
    lam = as_vector(multipliers, "multipliers", problem.rows)

    stationarity = float(np.linalg.norm(u - problem.target - problem.G.T @ lam))
    if problem.rows == 0:
        return stationarity

    slack = problem.G @ u - problem.h
    primal = float(np.max(np.maximum(-slack, 0.0)))
    dual = float(np.max(np.maximum(-lam, 0.0)))
    complementarity = float(np.max(np.abs(lam * slack)))
    return max(stationarity, primal, dual, complementarity)


class LeastDistanceSolver:
    """
    Dual active-set solver instance.

    Holds per-solve scratch state, so one instance must not be shared between
    threads; create one per simulation loop.
    """

    def __init__(self):
        self._active: List[int] = []
        self._lam: List[float] = []
        self.solves = 0

    def solve(self, problem: QpProblem) -> QpSolution:
        self.solves += 1
        G, h = problem.G, problem.h
        tol = problem.tolerance
        u = problem.target.copy()
        self._active = []
        self._lam = []
        iterations = 0

        if problem.rows == 0:
            return self._finish(problem, u, SolveStatus.OPTIMAL, iterations)

        while True:
            slack = G @ u - h
            p = int(np.argmin(slack))
            if slack[p] >= -tol:
                return self._finish(problem, u, SolveStatus.OPTIMAL, iterations)

            n = G[p]
            lam_p = 0.0
            # Keep stepping on row p until it becomes active
            while True:
                iterations += 1
                if iterations > problem.max_iterations:
                    logger.debug("QP iteration limit hit after %d passes", iterations)
                    return self._finish(
                        problem, u, SolveStatus.ITERATION_LIMIT, iterations - 1
                    )

                z, r = self._step_direction(G, n)
                zz = float(z @ z)

                # Partial step: largest multiplier change before an active row drops
                t1, drop = np.inf, -1
                for pos, r_j in enumerate(r):
                    if r_j > _DEPENDENCE_EPS:
                        ratio = self._lam[pos] / r_j
                        if ratio < t1:
                            t1, drop = ratio, pos

                # Full step: distance to make row p tight
                t2 = np.inf
                if zz > _DEPENDENCE_EPS:
                    t2 = -(float(n @ u) - h[p]) / zz

                t = min(t1, t2)
                if not np.isfinite(t):
                    return self._finish(
                        problem, u, SolveStatus.INFEASIBLE, iterations, row=p
                    )

                if np.isfinite(t2):
                    u = u + t * z
                self._lam = [lam - t * r_j for lam, r_j in zip(self._lam, r)]
                lam_p += t

                if t2 <= t1:
                    self._active.append(p)
                    self._lam.append(lam_p)
                    break

                del self._active[drop]
                del self._lam[drop]

    def _step_direction(self, G: np.ndarray, n: np.ndarray):
        """Primal direction z (projection of n off the active rows) and dual change r."""
        if not self._active:
            return n.copy(), np.zeros(0)
        N = G[self._active]
        r = np.linalg.solve(N @ N.T, N @ n)
        z = n - N.T @ r
        return z, r

    def _polish(self, problem: QpProblem):
        """
        Equality projection of the target onto the final active rows.

        Returns (u, multiplier per active position) or None when the active
        rows are numerically dependent. Two refinement passes bring the
        active slacks down to rounding level even for large multipliers.
        """
        N = problem.G[self._active]
        h_a = problem.h[self._active]
        M = N @ N.T
        try:
            mu = np.linalg.solve(M, h_a - N @ problem.target)
            u = problem.target + N.T @ mu
            for _ in range(_REFINEMENT_PASSES):
                delta = np.linalg.solve(M, h_a - N @ u)
                mu = mu + delta
                u = u + N.T @ delta
        except np.linalg.LinAlgError:
            return None
        return u, mu

    def _multipliers(self, problem: QpProblem, values) -> np.ndarray:
        multipliers = np.zeros(problem.rows)
        for pos, idx in enumerate(self._active):
            multipliers[idx] = values[pos]
        return multipliers

    def _finish(self, problem, u, status, iterations, row=None) -> QpSolution:
        multipliers = self._multipliers(problem, self._lam)

        if status is SolveStatus.OPTIMAL:
            residual = kkt_residual(problem, u, multipliers)
            polished = self._polish(problem) if self._active else None
            if polished is not None:
                u_pol, lam_pol = polished
                lam_full = self._multipliers(problem, lam_pol)
                res_pol = kkt_residual(problem, u_pol, lam_full)
                if res_pol <= residual:
                    u, multipliers, residual = u_pol, lam_full, res_pol

            if residual > problem.tolerance:
                logger.warning(
                    "QP active set converged but KKT residual %.3e exceeds %.1e",
                    residual, problem.tolerance,
                )
                status = SolveStatus.ITERATION_LIMIT
        else:
            residual = np.inf
            if status is SolveStatus.INFEASIBLE:
                logger.debug("QP infeasible: row %s cannot be satisfied", row)

        return QpSolution(
            status=status,
            u_star=u,
            active_rows=tuple(sorted(self._active)),
            iterations=iterations,
            kkt_residual=float(residual),
            multipliers=multipliers,
            blocking_row=row,
        )


def solve_least_distance(problem: QpProblem) -> QpSolution:
    """Project problem.target onto {u : G u >= h} with a fresh solver."""
    return LeastDistanceSolver().solve(problem)
