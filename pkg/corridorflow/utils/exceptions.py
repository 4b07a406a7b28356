"""
Custom exceptions for the corridorflow package.
"""

from typing import Optional


class CorridorFlowError(Exception):
    """Base exception for all corridorflow errors."""

    pass


class ValidationError(CorridorFlowError):
    """Raised when input validation fails (bad values, dimension mismatch)."""

    pass


class InvalidConfigurationError(CorridorFlowError):
    """Raised when configuration is invalid."""

    pass


class UnboundedSetError(CorridorFlowError):
    """Raised when a polytope is unbounded in the queried direction."""

    pass


class EmptySetError(CorridorFlowError):
    """Raised when a polytope has no interior point."""

    pass


class UnsafeStateError(CorridorFlowError):
    """Raised when an edge point already lies outside its active set."""

    def __init__(self, message: str, edge: int, set_index: Optional[int] = None):
        super().__init__(message)
        self.edge = edge
        self.set_index = set_index


class InfeasibleControlError(CorridorFlowError):
    """Raised when no control satisfies every CBF row and the policy is Halt."""

    def __init__(self, message: str, rows: tuple = ()):
        super().__init__(message)
        # (edge, set_index, face) triples of the rows active at failure
        self.rows = rows


class CorridorError(CorridorFlowError):
    """Raised when a corridor is invalid."""

    pass


class NoPathError(CorridorError):
    """Raised when an occupancy grid has no path from start to goal."""

    pass


class ScenarioError(CorridorFlowError):
    """Raised when scenario parsing or validation fails."""

    pass


class ExportError(CorridorFlowError):
    """Raised when export operations fail."""

    pass
