"""
Shared enumerations for sets, robots, solver and run outcomes.
"""

from enum import Enum

from ..utils.exceptions import ValidationError


class SetKind(Enum):
    ELLIPSOID = "ellipsoid"
    POLYTOPE = "polytope"


class RobotKind(Enum):
    PLANAR_ROD = "rod"
    MOBILE_ARM = "arm"


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    ITERATION_LIMIT = "iteration_limit"


class InfeasibilityPolicy(Enum):
    HALT = "halt"
    ZERO_INPUT = "zero_input"


class RunStatus(Enum):
    REACHED_GOAL = "reached_goal"
    INFEASIBLE = "infeasible"
    TIMEOUT = "timeout"

    @property
    def exit_code(self) -> int:
        return {
            RunStatus.REACHED_GOAL: 0,
            RunStatus.INFEASIBLE: 2,
            RunStatus.TIMEOUT: 3,
        }[self]


# Exit code for parse / validation failures
EXIT_INVALID_INPUT = 4


def parse_enum(enum_cls, value, field: str):
    """Map a scenario string (value or member name) onto enum_cls."""
    if isinstance(value, enum_cls):
        return value
    reverse_map = {item.value: item for item in enum_cls}
    reverse_map.update({item.name.lower(): item for item in enum_cls})
    member = reverse_map.get(str(value).strip().lower())
    if member is None:
        raise ValidationError(
            f"Invalid {field}: '{value}'. Expected one of "
            f"{', '.join(sorted(item.value for item in enum_cls))}"
        )
    return member
