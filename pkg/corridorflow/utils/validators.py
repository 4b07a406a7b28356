"""
Validation utilities.
"""

from pathlib import Path
from typing import Iterable, List, Optional, Type

import numpy as np

from .exceptions import CorridorFlowError, ValidationError


def as_vector(values, name: str, length: Optional[int] = None) -> np.ndarray:
    """Convert values to a finite float vector, optionally of a fixed length."""
    try:
        vec = np.array(values, dtype=float).reshape(-1)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{name} must be a numeric vector") from e

    if length is not None and vec.shape[0] != length:
        raise ValidationError(
            f"{name} has dimension {vec.shape[0]}, expected {length}"
        )
    if not np.all(np.isfinite(vec)):
        raise ValidationError(f"{name} contains non-finite values")
    return vec


def as_matrix(values, name: str, shape: Optional[tuple] = None) -> np.ndarray:
    """Convert values to a finite 2-D float array."""
    try:
        mat = np.atleast_2d(np.array(values, dtype=float))
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{name} must be a numeric matrix") from e

    if mat.ndim != 2:
        raise ValidationError(f"{name} must be two-dimensional")
    if shape is not None and mat.shape != shape:
        raise ValidationError(f"{name} has shape {mat.shape}, expected {shape}")
    if not np.all(np.isfinite(mat)):
        raise ValidationError(f"{name} contains non-finite values")
    return mat


def validate_dimension(point: np.ndarray, dim: int, name: str = "point") -> None:
    """Validate that a point has the dimension of the set it is queried against."""
    if point.shape[0] != dim:
        raise ValidationError(
            f"{name} has dimension {point.shape[0]}, set has dimension {dim}"
        )


def validate_positive(
    value: float,
    name: str,
    allow_zero: bool = False,
    error: Type[CorridorFlowError] = ValidationError,
) -> None:
    """Validate a finite positive (or non-negative) scalar, raising error otherwise."""
    try:
        finite = value is not None and bool(np.isfinite(value))
    except TypeError:
        finite = False
    if not finite:
        raise error(f"{name} must be a finite number, got {value}")
    if allow_zero and value < 0:
        raise error(f"{name} must be >= 0, got {value}")
    if not allow_zero and value <= 0:
        raise error(f"{name} must be > 0, got {value}")


def non_finite_field(data, path: str = "") -> Optional[str]:
    """Dotted path of the first inf/NaN number inside nested dicts and lists."""
    if isinstance(data, bool):
        return None
    if isinstance(data, float):
        return None if np.isfinite(data) else path
    if isinstance(data, dict):
        items = ((f"{path}.{k}" if path else str(k), v) for k, v in data.items())
    elif isinstance(data, (list, tuple)):
        items = ((f"{path}[{i}]", v) for i, v in enumerate(data))
    else:
        return None
    for child_path, value in items:
        found = non_finite_field(value, child_path)
        if found is not None:
            return found
    return None


def validate_file_exists(path: Path, what: str = "file") -> None:
    """Validate that a referenced file exists."""
    if not Path(path).is_file():
        raise ValidationError(f"Referenced {what} not found: {path}")


def parse_joint_counts(text: str, allowed: Iterable[int] = (1, 2, 3, 4)) -> List[int]:
    """Parse a comma separated joint-count list such as "1,2,3,4"."""
    allowed = set(allowed)
    counts = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if not token.isdigit() or int(token) not in allowed:
            raise ValidationError(
                f"Invalid joint count '{token}': must be one of {sorted(allowed)}"
            )
        counts.append(int(token))

    if not counts:
        raise ValidationError("At least one joint count is required")
    return counts
