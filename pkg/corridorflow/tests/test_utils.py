"""
Tests for validators, colours and logging setup.
"""

import logging
from pathlib import Path

import numpy as np
import pytest

from ..utils.colors import fg, paint, rs
from ..utils.exceptions import InvalidConfigurationError, ValidationError
from ..utils.log import configure_logging
from ..utils.validators import (
    as_matrix,
    as_vector,
    non_finite_field,
    parse_joint_counts,
    validate_file_exists,
    validate_positive,
)


class TestValidators:
    def test_as_vector(self):
        np.testing.assert_array_equal(as_vector([1, 2], "v", 2), [1.0, 2.0])
        with pytest.raises(ValidationError):
            as_vector([1, 2], "v", 3)
        with pytest.raises(ValidationError):
            as_vector([1.0, np.nan], "v")
        with pytest.raises(ValidationError):
            as_vector(["a"], "v")

    def test_as_matrix(self):
        assert as_matrix([[1, 0], [0, 1]], "m", (2, 2)).shape == (2, 2)
        with pytest.raises(ValidationError):
            as_matrix([[1, 0]], "m", (2, 2))

    def test_validate_positive(self):
        validate_positive(1.0, "x")
        validate_positive(0.0, "x", allow_zero=True)
        with pytest.raises(ValidationError):
            validate_positive(0.0, "x")
        with pytest.raises(ValidationError):
            validate_positive(float("inf"), "x")
        with pytest.raises(ValidationError):
            validate_positive(float("nan"), "x", allow_zero=True)
        with pytest.raises(InvalidConfigurationError, match="dt"):
            validate_positive(-1.0, "dt", error=InvalidConfigurationError)

    def test_non_finite_field(self):
        assert non_finite_field({"a": [1.0, 2], "b": {"c": True}}) is None
        assert non_finite_field({"sim": {"dt": float("inf")}}) == "sim.dt"
        assert non_finite_field({"sets": [{"min": [0.0, float("nan")]}]}) == "sets[0].min[1]"

    def test_file_exists(self):
        with pytest.raises(ValidationError, match="grid"):
            validate_file_exists(Path("/nonexistent/maze.txt"), "grid")

    def test_joint_counts(self):
        assert parse_joint_counts("1, 2,4") == [1, 2, 4]
        for bad in ("0", "", "a"):
            with pytest.raises(ValidationError):
                parse_joint_counts(bad)


class TestColorsAndLogging:
    def test_paint_known_status(self):
        assert paint("timeout", "timeout") == f"{fg.YELLOW}timeout{rs}"
        assert paint("plain", "unknown") == "plain"

    def test_configure_logging_levels(self):
        assert configure_logging(0).level == logging.WARNING
        assert configure_logging(1).level == logging.INFO
        logger = configure_logging(2)
        assert logger.level == logging.DEBUG
        assert len([h for h in logger.handlers if h.get_name() == "corridorflow"]) == 1
        configure_logging(0)
