"""
Tests for the structured JSON logger.
"""

import json
import logging

import numpy as np
import pytest

from invfilter.errors import SingularInnovationError
from invfilter.logging_config import StructuredLogger, get_logger, set_global_level


@pytest.fixture
def structured():
    return StructuredLogger("invfilter.tests.structured", level="DEBUG")


def _payload(mock_log):
    level, message = mock_log.call_args[0]
    return level, json.loads(message)


class TestStructuredLogger:
    def test_info_is_json_with_fields(self, structured, mocker):
        """Test info is JSON with fields."""
        mock_log = mocker.patch.object(structured.logger, "log")
        structured.info("Starting experiment", scenario="linear", runs=3)

        level, payload = _payload(mock_log)
        assert level == logging.INFO
        assert payload == {"message": "Starting experiment", "severity": "INFO", "scenario": "linear", "runs": 3}

    def test_numpy_values_serialised(self, structured, mocker):
        """Test numpy values serialised."""
        mock_log = mocker.patch.object(structured.logger, "log")
        structured.warning("Boundedness fit", lam=np.float64(0.5), state=np.array([1.0, 2.0]))

        _, payload = _payload(mock_log)
        assert payload["lam"] == 0.5
        assert payload["state"] == [1.0, 2.0]

    def test_error_carries_exception_details(self, structured, mocker):
        """Test error carries exception details."""
        mock_log = mocker.patch.object(structured.logger, "log")
        try:
            raise SingularInnovationError("innovation covariance is not positive definite")
        except SingularInnovationError as e:
            structured.error("Numerical failure", error=e, command="run")

        level, payload = _payload(mock_log)
        assert level == logging.ERROR
        assert payload["error_type"] == "SingularInnovationError"
        assert payload["error_message"] == "innovation covariance is not positive definite"
        assert "Traceback" in payload["traceback"]
        assert payload["command"] == "run"

    def test_disabled_level_skips_serialisation(self, structured, mocker):
        """Test disabled level skips serialisation."""
        structured.set_level("WARNING")
        mock_log = mocker.patch.object(structured.logger, "log")
        structured.debug("noise", value=object())
        mock_log.assert_not_called()


class TestLoggerRegistry:
    def test_same_instance_per_name(self):
        """Test same instance per name."""
        assert get_logger("invfilter.tests.registry") is get_logger("invfilter.tests.registry")

    def test_global_level(self):
        """Test global level."""
        logger = get_logger("invfilter.tests.level")
        try:
            set_global_level("error")
            assert logger.logger.level == logging.ERROR
        finally:
            set_global_level("INFO")
