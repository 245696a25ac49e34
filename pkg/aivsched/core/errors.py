"""
Exception types shared by the simulator, the learners and the CLI.
"""

from typing import Any, Dict, Optional


class AivSchedError(Exception):
    """Base class for every error raised by aivsched."""


class ConfigurationError(AivSchedError):
    """A configuration value is missing, inconsistent or out of range."""


class ScenarioParseError(AivSchedError):
    """A scenario or checkpoint file could not be parsed.

    Args:
        message: What went wrong.
        line: 1-based line number for syntax errors, if known.
        field: Dotted path of the offending field for structural errors.
    """

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field:
            location.append(f"field '{field}'")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class InvalidTransitionError(AivSchedError):
    """A job or vehicle was asked to make a lifecycle transition it cannot make."""


class SimulationCorruptionError(AivSchedError):
    """The event queue or the world state violated an engine invariant."""


class ContractViolation(AivSchedError):
    """A caller broke a documented precondition (shapes, feasible sets, ...)."""


class TrainingDivergenceError(AivSchedError):
    """Training produced a non-finite loss or gradient.

    Args:
        message: Human readable description.
        diagnostics: Where the non-finite values were found.
        last_finite_state: The last finite network parameters, if available.
    """

    def __init__(
        self,
        message: str,
        diagnostics: Optional[Dict[str, Any]] = None,
        last_finite_state: Optional[Any] = None,
    ):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
        self.last_finite_state = last_finite_state


class BatteryDepletedWarning(UserWarning):
    """An AIV's battery would have dropped below zero and was clamped."""
