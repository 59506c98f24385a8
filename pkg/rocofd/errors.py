from typing import Sequence


class GridFormatError(ValueError):
    """Raised when a grid file cannot be parsed into a :class:`GridModel`."""


class InvalidGridError(ValueError):
    """Raised when a downstream operation receives a grid that failed validation."""

    def __init__(self, message: str, issues: Sequence = ()) -> None:
        super().__init__(message)
        self.issues = list(issues)


class InvalidDisturbanceError(ValueError):
    pass


class ZeroInertiaError(ValueError):
    pass


class InternalConsistencyError(RuntimeError):
    """An invariant that holds for every valid grid was violated numerically."""


class ModelAssumptionError(RuntimeError):
    """The largest initial RoCoF was found at a bus without inertia."""

    def __init__(self, message: str, report=None) -> None:
        super().__init__(message)
        self.report = report


class NotOptimalError(ValueError):
    pass


class StepSizeError(ValueError):
    pass
