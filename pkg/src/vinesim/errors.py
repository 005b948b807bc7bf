"""Exception hierarchy. Each maps to a documented CLI exit code in cli.py."""


class VinesimError(Exception):
    """Base class for all simulator errors."""


class DomainError(VinesimError, ValueError):
    """An argument lies outside the physical/mathematical domain of an operation."""


class UnfittedCalibrationError(VinesimError):
    """A joint is missing calibration parameters required for its stiffness model."""


class DegenerateStiffnessError(VinesimError):
    """Bending stiffness is zero or negative where a curvature would be computed."""


class MissingJointPressureError(VinesimError):
    """A pressure state does not cover every joint in the configuration."""


class NonConvergenceError(VinesimError):
    """The equilibrium iteration exhausted its budget without settling."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e} m)")
        self.residual = residual


class UnreachableAngleError(VinesimError):
    """A target bend angle trips the buckling guard before it can be reached."""


class OverpressureFault(VinesimError):
    """Trunk pressure reached the burst threshold."""


class BoundaryViolationError(VinesimError):
    """A pressurized joint reached the inversion front during retraction."""


class EmptyPlanError(VinesimError):
    """A retraction plan was requested for a robot with nothing deployed."""


class SingularFitError(VinesimError):
    """A least-squares fit has no unique solution for the given samples."""


class CatalogKeyError(VinesimError, KeyError):
    """Unknown key in the embedded dataset catalog."""


class ScenarioParseError(VinesimError):
    """Scenario file is not syntactically valid."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{loc}")
        self.line = line
        self.column = column


class ScenarioValidationError(VinesimError):
    """Scenario file parsed but references unknown elements or invalid values."""
