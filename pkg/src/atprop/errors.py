"""Exception hierarchy shared by all atprop modules.

The CLI maps these onto exit codes: user-facing input problems
(:class:`ValidationError` and subclasses) exit 2, size/limit refusals
(:class:`CapabilityError`) exit 3, everything else exits 1.
"""


class AtpropError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(AtpropError):
    """Invalid argument values, shapes, ranges, or malformed inputs."""


class ParseError(ValidationError):
    """A text input could not be parsed; message carries the line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvalidStateError(AtpropError):
    """Operation applied to an object in the wrong state (e.g. double self-loops)."""


class DependencyError(ValidationError):
    """A stage was invoked without its upstream artifact."""


class CapabilityError(AtpropError):
    """Request exceeds a configured size/capability limit; not an input bug."""


class ConvergenceError(AtpropError):
    """Iterative solver failed to converge; carries the final residual."""

    def __init__(self, message: str, residual: float | None = None):
        if residual is not None:
            message = f"{message} (residual={residual:g})"
        super().__init__(message)
        self.residual = residual


class NumericError(AtpropError):
    """Non-finite values appeared mid-computation."""


class PropertyViolationError(AtpropError):
    """An internal mathematical guarantee was violated; indicates a bug."""
