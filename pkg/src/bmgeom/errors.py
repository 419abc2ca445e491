"""Exception hierarchy shared across the package."""


class BMError(Exception):
    """Base class for all errors raised by bmgeom."""


class CapacityError(BMError):
    """Lattice coordinates or grid sizes exceed the supported range."""


class DimensionError(BMError, ValueError):
    """Operands have incompatible or unsupported dimensions."""


class EmptySetError(BMError, ValueError):
    """An operation that needs a nonempty set received an empty one."""


class DegenerateError(BMError, ValueError):
    """A convex body has zero volume or a fit has degenerate geometry."""


class FormatError(BMError, ValueError):
    """A BMGRID / BMPOLY / report file could not be parsed."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class PreconditionRefused(BMError):
    """The 1D near-equality hypothesis ``eps < min(|U|, |V|)`` does not hold.

    Carries the measured quantities so callers can fall back to the
    smallest enclosing interval.
    """

    def __init__(self, eps, bound):
        self.eps = eps
        self.bound = bound
        super().__init__(f"excess {eps} is not below min(|U|,|V|) = {bound}")


class NormalizationError(BMError):
    """Normalization drifted too far or the gamma caps are violated."""


class StageError(BMError):
    """A recovery pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


class SharpBoundViolation(BMError):
    """An enclosing interval is longer than ``|U| + eps`` (a counterexample)."""
