"""Error types shared across the package.

Every failure mode that callers are expected to distinguish gets its own
class.  All of them derive from LabError so blanket handling stays easy.
"""


class LabError(Exception):
    """Base class for all errors raised by this package."""


class NegativeValue(LabError):
    """Input carries a negative entry where only nonnegative data is allowed."""


class ShapeMismatch(LabError):
    """Array length or shape disagrees with the grid it claims to live on."""


class NonFinite(LabError):
    """Input carries a NaN or infinity."""


class OutOfRangeCube(LabError):
    """Cube address does not exist in the truncated grid."""


class NoParent(LabError):
    """The root cube has no parent."""


class BadExponent(LabError):
    """Exponent outside the admissible range for the requested operation."""


class RootMismatch(LabError):
    """Operands were built over different root grids."""


class ZeroMeasure(LabError):
    """The operation needs strictly positive total mass."""


class ComplexityRefusal(LabError):
    """Requested configuration exceeds the configured work cap."""


class AtomicPowerUndefined(LabError):
    """Pointwise powers of a purely atomic measure are undefined."""


class NotAPrincipalCube(LabError):
    """Cube is not a member of the stopping forest it was looked up in."""


class OutsideRoot(LabError):
    """Cube lies outside the root cube of the decomposition."""


class RegistryMiss(LabError):
    """Unknown inequality identifier."""


class BadKind(LabError):
    """Unknown generator or input kind."""


class IoFailure(LabError):
    """File could not be read or written."""
