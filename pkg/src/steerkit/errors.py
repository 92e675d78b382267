"""Exception hierarchy.

Every error raised by the library derives from :class:`SteerkitError`, so
callers can catch one base class.  The CLI maps each leaf class to a distinct
exit code (see :mod:`steerkit.cli`).
"""


class SteerkitError(Exception):
    """Base class for all library errors."""


class ParameterError(SteerkitError, ValueError):
    """An argument is outside its documented range or malformed."""


class DimensionError(SteerkitError, ValueError):
    """Array shapes or grid dimensions are inconsistent."""


class RangeError(SteerkitError, ValueError):
    """A timestep or index is outside its valid range."""


class SingularityError(SteerkitError, ArithmeticError):
    """An operation would divide by a vanishing schedule coefficient."""


class NumericError(SteerkitError, ArithmeticError):
    """A non-finite value appeared in an intermediate result."""


class EmptyConditionError(SteerkitError, ValueError):
    """An operation that requires condition points received none."""


class InsufficientDataError(SteerkitError, ValueError):
    """Too few samples to perform a fit."""


class DegenerateFitError(SteerkitError, ValueError):
    """A least-squares fit has no unique solution (zero source variance)."""


class DataError(SteerkitError, ValueError):
    """Input data violates a validity constraint (e.g. nonpositive ground truth)."""


class EmptyEvaluationError(SteerkitError, ValueError):
    """A metrics computation received an empty pixel mask."""


class EmptyReportError(SteerkitError, ValueError):
    """A benchmark run produced no per-scene reports."""


class FileFormatError(SteerkitError, ValueError):
    """A file could not be parsed in any supported format."""


class DuplicatePositionError(FileFormatError):
    """A sparse-depth file lists the same (row, col) twice."""


class NonpositiveDepthError(FileFormatError):
    """A sparse-depth file contains a depth value <= 0 or non-finite."""


class OutOfBoundsError(FileFormatError):
    """A sparse-depth file references a position outside the grid."""


class BridgeError(SteerkitError):
    """Base class for bridge transport and protocol failures."""


class BridgeConnectionError(BridgeError, ConnectionError):
    """The transport failed (connect, read, or write)."""


class ProtocolError(BridgeError):
    """A frame violated the wire format; the session is closed."""


class RemoteError(BridgeError):
    """The server answered with an ERROR frame; carries its message."""
