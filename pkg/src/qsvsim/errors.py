"""Exception hierarchy shared by all modules."""


class QSVError(Exception):
    """Base class for errors raised by qsvsim."""


class NotSquare(QSVError, ValueError):
    pass


class NotHermitian(QSVError, ValueError):
    pass


class NotPSD(QSVError, ValueError):
    pass


class ShapeMismatch(QSVError, ValueError):
    pass


class NonFinite(QSVError, ValueError):
    pass


class NoConvergence(QSVError, ArithmeticError):
    pass


class InvalidState(QSVError, ValueError):
    pass


class DomainMismatch(QSVError, ValueError):
    pass


class OutputNotState(QSVError, ArithmeticError):
    """A channel produced something that is not a density operator."""


class NotTracePreserving(QSVError, ValueError):
    pass


class NotAPOVM(QSVError, ValueError):
    pass


class IndexOutOfRange(QSVError, IndexError):
    pass


class HeterogeneousSummands(QSVError, ValueError):
    pass


class ChannelTooLarge(QSVError, MemoryError):
    pass


class ObjectMismatch(QSVError, ValueError):
    pass


class MultiBlockUnsupported(QSVError, ValueError):
    pass


class SignatureMismatch(QSVError, ValueError):
    pass


class ShapeError(QSVError, ValueError):
    """Protocol ingredients do not fit together (copies, dimensions, tables)."""


class TooManyCopiesForExplicit(QSVError, ValueError):
    pass


class TargetNotPure(QSVError, ValueError):
    pass


class PerturbationBreaksPositivity(QSVError, ValueError):
    pass


class DimensionTooSmall(QSVError, ValueError):
    pass


class UnknownTag(QSVError, KeyError):
    pass


class ConfigError(QSVError, ValueError):
    """Invalid sweep configuration; the message names the offending field or line."""
