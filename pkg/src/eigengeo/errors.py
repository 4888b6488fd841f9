"""Exception hierarchy shared by all eigengeo modules."""


class EigengeoError(Exception):
    """Base class for every error raised by this package."""


class SingularMatrix(EigengeoError):
    pass


class NoConvergence(EigengeoError):
    pass


class DimensionMismatch(EigengeoError, ValueError):
    pass


class IndexOutOfRange(EigengeoError, IndexError):
    pass


class ParseError(EigengeoError, ValueError):
    """Malformed config document.

    ``line`` and ``field`` carry the location when known.
    """

    def __init__(self, message, line=None, field=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field is not None:
            loc.append(f"field {field!r}")
        full = f"{message} ({', '.join(loc)})" if loc else message
        super().__init__(full)
        self.line = line
        self.field = field


class DegenerateSpectrum(EigengeoError):
    pass


class PairingAmbiguous(EigengeoError):
    pass


class NotAnEP(EigengeoError):
    pass


class AtExceptionalPoint(EigengeoError):
    pass


class NotHermitian(EigengeoError, ValueError):
    pass


class NotAffine(EigengeoError, ValueError):
    pass


class MultiParameter(EigengeoError, ValueError):
    pass


class StencilCrossesEP(EigengeoError):
    pass


class DegenerateVelocity(EigengeoError):
    pass


class SingularMetric(EigengeoError):
    """Metric has a (numerically) null direction; ``direction`` holds it."""

    def __init__(self, message, direction=None):
        super().__init__(message)
        self.direction = direction


class SelfOrthogonalState(EigengeoError):
    pass


class NoEPInBracket(EigengeoError):
    pass


class NotSquareRootEP(EigengeoError):
    pass


class ZeroLeadingCoefficient(EigengeoError):
    pass


class FitPoorlyConditioned(EigengeoError):
    pass


class ConsistencyError(EigengeoError):
    """Two independent evaluation routes disagree beyond tolerance."""
