"""
errors.py: Exception hierarchy shared by every module of the toolkit.
Each error also derives from the closest built-in exception so callers can catch it generically.
"""


class PorError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(PorError, ValueError):
    """Parameters are outside the range an operation supports."""


class ConfigError(ParameterError):
    """A configuration file, plan or command line failed validation."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


class MismatchedFields(PorError, ValueError):
    """Operands live in different prime fields."""


class DivisionByZero(PorError, ZeroDivisionError):
    """Division by the zero element of a field."""


class LengthMismatch(PorError, ValueError):
    """Vectors that must have equal length do not."""


class NotACodeword(PorError, ValueError):
    """A word failed the membership check of a linear code."""


class TooLargeToEnumerate(PorError, ValueError):
    """An exhaustive search would exceed the configured enumeration cap."""


class EmptyCodebook(PorError, ValueError):
    """Nearest-neighbour search was given no candidates."""


class OrdinalOutOfRange(PorError, IndexError):
    """A challenge ordinal does not lie in [0, gamma)."""


class InvalidChallenge(PorError, ValueError):
    """A challenge does not belong to the scheme's challenge space."""


class ShapeMismatch(PorError, ValueError):
    """Two responses do not have the shape the scheme prescribes."""


class InvalidParams(PorError, ValueError):
    """A prover model was configured with inconsistent parameters."""


class OracleInconsistent(PorError, RuntimeError):
    """A verification oracle answered in a way no consistent key explains."""


class StoreExhausted(PorError, RuntimeError):
    """A bounded-use pair store has fewer unused records than requested."""


class ProtocolError(PorError, ConnectionError):
    """The peer violated the wire protocol or answered with an ERROR frame."""

    def __init__(self, message: str, code: int = 0x03):
        super().__init__(message)
        self.code = code


class RemoteProverError(PorError, ConnectionError):
    """The remote prover became unreachable; the transcript so far is preserved."""

    def __init__(self, message: str, answered: int = 0, transcript=None):
        super().__init__(message)
        self.answered = answered
        self.transcript = transcript
