"""
Exception hierarchy for the QROM advice lab.

Every error carries the process exit code the command-line runner maps it
to: 2 config/input, 3 scale cap, 4 numeric, 5 internal.
"""


class QromError(Exception):
    """Base class for all library errors."""

    exit_code = 5


class ConfigError(QromError):
    """Malformed configuration or invalid input to an operation."""

    exit_code = 2


class CapExceeded(QromError):
    """A configured scale cap would be exceeded."""

    exit_code = 3


class NumericError(QromError):
    """A numerical procedure failed or hit an undefined quantity."""

    exit_code = 4


class QueryBudgetExceeded(QromError):
    """An instrumented oracle counter exceeded its declared budget."""


# Input validation

class OracleError(ConfigError):
    pass


class DimensionMismatch(ConfigError):
    pass


class SaltOutOfRange(ConfigError):
    pass


class CoinOutOfRange(ConfigError):
    pass


class AnswerOutOfRange(ConfigError):
    pass


class UnknownChallenge(ConfigError):
    pass


class StrategyError(ConfigError):
    pass


class EvenRounds(ConfigError):
    pass


class EmptyGrid(ConfigError):
    pass


class MissingParam(ConfigError):
    pass


# Numerics

class EigensolverFailure(NumericError):
    pass


class ZeroSuccess(NumericError):
    pass


class ZeroMean(NumericError):
    pass


class DegenerateEigenvalue(NumericError):
    pass


class NeverAccepts(NumericError):
    pass


class VerificationFailed(NumericError):
    """Raised when a verify-lemmas check does not hold."""
