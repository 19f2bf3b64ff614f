"""Exception hierarchy.

Three families map onto CLI exit codes: ``FormatError`` (1, unreadable or
corrupt files), ``ValidationError`` (2, bad inputs) and ``InfeasibleError``
(3, the requested risk level cannot be met by the data).
"""


class CrcError(Exception):
    """Base class for all errors raised by crcmap."""


class FormatError(CrcError):
    pass


class BadMagic(FormatError):
    pass


class BadVersion(FormatError):
    pass


class TruncatedPayload(FormatError):
    pass


class BadHeader(FormatError):
    pass


class BadField(FormatError):
    pass


class ValidationError(CrcError, ValueError):
    pass


class EmptyInput(ValidationError):
    pass


class NoPositives(ValidationError):
    pass


class NoNegatives(ValidationError):
    pass


class ScoreOutOfRange(ValidationError):
    pass


class BadLabel(ValidationError):
    pass


class DegeneratePrevalence(ValidationError):
    pass


class AurocOutOfRange(ValidationError):
    pass


class AlphaOutOfRange(ValidationError):
    pass


class TooFewPositives(ValidationError):
    pass


class MetricUndefined(ValidationError):
    pass


class InfeasibleError(CrcError):
    pass


class AlphaTooLargeForSample(InfeasibleError):
    pass


class Infeasible(InfeasibleError):
    pass
