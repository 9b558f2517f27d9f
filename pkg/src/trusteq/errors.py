"""Exception hierarchy shared across the toolkit."""


class TrusteqError(Exception):
    """Base class for all toolkit errors."""


# dataset / tokenization

class EmptyInstance(TrusteqError):
    """No word tokens survived tokenization."""


class ParseError(TrusteqError):
    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class LabelOutOfRange(ParseError):
    pass


class EmptyDataset(TrusteqError):
    pass


# backends

class BackendError(TrusteqError):
    pass


class BackendUnavailable(BackendError):
    pass


class BackendTimeout(BackendUnavailable):
    pass


class HandshakeError(BackendError):
    pass


class ProtocolViolation(BackendError):
    pass


class ShapeMismatch(BackendError):
    pass


class DegenerateDataset(TrusteqError):
    """Training set has fewer than two classes represented."""


# attribution

class TooManyFeatures(TrusteqError):
    pass


class TooFewSamples(TrusteqError):
    pass


class SingularSystem(TrusteqError):
    """Normal equations stayed singular after the ridge ladder."""


# aggregation

class MismatchedInstances(TrusteqError):
    pass


class MismatchedCoverage(TrusteqError):
    pass


class EmptyInput(TrusteqError):
    pass


# orchestration

class ConfigError(TrusteqError):
    pass
