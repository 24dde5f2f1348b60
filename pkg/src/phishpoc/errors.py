"""Exception hierarchy shared by every phishpoc module."""


class PocError(Exception):
    """Base class for all errors raised by this package."""


class SchemaMismatch(PocError):
    pass


# dataset
class MissingColumn(PocError):
    def __init__(self, column):
        super().__init__(f"missing column {column!r}")
        self.column = column


class DomainViolation(PocError):
    def __init__(self, row, feature, value):
        super().__init__(f"row {row}: value {value!r} outside the domain of feature {feature!r}")
        self.row = row
        self.feature = feature
        self.value = value


class UnparsableValue(PocError):
    def __init__(self, row, column, text):
        super().__init__(f"row {row}: cannot parse {text!r} in column {column!r}")
        self.row = row
        self.column = column
        self.text = text


class DegenerateSplit(PocError):
    pass


class NoBenignSamples(PocError):
    pass


# featextract
class UnparsableUrl(PocError):
    pass


class InvalidUrl(UnparsableUrl):
    pass


# opchain
class EmptyFeatureSet(PocError):
    pass


class PrevalenceUnreachable(PocError):
    pass


class RepairBudgetExceeded(PocError):
    pass


class ParseError(PocError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


# classifiers
class SingleClassTraining(PocError):
    pass


class NonFiniteFeature(PocError):
    pass


class UnknownHyperparameter(PocError):
    pass


class InvalidHyperparameter(PocError, ValueError):
    """A known hyperparameter with an out-of-range value."""


class GridExhausted(PocError):
    pass


# eval
class ZeroBaselineMetric(PocError):
    pass


class EmptyMaliciousSet(PocError):
    pass


class TooFewPairs(PocError):
    pass


# harness
class ConfigError(PocError):
    pass
