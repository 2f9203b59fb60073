"""Exception hierarchy for the ad audit toolkit."""


class AuditError(Exception):
    """Base class for every error raised by this package."""


# --- record parsing -------------------------------------------------------


class RecordError(AuditError, ValueError):
    """A raw document could not be turned into a valid record."""


class MissingField(RecordError):
    def __init__(self, name):
        super().__init__(f"missing required field: {name}")
        self.name = name


class InvalidValue(RecordError):
    def __init__(self, name, detail=""):
        msg = f"invalid value for field {name}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.name = name


class InvariantViolation(RecordError):
    pass


class DuplicateCell(RecordError):
    def __init__(self, age, gender):
        super().__init__(f"duplicate demographic cell ({age.value}, {gender.value})")
        self.age = age
        self.gender = gender


# --- ingestion ------------------------------------------------------------


class TransportError(AuditError):
    """Network-level failure; safe to retry."""


class RateLimited(AuditError):
    """The source asked the caller to slow down."""


class SourceError(AuditError):
    def __init__(self, code, message):
        super().__init__(f"source error {code}: {message}")
        self.code = code
        self.message = message


# --- models ---------------------------------------------------------------


class EmptyTrainingSet(AuditError, ValueError):
    pass


class NonPositiveAlpha(AuditError, ValueError):
    pass


class SchemaMismatch(AuditError):
    pass


class RuleConfigError(AuditError, ValueError):
    pass


class EmptyTermList(RuleConfigError):
    def __init__(self, label):
        super().__init__(f"empty term list for label {label!r}")
        self.label = label


class InvalidTerm(RuleConfigError):
    def __init__(self, label, term):
        super().__init__(f"term {term!r} for label {label!r} must be a unigram or bigram")
        self.label = label
        self.term = term


class DuplicateLabel(RuleConfigError):
    def __init__(self, label):
        super().__init__(f"label {label!r} appears more than once")
        self.label = label


class UnknownLabel(RuleConfigError):
    def __init__(self, label):
        super().__init__(f"unknown rule label {label!r}")
        self.label = label


# --- evaluation / analytics -------------------------------------------------


class LengthMismatch(AuditError, ValueError):
    pass


class EmptyInput(AuditError, ValueError):
    pass


class InvalidFraction(AuditError, ValueError):
    pass


class EmptyDistribution(AuditError, ValueError):
    pass


class StorageError(AuditError):
    pass
