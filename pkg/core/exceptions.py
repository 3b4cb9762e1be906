from django.core.exceptions import ValidationError


class InvalidInputError(ValidationError):
    """An argument or a domain object violates its declared invariants"""


class DegenerateDataError(ValidationError):
    """Data that cannot support the requested fit (single class, empty subset, ...)"""


class IngestionError(ValidationError):
    """A CSV could not be read against its schema"""


class SamplingError(ValidationError):
    """Not enough rows to draw the requested sample"""


class InvalidConfigError(ValidationError):
    """A run configuration document is malformed or out of range"""


def error_message(exc):
    """Flatten a ValidationError (or anything else) into one line"""
    if isinstance(exc, ValidationError):
        return '; '.join(str(m) for m in exc.messages)
    return str(exc)
