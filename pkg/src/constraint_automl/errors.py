"""Exception hierarchy shared across the package."""


class AutoMLError(Exception):
    """Base class for all package errors."""


class InvalidMaskError(AutoMLError, ValueError):
    pass


class DataFormatError(AutoMLError, ValueError):
    pass


class InvalidInputError(AutoMLError, ValueError):
    pass


class RegistrationError(AutoMLError, ValueError):
    pass


class InsufficientDataError(AutoMLError, ValueError):
    pass


class EmptyPoolError(AutoMLError, ValueError):
    pass
