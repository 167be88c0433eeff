"""Exception types raised across the package."""


class EALabError(Exception):
    """Base class for all package errors."""


class NotFound(EALabError, KeyError):
    pass


class InvalidInput(EALabError, ValueError):
    pass


class DegenerateForm(EALabError, ValueError):
    pass


class InvalidRealization(EALabError, ValueError):
    pass


class NotLoxodromic(EALabError, ValueError):
    pass
