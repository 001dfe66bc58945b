"""Exception hierarchy shared by every module of the package."""


class MononetError(Exception):
    """Base class for all errors raised by mononet."""


class InputError(MononetError, ValueError):
    """An argument violates a documented precondition."""


class ParseError(MononetError, ValueError):
    """A serialized network document is malformed.

    ``location`` is a JSON-path-like pointer (``$.terms[2].w``) or a
    ``line:col`` position for syntax errors.
    """

    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{location}: {message}")
        self.location = location


class RangeError(MononetError, OverflowError):
    """An exponential argument left the representable range."""

    def __init__(self, message: str, term: int | None = None):
        super().__init__(message)
        self.term = term


class PrecisionError(MononetError):
    """The configured mantissa is too short for the requested accuracy."""

    def __init__(self, message: str, required_bits: int | None = None):
        if required_bits is not None:
            message = f"{message} (about {required_bits} mantissa bits required)"
        super().__init__(message)
        self.required_bits = required_bits


class SynthesisError(MononetError):
    """A construction could not reach its certified target."""


class BudgetError(SynthesisError):
    """A construction would exceed its term or neuron budget."""

    def __init__(self, message: str, projected: int | None = None):
        super().__init__(message)
        self.projected = projected


class ResourceError(MononetError):
    """A certification grid would exceed the configured point cap."""
