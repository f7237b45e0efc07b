"""Exception types shared across the package."""


class SprError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SprError):
    """An input violates a documented precondition or invariant."""


class DataError(SprError):
    """Structurally valid input references data that does not exist (bad index etc.)."""


class ParseError(SprError):
    """A file could not be parsed; carries the offending path and line number."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
            if line is not None:
                prefix += f"{line}:"
            prefix += " "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)


class NumericError(SprError):
    """A computation produced non-finite or otherwise unusable numbers."""
