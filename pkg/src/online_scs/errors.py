"""Exception hierarchy shared by all modules."""


class ScsError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ScsError, ValueError):
    """Invalid argument, shape mismatch or out-of-range parameter."""


class NumericError(ScsError, ArithmeticError):
    """A linear-algebra step failed or produced an unusable result."""


class SessionStateError(ScsError, RuntimeError):
    """An adaptive session was driven out of phase order."""


class PgmFormatError(ScsError, ValueError):
    """Malformed binary PGM input.

    ``offset`` is the byte position at which parsing failed.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset
