"""
Exception hierarchy for the PSP toolchain.

Every error raised on purpose by the compiler or the engine derives from
PSPError so callers (the CLI, the planner) can catch one type.
"""

from typing import Optional, Tuple

Location = Tuple[int, int]


class PSPError(Exception):
    """Base error; carries an optional (line, column) source location"""

    def __init__(self, message: str, loc: Optional[Location] = None):
        self.message = message
        self.loc = loc
        if loc is not None:
            message = f"{loc[0]}:{loc[1]}: {message}"
        super().__init__(message)


class LexError(PSPError):
    """Unknown character in program text"""
    pass


class ParseError(PSPError):
    """Program text does not follow the PSP grammar"""
    pass


class ValidationError(PSPError):
    """Well-formed program that breaks a static rule (bounds, types, scoping)"""
    pass


class BindingError(PSPError):
    """Input binding does not match the program's parameter declarations"""
    pass


class UnrollError(PSPError):
    """Failure while expanding a program against concrete inputs"""
    pass


class InferenceError(PSPError):
    """Query cannot be answered on the requested path"""
    pass
