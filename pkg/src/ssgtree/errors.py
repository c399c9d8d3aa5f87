"""Shared exception types."""


class SsgError(Exception):
    """Base class for engine errors."""


class MismatchedAutomata(SsgError):
    """Two elements over different automata were combined."""


class LetterOutOfRange(SsgError):
    """A vertex letter is not in 0..d-1."""


class BudgetExceeded(SsgError):
    """A configured budget tripped before the computation closed.

    ``what`` names the budget ("machine", "quotient", "table", "nucleus",
    "words", "search"); ``limit`` is the configured value; ``reached`` the
    count at the moment of the trip (when known).
    """

    def __init__(self, what, limit, reached=None, detail=""):
        self.what = what
        self.limit = limit
        self.reached = reached
        msg = f"{what} budget exceeded (limit {limit}"
        if reached is not None:
            msg += f", reached {reached}"
        msg += ")"
        if detail:
            msg += ": " + detail
        super().__init__(msg)


class ParseError(SsgError):
    """Positioned diagnostic from the .ssg or element-expression parser."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", col {column}"
            where = f" ({where})"
        super().__init__(message + where)


class CacheError(SsgError):
    """Disk cache entry unusable (wrong version, bad checksum); treat as miss."""
