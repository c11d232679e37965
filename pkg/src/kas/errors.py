"""Exception types shared across the package."""


class KasError(Exception):
    """Base class for all errors raised by this package."""


class GrammarError(KasError):
    """Grammar file is malformed or violates a structural invariant."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            where = f"line {line}" if column is None else f"line {line}, col {column}"
            message = f"{message} ({where})"
        super().__init__(message)


class KnowledgeError(KasError):
    """Knowledge source file is malformed or inconsistent with the grammar."""


class QueryError(KasError):
    """User query cannot be validated or translated."""


class IndexFormatError(KasError):
    """Index file is corrupt, truncated, or has an unsupported version."""
