from typing import Optional


class PyRecallError(Exception):
    pass


class EmptyTextError(PyRecallError, ValueError):
    pass


class EmptyInputError(PyRecallError, ValueError):
    pass


class DimensionMismatchError(PyRecallError, ValueError):
    def __init__(self, expected: int, actual: int) -> None:
        super().__init__(f"Expected an embedding of dimension {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


class ProviderUnavailableError(PyRecallError, RuntimeError):
    """Raised when an embedding service cannot produce a vector."""


class DuplicateIdError(PyRecallError, ValueError):
    pass


class UnknownIdError(PyRecallError, LookupError):
    pass


class InvalidRangeError(PyRecallError, ValueError):
    pass


class EmptyIndexError(PyRecallError, LookupError):
    pass


class IndexFailureError(PyRecallError, RuntimeError):
    pass


class PersistenceFailureError(PyRecallError, OSError):
    pass


class AlreadyDismissedError(PyRecallError, ValueError):
    pass


class MemoryDismissedError(PyRecallError, ValueError):
    pass


class NonPositiveIntervalError(PyRecallError, ValueError):
    pass


class VersionMismatchError(PyRecallError, ValueError):
    pass


class UnknownBankError(PyRecallError, FileNotFoundError):
    pass


class LiveSourceError(PyRecallError, RuntimeError):
    """Raised by live sources when refreshed content cannot be fetched."""


class _LineError(PyRecallError, ValueError):
    def __init__(self, message: str, line_number: Optional[int] = None) -> None:
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class CorruptLogError(_LineError):
    pass


class TraceParseError(_LineError):
    pass
