"""Exception hierarchy shared by the library and the CLI."""


class ScmvError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ScmvError, ValueError):
    """Bad input: shapes, hyperparameters, file contents."""


class DatasetFormatError(ValidationError):
    """A two-view TSV file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ModelFormatError(ValidationError):
    """A model file could not be loaded."""


class NumericalError(ScmvError, ArithmeticError):
    """Non-finite values or a factorization that should have succeeded failed."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
