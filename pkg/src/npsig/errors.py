"""Exception types. The CLI maps these onto its exit codes."""


class NpsigError(Exception):
    """Base class for package errors."""


class DataError(NpsigError, ValueError):
    """Malformed or unusable input data (exit code 2)."""


class NumericError(NpsigError, ArithmeticError):
    """A computation cannot proceed on otherwise valid input (exit code 3)."""


class NullBasisError(NumericError):
    """Dropping a column left a SIR basis with no nonzero direction."""
