"""Exception types raised across the package."""


class WignerLabError(Exception):
    """Base class for every error raised by wignerlab."""

    exit_code = 1


class ConfigurationError(WignerLabError, ValueError):
    """Invalid input; ``problems`` lists every violation found, not just the first."""

    exit_code = 2

    def __init__(self, message: str, problems=None):
        super().__init__(message)
        self.problems = list(problems) if problems else [message]


class GridMismatchError(WignerLabError, ValueError):
    exit_code = 2


class NumericalBlowupError(WignerLabError, FloatingPointError):
    exit_code = 3


class OracleCapError(WignerLabError):
    exit_code = 4


class DegenerateMatrixError(WignerLabError, ValueError):
    exit_code = 5


class IndeterminateResidualError(WignerLabError, ValueError):
    exit_code = 6
