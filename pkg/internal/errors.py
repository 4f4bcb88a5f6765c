class ConfigError(ValueError):
    """Raised when a run configuration cannot be loaded or converted.

    Args:
        message (str): Human readable description of the problem.
        line (int, optional): 1-based line of the offending key in the config file.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DegenerateGeometryError(ValueError):
    """Raised for geometry that cannot produce a well-posed problem
    (coincident users, infeasible microstrip layouts)."""


class NumericalError(ArithmeticError):
    """Raised when an objective goes non-finite or a projection is singular."""


# exit codes used by main.py
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
