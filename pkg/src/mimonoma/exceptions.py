class MimoNomaError(Exception):
    pass


class ConfigurationError(MimoNomaError, ValueError):
    """Invalid system configuration (dimensions, rates, grid, policy)."""


class InfeasibleTargetError(ConfigurationError):
    """Policy-I outage target outside the admissible open interval."""


class SingularMatrixError(MimoNomaError, ArithmeticError):
    """A channel realisation produced a numerically singular matrix.

    ``mask`` marks which members of a stacked input were singular, so a
    Monte Carlo caller can resample exactly those trials.
    """

    def __init__(self, message, mask=None):
        super().__init__(message)
        self.mask = mask


class InsufficientDataError(MimoNomaError, ValueError):
    pass


class SimulationError(MimoNomaError, RuntimeError):
    """Monte Carlo run aborted, e.g. too many singular realisations."""
