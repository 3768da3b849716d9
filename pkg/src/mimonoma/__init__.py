"""Link-level simulation and outage analysis for a two-user MIMO-NOMA downlink
with QR-based precoding."""

__version__ = "0.1.0"

from .config import SystemConfig, load_config  # noqa: E402
from .exceptions import (  # noqa: E402
    ConfigurationError,
    InfeasibleTargetError,
    InsufficientDataError,
    SimulationError,
    SingularMatrixError,
)
from .simulator import OutageEstimate, run_point, run_sweep  # noqa: E402

__all__ = [
    "ConfigurationError",
    "InfeasibleTargetError",
    "InsufficientDataError",
    "OutageEstimate",
    "SimulationError",
    "SingularMatrixError",
    "SystemConfig",
    "load_config",
    "run_point",
    "run_sweep",
]
