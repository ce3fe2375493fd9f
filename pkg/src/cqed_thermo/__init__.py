"""Stochastic thermodynamics of a homodyne-monitored qubit."""

from .homodyne import MeasurementModel
from .kernels import BACKEND
from .protocol import ProtocolParams, transmon_protocol
from .trajectory import Integrator, TrajectoryConfig, TrajectoryRecord, run_forward

__version__ = "0.1.0"
__all__ = ["BACKEND", "Integrator", "MeasurementModel", "ProtocolParams", "TrajectoryConfig",
           "TrajectoryRecord", "run_forward", "transmon_protocol"]
