"""Adaptive homodyne phase tracking with squeezed light.

Modules: :mod:`~phasetrack.sde` (signal and noise processes),
:mod:`~phasetrack.optics` (measurement model), :mod:`~phasetrack.estimator`
(filter, smoother, closed forms), :mod:`~phasetrack.lab` (Monte Carlo and
sweeps) and :mod:`~phasetrack.cli`.
"""

__version__ = "0.1.0"

from .estimator import ConvergenceError, FilterConfig, FilterState, MsePrediction
from .lab import MseReport, Scenario, Table, Trajectory, monte_carlo, run_closed_loop
from .optics import BandwidthModel, DomainError, LossModel, SqueezedBeam
from .sde import OUParams

__all__ = [
    "BandwidthModel",
    "ConvergenceError",
    "DomainError",
    "FilterConfig",
    "FilterState",
    "LossModel",
    "MsePrediction",
    "MseReport",
    "OUParams",
    "Scenario",
    "SqueezedBeam",
    "Table",
    "Trajectory",
    "monte_carlo",
    "run_closed_loop",
]
