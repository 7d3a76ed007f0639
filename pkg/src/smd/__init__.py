"""Stochastic moment dynamics: particle systems whose selected moments follow
a prescribed SDE driven by a common noise."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .coefficients import SmdField, closed_form, compute_field, cutoff_chi
from .drivers import MomentDriver
from .dynamics import BaselineDynamics, granular_media
from .errors import (
    ConfigurationError,
    DriverSingularity,
    NumericOverflow,
    SingularGram,
    SmdError,
    UnsupportedDimension,
)
from .measures import EmpiricalMeasure
from .observables import Observable
from .simulator import ExplosionPolicy, InitSpec, SimConfig, Trajectory, run, run_coupled, step

__all__ = [
    "BACKEND",
    "BaselineDynamics",
    "ConfigurationError",
    "DriverSingularity",
    "EmpiricalMeasure",
    "ExplosionPolicy",
    "InitSpec",
    "MomentDriver",
    "NumericOverflow",
    "Observable",
    "SimConfig",
    "SingularGram",
    "SmdError",
    "SmdField",
    "Trajectory",
    "UnsupportedDimension",
    "closed_form",
    "compute_field",
    "cutoff_chi",
    "granular_media",
    "run",
    "run_coupled",
    "step",
]
