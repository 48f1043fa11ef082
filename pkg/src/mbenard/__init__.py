"""Pseudo-spectral simulator for the ideal magnetic Benard system on the torus.

Modules: ``spectral`` (fields, transforms, norms), ``dynamics`` (truncated
right-hand side), ``integrate`` (RK4 and the run loop), ``diagnostics``
(energies, BKM integrals, inequality probes), ``experiments`` (studies) and
``cli``.
"""

from .dynamics import CflDt, FixedDt, SimConfig, State
from .errors import (
    ConfigurationError,
    ContainerError,
    ContractViolation,
    DataValidationError,
    InstabilityError,
    MBenardError,
    UsageError,
)
from .integrate import InitialSpec, run
from .spectral import Grid, SpectralScalar, SpectralVector

__version__ = "0.1.0"

__all__ = [
    "CflDt", "FixedDt", "SimConfig", "State", "InitialSpec", "run", "Grid", "SpectralScalar", "SpectralVector",
    "ConfigurationError", "ContainerError", "ContractViolation", "DataValidationError", "InstabilityError",
    "MBenardError", "UsageError",
]
