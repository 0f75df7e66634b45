"""Numerical toolkit for the Curie-Weiss magnet.

Equilibrium Legendrian curves at finite and infinite spin count, the
discrete Wasserstein / Fokker-Planck relaxation flow, the Glauber master
equation with its lumping check, the drift correspondence between the two
dynamics, convex envelopes and basins of attraction, and Reeb-chord
(instant relaxation) detection.
"""

from .errors import (
    ConfigurationError,
    DomainError,
    NumericalError,
    SizeError,
    SpinChainError,
    StiffnessError,
)
from .model import (
    Density,
    ModelParams,
    ProbabilityVector,
    StateSpace,
    ThermoPoint,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "Density",
    "DomainError",
    "ModelParams",
    "NumericalError",
    "ProbabilityVector",
    "SizeError",
    "SpinChainError",
    "StateSpace",
    "StiffnessError",
    "ThermoPoint",
    "__version__",
]
