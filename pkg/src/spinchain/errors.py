"""Exception types shared across the package.

Every exception carries a short machine-readable ``code`` so the CLI can
propagate failures without parsing messages.
"""


class SpinChainError(Exception):
    """Base class for all package errors."""

    code = "error"


class DomainError(SpinChainError, ValueError):
    """Input outside the mathematical domain of an operation."""

    code = "domain"


class ConfigurationError(SpinChainError, ValueError):
    """Inconsistent or invalid parameters / configuration."""

    code = "config"


class SizeError(SpinChainError, ValueError):
    """Problem size exceeds a hard cap (e.g. 2^N state enumerations)."""

    code = "size"


class StiffnessError(SpinChainError, RuntimeError):
    """Adaptive integrator step size underflowed."""

    code = "stiffness"


class NumericalError(SpinChainError, RuntimeError):
    """A numerical routine failed to converge or hit a degenerate case."""

    code = "numerical"
