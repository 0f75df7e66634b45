"""Core Curie-Weiss model on the lumped magnetization space.

The N-spin mean-field magnet is reduced to the space M_N of magnetization
values m_j = -1 + 2(j-1)/N, carrying the measure mu_N(m) = 2/N per point.
This module holds the model data: the reduced free-energy density
F_{b,beta}(q,m), the effective Hamiltonian H_N on M_N (exact via
log-binomials, or asymptotic via a Stirling remainder), entropy and free
energy of densities, the Gibbs density, and the rescaled log-partition
function f_N.

Two conventions coexist for states on M_N and both appear downstream:

* ``Density`` rho: density with respect to mu_N, normalized so that
  sum_i rho_i = N/2 (i.e. integral of rho d(mu_N) = 1).
* ``ProbabilityVector`` pi: plain point masses, sum_i pi_i = 1.

Conversion is pi = (2/N) * rho.

Gauge of the effective Hamiltonian: the exact mode includes the additive
constant beta^{-1} ln(2/N) so that the partition function over M_N equals
the configuration-space partition function over all 2^N spin assignments.
This fixes the z-axis normalization used by the Legendrian curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, xlogy

from .errors import ConfigurationError, DomainError

# Mass tolerance is relative to the total mass N/2 (100x accumulation error
# for double sums at N <= 1e4).
MASS_RTOL = 1e-12
# rho*ln(rho) is clamped to 0 below this to avoid -inf * 0 artifacts.
ENTROPY_CLAMP = 1e-300
# Evolution codes floor densities here (relative to N/2) before renormalizing.
DENSITY_FLOOR_REL = 1e-14


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the Curie-Weiss magnet.

    b: ferromagnetic coupling (energy, > 0)
    beta: inverse temperature (1/energy, > 0)
    q: external magnetic field (energy)
    N: number of spins (>= 1)
    c: Glauber spin-flip rate constant (1/time, > 0)
    """

    b: float
    beta: float
    q: float = 0.0
    N: int = 64
    c: float = 0.2

    def __post_init__(self):
        # b = 0 (independent spins) is admitted as a degenerate reference case.
        if not (self.b >= 0):
            raise ConfigurationError(f"coupling b must be >= 0, got {self.b}")
        if not (self.beta > 0):
            raise ConfigurationError(f"inverse temperature beta must be > 0, got {self.beta}")
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 1):
            raise ConfigurationError(f"spin count N must be an integer >= 1, got {self.N}")
        if not (self.c > 0):
            raise ConfigurationError(f"rate constant c must be > 0, got {self.c}")

    @property
    def phase_transition_regime(self) -> bool:
        """True when b*beta > 1 (spontaneous magnetization exists)."""
        return self.b * self.beta > 1.0

    @property
    def temperature(self) -> float:
        return 1.0 / self.beta

    @property
    def space(self) -> "StateSpace":
        return StateSpace(self.N)


@dataclass(frozen=True)
class StateSpace:
    """The magnetization lattice M_N with the measure mu_N = 2/N per point."""

    N: int
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 1):
            raise ConfigurationError(f"N must be an integer >= 1, got {self.N}")
        pts = -1.0 + 2.0 * np.arange(self.N + 1) / self.N
        pts[0], pts[-1] = -1.0, 1.0
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.N + 1

    @property
    def weight(self) -> float:
        """Measure of a single point."""
        return 2.0 / self.N


class Density:
    """Strictly positive density on M_N with respect to mu_N; mass N/2."""

    __slots__ = ("space", "values")

    def __init__(self, space: StateSpace, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (space.size,):
            raise ConfigurationError(
                f"density needs {space.size} values, got shape {values.shape}")
        if not np.all(values > 0.0):
            raise DomainError("density values must be strictly positive")
        mass = values.sum()
        target = space.N / 2.0
        if abs(mass - target) > MASS_RTOL * max(1.0, target):
            raise DomainError(
                f"density mass {mass!r} != N/2 = {target!r} beyond tolerance")
        self.space = space
        self.values = values.copy()
        self.values.flags.writeable = False

    @classmethod
    def normalized(cls, space: StateSpace, raw) -> "Density":
        """Rescale a positive vector to mass N/2."""
        raw = np.asarray(raw, dtype=float)
        if not np.all(raw > 0.0):
            raise DomainError("density values must be strictly positive")
        return cls(space, raw * (space.N / 2.0) / raw.sum())

    @property
    def mass(self) -> float:
        return float(self.values.sum())

    def __len__(self):
        return self.values.size


class ProbabilityVector:
    """Nonnegative point masses on M_N summing to 1 (Glauber convention)."""

    __slots__ = ("space", "masses")

    def __init__(self, space: StateSpace, masses):
        masses = np.asarray(masses, dtype=float)
        if masses.shape != (space.size,):
            raise ConfigurationError(
                f"probability vector needs {space.size} entries, got {masses.shape}")
        if not np.all(masses >= 0.0):
            raise DomainError("probabilities must be nonnegative")
        if abs(masses.sum() - 1.0) > MASS_RTOL:
            raise DomainError(f"probabilities sum to {masses.sum()!r}, not 1")
        self.space = space
        self.masses = masses.copy()
        self.masses.flags.writeable = False


@dataclass(frozen=True)
class ThermoPoint:
    """A point (p, q, z) of the thermodynamic phase space.

    p is the magnetization (rescaled generalized pressure), q the external
    field, z minus the free energy per spin.
    """

    p: float
    q: float
    z: float


def density_to_probability(space: StateSpace, rho: Density) -> ProbabilityVector:
    """pi_i = (2/N) rho_i.

    The round trip through :func:`probability_to_density` is bit-exact
    whenever N is a power of two (the weight 2/N is then a binary scale);
    for other N it is exact up to one rounding each way.
    """
    return ProbabilityVector(space, rho.values * space.weight)


def probability_to_density(space: StateSpace, pi: ProbabilityVector) -> Density:
    """rho_i = (N/2) pi_i; requires pi strictly positive."""
    return Density(space, pi.masses / space.weight)


def uniform_density(space: StateSpace) -> Density:
    return Density(space, np.full(space.size, space.N / (2.0 * (space.N + 1))))


def l1_distance(space: StateSpace, a: Density, b: Density) -> float:
    """Integral of |a - b| with respect to mu_N."""
    return float(space.weight * np.abs(a.values - b.values).sum())


def floor_and_renormalize(space: StateSpace, values: np.ndarray):
    """Clip a near-density from below at the evolution floor and rescale.

    Returns (values, n_floored). Used by the flow integrators as a safety
    net; step rejection is the primary positivity mechanism.
    """
    floor = DENSITY_FLOOR_REL * (space.N / 2.0)
    low = values < floor
    n = int(low.sum())
    if n:
        values = np.where(low, floor, values)
        values = values * (space.N / 2.0) / values.sum()
    return values, n


# ---------------------------------------------------------------------------
# Free-energy density and the effective Hamiltonian


def binary_neg_entropy(m):
    """c(m) = ((1+m)/2) ln((1+m)/2) + ((1-m)/2) ln((1-m)/2), with x ln x -> 0."""
    m = np.asarray(m, dtype=float)
    ap = (1.0 + m) / 2.0
    am = (1.0 - m) / 2.0
    out = xlogy(ap, ap) + xlogy(am, am)
    return out if out.ndim else float(out)


def f_reduced(params: ModelParams, m):
    """Reduced free-energy density F_{b,beta}(q,m) = -qm - b m^2/2 + c(m)/beta.

    Finite on all of [-1,1]; the entropy terms take their x ln x -> 0 limit
    at the endpoints.
    """
    m = np.asarray(m, dtype=float)
    if np.any(np.abs(m) > 1.0 + 1e-12):
        raise DomainError("magnetization outside [-1, 1]")
    m = np.clip(m, -1.0, 1.0)
    out = -params.q * m - params.b * m * m / 2.0 + binary_neg_entropy(m) / params.beta
    return out if out.ndim else float(out)


def f_reduced_deriv(params: ModelParams, m):
    """F'_{b,beta}(q,m) = -q - b m + beta^{-1} arctanh(m), for |m| < 1."""
    m = np.asarray(m, dtype=float)
    if np.any(np.abs(m) >= 1.0):
        raise DomainError("derivative of F needs |m| < 1")
    out = -params.q - params.b * m + np.arctanh(m) / params.beta
    return out if out.ndim else float(out)


def f_reduced_second_deriv(params: ModelParams, m):
    """F''_{b,beta}(m) = -b + beta^{-1} / (1 - m^2)."""
    m = np.asarray(m, dtype=float)
    if np.any(np.abs(m) >= 1.0):
        raise DomainError("second derivative of F needs |m| < 1")
    out = -params.b + 1.0 / (params.beta * (1.0 - m * m))
    return out if out.ndim else float(out)


def _lattice_index(N: int, m):
    """Index k = (1+m) N / 2, validated to be a lattice integer."""
    m = np.asarray(m, dtype=float)
    k = (1.0 + m) * N / 2.0
    kr = np.rint(k)
    if np.any(np.abs(k - kr) > 1e-8 * max(1.0, N)) or np.any(kr < 0) or np.any(kr > N):
        raise DomainError("m is not a lattice point of M_N")
    return kr


def log_binomial_exact(N: int, m):
    """ln C(N, (1+m)N/2) in the log domain; no overflow up to N ~ 1e6."""
    k = _lattice_index(N, m)
    out = gammaln(N + 1.0) - gammaln(k + 1.0) - gammaln(N - k + 1.0)
    return out if out.ndim else float(out)


def log_binomial_asymptotic(N: int, m):
    """Stirling expansion of ln C_N(m) through the 1/(12N) term.

    Valid for |m| < 1. The truncation error decays like 1/N^3 (the Stirling
    series has no 1/N^2 term), which is sharper than the O(1/N^2) usually
    quoted for this expansion.
    """
    m = np.asarray(m, dtype=float)
    if np.any(np.abs(m) >= 1.0):
        raise DomainError("asymptotic log-binomial needs |m| < 1")
    one_m2 = 1.0 - m * m
    out = (-N * binary_neg_entropy(m)
           - 0.5 * math.log(2.0 * math.pi * N)
           + 0.5 * np.log(4.0 / one_m2)
           + (1.0 - 4.0 / one_m2) / (12.0 * N))
    return out if out.ndim else float(out)


def remainder_asymptotic(N: int, m):
    """Entropy-recalculation remainder r_N(m) for the asymptotic Hamiltonian.

    r_N(m) = ln(2/N) + (1/2) ln(2 pi N) - (1/2) ln(4/(1-m^2))
             - (1/(12N)) (1 - 4/(1-m^2)),
    defined for m in (-1,1); logarithmically singular at the endpoints.
    """
    m = np.asarray(m, dtype=float)
    if np.any(np.abs(m) >= 1.0):
        raise DomainError("remainder r_N is singular at m = +-1")
    one_m2 = 1.0 - m * m
    out = (math.log(2.0 / N) + 0.5 * math.log(2.0 * math.pi * N)
           - 0.5 * np.log(4.0 / one_m2)
           - (1.0 - 4.0 / one_m2) / (12.0 * N))
    return out if out.ndim else float(out)


def remainder_exact(N: int, m):
    """Exact remainder ln(2/N) - ln C_N(m) - N c(m); finite at m = +-1."""
    m = np.asarray(m, dtype=float)
    out = np.asarray(math.log(2.0 / N) - log_binomial_exact(N, m)
                     - N * binary_neg_entropy(m))
    return out if out.ndim else float(out)


def remainder_constant_discrepancy(N: int) -> float:
    """Gap between the two printed remainder constants; a known source typo.

    One version of the N-independent-in-m constant reads (1/2) ln(8 pi N),
    the entropy-recalculation route gives ln(2/N) + (1/2) ln(2 pi N). The
    difference equals ln N. This package adopts the recalculation constant;
    the gap is exposed here as a diagnostic and is never reconciled silently.
    """
    return 0.5 * math.log(8.0 * math.pi * N) - (
        math.log(2.0 / N) + 0.5 * math.log(2.0 * math.pi * N))


def _check_mode(mode):
    if mode not in ("exact", "asymptotic"):
        raise ConfigurationError(f"mode must be 'exact' or 'asymptotic', got {mode!r}")


def h_effective(params: ModelParams, m, mode: str = "exact"):
    """Effective Hamiltonian H_N(q, m) on M_N.

    exact:      N*(-qm - b m^2/2) - beta^{-1} ln C_N(m) + beta^{-1} ln(2/N).
                Finite on all of M_N (default).
    asymptotic: N*F_{b,beta}(q,m) + beta^{-1} r_N(m); diverges at m = +-1.
    """
    _check_mode(mode)
    N, beta = params.N, params.beta
    m = np.asarray(m, dtype=float)
    if mode == "exact":
        hbar = -params.q * m - params.b * m * m / 2.0
        out = N * hbar - log_binomial_exact(N, m) / beta + math.log(2.0 / N) / beta
    else:
        out = N * f_reduced(params, m) + remainder_asymptotic(N, m) / beta
    out = np.asarray(out)
    return out if out.ndim else float(out)


def h_effective_grid(params: ModelParams, mode: str = "exact") -> np.ndarray:
    """H_N evaluated on all N+1 points of M_N."""
    return np.asarray(h_effective(params, params.space.points, mode))


def entropy(space: StateSpace, rho: Density) -> float:
    """S(rho) = -(2/N) sum_i rho_i ln rho_i."""
    v = rho.values
    plnp = np.where(v > ENTROPY_CLAMP, v * np.log(np.maximum(v, ENTROPY_CLAMP)), 0.0)
    return float(-space.weight * plnp.sum())


def free_energy(params: ModelParams, rho: Density, mode: str = "exact") -> float:
    """Phi(q, rho) = -beta^{-1} S(rho) + integral of H_N rho d(mu_N)."""
    space = rho.space
    h = h_effective_grid(ModelParams(params.b, params.beta, params.q, space.N, params.c), mode)
    return float(-entropy(space, rho) / params.beta + space.weight * (h * rho.values).sum())


def psi_rescaled(params: ModelParams, rho: Density, mode: str = "exact") -> float:
    """Psi_N(q, rho) = -Phi(q, rho)/N, the rescaled minus free energy."""
    return -free_energy(params, rho, mode) / params.N


def pressure(space: StateSpace, rho: Density) -> float:
    """Mean magnetization <m>_rho = (2/N) sum_i m_i rho_i, in (-1, 1)."""
    return float(space.weight * (space.points * rho.values).sum())


def gibbs(params: ModelParams, mode: str = "exact") -> Density:
    """Gibbs density rho_G = e^{-beta H_N} / Z on M_N (log-sum-exp shifted).

    Boltzmann weights more than ~690 log-units below the maximum would
    underflow to exact zeros; they are floored at ENTROPY_CLAMP to keep the
    density strictly positive. The induced mass error is < (N+1)*1e-300.
    """
    space = params.space
    logw = -params.beta * h_effective_grid(params, mode)
    logw -= logw.max()
    w = np.exp(np.maximum(logw, math.log(ENTROPY_CLAMP)))
    return Density(space, w * (space.N / 2.0) / w.sum())


def log_partition_and_fN(params: ModelParams, mode: str = "exact"):
    """Return (ln Z_N(q), f_N(q)) with f_N = ln Z_N / (beta N).

    Z_N = sum_i e^{-beta H_N(m_i)} * (2/N); in exact mode this equals the
    partition function over the 2^N spin configurations.
    """
    space = params.space
    logw = -params.beta * h_effective_grid(params, mode)
    shift = logw.max()
    log_z = shift + math.log(np.exp(logw - shift).sum()) + math.log(space.weight)
    return float(log_z), float(log_z / (params.beta * params.N))


def f_n_on_grid(params: ModelParams, q_grid, mode: str = "exact") -> np.ndarray:
    """Vectorized f_N over a grid of field values (shared N, b, beta)."""
    space = params.space
    q_grid = np.asarray(q_grid, dtype=float)
    h0 = h_effective_grid(
        ModelParams(params.b, params.beta, 0.0, params.N, params.c), mode)
    # H_N(q, m) = H_N(0, m) - q N m exactly, in both modes.
    logw = -params.beta * (h0[None, :] - np.outer(q_grid, params.N * space.points))
    shift = logw.max(axis=1, keepdims=True)
    log_z = shift[:, 0] + np.log(np.exp(logw - shift).sum(axis=1)) + math.log(space.weight)
    return log_z / (params.beta * params.N)


def theta(params: ModelParams, m):
    """theta(m) = tanh(beta (q + b m)), the local equilibrium magnetization."""
    m = np.asarray(m, dtype=float)
    out = np.tanh(params.beta * (params.q + params.b * m))
    return out if out.ndim else float(out)


def glauber_mobility(params: ModelParams, m):
    """u(m) = c (1 - m theta(m)); the edge mobility matched to Glauber rates.

    Takes values in (0, 2c); choosing c <= 1/4 guarantees the (0, 1/2) range
    required of Wasserstein edge weights.
    """
    m = np.asarray(m, dtype=float)
    out = params.c * (1.0 - m * theta(params, m))
    return out if out.ndim else float(out)
