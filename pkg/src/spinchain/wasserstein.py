"""Discrete Wasserstein metric on densities over M_N and the relaxation flow.

The metric follows Maas' construction over the reversible tridiagonal
kernel K_N built from an edge mobility u: [-1,1] -> (0, 1/2). Edge fields
(antisymmetric tridiagonal matrices) are stored as their superdiagonal,
A[i, i+1] = s_i; the discrete calculus is

    (grad psi)_{ij} = (N/2)(psi_i - psi_j)
    (div A)_i       = -(N/2) sum_j K_{ij} A_{ij}
    (A, B)          = (1/N) sum_{ij} K_{ij} A_{ij} B_{ij}
    <v, w>          = (2/N) sum_i v_i w_i

with the adjointness <phi, div A> = -(grad phi, A) and the Laplacian
identity div grad rho = (N^2/4)(K - 1) rho.

The ascent flow rho_dot = grad_W Psi_N of the rescaled minus free energy is
the discrete Fokker-Planck equation: a (N/(4 beta))(K - 1) rho diffusion
term plus the divergence-form drift built from the effective Hamiltonian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solveh_banded

from .errors import ConfigurationError, DomainError, NumericalError, StiffnessError
from .model import (
    Density,
    ModelParams,
    StateSpace,
    ThermoPoint,
    f_reduced,
    floor_and_renormalize,
    glauber_mobility,
    h_effective_grid,
    log_binomial_exact,
    pressure,
    psi_rescaled,
    remainder_asymptotic,
)

POTENTIAL_RESIDUAL_RTOL = 1e-10
GRAD_STOP_TOL = 1e-8
STEP_SAFETY = 0.5  # kappa in dt <= kappa / (N^2 max u)
PSI_DROP_TOL = 1e-12
MIN_DT = 1e-12


@dataclass(frozen=True)
class WassersteinStructure:
    """Edge mobilities and the bistochastic kernel K_N for the Maas metric."""

    space: StateSpace
    u_values: np.ndarray  # u at the N+1 lattice points; edges use u[1:]

    def __post_init__(self):
        u = np.asarray(self.u_values, dtype=float)
        if u.shape != (self.space.size,):
            raise ConfigurationError(
                f"need {self.space.size} mobility values, got {u.shape}")
        bad = (u <= 0.0) | (u >= 0.5)
        if np.any(bad):
            offenders = self.space.points[bad]
            raise ConfigurationError(
                "mobility u(m) must lie in (0, 1/2); violated at m = "
                + np.array2string(offenders, precision=6))
        u = u.copy()
        u.flags.writeable = False
        object.__setattr__(self, "u_values", u)

    @property
    def N(self) -> int:
        return self.space.N

    @property
    def edge_u(self) -> np.ndarray:
        """K_{i,i+1} = u(m_{i+1}): weight of edge (i, i+1), i = 0..N-1."""
        return self.u_values[1:]

    def kernel_matrix(self) -> np.ndarray:
        """Dense K_N (for tests and small N)."""
        n = self.space.size
        u = self.u_values
        K = np.zeros((n, n))
        idx = np.arange(n - 1)
        K[idx, idx + 1] = u[1:]
        K[idx + 1, idx] = u[1:]
        K[0, 0] = 1.0 - u[1]
        K[n - 1, n - 1] = 1.0 - u[n - 1]
        for i in range(1, n - 1):
            K[i, i] = 1.0 - u[i] - u[i + 1]
        return K

    def apply_k_minus_identity(self, rho: np.ndarray) -> np.ndarray:
        """(K - 1) rho via the tridiagonal band."""
        u = self.u_values
        out = np.zeros_like(rho)
        out[1:] += u[1:] * (rho[:-1] - rho[1:])
        out[:-1] += u[1:] * (rho[1:] - rho[:-1])
        return out


def build_structure(params: ModelParams, u=None) -> WassersteinStructure:
    """Build the metric structure for M_N.

    ``u`` may be a callable m -> (0, 1/2) or an array of values; default is
    the Glauber-matched mobility u(m) = c (1 - m theta(m)), which makes the
    Fokker-Planck diffusion term coincide with the Glauber one. The (0,1/2)
    range is guaranteed for c <= 1/4.
    """
    space = params.space
    if u is None:
        vals = glauber_mobility(params, space.points)
    elif callable(u):
        vals = np.asarray(u(space.points), dtype=float)
    else:
        vals = np.asarray(u, dtype=float)
    return WassersteinStructure(space=space, u_values=vals)


# ---------------------------------------------------------------------------
# discrete calculus


def log_mean(x, y):
    """Logarithmic mean l(x,y) = (x-y)/(ln x - ln y), l(x,x) = x.

    Stabilized by a 3-term series in r = (x-y)/(x+y) when |x-y| is below
    1e-8 of the magnitude: l = a (1 - r^2/3 - 4 r^4/45), a = (x+y)/2.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise DomainError("logarithmic mean needs positive arguments")
    a = 0.5 * (x + y)
    d = x - y
    near = np.abs(d) < 1e-8 * np.maximum(x, y)
    r = np.where(near, d / (2.0 * a), 0.5)
    series = a * (1.0 - r * r / 3.0 - 4.0 * r**4 / 45.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        # log1p(d/y) avoids the log(x/y) cancellation at small separations
        direct = d / np.log1p(np.where(near, 1.0, d / y))
    out = np.where(near, series, direct)
    return out if out.ndim else float(out)


def disc_grad(space: StateSpace, psi: np.ndarray) -> np.ndarray:
    """Superdiagonal of the discrete gradient: s_i = (N/2)(psi_i - psi_{i+1})."""
    psi = np.asarray(psi, dtype=float)
    return (space.N / 2.0) * (psi[:-1] - psi[1:])


def disc_div(structure: WassersteinStructure, edge: np.ndarray) -> np.ndarray:
    """Discrete divergence of an antisymmetric tridiagonal field.

    Output components sum to zero exactly (a tangent vector), since each
    edge contributes opposite terms to its two endpoints.
    """
    u = structure.edge_u  # u at edge (i, i+1)
    n2 = structure.N / 2.0
    out = np.zeros(structure.space.size)
    out[:-1] -= n2 * u * edge
    out[1:] += n2 * u * edge
    return out


def rho_hat(rho: Density) -> np.ndarray:
    """Edge array of logarithmic means of neighboring density values."""
    v = rho.values
    return log_mean(v[:-1], v[1:])


def edge_inner(structure: WassersteinStructure, a: np.ndarray, b: np.ndarray) -> float:
    """(A, B) = (1/N) sum_{ij} K_{ij} A_{ij} B_{ij} = (2/N) sum_e u_e a_e b_e."""
    return float((2.0 / structure.N) * (structure.edge_u * a * b).sum())


def vec_inner(space: StateSpace, v: np.ndarray, w: np.ndarray) -> float:
    """<v, w> = (2/N) sum_i v_i w_i."""
    return float(space.weight * (np.asarray(v) * np.asarray(w)).sum())


def is_tangent(v: np.ndarray, tol: float = 1e-12) -> bool:
    v = np.asarray(v)
    return abs(v.sum()) <= tol * max(1.0, np.abs(v).sum())


def solve_potential(structure: WassersteinStructure, rho: Density,
                    v: np.ndarray) -> np.ndarray:
    """Solve v = -div(rho_hat (.) grad phi) for the mean-zero potential phi.

    The operator is (N^2/4) L_w with L_w the weighted graph Laplacian on
    edge weights w_e = u_e * rho_hat_e; it is SPD on the mean-zero subspace.
    Solved by a symmetric banded factorization with node 0 pinned, then
    re-gauged to mean zero; one step of iterative refinement keeps the
    round-trip residual below POTENTIAL_RESIDUAL_RTOL * ||v||_inf.
    """
    v = np.asarray(v, dtype=float)
    n = structure.space.size
    if v.shape != (n,):
        raise ConfigurationError("tangent vector has wrong length")
    if not is_tangent(v):
        raise DomainError("potential equation needs a mean-zero right-hand side")
    w = structure.edge_u * rho_hat(rho)
    if np.any(w <= 0.0):
        raise NumericalError("degenerate edge weights in potential solve")
    scale = 4.0 / structure.N**2
    rhs_full = scale * (v - v.mean())

    # reduced SPD system on nodes 1..N (phi_0 = 0), upper banded storage
    diag = np.empty(n - 1)
    diag[:-1] = w[:-1] + w[1:]
    diag[-1] = w[-1]
    if n == 2:
        diag[0] = w[0]
    ab = np.zeros((2, n - 1))
    ab[0, 1:] = -w[1:]
    ab[1, :] = diag

    def solve_reduced(rhs):
        phi = np.zeros(n)
        phi[1:] = solveh_banded(ab, rhs[1:], lower=False)
        return phi

    def apply_op(phi):
        flux = w * (phi[:-1] - phi[1:])
        out = np.zeros(n)
        out[:-1] += flux
        out[1:] -= flux
        return out

    # the reduced solve already satisfies row 0 because rhs sums to zero
    phi = solve_reduced(rhs_full)
    resid = rhs_full - apply_op(phi)
    vnorm = np.abs(rhs_full).max()
    if vnorm > 0:
        for _ in range(2):
            if np.abs(resid).max() <= 0.1 * POTENTIAL_RESIDUAL_RTOL * vnorm:
                break
            phi = phi + solve_reduced(resid - resid.mean())
            resid = rhs_full - apply_op(phi)
    return phi - phi.mean()


def w_inner(structure: WassersteinStructure, rho: Density,
            v: np.ndarray, w: np.ndarray) -> float:
    """Maas metric (v, w)_W = (grad phi_v, rho_hat (.) grad phi_w)."""
    phi_v = solve_potential(structure, rho, v)
    phi_w = solve_potential(structure, rho, w)
    gv = disc_grad(structure.space, phi_v)
    gw = disc_grad(structure.space, phi_w)
    return edge_inner(structure, gv, rho_hat(rho) * gw)


def w_norm(structure: WassersteinStructure, rho: Density, v: np.ndarray) -> float:
    return math.sqrt(max(w_inner(structure, rho, v, v), 0.0))


# ---------------------------------------------------------------------------
# free-energy gradient and the Fokker-Planck flow


def _drift_edge_values(params: ModelParams, structure: WassersteinStructure,
                       mode: str):
    """Superdiagonal of grad(potential) for the drift term, per mode.

    exact:      grad of H_N/N with the exact Hamiltonian (finite everywhere).
    asymptotic: grad F plus the 1/(beta N) grad r_N correction; edges
                touching m = +-1, where r_N diverges, fall back to the exact
                log-binomial differences.
    """
    space = params.space
    N, beta = params.N, params.beta
    if mode == "exact":
        hbar = h_effective_grid(params, "exact") / N
        return disc_grad(space, hbar), None
    pts = space.points
    f_edge = disc_grad(space, f_reduced(params, pts))
    r_vals = np.empty(space.size)
    r_vals[1:-1] = remainder_asymptotic(N, pts[1:-1])
    r_vals[0] = r_vals[-1] = np.nan  # singular; boundary edges replaced below
    r_edge = np.empty(space.size - 1)
    r_edge[1:-1] = (N / 2.0) * (r_vals[1:-2] - r_vals[2:-1])
    # exact remainder ln(2/N) - ln C - N c(m) is finite at the endpoints
    for e in (0, space.size - 2):
        ra = _remainder_exact_at(N, pts[e])
        rb = _remainder_exact_at(N, pts[e + 1])
        r_edge[e] = (N / 2.0) * (ra - rb)
    return f_edge, r_edge


def _remainder_exact_at(N, m):
    from .model import binary_neg_entropy
    return (math.log(2.0 / N) - log_binomial_exact(N, m)
            - N * binary_neg_entropy(m))


def _combined_drift_edge(params: ModelParams, structure: WassersteinStructure,
                         mode: str) -> np.ndarray:
    """Total rho-independent drift edge potential gradient for one mode."""
    main_edge, r_edge = _drift_edge_values(params, structure, mode)
    if r_edge is None:
        return main_edge
    return main_edge + r_edge / (params.beta * params.N)


def _grad_raw(structure: WassersteinStructure, beta: float,
              drift_edge: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Gradient evaluation on raw density values with precomputed edges."""
    rh = log_mean(values[:-1], values[1:])
    diffusion = (structure.N / (4.0 * beta)) * structure.apply_k_minus_identity(values)
    return diffusion + disc_div(structure, rh * drift_edge)


def grad_psi_w(structure: WassersteinStructure, params: ModelParams,
               rho: Density, mode: str = "exact") -> np.ndarray:
    """Wasserstein gradient of Psi_N(q, .) at rho (the ascent direction).

    asymptotic: (N/(4 beta))(K-1) rho + div(rho_hat (.) grad F)
                + (1/(beta N)) div(rho_hat (.) grad r_N)
    exact:      (N/(4 beta))(K-1) rho + div(rho_hat (.) grad (H_N/N))

    Vanishes identically at the Gibbs density of the same mode. Components
    sum to zero.
    """
    if mode not in ("exact", "asymptotic"):
        raise ConfigurationError(f"unknown gradient mode {mode!r}")
    return _grad_raw(structure, params.beta,
                     _combined_drift_edge(params, structure, mode), rho.values)


@dataclass
class FlowControls:
    """Integrator knobs for the relaxation flows."""

    t_end: float = 50.0
    dt_init: float | None = None  # default: the stability bound
    grad_tol: float = GRAD_STOP_TOL
    check_every: int = 25
    record_every: int = 50
    max_steps: int = 10_000_000
    mode: str = "exact"


@dataclass
class FlowResult:
    """Trajectory and bookkeeping of one relaxation run."""

    space: StateSpace
    times: np.ndarray
    densities: np.ndarray  # (n_samples, N+1)
    psis: np.ndarray
    stop_reason: str
    grad_norm_final: float
    steps_accepted: int
    steps_rejected: int
    floor_warnings: int
    metadata: dict = field(default_factory=dict)

    def density_at(self, i: int) -> Density:
        return Density(self.space, self.densities[i])

    def final_density(self) -> Density:
        return self.density_at(len(self.times) - 1)


def fp_evolve(structure: WassersteinStructure, params: ModelParams,
              rho0: Density, t_end: float | None = None,
              controls: FlowControls | None = None) -> FlowResult:
    """Integrate the discrete Fokker-Planck flow rho_dot = grad_W Psi_N.

    Explicit RK4 with step halving. A step is rejected (and dt halved) when
    positivity fails or Psi_N drops by more than PSI_DROP_TOL; after runs of
    accepted steps dt grows back toward the stability bound
    dt <= STEP_SAFETY / (N^2 max u). Stops when the gradient's W-norm falls
    below ``controls.grad_tol`` or t reaches t_end. Mass is conserved
    exactly up to roundoff (the right-hand side is a divergence).
    """
    controls = controls or FlowControls()
    if t_end is not None:
        controls = replace(controls, t_end=t_end)
    space = structure.space
    if space.N != params.N:
        raise ConfigurationError("structure and params disagree on N")
    dt_max = STEP_SAFETY / (space.N**2 * structure.u_values.max())
    dt = controls.dt_init or dt_max
    mode = controls.mode

    beta = params.beta
    drift_edge = _combined_drift_edge(params, structure, mode)
    if mode == "exact":
        h_over_n = h_effective_grid(params, "exact") / params.N
    else:
        # the functional monitored along the flow must be the antiderivative
        # of the drift edges actually integrated (finite at the endpoints
        # thanks to the exact boundary-edge replacement)
        h_over_n = np.empty(space.size)
        h_over_n[0] = h_effective_grid(params, "exact")[0] / params.N
        h_over_n[1:] = h_over_n[0] - np.cumsum((2.0 / params.N) * drift_edge)

    def rhs(values):
        return _grad_raw(structure, beta, drift_edge, values)

    weight = space.weight

    def psi_of(values):
        # Psi_N = S(rho)/(beta N) - (2/N) sum_i (H_i / N) rho_i
        plnp = np.where(values > 1e-300, values * np.log(np.maximum(values, 1e-300)),
                        0.0)
        s = -weight * plnp.sum()
        return s / (beta * params.N) - weight * (h_over_n * values).sum()

    floor = 1e-14 * (space.N / 2.0)
    t = 0.0
    values = rho0.values.copy()
    psi = psi_of(values)
    times, dens, psis = [0.0], [values.copy()], [psi]
    accepted = rejected = floored = 0
    stop_reason = "t_end"
    grad_norm = math.inf
    step_index = 0
    streak = 0
    min_dpsi = math.inf

    while t < controls.t_end - 1e-15 and step_index < controls.max_steps:
        step_index += 1
        dt = min(dt, controls.t_end - t)
        k1 = rhs(values)
        k2 = rhs(_positive(values + 0.5 * dt * k1, floor))
        k3 = rhs(_positive(values + 0.5 * dt * k2, floor))
        k4 = rhs(_positive(values + dt * k3, floor))
        cand = values + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        ok = bool(np.all(cand > 0.0))
        psi_new = None
        if ok:
            if np.any(cand < floor):
                cand, n = floor_and_renormalize(space, cand)
                floored += n
            psi_new = psi_of(cand)
            ok = psi_new >= psi - PSI_DROP_TOL
        if not ok:
            rejected += 1
            streak = 0
            dt *= 0.5
            if dt < MIN_DT:
                raise StiffnessError(
                    "Fokker-Planck step underflow; reduce N or use a smaller "
                    "time horizon")
            continue
        t += dt
        min_dpsi = min(min_dpsi, psi_new - psi)
        values, psi = cand, psi_new
        accepted += 1
        streak += 1
        if streak >= 8 and dt < dt_max:
            dt = min(2.0 * dt, dt_max)
            streak = 0
        if accepted % controls.record_every == 0:
            times.append(t)
            dens.append(values.copy())
            psis.append(psi)
        if accepted % controls.check_every == 0:
            grad_norm = w_norm(structure, Density(space, values),
                               rhs(values))
            if grad_norm < controls.grad_tol:
                stop_reason = "gradient_norm"
                break

    if times[-1] != t:
        times.append(t)
        dens.append(values.copy())
        psis.append(psi)
    if math.isinf(grad_norm):
        grad_norm = w_norm(structure, Density(space, values), rhs(values))
    return FlowResult(
        space=space,
        times=np.array(times),
        densities=np.array(dens),
        psis=np.array(psis),
        stop_reason=stop_reason,
        grad_norm_final=grad_norm,
        steps_accepted=accepted,
        steps_rejected=rejected,
        floor_warnings=floored,
        metadata={
            "mode": mode,
            "grad_tol": controls.grad_tol,
            "dt_bound": dt_max,
            "min_psi_increment": min_dpsi,
            "stopping_rule": "w_norm(grad) < grad_tol or t_end reached",
        },
    )


def _positive(values, floor):
    """Clip intermediate RK stage values; final acceptance re-checks."""
    return np.maximum(values, floor)


def thermo_trajectory(params: ModelParams, result: FlowResult,
                      mode: str = "exact"):
    """Map a density trajectory to (t, ThermoPoint) samples.

    p(t) is the mean magnetization, z(t) = Psi_N(q, rho(t)); q is the field
    the flow relaxes under.
    """
    out = []
    for i, t in enumerate(result.times):
        rho = result.density_at(i)
        out.append((float(t), ThermoPoint(
            p=pressure(result.space, rho),
            q=params.q,
            z=psi_rescaled(params, rho, mode))))
    return out
