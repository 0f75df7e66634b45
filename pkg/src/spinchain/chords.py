"""Reeb chords of temperature/field quenches, and a toy contact comparison.

An abrupt change (beta0, q) -> (beta1, q + a) moves the equilibrium curve;
where the Lagrangian projections of the old and new curves intersect, the
two equilibria share (p, q) and differ only in z: a chord parallel to the
z-axis. Subtracting the two mean-field relations

    q + b p = T0 arctanh p,      a + q + b p = T1 arctanh p,

cancels both the field and the interaction term and pins the intersection
magnetization to p = tanh(a / (T1 - T0)). At such a point the relaxation is
instantaneous: the initial state is already the terminal equilibrium and
the gradient dynamics keeps it fixed. The chord's length |z1 - z0| is the
free-energy jump.

The second half of the module is a convex toy system with Hamiltonian
H(q,m) = -qm + h(m): the density-level relaxation drift v = q - h'(p) and
the contact-Hamiltonian drift w = -p + (h')^{-1}(q) share their attracting
fixed point, have strictly positive scalar product away from it, and both
lift to paths that are admissible for the contact form dz - p dq.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .drifts import drift_fp, drift_glauber, suzuki_kubo_flow
from .errors import DomainError, NumericalError
from .legendrian import lambda_inf_point
from .model import ModelParams


@dataclass(frozen=True)
class QuenchSpec:
    """An abrupt (temperature, field) change between two supercritical states.

    b: interaction constant; beta0/beta1: initial and terminal inverse
    temperatures (both with b*beta > 1); a: strength of the switched-on
    field (> 0). The convention T1 > T0 is enforced by swapping the two
    temperatures when necessary (recorded in the ``swapped`` flag).
    """

    b: float
    beta0: float
    beta1: float
    a: float
    swapped: bool = False

    def __post_init__(self):
        if self.b * self.beta0 <= 1.0 or self.b * self.beta1 <= 1.0:
            raise DomainError("both states must satisfy b*beta > 1")
        if self.a <= 0.0:
            raise DomainError("field shift a must be positive")
        if self.beta0 == self.beta1:
            raise DomainError("degenerate quench: the temperatures must differ")
        if 1.0 / self.beta1 < 1.0 / self.beta0:
            b0, b1 = self.beta0, self.beta1
            object.__setattr__(self, "beta0", b1)
            object.__setattr__(self, "beta1", b0)
            object.__setattr__(self, "swapped", True)

    @property
    def t0(self) -> float:
        return 1.0 / self.beta0

    @property
    def t1(self) -> float:
        return 1.0 / self.beta1


@dataclass(frozen=True)
class ChordResult:
    """The z-parallel segment joining the two equilibrium curves."""

    p: float
    q_star: float
    z0: float
    z1: float
    length: float
    stable: bool
    x1: float
    spec: QuenchSpec = field(repr=False)


def _positive_spontaneous_root(b: float, beta: float) -> float:
    """Positive solution of b x = T arctanh(x), i.e. x = tanh(b beta x)."""
    f = lambda x: math.tanh(b * beta * x) - x
    return brentq(f, 1e-12, 1.0 - 1e-15, xtol=1e-15)


def reeb_chord(spec: QuenchSpec, literal_unit_coupling: bool = False) -> ChordResult:
    """Solve the quench intersection and classify its stability.

    p = tanh(a / (T1 - T0)); q* follows from the initial mean-field
    relation q* = T0 arctanh(p) - b p. The point is a stable terminal
    equilibrium iff p exceeds x1, the terminal spontaneous magnetization.
    z-values come from the two equilibrium curves at this p (the terminal
    curve is the beta1 curve shifted by -a along the field axis, which
    leaves z(p) unchanged); the chord length is the free-energy jump.

    ``literal_unit_coupling`` reproduces the variant mean-field relations
    with the interaction term entering as p instead of b p (they yield the
    same p; only q* moves). Exposed for comparison.
    """
    b = spec.b
    coupling = 1.0 if literal_unit_coupling else b
    p = math.tanh(spec.a / (spec.t1 - spec.t0))
    q_star = spec.t0 * math.atanh(p) - coupling * p
    x1 = _positive_spontaneous_root(b, spec.beta1)
    z0 = lambda_inf_point(b, spec.beta0, p).z
    z1 = lambda_inf_point(b, spec.beta1, p).z
    return ChordResult(p=p, q_star=q_star, z0=z0, z1=z1,
                       length=abs(z1 - z0), stable=bool(p > x1), x1=x1,
                       spec=spec)


def chord_intersection_newton(spec: QuenchSpec, p_init: float = 0.5,
                              q_init: float = 0.0, max_iter: int = 100):
    """Independent 2-D Newton solve of the intersection system.

    Unknowns (p, q) satisfy q + b p - T0 arctanh p = 0 and
    a + q + b p - T1 arctanh p = 0. Used as the oracle for the closed form.
    """
    b, a = spec.b, spec.a
    t0, t1 = spec.t0, spec.t1
    p, q = p_init, q_init
    # the p-component of the Newton step solves a scalar monotone equation;
    # keep a bracket so overshoots toward |p| = 1 fall back to bisection
    lo, hi = -1.0 + 1e-15, 1.0 - 1e-15
    for _ in range(max_iter):
        f1 = q + b * p - t0 * math.atanh(p)
        f2 = a + q + b * p - t1 * math.atanh(p)
        # residual floor scales with the magnitude of the balanced terms
        scale = max(1.0, abs(q) + b * abs(p) + t1 * abs(math.atanh(p)))
        if abs(f1) < 1e-13 * scale and abs(f2) < 1e-13 * scale:
            return p, q
        j11 = b - t0 / (1.0 - p * p)
        j21 = b - t1 / (1.0 - p * p)
        det = j11 - j21  # jacobian [[j11, 1], [j21, 1]]
        if det == 0.0:
            raise NumericalError("singular Jacobian in chord Newton solve")
        if f2 - f1 > 0.0:  # a > (t1 - t0) atanh(p): p below the root
            lo = max(lo, p)
        else:
            hi = min(hi, p)
        dp = (f1 - f2) / det
        dq = (f2 * j11 - f1 * j21) / det
        cand = p - dp
        p = cand if lo < cand < hi else 0.5 * (lo + hi)
        q = q - dq
    raise NumericalError("chord Newton solve did not converge")


def chord_fixed_point_check(chord: ChordResult, t_end: float = 50.0) -> dict:
    """Verify the chord point is a fixed point of the terminal dynamics.

    Both limit drift fields of the terminal system (beta1, field q* + a)
    must vanish at p, and the magnetization flow started there must stay.
    """
    spec = chord.spec
    params_term = ModelParams(b=spec.b, beta=spec.beta1,
                              q=chord.q_star + spec.a, N=2, c=0.2)
    d_g = abs(drift_glauber(params_term, chord.p))
    d_fp = abs(drift_fp(params_term, chord.p))
    _, m = suzuki_kubo_flow(params_term, chord.p, t_end)
    max_wander = float(np.abs(m - chord.p).max())
    return {
        "drift_glauber_at_p": d_g,
        "drift_fp_at_p": d_fp,
        "flow_max_deviation": max_wander,
        "stable": chord.stable,
        "instant": bool(chord.stable and d_g < 1e-10 and max_wander < 1e-8),
    }


# ---------------------------------------------------------------------------
# toy contact model


@dataclass(frozen=True)
class ToyPotential:
    """Strictly convex potential h on a compact interval, with derivative."""

    h: callable
    dh: callable
    p_min: float = -2.0
    p_max: float = 2.0

    def q_range(self):
        return self.dh(self.p_min), self.dh(self.p_max)

    def dh_inverse(self, q: float) -> float:
        """Invert the increasing derivative by guarded Newton + bisection."""
        lo, hi = self.p_min, self.p_max
        qlo, qhi = self.dh(lo), self.dh(hi)
        if not qlo <= q <= qhi:
            raise DomainError(f"field {q} outside the image of h' "
                              f"[{qlo:.6g}, {qhi:.6g}]")
        p = 0.5 * (lo + hi)
        for _ in range(200):
            g = self.dh(p) - q
            if abs(g) < 1e-15:
                return p
            if g > 0:
                hi = p
            else:
                lo = p
            # derivative of dh via small centered difference-free secant:
            # use a safeguarded Newton with the chord slope
            slope = (self.dh(hi) - self.dh(lo)) / (hi - lo)
            cand = p - g / slope if slope > 0 else 0.5 * (lo + hi)
            p = cand if lo < cand < hi else 0.5 * (lo + hi)
        if abs(self.dh(p) - q) > 1e-12:
            raise NumericalError("h' inversion stalled")
        return p

    def conjugate(self, q: float) -> float:
        """h*(q) = q m*(q) - h(m*(q)) with m* = (h')^{-1}(q)."""
        m = self.dh_inverse(q)
        return q * m - self.h(m)


def quartic_potential(p_min: float = -2.0, p_max: float = 2.0) -> ToyPotential:
    """h(p) = p^2/2 + p^4/4, the standard strictly convex test case."""
    return ToyPotential(h=lambda p: p * p / 2.0 + p**4 / 4.0,
                        dh=lambda p: p + p**3, p_min=p_min, p_max=p_max)


def quadratic_potential(p_min: float = -2.0, p_max: float = 2.0) -> ToyPotential:
    """h(p) = p^2/2: makes the two drifts coincide identically."""
    return ToyPotential(h=lambda p: p * p / 2.0, dh=lambda p: p,
                        p_min=p_min, p_max=p_max)


def toy_fields(pot: ToyPotential, p: float, q: float):
    """(v, w) = (q - h'(p), -p + (h')^{-1}(q)), the two relaxation drifts."""
    v = q - pot.dh(p)
    w = -p + pot.dh_inverse(q)
    return v, w


def toy_flow(pot: ToyPotential, p0: float, q: float, flow: str,
             t_end: float = 40.0, n_samples: int = 401):
    """Integrate one of the two toy relaxations; returns (t, p, z) arrays.

    flow="grad":    p_dot = v(p, q), z tracked on the energy surface
                    z = qp - h(p).
    flow="contact": p_dot = w(p, q), z_dot = -z + h*(q), started on the
                    energy surface.
    Both converge to the equilibrium ((h')^{-1}(q), q, h*(q)).
    """
    if flow not in ("grad", "contact"):
        raise DomainError(f"unknown flow {flow!r}")
    p_eq = pot.dh_inverse(q)
    h_star = pot.conjugate(q)
    t_eval = np.linspace(0.0, t_end, n_samples)
    if flow == "grad":
        sol = solve_ivp(lambda _, y: [q - pot.dh(y[0])], (0.0, t_end), [p0],
                        t_eval=t_eval, rtol=1e-11, atol=1e-13)
        if not sol.success:
            raise NumericalError(sol.message)
        p = sol.y[0]
        z = q * p - np.vectorize(pot.h)(p)
    else:
        z0 = q * p0 - pot.h(p0)
        sol = solve_ivp(lambda _, y: [p_eq - y[0], -y[1] + h_star],
                        (0.0, t_end), [p0, z0], t_eval=t_eval,
                        rtol=1e-11, atol=1e-13)
        if not sol.success:
            raise NumericalError(sol.message)
        p, z = sol.y
    return sol.t, p, z


def haslach_admissibility(pot: ToyPotential, t: np.ndarray, p: np.ndarray,
                          q: float, flow: str,
                          eq_exclusion: float = 1e-6) -> dict:
    """Evaluate the contact form along the lifted path on z = qp - h(p).

    lambda(gamma_dot) = z_dot = (q - h'(p)) p_dot = v * p_dot, which equals
    v*w for the contact flow and v^2 for the gradient flow. Admissible
    means strictly positive away from the equilibrium; the check excludes
    samples with |p - p_eq| <= ``eq_exclusion`` and requires the rest to
    exceed 1e-12.
    """
    p_eq = pot.dh_inverse(q)
    v = q - np.vectorize(pot.dh)(p)
    if flow == "grad":
        pdot = v
    else:
        pdot = p_eq - p
    lam = v * pdot
    away = np.abs(p - p_eq) > eq_exclusion
    min_away = float(lam[away].min()) if np.any(away) else math.inf
    return {
        "flow": flow,
        "min_pairing_away_from_equilibrium": min_away,
        "admissible": bool(min_away > 1e-12),
        "samples_checked": int(away.sum()),
    }


def prig_lower_bound(pot: ToyPotential, p_grid, q_grid) -> dict:
    """Measured constant c with (v, w) >= c |p - (h')^{-1}(q)|^2 on a grid.

    Strict convexity of h guarantees a positive c; the measured value is
    reported together with the grid minimum of the raw product.
    """
    best_c = math.inf
    min_prod = math.inf
    for q in np.asarray(q_grid, dtype=float):
        p_eq = pot.dh_inverse(q)
        for p in np.asarray(p_grid, dtype=float):
            v, w = toy_fields(pot, p, q)
            prod = v * w
            min_prod = min(min_prod, prod)
            gap2 = (p - p_eq) ** 2
            if gap2 > 1e-18:
                best_c = min(best_c, prod / gap2)
    return {"c": best_c, "min_product": min_prod,
            "positive": bool(min_prod >= 0.0 and best_c > 0.0)}
