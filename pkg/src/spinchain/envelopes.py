"""Legendre-Fenchel transforms, envelopes of F_{b,beta}(0,.), and basins.

The basin of attraction of the equilibrium curve is, at finite N, the set
of (p, q, z) realizable by some positive density; its vertical sections are
controlled by two bounds obtained from constrained optimization of the
rescaled minus free energy Psi_N(0, .) over densities with prescribed mean
magnetization p:

* alpha_minus(p) = -sup Psi_N(0, rho): the supremum is attained at an
  exponentially tilted Gibbs density, solved by a 1-D safeguarded Newton
  iteration on the tilt (the mean is strictly increasing in it).
* alpha_plus(p) = -inf Psi_N(0, rho): the infimum over the closure of the
  constraint set sits at extreme points, i.e. two-point mixtures, scanned
  exactly in O(N^2).

As N grows these converge to the convex envelope G- and concave envelope
G+ of F_{b,beta}(0, .), built here by double discrete Legendre conjugation;
a geometric convex hull serves as the independent oracle in the tests. The
limiting basin membership test is G-(p) < pq - z < G+(p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError
from .model import (
    Density,
    ModelParams,
    ThermoPoint,
    f_reduced,
    gibbs,
    h_effective_grid,
    log_partition_and_fN,
    pressure,
    psi_rescaled,
)
from .legendrian import mean_field_roots

ENDPOINT_PAD = 1e-4
ALPHA_PLUS_MAX_N = 2000
BOUNDARY_BAND = 1e-9


@dataclass(frozen=True)
class GridFunction:
    """Ordinates sampled on strictly increasing abscissae."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.size < 3 or y.shape != x.shape:
            raise DomainError("grid function needs >= 3 matching samples")
        if not np.all(np.diff(x) > 0):
            raise DomainError("abscissae must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __call__(self, p):
        return np.interp(p, self.x, self.y)


@dataclass(frozen=True)
class EnvelopePair:
    """Convex minorant (lower) and concave majorant (upper) on a shared grid."""

    lower: GridFunction
    upper: GridFunction

    def __post_init__(self):
        if not np.array_equal(self.lower.x, self.upper.x):
            raise DomainError("envelopes must share their grid")


def _lower_hull_indices(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Monotone-chain lower convex hull of the graph points."""
    hull: list[int] = []
    for i in range(x.size):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            # pop while (i0, i1, i) makes a non-convex turn
            cross = ((x[i1] - x[i0]) * (y[i] - y[i0])
                     - (x[i] - x[i0]) * (y[i1] - y[i0]))
            if cross <= 0.0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=int)


def convex_hull_function(g: GridFunction) -> GridFunction:
    """Greatest convex minorant of the sampled graph (geometric route)."""
    idx = _lower_hull_indices(g.x, g.y)
    return GridFunction(g.x, np.interp(g.x, g.x[idx], g.y[idx]))


def legendre_transform(g: GridFunction, slope_grid) -> GridFunction:
    """Discrete convex conjugate ghat(s) = max_k (s x_k - y_k).

    Works for nonconvex inputs. Linear-time two-pointer sweep over sorted
    slopes: the maximizer index walks monotonically along the lower convex
    hull of the graph.
    """
    slopes = np.sort(np.asarray(slope_grid, dtype=float))
    hull = _lower_hull_indices(g.x, g.y)
    hx, hy = g.x[hull], g.y[hull]
    # edge slopes between consecutive hull vertices split the slope axis
    edge = np.diff(hy) / np.diff(hx)
    out = np.empty(slopes.size)
    j = 0
    for i, s in enumerate(slopes):
        while j < edge.size and s > edge[j]:
            j += 1
        out[i] = s * hx[j] - hy[j]
    return GridFunction(slopes, out)


def _conjugation_slopes(g: GridFunction) -> np.ndarray:
    """Slope grid for double conjugation: forward-difference slopes plus the
    hull edge slopes (the latter make flat bridge segments exactly
    representable)."""
    fwd = np.diff(g.y) / np.diff(g.x)
    hull = _lower_hull_indices(g.x, g.y)
    edge = np.diff(g.y[hull]) / np.diff(g.x[hull])
    return np.unique(np.concatenate([fwd, edge]))


def double_conjugate(g: GridFunction) -> GridFunction:
    """Convex envelope via two Legendre transforms, evaluated on g.x."""
    slopes = _conjugation_slopes(g)
    star = legendre_transform(g, slopes)
    # second conjugation: (g*)*(x) = max_s (x s - g*(s)) over the slope grid
    ystar = np.empty(g.x.size)
    hull = _lower_hull_indices(star.x, star.y)
    hx, hy = star.x[hull], star.y[hull]
    edge = np.diff(hy) / np.diff(hx)
    xs = g.x
    j = 0
    for i in np.argsort(xs):
        x = xs[i]
        while j < edge.size and x > edge[j]:
            j += 1
        ystar[i] = x * hx[j] - hy[j]
    return GridFunction(g.x, ystar)


def envelopes(b: float, beta: float, p_grid=None) -> EnvelopePair:
    """Convex envelope G- and concave envelope G+ of F_{b,beta}(0, .).

    The grid covers (-1 + pad, 1 - pad) and is extended by the endpoint
    limit F(0, +-1) = -b/2, which pins both envelopes there. G- is the
    double conjugate of F; G+ is minus the double conjugate of -F.
    """
    if p_grid is None:
        p_grid = np.linspace(-1.0 + ENDPOINT_PAD, 1.0 - ENDPOINT_PAD, 2001)
    p_grid = np.asarray(p_grid, dtype=float)
    if np.any(np.abs(p_grid) >= 1.0):
        raise DomainError("p grid must lie strictly inside (-1, 1)")
    params = ModelParams(b=b, beta=beta, q=0.0, N=2)
    x = np.concatenate([[-1.0], p_grid, [1.0]])
    y = np.concatenate([[-b / 2.0], f_reduced(params, p_grid), [-b / 2.0]])
    g = GridFunction(x, y)
    lower = double_conjugate(g)
    neg = GridFunction(x, -y)
    upper = GridFunction(x, -double_conjugate(neg).y)
    return EnvelopePair(lower=GridFunction(x, lower.y), upper=upper)


# ---------------------------------------------------------------------------
# finite-N basin bounds


def _tilted_state(params: ModelParams, s: float):
    """Density ~ e^{-beta H_N(0,m) + s m}; returns (mean, variance, logw)."""
    space = params.space
    pts = space.points
    base = -params.beta * h_effective_grid(
        ModelParams(params.b, params.beta, 0.0, params.N, params.c), "exact")
    logw = base + s * pts
    logw = logw - logw.max()
    w = np.exp(logw)
    w_sum = w.sum()
    mean = float((pts * w).sum() / w_sum)
    var = float((pts**2 * w).sum() / w_sum - mean**2)
    return mean, var, logw - math.log(w_sum)


def alpha_minus(params: ModelParams, p0: float, max_iter: int = 100) -> float:
    """-sup of Psi_N(0, .) over densities with mean magnetization p0.

    The maximizer is the exponentially tilted Gibbs density; the tilt
    solves the mean constraint by safeguarded Newton (the mean is strictly
    increasing in the tilt).
    """
    if not -1.0 < p0 < 1.0:
        raise DomainError("constraint mean must lie in (-1, 1)")
    space = params.space
    s = 0.0
    lo, hi = -math.inf, math.inf
    mean = None
    for _ in range(max_iter):
        mean, var, _ = _tilted_state(params, s)
        g = mean - p0
        if abs(g) < 1e-13:
            break
        if g > 0:
            hi = min(hi, s)
        else:
            lo = max(lo, s)
        step = g / max(var, 1e-300)
        cand = s - step
        if not (lo < cand < hi):
            if math.isinf(lo):
                cand = s - max(1.0, 2 * abs(step))
            elif math.isinf(hi):
                cand = s + max(1.0, 2 * abs(step))
            else:
                cand = 0.5 * (lo + hi)
        s = cand
    else:
        raise NumericalError("tilt iteration did not converge in "
                             f"{max_iter} steps (residual {mean - p0:.3e})")
    _, _, log_pi = _tilted_state(params, s)
    rho = Density(space, np.exp(np.maximum(log_pi, math.log(1e-300)))
                  * (space.N / 2.0)
                  / np.exp(np.maximum(log_pi, math.log(1e-300))).sum())
    zero_field = ModelParams(params.b, params.beta, 0.0, params.N, params.c)
    return -psi_rescaled(zero_field, rho)


def alpha_plus(params: ModelParams, p0: float) -> float:
    """-inf of Psi_N(0, .) over the closure of the constrained simplex.

    The infimum of a concave functional over the face {mean = p0} sits at
    its extreme points: at most two-point mixtures (plus the single-point
    case when p0 is a lattice value). Exact O(N^2) pair scan; the open-set
    infimum itself is not attained, this is its closure value.
    """
    if not -1.0 < p0 < 1.0:
        raise DomainError("constraint mean must lie in (-1, 1)")
    N = params.N
    if N > ALPHA_PLUS_MAX_N:
        raise DomainError(f"pair scan capped at N = {ALPHA_PLUS_MAX_N}")
    space = params.space
    pts = space.points
    zero_field = ModelParams(params.b, params.beta, 0.0, N, params.c)
    h_over_n = h_effective_grid(zero_field, "exact") / N
    log_half_n = math.log(N / 2.0)

    def psi_two_point(i, j):
        # masses lam at i, 1-lam at j; entropy of the two-atom density
        lam = (pts[j] - p0) / (pts[j] - pts[i])
        ent = 0.0
        for w in (lam, 1.0 - lam):
            if w > 0.0:
                ent -= w * (math.log(w) + log_half_n)
        energy = lam * h_over_n[i] + (1.0 - lam) * h_over_n[j]
        return ent / (params.beta * N) - energy

    best = math.inf
    k = np.searchsorted(pts, p0)
    if k < pts.size and abs(pts[k] - p0) < 1e-14:
        best = -log_half_n / (params.beta * N) - h_over_n[k]
    left = np.nonzero(pts <= p0)[0]
    right = np.nonzero(pts >= p0)[0]
    for i in left:
        for j in right:
            if pts[j] - pts[i] < 1e-14:
                continue
            val = psi_two_point(i, j)
            if val < best:
                best = val
    if math.isinf(best):
        raise DomainError("no admissible support pair for the constraint")
    return -best


def convex_envelope_exact(b: float, beta: float, p) -> np.ndarray:
    """Analytic convex envelope of F_{b,beta}(0, .) at arbitrary |p| < 1.

    For b*beta <= 1 the function is convex, so the envelope is F itself.
    Otherwise symmetry makes the double tangent horizontal: the envelope is
    the constant F(0, p*) on the bridge [-p*, p*] (p* the spontaneous
    magnetization) and F outside it.
    """
    params = ModelParams(b=b, beta=beta, q=0.0, N=2)
    p = np.asarray(p, dtype=float)
    f_vals = f_reduced(params, p)
    if b * beta <= 1.0:
        return f_vals
    p_star = max(r.p for r in mean_field_roots(b, beta, 0.0))
    bridge = np.abs(p) <= p_star
    out = np.where(bridge, f_reduced(params, p_star), f_vals)
    return out if out.ndim else float(out)


def concave_envelope_exact(b: float, beta: float, p) -> np.ndarray:
    """Analytic concave envelope of F_{b,beta}(0, .) at arbitrary |p| <= 1.

    For b*beta <= 2 ln 2 the endpoint values -b/2 dominate and the envelope
    is that constant. Otherwise the envelope follows F on a central
    interval [-t*, t*] and the tangent chords to (+-1, -b/2) outside it,
    with t* solved from the tangency condition
    F'(t)(1 - t) + F(t) + b/2 = 0.
    """
    from scipy.optimize import brentq

    from .model import f_reduced_deriv, f_reduced_second_deriv

    params = ModelParams(b=b, beta=beta, q=0.0, N=2)
    p = np.asarray(p, dtype=float)
    if b * beta <= 2.0 * math.log(2.0):
        out = np.full_like(p, -b / 2.0)
        return out if out.ndim else float(out)

    def tangency(t):
        return (f_reduced_deriv(params, t) * (1.0 - t)
                + f_reduced(params, t) + b / 2.0)

    # inflection point bounds the concave core
    m_infl = math.sqrt(max(1.0 - 1.0 / (b * beta), 0.0))
    t_star = brentq(tangency, 1e-12, m_infl - 1e-12, xtol=1e-14)
    slope = f_reduced_deriv(params, t_star)
    core = np.abs(p) <= t_star
    chord = f_reduced(params, t_star) + slope * (np.abs(p) - t_star)
    out = np.where(core, f_reduced(params, p), chord)
    return out if out.ndim else float(out)


def basin_membership_inf(b: float, beta: float, point: ThermoPoint,
                         pair: EnvelopePair | None = None,
                         tol: float = BOUNDARY_BAND) -> str:
    """Classify a phase-space point against the limiting basin.

    inside iff p in (-1,1) and G-(p) < pq - z < G+(p); within ``tol`` of
    either envelope counts as boundary. A supplied grid pair serves as the
    fast path for points comfortably clear of the envelopes; near-boundary
    decisions always use the analytic envelope values, whose accuracy is
    not limited by the grid resolution.
    """
    if not -1.0 < point.p < 1.0:
        return "outside"
    w = point.p * point.q - point.z
    if pair is not None:
        lo = float(pair.lower(point.p))
        hi = float(pair.upper(point.p))
        grid_slack = 1e-5
        if lo + grid_slack < w < hi - grid_slack:
            return "inside"
        if w < lo - grid_slack or w > hi + grid_slack:
            return "outside"
    lo = float(convex_envelope_exact(b, beta, point.p))
    hi = float(concave_envelope_exact(b, beta, point.p))
    if lo + tol < w < hi - tol:
        return "inside"
    if lo - tol <= w <= hi + tol:
        return "boundary"
    return "outside"


def thm_phys_check(b: float, beta0: float, beta1: float,
                   n_samples: int = 400) -> dict:
    """Stable-branch membership of the beta0 system in the beta1 basin.

    Samples V(beta0) = {(p, F_{b,beta0}(0,p)) : p in I-(beta0) u I+(beta0)}
    and tests each sample against the envelope band W(beta1). Returns
    inclusion and disjointness flags with worst-case margins: inclusion
    margin is min over samples of distance inside the band; the disjoint
    flag reports whether the whole sample set lies strictly below the band.
    """
    if b * beta0 <= 1.0 or b * beta1 <= 1.0:
        raise DomainError("both systems must be in the phase-transition regime")
    pair = envelopes(b, beta1)
    p_minus = min(r.p for r in mean_field_roots(b, beta0, 0.0))
    p_plus = max(r.p for r in mean_field_roots(b, beta0, 0.0))
    lo_grid = np.linspace(-1.0 + ENDPOINT_PAD, p_minus, n_samples // 2)
    hi_grid = np.linspace(p_plus, 1.0 - ENDPOINT_PAD, n_samples // 2)
    samples = np.concatenate([lo_grid, hi_grid])
    params0 = ModelParams(b=b, beta=beta0, q=0.0, N=2)
    w = f_reduced(params0, samples)
    g_lo = pair.lower(samples)
    g_hi = pair.upper(samples)
    inside_margin = float(np.minimum(w - g_lo, g_hi - w).min())
    below_margin = float((g_lo - w).min())
    return {
        "b": b,
        "beta0": beta0,
        "beta1": beta1,
        "inclusion": bool(inside_margin > 0.0),
        "disjoint": bool(below_margin > 0.0),
        "inclusion_margin": inside_margin,
        "below_margin": below_margin,
        "stable_intervals_beta0": [(-1.0, p_minus), (p_plus, 1.0)],
    }


def gibbs_alpha_reference(params: ModelParams) -> tuple[float, float]:
    """(p0, alpha_minus) at the untilted optimum: p0 = <m>_Gibbs, value
    -f_N(0); a closed-loop check for the tilt solver."""
    zero_field = ModelParams(params.b, params.beta, 0.0, params.N, params.c)
    p0 = pressure(zero_field.space, gibbs(zero_field))
    _, fn = log_partition_and_fN(zero_field)
    return p0, -fn
