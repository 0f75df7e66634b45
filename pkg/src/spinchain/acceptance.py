"""The acceptance battery: one callable per criterion, shared by CLI and tests.

Each criterion function returns a CriterionResult whose ``passed`` field
reflects the criterion exactly as stated. Two criteria inherit formula
defects from their source material and cannot pass as stated (the algebra
is laid out in the repository notes): the drift proportionality constant
(criterion 5) and the Stirling error slope (criterion 10). For those, the
result also carries ``passed_with_correction`` measuring the corrected
statement; both numbers are reported, nothing is silently reconciled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chords import (
    QuenchSpec,
    chord_fixed_point_check,
    chord_intersection_newton,
    haslach_admissibility,
    prig_lower_bound,
    quartic_potential,
    reeb_chord,
    toy_flow,
)
from .drifts import drift_error_ladder, drift_fp, drift_glauber, mu_ratio
from .envelopes import alpha_minus, alpha_plus, envelopes, thm_phys_check
from .glauber import build_generator, full_chain_lump_check, glauber_evolve
from .legendrian import (
    finite_legendrian,
    hausdorff_distance,
    kink_refined_grid,
    limit_curve,
    limit_free_energy,
)
from .model import (
    Density,
    ModelParams,
    ProbabilityVector,
    binary_neg_entropy,
    gibbs,
    glauber_mobility,
    l1_distance,
    log_binomial_asymptotic,
    log_binomial_exact,
    psi_rescaled,
)
from .wasserstein import (
    build_structure,
    disc_div,
    disc_grad,
    edge_inner,
    fp_evolve,
    grad_psi_w,
    vec_inner,
    w_inner,
    w_norm,
)

SEED = 20260809


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    notes: str = ""
    passed_with_correction: bool | None = None

    def status_line(self) -> str:
        if self.passed:
            tag = "PASS"
        elif self.passed_with_correction:
            tag = "FAIL-AS-STATED (corrected form passes; see notes)"
        else:
            tag = "FAIL"
        return f"criterion {self.number:2d} [{tag}] {self.name}"


def criterion_1_maas_identities() -> CriterionResult:
    """Adjointness and div(grad) = (N^2/4)(K-1) at N in {8, 64, 256}."""
    worst_adj = 0.0
    worst_lap = 0.0
    for n in (8, 64, 256):
        params = ModelParams(b=1.0, beta=1.8, q=-0.08, N=n, c=0.2)
        s = build_structure(params)
        K = s.kernel_matrix()
        rng = np.random.default_rng(SEED + n)
        for _ in range(100):
            phi = rng.standard_normal(n + 1)
            edge = rng.standard_normal(n)
            lhs = vec_inner(s.space, phi, disc_div(s, edge))
            rhs = -edge_inner(s, disc_grad(s.space, phi), edge)
            worst_adj = max(worst_adj,
                            abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))
            rho = rng.uniform(0.1, 2.0, n + 1)
            lap = disc_div(s, disc_grad(s.space, rho))
            ref = (n**2 / 4.0) * ((K - np.eye(n + 1)) @ rho)
            worst_lap = max(worst_lap,
                            np.abs(lap - ref).max() / max(1.0, np.abs(ref).max()))
    ok = worst_adj < 1e-10 and worst_lap < 1e-10
    return CriterionResult(1, "Maas-calculus identities", ok,
                           {"worst_adjointness": worst_adj,
                            "worst_laplacian": worst_lap})


def criterion_2_riesz() -> CriterionResult:
    """Metric gradient vs finite-difference directional derivatives, N=64."""
    params = ModelParams(b=1.2, beta=1.2, q=0.1, N=64, c=0.2)
    s = build_structure(params)
    rng = np.random.default_rng(SEED)
    rho = Density.normalized(s.space, rng.uniform(0.2, 1.8, s.space.size))
    g = grad_psi_w(s, params, rho, "exact")
    eps = 1e-6
    worst = 0.0
    for _ in range(20):
        v = rng.standard_normal(s.space.size)
        v -= v.mean()
        rp = Density(s.space, rho.values + eps * v)
        rm = Density(s.space, rho.values - eps * v)
        dpsi = (psi_rescaled(params, rp) - psi_rescaled(params, rm)) / (2 * eps)
        worst = max(worst, abs(dpsi - w_inner(s, rho, g, v))
                    / w_norm(s, rho, v))
    return CriterionResult(2, "Wasserstein-gradient Riesz check", worst < 1e-6,
                           {"worst_relative_error": worst})


def criterion_3_fp_relaxation() -> CriterionResult:
    """Field quench 0.4 -> 0 at b=1, beta=0.5, N=64 relaxes onto Gibbs."""
    before = ModelParams(b=1.0, beta=0.5, q=0.4, N=64, c=0.2)
    after = ModelParams(b=1.0, beta=0.5, q=0.0, N=64, c=0.2)
    s = build_structure(after)
    res = fp_evolve(s, after, gibbs(before), t_end=150.0)
    dist = l1_distance(s.space, res.final_density(), gibbs(after))
    mass_drift = float(np.abs(res.densities.sum(axis=1) - 32.0).max())
    min_dpsi = res.metadata["min_psi_increment"]
    ok = dist < 1e-6 and min_dpsi >= -1e-12 and mass_drift < 1e-10
    return CriterionResult(3, "Fokker-Planck relaxation after quench", ok,
                           {"l1_to_gibbs": dist, "mass_drift": mass_drift,
                            "min_psi_increment": min_dpsi,
                            "stop_reason": res.stop_reason,
                            "floor_warnings": res.floor_warnings})


def criterion_4_glauber_lumping() -> CriterionResult:
    """2^N lumping to 1e-12 for N in 2..10; conservation and convergence."""
    worst = 0.0
    for n in range(2, 11):
        for b, beta, q in [(1.2, 1.2, 0.1), (1.0, 1.8, -0.08), (0.8, 0.7, 0.3)]:
            rep = full_chain_lump_check(
                ModelParams(b=b, beta=beta, q=q, N=n, c=0.2), "paper")
            worst = max(worst, rep["max_discrepancy"])
    # conservation + convergence at N=64 (barrier-free parameters so the
    # stated integrator reaches the stationary vector within the budget)
    params = ModelParams(b=1.0, beta=0.5, q=0.1, N=64, c=0.2)
    gen = build_generator(params)
    start = np.zeros(65)
    start[10] = 1.0
    res = glauber_evolve(gen, ProbabilityVector(params.space, start),
                         t_end=400.0, stop_l1=1e-7)
    drift = float(np.abs(res.probabilities.sum(axis=1) - 1.0).max())
    dist = float(np.abs(res.final_probability().masses
                        - gen.stationary_vector().masses).sum())
    ok = worst < 1e-12 and drift < 1e-10 and dist < 1e-6
    return CriterionResult(4, "Glauber lumping and master equation", ok,
                           {"worst_lump_discrepancy": worst,
                            "probability_drift": drift,
                            "l1_to_stationary": dist})


def criterion_5_drift_correspondence() -> CriterionResult:
    """O(1/N) drift rates; mu > 0; the exact proportionality identity."""
    base = ModelParams(b=1.0, beta=1.8, q=-0.08, N=100, c=0.2)
    ladder = [100, 200, 400, 800, 1600]
    fit_fp = drift_error_ladder(base, ladder, "fp")
    fit_g = drift_error_ladder(base, ladder, "glauber")
    grid = np.linspace(-0.999, 0.999, 2001)
    fig8 = ModelParams(b=1.0, beta=1.8, q=-0.08, N=64, c=0.2)
    mu = mu_ratio(fig8, grid)
    u = glauber_mobility(fig8, grid)
    d_fp = drift_fp(fig8, grid)
    d_g = drift_glauber(fig8, grid)
    literal = float(np.abs(d_g - 4.0 * u * mu * d_fp).max())
    corrected = float(np.abs(u * d_g - 4.0 * fig8.c * mu * d_fp).max())
    slopes_ok = (-1.3 < fit_fp["slope"] < -0.7) and (-1.3 < fit_g["slope"] < -0.7)
    mu_ok = bool(np.all(mu > 0.0))
    as_stated = slopes_ok and mu_ok and literal <= 1e-12
    with_corr = slopes_ok and mu_ok and corrected <= 1e-12
    return CriterionResult(
        5, "drift correspondence", as_stated,
        {"slope_fp": fit_fp["slope"], "slope_glauber": fit_g["slope"],
         "mu_min": float(mu.min()),
         "literal_identity_residual": literal,
         "corrected_identity_residual": corrected},
        notes=("the quoted proportionality 'Drift_G = 4 u mu Drift_FP' is "
               "off by the nonconstant factor c/u^2; the dimensionally "
               "consistent identity u*Drift_G = 4 c mu * Drift_FP holds to "
               "machine precision (decision ledger has the algebra)"),
        passed_with_correction=with_corr)


def criterion_6_thermo_limit() -> CriterionResult:
    """f_N -> f uniformly and the curves converge in Hausdorff distance."""
    b, beta = 1.2, 1.2
    qs = kink_refined_grid(-1.0, 1.0)
    f_lim = np.array([limit_free_energy(b, beta, q) for q in qs])
    sups, dists = [], []
    lim = limit_curve(b, beta, (-1.0, 1.0), n_branch=800, n_segment=201)
    for n in (50, 100, 200, 400):
        params = ModelParams(b=b, beta=beta, N=n, c=0.2)
        curve = finite_legendrian(params, qs)
        sups.append(float(np.abs(curve.z - f_lim).max()))
        dists.append(hausdorff_distance(curve, lim))
    sup_ok = all(a > b2 for a, b2 in zip(sups, sups[1:])) and sups[-1] < 0.02
    dist_ok = all(a > b2 for a, b2 in zip(dists, dists[1:]))
    return CriterionResult(6, "thermodynamic limit of the equilibrium curves",
                           sup_ok and dist_ok,
                           {"sup_gaps": sups, "hausdorff": dists})


def criterion_7_envelopes_basins() -> CriterionResult:
    """Constant concave envelope; alpha convergence; two-temperature test."""
    flat = envelopes(1.2, 1.0)
    flat_dev = float(np.abs(flat.upper.y + 0.6).max())
    b, beta = 1.2, 1.2
    pair = envelopes(b, beta)
    conv_ok = True
    alpha_table = {}
    for p0 in (-0.5, 0.0, 0.5):
        lo_t, hi_t = float(pair.lower(p0)), float(pair.upper(p0))
        errs_lo, errs_hi = [], []
        for n in (100, 200, 400):
            params = ModelParams(b=b, beta=beta, q=0.0, N=n, c=0.2)
            errs_lo.append(abs(alpha_minus(params, p0) - lo_t))
            errs_hi.append(abs(alpha_plus(params, p0) - hi_t))
        conv_ok &= errs_lo[0] > errs_lo[1] > errs_lo[2]
        conv_ok &= errs_hi[0] > errs_hi[2]
        alpha_table[p0] = {"alpha_minus_errors": errs_lo,
                           "alpha_plus_errors": errs_hi}
    incl = thm_phys_check(1.2, 1.3, 1.2)
    disj = thm_phys_check(1.2, 1.1, 1.2)
    two_temp_ok = (incl["inclusion"] and incl["inclusion_margin"] > 0
                   and disj["disjoint"] and disj["below_margin"] > 0)
    ok = flat_dev < 1e-6 and conv_ok and two_temp_ok
    return CriterionResult(7, "envelopes and basins", ok,
                           {"flat_envelope_deviation": flat_dev,
                            "alpha_convergence": alpha_table,
                            "inclusion_margin": incl["inclusion_margin"],
                            "below_margin": disj["below_margin"]})


def criterion_8_reeb_chords() -> CriterionResult:
    """Closed-form chord vs 2-D Newton; a stable chord is an exact fixed point."""
    worst = 0.0
    for a in (0.2, 0.5, 1.0):
        spec = QuenchSpec(b=1.2, beta0=1.6, beta1=1.1, a=a)
        chord = reeb_chord(spec)
        p_newton, _ = chord_intersection_newton(spec)
        worst = max(worst, abs(chord.p - p_newton))
    stable_a = None
    for a in np.arange(0.2, 3.0, 0.1):
        chord = reeb_chord(QuenchSpec(b=1.2, beta0=1.6, beta1=1.1, a=float(a)))
        if chord.stable:
            stable_a = float(a)
            break
    report = chord_fixed_point_check(
        reeb_chord(QuenchSpec(b=1.2, beta0=1.6, beta1=1.1, a=stable_a)))
    ok = (worst < 1e-10 and stable_a is not None
          and report["drift_glauber_at_p"] < 1e-10
          and report["flow_max_deviation"] < 1e-8)
    return CriterionResult(8, "Reeb chords (instant relaxation)", ok,
                           {"worst_p_vs_newton": worst,
                            "first_stable_a": stable_a,
                            "fixed_point": report})


def criterion_9_toy_contact() -> CriterionResult:
    """Quartic toy model: positive pairing, shared attractor, admissibility."""
    pot = quartic_potential()
    grid = np.linspace(-1.8, 1.8, 101)
    qs = np.linspace(-5.0, 5.0, 101)
    prig = prig_lower_bound(pot, grid, qs)
    q = 0.7
    p_eq = pot.dh_inverse(q)
    h_star = pot.conjugate(q)
    gap = 0.0
    admissible = True
    for flow in ("grad", "contact"):
        t, p, z = toy_flow(pot, -1.2, q, flow, t_end=40.0)
        gap = max(gap, abs(p[-1] - p_eq), abs(z[-1] - h_star))
        admissible &= haslach_admissibility(pot, t, p, q, flow)["admissible"]
    ok = prig["positive"] and prig["c"] > 0 and gap < 1e-8 and admissible
    return CriterionResult(9, "toy contact model", ok,
                           {"prig_constant": prig["c"],
                            "attractor_gap": gap,
                            "admissible_both_flows": admissible})


def criterion_10_stirling() -> CriterionResult:
    """Error decay of the truncated Stirling log-binomial on |m| <= 0.9."""
    errs = []
    ns = (100, 200, 400)
    for n in ns:
        params = ModelParams(b=1.0, beta=1.0, N=n)
        pts = params.space.points
        mask = np.abs(pts) <= 0.9
        m = pts[mask]
        errs.append(float(np.abs(log_binomial_asymptotic(n, m)
                                 - log_binomial_exact(n, m)).max()))
    slope = float(np.polyfit(np.log(ns), np.log(errs), 1)[0])
    as_stated = -2.3 < slope < -1.7
    with_corr = -3.3 < slope < -2.7
    return CriterionResult(
        10, "Stirling consistency of the effective Hamiltonian", as_stated,
        {"errors": errs, "slope": slope},
        notes=("the Stirling series for ln C_N has no 1/N^2 term: truncating "
               "after 1/(12N) leaves an O(1/N^3) error, so the measured "
               "slope sits at -3, not inside [-2.3, -1.7]; the quoted "
               "O(1/N^2) bound is satisfied (it is just not tight)"),
        passed_with_correction=with_corr)


ALL_CRITERIA = [
    criterion_1_maas_identities,
    criterion_2_riesz,
    criterion_3_fp_relaxation,
    criterion_4_glauber_lumping,
    criterion_5_drift_correspondence,
    criterion_6_thermo_limit,
    criterion_7_envelopes_basins,
    criterion_8_reeb_chords,
    criterion_9_toy_contact,
    criterion_10_stirling,
]


def run_all(echo=print) -> list[CriterionResult]:
    """Run the whole battery, printing one status line per criterion."""
    results = []
    for fn in ALL_CRITERIA:
        res = fn()
        results.append(res)
        if echo is not None:
            echo(res.status_line())
    return results
