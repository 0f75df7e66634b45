"""Tests for the core Curie-Weiss model on M_N."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinchain.errors import DomainError
from spinchain.model import (
    Density,
    ModelParams,
    StateSpace,
    binary_neg_entropy,
    density_to_probability,
    entropy,
    f_n_on_grid,
    f_reduced,
    free_energy,
    gibbs,
    glauber_mobility,
    h_effective,
    h_effective_grid,
    log_binomial_asymptotic,
    log_binomial_exact,
    log_partition_and_fN,
    pressure,
    probability_to_density,
    psi_rescaled,
    remainder_asymptotic,
    remainder_constant_discrepancy,
    remainder_exact,
    uniform_density,
)

RNG = np.random.default_rng(20260809)


def random_density(space, rng=RNG):
    raw = rng.uniform(0.2, 1.8, space.size)
    return Density.normalized(space, raw)


# ---------------------------------------------------------------------------
# state space


def test_state_space_lattice():
    sp = StateSpace(8)
    assert sp.points[0] == -1.0 and sp.points[-1] == 1.0
    assert np.allclose(np.diff(sp.points), 2.0 / 8)
    assert sp.weight * sp.size == pytest.approx(2 * 9 / 8)


def test_density_validation():
    sp = StateSpace(4)
    with pytest.raises(DomainError):
        Density(sp, [1.0, 1.0, -0.1, 1.0, 1.0])
    with pytest.raises(DomainError):
        Density(sp, np.full(5, 1.0))  # mass 5 != 2
    d = uniform_density(sp)
    assert d.mass == pytest.approx(2.0, abs=1e-14)


def test_probability_density_roundtrip():
    # Power-of-two N: the weight 2/N is a binary scale, round trip bit-exact.
    sp = StateSpace(16)
    rho = random_density(sp)
    pi = density_to_probability(sp, rho)
    assert pi.masses.sum() == pytest.approx(1.0, abs=1e-12)
    back = probability_to_density(sp, pi)
    assert np.array_equal(back.values, rho.values)
    # General N: one rounding each way.
    sp = StateSpace(17)
    rho = random_density(sp)
    back = probability_to_density(sp, density_to_probability(sp, rho))
    np.testing.assert_allclose(back.values, rho.values, rtol=5e-16)
    assert pressure(sp, uniform_density(sp)) == pytest.approx(0.0, abs=1e-15)


# ---------------------------------------------------------------------------
# reduced free energy


def test_f_reduced_center_value():
    p = ModelParams(b=1.0, beta=1.0, q=0.0, N=8)
    assert f_reduced(p, 0.0) == pytest.approx(-math.log(2.0), abs=1e-15)


def test_f_reduced_endpoints_minus_half_b():
    for b, beta in [(1.2, 1.0), (1.0, 1.8), (2.5, 0.9)]:
        p = ModelParams(b=b, beta=beta, q=0.0, N=8)
        assert f_reduced(p, 1.0) == pytest.approx(-b / 2.0, abs=1e-14)
        assert f_reduced(p, -1.0) == pytest.approx(-b / 2.0, abs=1e-14)


def test_f_reduced_even_at_zero_field():
    p = ModelParams(b=1.3, beta=0.7, q=0.0, N=8)
    m = np.linspace(-1, 1, 41)
    np.testing.assert_allclose(f_reduced(p, m), f_reduced(p, -m), atol=1e-15)


def test_f_reduced_domain_error():
    p = ModelParams(b=1.0, beta=1.0, N=8)
    with pytest.raises(DomainError):
        f_reduced(p, 1.5)


# ---------------------------------------------------------------------------
# log-binomials and the remainder


def test_log_binomial_small_cases():
    assert log_binomial_exact(4, 0.0) == pytest.approx(math.log(6), abs=1e-13)
    for N in (1, 2, 7, 30):
        assert log_binomial_exact(N, 1.0) == pytest.approx(0.0, abs=1e-12)
        assert log_binomial_exact(N, -1.0) == pytest.approx(0.0, abs=1e-12)


def test_log_binomial_matches_comb():
    for N in (3, 10, 25, 52):
        sp = StateSpace(N)
        expected = [math.log(math.comb(N, k)) for k in range(N + 1)]
        got = log_binomial_exact(N, sp.points)
        np.testing.assert_allclose(got, expected, rtol=1e-12, atol=1e-12)


def test_log_binomial_rejects_off_lattice():
    with pytest.raises(DomainError):
        log_binomial_exact(10, 0.15)


def test_log_binomial_asymptotic_close_at_n200():
    # Stirling through 1/(12N): comfortably within the quoted O(1/N^2).
    err = abs(log_binomial_asymptotic(200, 0.5) - log_binomial_exact(200, 0.5))
    assert err < 1.0 / 200**2


def test_remainder_even_and_value():
    m = np.linspace(-0.95, 0.95, 39)
    r = remainder_asymptotic(100, m)
    np.testing.assert_allclose(r, r[::-1], atol=1e-14)
    expected = math.log(2 / 100) + 0.5 * math.log(200 * math.pi) - math.log(2) + 3 / 1200
    assert remainder_asymptotic(100, 0.0) == pytest.approx(expected, abs=1e-14)
    with pytest.raises(DomainError):
        remainder_asymptotic(100, 1.0)


def test_remainder_against_exact_log_binomial():
    # N c(m) + r_N(m) should reproduce ln(2/N) - ln C_N(m) up to a fast-decaying
    # truncation error; the decay is measured in test_drifts/test_acceptance.
    errors = []
    for N in (100, 200, 400):
        sp = StateSpace(N)
        mask = np.abs(sp.points) <= 0.9
        m = sp.points[mask]
        lhs = N * binary_neg_entropy(m) + remainder_asymptotic(N, m)
        rhs = math.log(2.0 / N) - log_binomial_exact(N, m)
        errors.append(np.abs(lhs - rhs).max())
    assert errors[0] < 100.0 / 100**2  # K/N^2 with a generous K
    # strictly improving with N
    assert errors[2] < errors[1] < errors[0]
    # and consistent with the exact remainder diagnostic
    assert np.abs(remainder_exact(400, 0.5) - remainder_asymptotic(400, 0.5)) < 1e-7


def test_remainder_constant_discrepancy_is_log_n():
    for N in (10, 100, 4096):
        assert remainder_constant_discrepancy(N) == pytest.approx(math.log(N), rel=1e-12)


# ---------------------------------------------------------------------------
# effective Hamiltonian


def test_h_effective_modes_agree_mid_lattice():
    p = ModelParams(b=1.0, beta=1.7, q=0.2, N=400)
    m = 0.3  # lattice point of M_400
    gap = abs(h_effective(p, m, "exact") - h_effective(p, m, "asymptotic"))
    assert gap < 1e-3 / p.beta


def test_h_effective_two_point_value():
    p = ModelParams(b=0.0, beta=2.0, q=0.0, N=1)
    want = math.log(2.0) / 2.0
    np.testing.assert_allclose(h_effective(p, np.array([-1.0, 1.0])), [want, want],
                               atol=1e-14)


def test_h_effective_field_derivative_is_minus_nm():
    dq = 1e-6
    for mode in ("exact", "asymptotic"):
        base = dict(b=1.2, beta=1.1, N=64, c=0.2)
        m = np.array([-0.5, 0.0, 0.25])
        hp = h_effective(ModelParams(q=+dq, **base), m, mode)
        hm = h_effective(ModelParams(q=-dq, **base), m, mode)
        np.testing.assert_allclose((hp - hm) / (2 * dq), -64 * m, rtol=1e-8, atol=1e-7)


def test_h_effective_asymptotic_rejects_endpoints():
    p = ModelParams(b=1.0, beta=1.0, N=16)
    with pytest.raises(DomainError):
        h_effective(p, 1.0, "asymptotic")


def test_exact_asymptotic_gap_decays():
    # |H_exact - H_asym| = beta^{-1} * (Stirling truncation); uniform bound K/N
    # on |m| <= 0.9 holds with huge slack because the true decay is ~N^{-3}.
    gaps = []
    for N in (100, 200, 400, 800):
        p = ModelParams(b=1.0, beta=1.3, q=0.1, N=N)
        sp = p.space
        mask = np.abs(sp.points) <= 0.9
        gaps.append(np.abs(h_effective(p, sp.points[mask], "exact")
                           - h_effective(p, sp.points[mask], "asymptotic")).max())
    gaps = np.array(gaps)
    assert np.all(gaps < 1.0 / np.array([100, 200, 400, 800]))
    slope = np.polyfit(np.log([100, 200, 400, 800]), np.log(gaps), 1)[0]
    # True truncation order: the Stirling series jumps from 1/(12N) straight
    # to 1/N^3, so the fitted slope sits near -3 (own measurement; the
    # commonly quoted window around O(1/N^2)-ish decay is not tight).
    assert -3.3 < slope < -2.7


# ---------------------------------------------------------------------------
# entropy, free energy, Gibbs


def test_entropy_uniform():
    for N in (1, 5, 64):
        sp = StateSpace(N)
        expected = -math.log(N / (2.0 * (N + 1)))
        assert entropy(sp, uniform_density(sp)) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=2, max_value=40), st.integers(0, 2**31 - 1))
def test_entropy_strictly_concave(N, seed):
    sp = StateSpace(N)
    rng = np.random.default_rng(seed)
    a = Density.normalized(sp, rng.uniform(0.05, 1.0, sp.size))
    b = Density.normalized(sp, rng.uniform(0.05, 1.0, sp.size))
    mid = Density(sp, 0.5 * a.values + 0.5 * b.values)
    gap = entropy(sp, mid) - 0.5 * (entropy(sp, a) + entropy(sp, b))
    assert gap >= -1e-12
    if np.abs(a.values - b.values).max() > 1e-6:
        assert gap > 0.0


def test_psi_linear_in_field():
    p0 = ModelParams(b=1.1, beta=1.4, q=0.0, N=32)
    rho = random_density(p0.space)
    for q in (-0.7, 0.3, 1.9):
        pq = ModelParams(b=1.1, beta=1.4, q=q, N=32)
        lhs = psi_rescaled(pq, rho) - psi_rescaled(p0, rho)
        assert lhs == pytest.approx(q * pressure(p0.space, rho), abs=1e-12)


def test_gibbs_maximizes_psi_and_equals_fn():
    p = ModelParams(b=1.2, beta=1.2, q=0.3, N=48)
    rho_g = gibbs(p)
    psi_g = psi_rescaled(p, rho_g)
    _, fn = log_partition_and_fN(p)
    assert psi_g == pytest.approx(fn, abs=1e-12)
    rng = np.random.default_rng(7)
    for _ in range(100):
        rho = Density.normalized(p.space, rng.uniform(0.01, 1.0, p.space.size))
        assert psi_rescaled(p, rho) <= psi_g + 1e-12


def test_gibbs_symmetry_at_zero_field():
    p = ModelParams(b=1.2, beta=1.2, q=0.0, N=40)
    v = gibbs(p).values
    np.testing.assert_allclose(v, v[::-1], rtol=1e-14, atol=0)


def test_pressure_basic():
    sp = StateSpace(24)
    assert pressure(sp, uniform_density(sp)) == pytest.approx(0.0, abs=1e-14)
    # concentrated near a lattice point
    j = 17
    raw = np.full(sp.size, 1e-9)
    raw[j] = 1.0
    rho = Density.normalized(sp, raw)
    assert abs(pressure(sp, rho) - sp.points[j]) < 1e-6
    p = ModelParams(b=1.0, beta=0.5, q=0.0, N=24)  # b*beta < 1
    assert pressure(sp, gibbs(p)) == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# partition function


def brute_force_log_z(params):
    """Sum e^{-beta h} over all 2^N spin configurations (oracle, N <= 12)."""
    N = params.N
    total = 0.0
    for k in range(N + 1):
        m = -1.0 + 2.0 * k / N
        e = -N * (params.q * m + params.b * m * m / 2.0)
        total += math.comb(N, k) * math.exp(-params.beta * e)
    return math.log(total)


def test_partition_matches_configuration_space():
    for b, beta, q, N in [(0.0, 1.3, 0.4, 9), (1.2, 1.2, 0.1, 12), (0.7, 2.0, -0.3, 8)]:
        p = ModelParams(b=b, beta=beta, q=q, N=N)
        lnz, fn = log_partition_and_fN(p)
        assert lnz == pytest.approx(brute_force_log_z(p), rel=1e-12)
        if b == 0.0:
            assert fn == pytest.approx(math.log(2 * math.cosh(beta * q)) / beta,
                                       rel=1e-12)


def test_fn_even_and_convex_in_field():
    p = ModelParams(b=1.2, beta=1.2, N=64)
    q = np.linspace(-2, 2, 101)
    fn = f_n_on_grid(p, q)
    np.testing.assert_allclose(fn, fn[::-1], atol=1e-12)
    second = fn[2:] - 2 * fn[1:-1] + fn[:-2]
    assert second.min() >= -1e-10


def test_fn_derivative_equals_gibbs_pressure():
    p = ModelParams(b=1.2, beta=1.2, N=64)
    for q in (-0.4, 0.05, 0.8):
        dq = 1e-5
        fp = log_partition_and_fN(ModelParams(1.2, 1.2, q + dq, 64))[1]
        fm = log_partition_and_fN(ModelParams(1.2, 1.2, q - dq, 64))[1]
        slope = (fp - fm) / (2 * dq)
        pr = pressure(p.space, gibbs(ModelParams(1.2, 1.2, q, 64)))
        assert slope == pytest.approx(pr, abs=1e-6)


def test_free_energy_of_gibbs_is_min(seed=3):
    p = ModelParams(b=0.9, beta=1.5, q=0.2, N=20)
    rho_g = gibbs(p)
    base = free_energy(p, rho_g)
    rng = np.random.default_rng(seed)
    for _ in range(50):
        rho = Density.normalized(p.space, rng.uniform(0.05, 1.0, p.space.size))
        assert free_energy(p, rho) >= base - 1e-12


def test_glauber_mobility_range():
    p = ModelParams(b=1.0, beta=1.8, q=-0.08, N=200, c=0.2)
    u = glauber_mobility(p, p.space.points)
    assert np.all(u > 0.0) and np.all(u < 0.5)
    assert np.all(u < 2 * p.c)
