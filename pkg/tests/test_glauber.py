"""Tests for the lumped Glauber dynamics and the 2^N lumping check."""

import math

import numpy as np
import pytest

from spinchain.errors import ConfigurationError, SizeError
from spinchain.glauber import (
    build_generator,
    detailed_balance_report,
    flip_rate,
    full_chain_lump_check,
    glauber_evolve,
    lumped_gibbs_vector,
    pi_minus,
    pi_plus,
    propagate_exact,
)
from spinchain.model import (
    ModelParams,
    ProbabilityVector,
    glauber_mobility,
    theta,
)
from spinchain.wasserstein import build_structure


def test_rates_vanish_at_boundaries():
    p = ModelParams(b=1.2, beta=1.3, q=0.2, N=10, c=0.2)
    assert pi_minus(p, -1.0) == 0.0
    assert pi_plus(p, 1.0) == 0.0


def test_rates_symmetric_at_zero_field():
    p = ModelParams(b=1.1, beta=1.5, q=0.0, N=16, c=0.15)
    assert theta(p, 0.0) == 0.0
    # and by oddness of tanh the central up/down factors agree
    assert pi_plus(p, 0.0) == pytest.approx(pi_minus(p, 0.0), rel=1e-14)


def test_detailed_balance_midpoint_exact():
    p = ModelParams(b=1.0, beta=1.8, q=-0.08, N=16, c=0.2)
    rep = detailed_balance_report(p, convention="midpoint")
    assert rep["max_relative_defect"] < 1e-10


def test_detailed_balance_paper_defect_shrinks():
    defects = []
    for N in (16, 32, 64, 128):
        p = ModelParams(b=1.0, beta=1.8, q=-0.08, N=N, c=0.2)
        defects.append(detailed_balance_report(p, "paper")["max_relative_defect"])
    assert defects[0] > 1e-3  # genuinely nonzero at the full-step shift
    assert defects[0] > defects[1] > defects[2] > defects[3]


# ---------------------------------------------------------------------------
# generator assembly


def test_p_matrix_left_stochastic():
    p = ModelParams(b=1.0, beta=1.8, q=-0.08, N=24, c=0.2)
    gen = build_generator(p)
    P = gen.p_matrix()
    np.testing.assert_allclose(P.sum(axis=0), 1.0, atol=1e-14)
    assert np.all(P >= 0.0) and np.all(P <= 1.0)
    G = gen.generator_matrix()
    np.testing.assert_allclose(G.sum(axis=0), 0.0, atol=1e-12)


def test_generator_reproduces_master_stencil():
    p = ModelParams(b=1.2, beta=1.2, q=0.1, N=12, c=0.2)
    gen = build_generator(p)
    pts = p.space.points
    N = p.N
    rng = np.random.default_rng(0)
    pi = rng.uniform(0.1, 1.0, N + 1)
    got = gen.apply(pi)
    up = np.array(pi_plus(p, pts))
    dn = np.array(pi_minus(p, pts))
    expect = np.empty(N + 1)
    # interior rows
    for i in range(1, N):
        expect[i] = N * (up[i - 1] * pi[i - 1] - (up[i] + dn[i]) * pi[i]
                         + dn[i + 1] * pi[i + 1])
    # boundary rows: the outward rates vanish through their prefactors
    expect[0] = N * (-up[0] * pi[0] + dn[1] * pi[1])
    expect[N] = N * (-dn[N] * pi[N] + up[N - 1] * pi[N - 1])
    np.testing.assert_allclose(got, expect, rtol=1e-13, atol=1e-13)
    # and the dense split N(K-1) + NW agrees with G row by row
    K = gen.structure.kernel_matrix()
    W = gen.w_matrix()
    G2 = N * (K - np.eye(N + 1)) + N * W
    np.testing.assert_allclose(gen.generator_matrix(), G2, atol=1e-13)


def test_interior_rate_relations():
    # 0.5(Pi_-(m_{i+1}) + Pi_+(m_{i-1})) = u_i + c d  and
    # 0.5(Pi_-(m_{i+1}) - Pi_+(m_{i-1})) = a_i - c theta_i d,  d = 2/N
    p = ModelParams(b=1.0, beta=1.8, q=-0.08, N=32, c=0.2)
    pts = p.space.points
    d = 2.0 / p.N
    inner = slice(1, p.N)
    dn_right = np.array(pi_minus(p, pts[2:]))
    up_left = np.array(pi_plus(p, pts[:-2]))
    u_i = glauber_mobility(p, pts[inner])
    th_i = theta(p, pts[inner])
    a_i = p.c * (pts[inner] - th_i)
    np.testing.assert_allclose(0.5 * (dn_right + up_left), u_i + p.c * d,
                               atol=1e-13)
    np.testing.assert_allclose(0.5 * (dn_right - up_left), a_i - p.c * th_i * d,
                               atol=1e-13)


def test_w_matrix_subdiagonal_identity():
    # w_{i,i-1} = -a_i + c d (theta_i + 1)
    p = ModelParams(b=1.2, beta=1.2, q=0.1, N=20, c=0.2)
    gen = build_generator(p)
    W = gen.w_matrix()
    pts = p.space.points
    d = 2.0 / p.N
    for i in range(1, p.N + 1):
        a_i = p.c * (pts[i] - theta(p, pts[i]))
        expect = -a_i + p.c * d * (theta(p, pts[i]) + 1.0)
        assert W[i, i - 1] == pytest.approx(expect, abs=1e-13)


def test_structure_mismatch_rejected():
    p = ModelParams(b=1.0, beta=1.0, q=0.0, N=8, c=0.2)
    s = build_structure(p, u=lambda m: np.full_like(m, 0.25))
    with pytest.raises(ConfigurationError):
        build_generator(p, structure=s)


def test_max_admissible_c():
    p = ModelParams(b=1.0, beta=1.0, q=0.0, N=8, c=0.6)
    with pytest.raises(ConfigurationError) as err:
        build_generator(p)
    assert "maximal admissible c" in str(err.value)
    p_ok = ModelParams(b=1.0, beta=1.0, q=0.0, N=8, c=0.2)
    gen = build_generator(p_ok)
    assert gen.max_admissible_c() > 0.2


def test_stationarity():
    p = ModelParams(b=1.0, beta=1.8, q=-0.08, N=24, c=0.2)
    for convention in ("paper", "midpoint"):
        gen = build_generator(p, convention=convention)
        pi = gen.stationary_vector()
        G = gen.generator_matrix()
        assert np.abs(G @ pi.masses).max() < 1e-10 * np.abs(G).max()
        # product-formula oracle
        logw = gen.stationary_log_weights()
        w = np.exp(logw - logw.max())
        np.testing.assert_allclose(pi.masses, w / w.sum(), rtol=1e-9)
    # midpoint stationary vector IS the lumped Gibbs vector
    gen = build_generator(p, convention="midpoint")
    np.testing.assert_allclose(gen.stationary_vector().masses,
                               lumped_gibbs_vector(p).masses, rtol=1e-10,
                               atol=1e-15)


# ---------------------------------------------------------------------------
# master-equation integration


def test_evolution_preserves_stationary():
    p = ModelParams(b=1.0, beta=1.8, q=-0.08, N=32, c=0.2)
    gen = build_generator(p)
    pi0 = gen.stationary_vector()
    res = glauber_evolve(gen, pi0, t_end=20.0)
    assert np.abs(res.final_probability().masses - pi0.masses).sum() < 1e-8


def test_evolution_probability_conservation_and_positivity():
    p = ModelParams(b=1.2, beta=1.2, q=0.1, N=40, c=0.2)
    gen = build_generator(p)
    start = np.zeros(41)
    start[3] = 1.0
    res = glauber_evolve(gen, ProbabilityVector(p.space, start), t_end=30.0)
    sums = res.probabilities.sum(axis=1)
    assert np.abs(sums - 1.0).max() < 1e-10
    assert res.probabilities.min() >= -1e-12
    assert res.clamp_events == 0


def test_evolution_converges_to_stationary_n64():
    # Metastable start near m = +1: the well-exit time is ~e^{beta N dF}
    # (~1e5 here), so the long horizon runs through the exact linear
    # propagator; the RK4 integrator is cross-checked against it on a
    # short window first.
    p = ModelParams(b=1.0, beta=1.8, q=-0.08, N=64, c=0.2)
    gen = build_generator(p)
    start = np.zeros(65)
    start[-2] = 1.0
    pi0 = ProbabilityVector(p.space, start)
    short = glauber_evolve(gen, pi0, t_end=25.0)
    oracle = propagate_exact(gen, pi0, 25.0)
    assert np.abs(short.final_probability().masses - oracle.masses).sum() < 1e-8
    target = gen.stationary_vector().masses
    late = propagate_exact(gen, pi0, 3e5)
    assert np.abs(late.masses - target).sum() < 1e-6


def test_midpoint_evolution_reaches_lumped_gibbs():
    p = ModelParams(b=1.0, beta=1.8, q=-0.08, N=48, c=0.2)
    gen = build_generator(p, convention="midpoint")
    start = np.full(49, 1.0 / 49)
    late = propagate_exact(gen, ProbabilityVector(p.space, start), 3e5)
    assert np.abs(late.masses - lumped_gibbs_vector(p).masses).sum() < 1e-6


def test_evolution_converges_fast_subcritical():
    # without a free-energy barrier the RK4 path itself reaches equilibrium
    p = ModelParams(b=1.0, beta=0.5, q=0.1, N=64, c=0.2)
    gen = build_generator(p)
    start = np.zeros(65)
    start[10] = 1.0
    res = glauber_evolve(gen, ProbabilityVector(p.space, start), t_end=400.0,
                         stop_l1=1e-7)
    target = gen.stationary_vector().masses
    assert np.abs(res.final_probability().masses - target).sum() < 1e-6


# ---------------------------------------------------------------------------
# lumping check


def test_full_chain_lump_n2_by_hand():
    p = ModelParams(b=1.0, beta=1.5, q=0.2, N=2, c=0.2)
    rep = full_chain_lump_check(p)
    assert rep["max_discrepancy"] < 1e-13
    # the single all-down configuration: both spins flip up independently
    hand = 2 * flip_rate(p, -1.0, +1, "paper")
    assert hand == pytest.approx(2 * float(pi_plus(p, -1.0)), rel=1e-14)


@pytest.mark.parametrize("convention", ["paper", "midpoint"])
def test_full_chain_lump_small_sizes(convention):
    for N in range(2, 11):
        for b, beta, q in [(1.2, 1.2, 0.1), (1.0, 1.8, -0.08), (0.8, 0.7, 0.3)]:
            p = ModelParams(b=b, beta=beta, q=q, N=N, c=0.2)
            rep = full_chain_lump_check(p, convention)
            assert rep["max_discrepancy"] < 1e-12, (N, b, beta, q, convention)


def test_full_chain_size_cap():
    with pytest.raises(SizeError):
        full_chain_lump_check(ModelParams(b=1.0, beta=1.0, N=15, c=0.2))


def test_slot_count_combinatorics():
    # at level m exactly N(1+m)/2 up-flips feed the downward rate
    p = ModelParams(b=1.0, beta=1.2, q=0.05, N=8, c=0.2)
    for n_up in range(9):
        m = (2 * n_up - 8) / 8
        assert n_up == round(8 * (1 + m) / 2)
