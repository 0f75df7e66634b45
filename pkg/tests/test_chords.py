"""Tests for the quench chord solver and the toy contact system."""

import math

import numpy as np
import pytest

from spinchain.chords import (
    ChordResult,
    QuenchSpec,
    chord_fixed_point_check,
    chord_intersection_newton,
    haslach_admissibility,
    prig_lower_bound,
    quadratic_potential,
    quartic_potential,
    reeb_chord,
    toy_fields,
    toy_flow,
)
from spinchain.drifts import drift_glauber
from spinchain.errors import DomainError
from spinchain.model import ModelParams


def spec_default(a=0.5):
    return QuenchSpec(b=1.2, beta0=1.6, beta1=1.1, a=a)


def test_spec_validation_and_swap():
    with pytest.raises(DomainError):
        QuenchSpec(b=1.0, beta0=0.9, beta1=1.5, a=0.5)
    with pytest.raises(DomainError):
        QuenchSpec(b=1.2, beta0=1.5, beta1=1.5, a=0.5)
    with pytest.raises(DomainError):
        QuenchSpec(b=1.2, beta0=1.5, beta1=1.2, a=-0.1)
    swapped = QuenchSpec(b=1.2, beta0=1.1, beta1=1.6, a=0.5)
    assert swapped.swapped and swapped.t1 > swapped.t0


def test_chord_closed_form():
    spec = spec_default()
    chord = reeb_chord(spec)
    assert chord.p == pytest.approx(math.tanh(spec.a / (spec.t1 - spec.t0)),
                                    abs=1e-14)
    # the point satisfies both mean-field relations
    r0 = spec.t0 * math.atanh(chord.p) - (chord.q_star + spec.b * chord.p)
    r1 = spec.t1 * math.atanh(chord.p) - (spec.a + chord.q_star
                                          + spec.b * chord.p)
    assert abs(r0) < 1e-12 and abs(r1) < 1e-12


def test_chord_matches_newton_oracle():
    for a in (0.2, 0.5, 1.0):
        spec = spec_default(a)
        chord = reeb_chord(spec)
        p_newton, q_newton = chord_intersection_newton(spec)
        assert chord.p == pytest.approx(p_newton, abs=1e-10)
        assert chord.q_star == pytest.approx(q_newton, abs=1e-10)


def test_chord_length_closed_form():
    spec = spec_default()
    chord = reeb_chord(spec)
    expect = 0.5 * abs(spec.t1 - spec.t0) * math.log(4.0 / (1 - chord.p**2))
    assert chord.length == pytest.approx(expect, rel=1e-12)


def test_large_field_gives_stable_chord():
    spec = spec_default(a=10.0 * (1 / 1.1 - 1 / 1.6))
    chord = reeb_chord(spec)
    assert chord.p > 0.999
    assert chord.stable
    # threshold invariants
    assert 0.0 < chord.x1 < 1.0
    assert spec.b * chord.x1 == pytest.approx(spec.t1 * math.atanh(chord.x1),
                                              abs=1e-12)


def test_small_field_gives_unstable_chord():
    spec = spec_default(a=0.05)
    chord = reeb_chord(spec)
    assert not chord.stable
    report = chord_fixed_point_check(chord)
    assert not report["instant"]


def test_fixed_point_check_stable():
    spec = spec_default(a=2.0 * (1 / 1.1 - 1 / 1.6))
    chord = reeb_chord(spec)
    assert chord.stable
    report = chord_fixed_point_check(chord)
    assert report["drift_glauber_at_p"] < 1e-10
    assert report["drift_fp_at_p"] < 1e-10
    assert report["flow_max_deviation"] < 1e-8
    assert report["instant"]
    # off-chord fields leave a genuinely nonzero drift at the same p
    params_off = ModelParams(b=spec.b, beta=spec.beta1,
                             q=chord.q_star + spec.a + 0.1, N=2, c=0.2)
    assert abs(drift_glauber(params_off, chord.p)) > 1e-4


def test_literal_unit_coupling_variant():
    spec = spec_default()
    chord_b = reeb_chord(spec)
    chord_1 = reeb_chord(spec, literal_unit_coupling=True)
    assert chord_1.p == chord_b.p  # the p formula is coupling-independent
    assert chord_1.q_star != chord_b.q_star


# ---------------------------------------------------------------------------
# toy contact model


def test_quadratic_fields_coincide():
    pot = quadratic_potential()
    for p, q in [(-1.0, 0.3), (0.4, -0.2), (1.5, 1.0)]:
        v, w = toy_fields(pot, p, q)
        assert v == pytest.approx(q - p, abs=1e-12)
        assert w == pytest.approx(q - p, abs=1e-12)


def test_field_domain_error():
    pot = quartic_potential()
    with pytest.raises(DomainError):
        toy_fields(pot, 0.0, 100.0)


def test_prig_bound_quartic():
    pot = quartic_potential()
    grid = np.linspace(-1.8, 1.8, 101)
    qs = np.linspace(-5.0, 5.0, 21)
    report = prig_lower_bound(pot, grid, qs)
    assert report["positive"]
    assert report["c"] > 0.9  # h'' = 1 + 3p^2 >= 1 forces c >= ~1


def test_both_flows_converge_to_conjugate_point():
    pot = quartic_potential()
    q = 0.7
    p_eq = pot.dh_inverse(q)
    h_star = pot.conjugate(q)
    for flow in ("grad", "contact"):
        t, p, z = toy_flow(pot, -1.2, q, flow, t_end=40.0)
        assert abs(p[-1] - p_eq) < 1e-8
        assert abs(z[-1] - h_star) < 1e-8
    # conjugate-derivative identity at the attractor
    dq = 1e-6
    slope = (pot.conjugate(q + dq) - pot.conjugate(q - dq)) / (2 * dq)
    assert slope == pytest.approx(p_eq, abs=1e-8)


def test_haslach_admissibility_both_flows():
    pot = quartic_potential()
    q = 0.7
    for flow in ("grad", "contact"):
        t, p, z = toy_flow(pot, -1.2, q, flow, t_end=30.0)
        report = haslach_admissibility(pot, t, p, q, flow)
        assert report["admissible"], report
        assert report["samples_checked"] > 100


def test_grad_flow_z_on_energy_surface():
    pot = quartic_potential()
    q = 0.7
    t, p, z = toy_flow(pot, 1.5, q, "grad")
    np.testing.assert_allclose(z, q * p - (p**2 / 2 + p**4 / 4), atol=1e-12)
