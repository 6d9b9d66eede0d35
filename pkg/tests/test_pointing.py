import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from fsoirs import pointing
from fsoirs.pointing import (Angles2D, Angles3D, SwayModel, gml_cdf, gml_pdf, law_2d, law_3d,
                             law_irs_only, mean_gml, mirror_params, misalignment_2d,
                             misalignment_3d, misalignment_cov_3d, misalignment_var_2d, pdf_mass,
                             sensitivity_coeffs_2d, special_case_variances)

PI = math.pi
TABLE1_2D = Angles2D(PI / 6, PI / 5, PI / 6)
TABLE1_3D = Angles3D(PI / 6, PI / 5, 7 * PI / 8, PI / 6)
sigma = st.floats(0.0, 0.1)


def test_misalignment_2d_zero_angles():
    u = misalignment_2d(0.3, 0.7, 0.2, Angles2D(0.0, 0.0, 0.0))
    assert u == pytest.approx(0.3 - 0.2, abs=1e-16)


@pytest.mark.parametrize("theta", [0.1, PI / 6, 1.2])
def test_misalignment_2d_mirror_irs_coefficient(theta):
    # A specular mirror shifted along its normal moves the beam by 2 sin(theta)
    # across the reflected beam (the same factor as in the mirror Hoyt law).
    u = misalignment_2d(0.0, 1.0, 0.0, Angles2D(theta, theta, 0.0))
    assert u == pytest.approx(-2 * math.sin(theta), rel=1e-14)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_misalignment_2d_linear(a, b, c, s):
    ang = TABLE1_2D
    lhs = misalignment_2d(s * a, s * b, s * c, ang)
    rhs = s * misalignment_2d(a, b, c, ang)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_var_2d_special_cases():
    assert misalignment_var_2d(SwayModel(0, 0, 0.3), Angles2D(0.2, 0.5, 0.4)) == pytest.approx(
        0.09 / math.cos(0.4) ** 2, rel=1e-14)
    assert misalignment_var_2d(SwayModel(), TABLE1_2D) == 0.0


def test_var_2d_against_sampled_sd():
    rng = np.random.default_rng(7)
    s = 0.01
    eps = rng.normal(0.0, s, size=(3, 1_000_000))
    u = misalignment_2d(*eps, TABLE1_2D)
    sd = math.sqrt(misalignment_var_2d(SwayModel(s, s, s), TABLE1_2D))
    assert np.std(u) == pytest.approx(sd, rel=0.01)


def test_sensitivity_2d_at_table_angles():
    np.testing.assert_allclose(sensitivity_coeffs_2d(TABLE1_2D), [1.08, 1.22, 1.15], atol=0.01)


def test_misalignment_3d_zero_and_special_case():
    assert np.all(misalignment_3d(np.zeros(2), 0.0, np.zeros(2), TABLE1_3D) == 0.0)
    ti, tr = 0.4, 0.7
    ang = Angles3D(ti, tr, PI, 0.0)
    es, er, el = np.array([0.3, -0.2]), 0.15, np.array([0.05, 0.4])
    u = misalignment_3d(es, er, el, ang)
    # The general map flips the sign of the Tx terms relative to the usual
    # component form; the law is unchanged because the sway is zero-mean.
    u1 = -math.cos(tr) / math.cos(ti) * es[0] - math.sin(ti + tr) / math.cos(ti) * er - el[0]
    u2 = -es[1] - el[1]
    np.testing.assert_allclose(u, [u1, u2], atol=1e-15)


def test_misalignment_3d_mirror_coefficients():
    th = 0.5
    m_s, m_r, m_l = pointing.misalignment_maps_3d(Angles3D(th, th, PI, 0.0))
    assert abs(m_s[0, 0]) == pytest.approx(1.0, rel=1e-14)
    assert m_r[0] == pytest.approx(-2 * math.sin(th), rel=1e-14)
    np.testing.assert_allclose(m_l, -np.eye(2), atol=1e-16)


def test_cov_3d_lens_only():
    sig, q, omega = misalignment_cov_3d(SwayModel(0, 0, 0.02), Angles3D(0.3, 0.6, 1.0, 0.0))
    np.testing.assert_allclose(sig, 4e-4 * np.eye(2), rtol=1e-14)
    assert q == 1.0 and omega == pytest.approx(8e-4, rel=1e-14)


def test_cov_3d_trace_is_omega():
    sig, q, omega = misalignment_cov_3d(SwayModel(0.01, 0.02, 0.015), TABLE1_3D)
    assert omega == pytest.approx(np.trace(sig), rel=1e-14)
    l = np.linalg.eigvalsh(sig)
    assert q == pytest.approx(math.sqrt(l[0] / l[1]), rel=1e-12)


@settings(max_examples=50)
@given(sigma, sigma, sigma, st.floats(0.01, 100.0))
def test_q_scale_invariant(ss, sr, sl, c):
    sway = SwayModel(ss, sr, sl)
    if max(ss, sr, sl) < 1e-6:
        return
    _, q1, o1 = misalignment_cov_3d(sway, TABLE1_3D)
    _, q2, o2 = misalignment_cov_3d(sway.scaled(c), TABLE1_3D)
    # An eigenvalue ratio is only determined to about sqrt(eps) absolute.
    assert q2 == pytest.approx(q1, rel=1e-9, abs=1e-7)
    assert o2 == pytest.approx(c * c * o1, rel=1e-12)


def test_mirror_params_special_values():
    assert mirror_params(SwayModel(0.01, 0.0, 0.02), 0.7)[0] == 1.0
    q, omega = mirror_params(SwayModel(0.01, 0.03, 0.02), 0.0)
    assert q == 1.0 and omega == pytest.approx(2e-4 + 8e-4, rel=1e-14)


@settings(max_examples=50)
@given(sigma, sigma, sigma, st.floats(0.0, 1.4))
def test_mirror_params_match_general_path(ss, sr, sl, ti):
    sway = SwayModel(ss, sr, sl)
    if max(ss, sr, sl) < 1e-6:
        return
    q, omega = mirror_params(sway, ti)
    _, q_g, omega_g = misalignment_cov_3d(sway, Angles3D(ti, ti, PI, 0.0))
    assert q == pytest.approx(q_g, rel=1e-9, abs=1e-7)
    assert omega == pytest.approx(omega_g, rel=1e-12)


def test_special_case_variances_match_general_path():
    sway = SwayModel(0.01, 0.02, 0.015)
    s1, s2 = special_case_variances(sway, 0.4, 0.7)
    sig, _, _ = misalignment_cov_3d(sway, Angles3D(0.4, 0.7, PI, 0.0))
    np.testing.assert_allclose(np.diag(sig), [s1, s2], rtol=1e-12)
    assert abs(sig[0, 1]) <= 1e-12 * s1


LAWS = [
    law_2d(0.4, 1.46, 0.083, 0.02 ** 2),
    law_2d(0.8, 1.2, 0.05, 0.05 ** 2),
    law_3d(0.35, 0.006, 1.0, 2e-3),
    law_3d(0.35, 0.006, 0.6, 2e-3),
    law_3d(0.35, 0.006, 0.05, 5e-4),
    law_3d(0.7, 0.002, 0.3, 8e-3),
    law_3d(0.5, 0.004, 0.0, 1e-3),
    law_irs_only(0.5, 0.006, 0.4, 0.7, 0.03),
]


@pytest.mark.parametrize("law", LAWS, ids=lambda l: f"{l.variant}-q{l.q:.2f}")
def test_pdf_mass_is_one(law):
    assert pdf_mass(law) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("law", LAWS, ids=lambda l: f"{l.variant}-q{l.q:.2f}")
def test_pdf_nonnegative_and_supported(law):
    h = np.linspace(-0.1, 1.2, 2001) * law.A0
    f = gml_pdf(h, law)
    assert np.all(f >= 0)
    assert np.all(f[(h <= 0) | (h > law.A0)] == 0)


def test_hoyt_q_one_is_power_law():
    law = law_3d(0.4, 0.006, 1.0, 2e-3)
    h = np.linspace(0.01, 0.39, 50)
    np.testing.assert_allclose(gml_pdf(h, law),
                               law.varpi / law.A0 * (h / law.A0) ** (law.varpi - 1), rtol=1e-12)


def test_irs_only_is_2d_family():
    one = law_irs_only(0.5, 0.006, 0.4, 0.7, 0.03)
    two = pointing.GmlLaw("2D", A0=0.5, t=0.006, varpi=one.rho)
    h = np.linspace(0.01, 0.49, 40)
    np.testing.assert_allclose(gml_pdf(h, one), gml_pdf(h, two), rtol=1e-15)


def test_law_3d_edge_cases():
    assert law_3d(0.5, 0.004, 0.0, 1e-3).variant == "one-sided"
    with pytest.raises(ValueError):
        law_3d(0.5, 0.004, 0.5, 0.0)


@pytest.mark.parametrize("law", LAWS[:2] + LAWS[3:5], ids=lambda l: f"{l.variant}-q{l.q:.2f}")
def test_cdf_agrees_with_pdf(law):
    for frac in (0.1, 0.5, 0.9):
        h = frac * law.A0
        s0 = math.log(law.A0 / h)
        tail, _ = integrate.quad(
            lambda s: float(gml_pdf(law.A0 * math.exp(-s), law)) * law.A0 * math.exp(-s),
            s0, np.inf, limit=200)
        assert gml_cdf(h, law) == pytest.approx(tail, abs=1e-8)


def test_mean_closed_form_2d():
    law = LAWS[0]
    num, _ = integrate.quad(lambda s: float(gml_pdf(law.A0 * math.exp(-s), law))
                            * (law.A0 * math.exp(-s)) ** 2, 0, np.inf, limit=200)
    assert mean_gml(law) == pytest.approx(num, rel=1e-7)


def test_sway_validation():
    with pytest.raises(ValueError):
        SwayModel(-0.1, 0.0, 0.0)
