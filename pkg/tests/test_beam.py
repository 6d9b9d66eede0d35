import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from fsoirs import beam
from fsoirs.beam import BeamSpec, ObliquePlane
from fsoirs.geometry import AnglePair, rot

LAM = 1550e-9
W0 = 1e-3
ZR = math.pi * W0 ** 2 / LAM


def test_width_examples():
    assert beam.width(0.0, W0, LAM) == W0
    assert beam.width(ZR, W0, LAM) == pytest.approx(math.sqrt(2) * W0, rel=1e-15)
    assert ZR == pytest.approx(2.027, abs=1e-3)
    assert beam.width(200.0, W0, LAM) == pytest.approx(0.0987, abs=1e-4)


@given(st.floats(0.0, 5e4), st.floats(0.0, 5e4))
def test_width_even_and_monotone(z1, z2):
    lo, hi = sorted((z1, z2))
    assert beam.width(-hi, W0, LAM) == beam.width(hi, W0, LAM)
    assert beam.width(lo, W0, LAM) <= beam.width(hi, W0, LAM)


def test_curvature():
    assert beam.curvature(ZR, W0, LAM) == pytest.approx(2 * ZR, rel=1e-14)
    assert beam.curvature(200.0, W0, LAM) == pytest.approx(200.0, abs=0.05)
    assert beam.curvature(1e9, W0, LAM) / 1e9 == pytest.approx(1.0, rel=1e-12)
    assert math.isinf(beam.curvature(0.0, W0, LAM))
    assert beam.inv_curvature(0.0, W0, LAM) == 0.0


def test_gouy():
    assert beam.gouy(0.0, W0, LAM) == 0.0
    assert beam.gouy(1e12, W0, LAM, n=3) == pytest.approx(math.pi / 2, rel=1e-9)
    assert beam.gouy(ZR, W0, LAM, n=2) == pytest.approx(math.pi / 8, rel=1e-15)


def test_gauss_phase_terms():
    spec = BeamSpec(LAM, W0)
    z, a = 200.0, 0.01
    k = 2 * math.pi / LAM
    r = z * (1 + (ZR / z) ** 2)
    expect = -k * z - k * a * a / (2 * r) + math.atan(z / ZR)
    assert beam.gauss_phase(a, z, spec) == pytest.approx(expect, rel=1e-14)
    assert beam.gauss_phase(a, z, spec) == beam.gauss_phase(-a, z, spec)
    assert beam.gauss_phase(0.0, z, spec) == pytest.approx(-k * z + beam.gouy(z, W0, LAM), rel=1e-15)


@pytest.mark.parametrize("a", [0.002, 0.01, 0.05])
@pytest.mark.parametrize("z", [1.0, 10.0])
def test_gauss_phase_gradient(a, z):
    # The phase is quadratic in a, so a wide central difference is exact up
    # to round-off; short ranges keep the k z term small enough for that.
    spec = BeamSpec(LAM, W0)
    analytic = -spec.k * a * beam.inv_curvature(z, W0, LAM)
    h = 1e-4
    fd = (beam.gauss_phase(a + h, z, spec) - beam.gauss_phase(a - h, z, spec)) / (2 * h)
    assert fd == pytest.approx(analytic, rel=1e-6)


def test_astig_phase_degenerate_and_covariant():
    z = 300.0
    circ = BeamSpec(LAM, W0, w02=W0, phi_rot=0.9)
    pts = np.random.default_rng(1).normal(scale=0.02, size=(50, 2))
    r = np.linalg.norm(pts, axis=1)
    np.testing.assert_allclose(beam.astig_phase(pts, z, circ),
                               beam.gauss_phase(r, z, BeamSpec(LAM, W0)), rtol=1e-14)
    assert beam.astig_phase(np.zeros(2), z, circ) == pytest.approx(
        -circ.k * z + beam.gouy(z, W0, LAM), rel=1e-15)
    # Rotating the beam and the evaluation point together changes nothing.
    ast = BeamSpec(LAM, 1e-3, w02=2e-3, phi_rot=0.0)
    phi = 0.6
    rotated = replace(ast, phi_rot=phi)
    back = pts @ rot(-phi).T
    np.testing.assert_allclose(beam.astig_phase(back, z, rotated), beam.astig_phase(pts, z, ast),
                               rtol=1e-14)


@pytest.mark.parametrize("z", [1.0, 200.0, 1000.0])
def test_intensity_normalized_2d(z):
    spec = BeamSpec(LAM, W0, n=2)
    w = beam.width(z, W0, LAM)
    total, _ = integrate.quad(lambda a: beam.intensity_orth(a, z, spec), -12 * w, 12 * w,
                              epsabs=0, epsrel=1e-12, limit=200)
    assert total == pytest.approx(1.0, abs=1e-6)
    assert beam.intensity_orth(0.0, z, spec) == pytest.approx(math.sqrt(2 / math.pi) / w)


@pytest.mark.parametrize("z", [1.0, 200.0, 1000.0])
def test_intensity_normalized_3d(z):
    spec = BeamSpec(LAM, W0, w02=1.7e-3, phi_rot=0.4)
    w = max(beam.width(z, 1.7e-3, LAM), beam.width(z, W0, LAM))
    f = lambda y, x: beam.intensity_orth(np.array([x, y]), z, spec)
    total, _ = integrate.dblquad(f, -10 * w, 10 * w, -10 * w, 10 * w, epsabs=0, epsrel=1e-10)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_astigmatic_degenerates_to_circular():
    z = 250.0
    pts = np.random.default_rng(3).normal(scale=0.05, size=(40, 2))
    a = beam.intensity_orth(pts, z, BeamSpec(LAM, W0, w02=W0, phi_rot=1.1))
    b = beam.intensity_orth(pts, z, BeamSpec(LAM, W0))
    np.testing.assert_allclose(a, b, rtol=1e-14)
    assert beam.intensity_orth(np.zeros(2), z, BeamSpec(LAM, W0)) == pytest.approx(
        2 / (math.pi * beam.width(z, W0, LAM) ** 2))


def test_oblique_identity_at_normal_incidence():
    spec = BeamSpec(LAM, W0)
    dens = lambda a: beam.intensity_orth(a, 300.0, spec)
    pts = np.random.default_rng(5).normal(scale=0.05, size=(20, 2))
    np.testing.assert_allclose(beam.oblique_density(dens, ObliquePlane(300.0, AnglePair(0.0)), pts),
                               dens(pts), rtol=1e-15)


@pytest.mark.parametrize("theta", [0.0, math.pi / 6, math.pi / 3])
def test_oblique_density_integrates_to_one(theta):
    z = 300.0
    spec = BeamSpec(LAM, W0)
    w = beam.width(z, W0, LAM)
    plane = ObliquePlane(z, AnglePair(theta, 0.8))
    dens = lambda a: beam.intensity_orth(a, z, spec)
    f = lambda y, x: beam.oblique_density(dens, plane, np.array([x, y]))
    lim = 10 * w / math.cos(theta)
    total, _ = integrate.dblquad(f, -lim, lim, -lim, lim, epsabs=0, epsrel=1e-10)
    assert total == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("theta", [0.0, math.pi / 6, math.pi / 3])
def test_oblique_line_integrates_to_one(theta):
    z = 300.0
    spec = BeamSpec(LAM, W0, n=2)
    w = beam.width(z, W0, LAM)
    f = lambda y: beam.oblique_density_2d(lambda a: beam.intensity_orth(a, z, spec), theta, y)
    lim = 12 * w / math.cos(theta)
    total, _ = integrate.quad(f, -lim, lim, epsabs=0, epsrel=1e-12, limit=200)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_field_power_matches_beam_power():
    for n in (2, 3):
        spec = BeamSpec(LAM, W0, n=n, E0=2.0)
        z = 150.0
        w = beam.width(z, W0, LAM)
        if n == 2:
            p, _ = integrate.quad(lambda a: abs(beam.field(a, z, spec)) ** 2, -10 * w, 10 * w)
        else:
            p, _ = integrate.quad(lambda r: 2 * math.pi * r * abs(beam.field(r, z, spec)) ** 2,
                                  0, 10 * w)
        assert p == pytest.approx(beam.beam_power(spec), rel=1e-9)


def test_spec_validation():
    with pytest.raises(ValueError):
        BeamSpec(-1.0, W0)
    with pytest.raises(ValueError):
        BeamSpec(LAM, 0.0)
    with pytest.raises(ValueError):
        BeamSpec(LAM, W0, n=4)
    with pytest.raises(ValueError):
        ObliquePlane(0.0, AnglePair(0.1))
