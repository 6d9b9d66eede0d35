import math

import numpy as np
import pytest
from scipy import integrate
from scipy.optimize import brentq
from scipy.special import erf

from fsoirs import beam
from fsoirs.beam import BeamSpec
from fsoirs.geometry import AnglePair
from fsoirs.irs2d import EquivalentWaistError, equivalent_waist_2d, solve_waist
from fsoirs.irs3d import (LinkGeometry3D, a0_printed_form, conditional_gml_3d,
                          equivalent_density_3d, equivalent_source_3d, gml_params_3d,
                          irs_density_3d, lens_fraction_quadrature, phase_profile_3d,
                          special_case_params)

PI = math.pi
LAM = 1550e-9


def _geom(ti=PI / 6, tr=PI / 5, pr=7 * PI / 8, trl=PI / 6, d_sr=400.0, d_rl=500.0, a_l=0.025):
    return LinkGeometry3D(d_sr, d_rl, AnglePair(ti, 0.0), AnglePair(tr, pr), trl, a_l)


def test_irs_density_normal_incidence_is_circular(spec_1mm):
    g = _geom(ti=0.0)
    pts = np.random.default_rng(0).normal(scale=0.05, size=(30, 2))
    np.testing.assert_allclose(irs_density_3d(pts[:, 0], pts[:, 1], g, spec_1mm),
                               beam.intensity_orth(pts, g.d_sr, spec_1mm), rtol=1e-14)


def test_irs_density_integrates_to_one(geom3d, spec_1mm):
    w = beam.width(geom3d.d_sr, spec_1mm.w0, LAM) / math.cos(geom3d.psi_i.theta)
    total, _ = integrate.dblquad(lambda y, x: irs_density_3d(x, y, geom3d, spec_1mm),
                                 -8 * w, 8 * w, -8 * w, 8 * w, epsabs=0, epsrel=1e-10)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_irs_density_axis_ratio(geom3d, spec_1mm):
    # e^-2 contour: solve along each axis for the point where the density drops by e^2.
    peak = irs_density_3d(0.0, 0.0, geom3d, spec_1mm)
    w = beam.width(geom3d.d_sr, spec_1mm.w0, LAM)
    fx = brentq(lambda x: irs_density_3d(x, 0.0, geom3d, spec_1mm) - peak * math.exp(-2), 0, 10 * w)
    fy = brentq(lambda y: irs_density_3d(0.0, y, geom3d, spec_1mm) - peak * math.exp(-2), 0, 10 * w)
    assert fx / fy == pytest.approx(1 / math.cos(geom3d.psi_i.theta), rel=1e-9)


@pytest.mark.parametrize("branch", ["matched", "collimated", "diverging"])
def test_equivalent_source_block_diagonal(branch, geom3d, spec_1mm):
    src = equivalent_source_3d(geom3d, spec_1mm, AnglePair(PI / 4, 0.0), branch)
    assert src.phi_hat == 0.0
    assert src.w01 == pytest.approx(
        equivalent_waist_2d(geom3d.d_sr, spec_1mm.w0, LAM, geom3d.psi_i.theta, PI / 4, branch),
        rel=1e-12)
    assert src.w02 == pytest.approx(solve_waist(beam.width(geom3d.d_sr, spec_1mm.w0, LAM),
                                                geom3d.d_sr, LAM, branch, spec_1mm.w0), rel=1e-12)
    if branch == "matched":
        assert src.w02 == spec_1mm.w0


def test_equivalent_source_normal_incidence(spec_1mm):
    g = _geom(ti=0.0, tr=0.0, pr=0.0)
    src = equivalent_source_3d(g, spec_1mm, branch="matched")
    assert src.w01 == src.w02 == spec_1mm.w0
    assert src.phi_hat == 0.0


def test_density_reconstruction_random_geometries():
    """The astigmatic equivalent source repaints the actual footprint to 1e-10."""
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 1000:
        ti, tr = rng.uniform(0.0, 1.2, 2)
        pr = rng.uniform(-PI, PI)
        d_sr = rng.uniform(100.0, 2000.0)
        spec = BeamSpec(LAM, rng.uniform(5e-4, 3e-3))
        g = LinkGeometry3D(d_sr, 500.0, AnglePair(ti, 0.0), AnglePair(tr, pr), 0.0, 0.025)
        branch = ("collimated", "diverging", "matched")[checked % 3]
        try:
            src = equivalent_source_3d(g, spec, branch=branch)
        except EquivalentWaistError:
            continue
        w = beam.width(d_sr, spec.w0, LAM) / math.cos(ti)
        x, y = rng.normal(scale=w, size=(2, 16))
        ref = irs_density_3d(x, y, g, spec)
        got = equivalent_density_3d(x, y, g, spec, src)
        assert np.max(np.abs(got - ref)) <= 1e-10 * irs_density_3d(0.0, 0.0, g, spec)
        checked += 1


def test_unreachable_footprint_raises():
    # A grazing reflection squeezes the footprint below the reachable width.
    g = _geom(ti=0.0, tr=1.5, d_sr=400.0)
    with pytest.raises(EquivalentWaistError):
        equivalent_source_3d(g, BeamSpec(LAM, 1e-3), branch="collimated")


def test_mirror_phase_is_pi(spec_1mm):
    g = _geom(ti=PI / 6, tr=PI / 6, pr=PI, trl=0.0)
    x, y = np.random.default_rng(1).uniform(-0.1, 0.1, size=(2, 1000))
    assert np.max(np.abs(phase_profile_3d(x, y, g, spec_1mm, "matched") - PI)) <= 1e-12


def test_phase_gradient_limit_far_source(spec_1mm):
    g = _geom(d_sr=2e4, trl=0.0)
    ti, tr, pr = g.psi_i.theta, g.psi_r.theta, g.psi_r.phi
    x, y = np.random.default_rng(2).uniform(-0.01, 0.01, size=(2, 400))
    k = 2 * PI / LAM
    linear = PI - k * (x * (math.sin(ti) + math.sin(tr) * math.cos(pr))
                       + y * math.sin(tr) * math.sin(pr))
    dev = phase_profile_3d(x, y, g, spec_1mm, "diverging") - linear
    assert np.max(np.abs(dev)) < 0.01


def test_phase_at_origin_is_gouy_difference(geom3d, spec_1mm):
    src = equivalent_source_3d(geom3d, spec_1mm)
    d = geom3d.d_sr
    expect = (PI + beam.gouy_astig(d, src.w01, src.w02, LAM) - beam.gouy(d, spec_1mm.w0, LAM))
    assert phase_profile_3d(0.0, 0.0, geom3d, spec_1mm, src=src) == pytest.approx(expect, abs=1e-12)


def test_conditional_gml_shape(geom3d, spec_1mm):
    p = gml_params_3d(geom3d, spec_1mm)
    assert conditional_gml_3d(np.zeros(2), p) == p.A0
    r = math.sqrt(p.t / 2)
    u = r * np.array([math.cos(0.3), math.sin(0.3)])
    assert conditional_gml_3d(u, p) == pytest.approx(p.A0 / math.e, rel=1e-14)
    radii = np.linspace(0, 0.2, 200)
    h = conditional_gml_3d(np.column_stack([radii, 0 * radii]), p)
    assert np.all(np.diff(h) <= 0) and np.all(h > 0) and np.all(h <= p.A0)


def test_mirror_configuration_circular(spec_1mm):
    g = _geom(ti=0.4, tr=0.4, pr=PI, trl=0.0)
    src = equivalent_source_3d(g, spec_1mm, branch="matched")
    assert src.w01 == src.w02 == spec_1mm.w0
    p = gml_params_3d(g, spec_1mm, src)
    w = beam.width(g.d_e2e, spec_1mm.w0, LAM)
    nu = g.a_l * math.sqrt(PI / 2) / w
    assert p.A0 == pytest.approx(erf(nu) ** 2, rel=1e-13)


def test_printed_a0_form(geom3d, spec_1mm):
    src = equivalent_source_3d(geom3d, spec_1mm)
    p = gml_params_3d(geom3d, spec_1mm, src)
    assert a0_printed_form(geom3d, spec_1mm, p, src) == pytest.approx(p.A0, rel=1e-12)


@pytest.mark.parametrize("branch", ["collimated", "diverging"])
def test_special_case_matches_general_path(branch, spec_1mm):
    g = _geom(ti=0.4, tr=0.7, pr=PI, trl=0.0, d_sr=350.0, d_rl=650.0)
    a = gml_params_3d(g, spec_1mm, branch=branch)
    b = special_case_params(350.0, 650.0, 0.4, 0.7, spec_1mm.w0, LAM, g.a_l, branch)
    assert a.A0 == pytest.approx(b.A0, rel=1e-12)
    assert a.t == pytest.approx(b.t, rel=1e-12)


def test_disk_quadrature_matches_circular_closed_form(spec_1mm):
    # For a circular beam on an untilted lens the captured power is
    # 1 - exp(-2 a^2 / w^2) exactly; this pins the quadrature itself.
    g = _geom(ti=0.4, tr=0.4, pr=PI, trl=0.0, a_l=0.05)
    src = equivalent_source_3d(g, spec_1mm, branch="matched")
    w = beam.width(g.d_e2e, spec_1mm.w0, LAM)
    assert lens_fraction_quadrature(g, spec_1mm, src) == pytest.approx(
        1 - math.exp(-2 * g.a_l ** 2 / w ** 2), rel=1e-12)


def _a0_cases():
    for a_l in (0.025, 0.05, 0.1, 0.2):
        for width in (0.05, 0.1, 0.2):
            for trl in (0.0, PI / 6):
                yield a_l, width, trl


def test_a0_matches_disk_quadrature_within_one_percent():
    """Closed-form peak fraction against direct quadrature over the tilted disk,
    for equivalent-beam parameters nu1, nu2 in [0.5, 3]."""
    worst, n = 0.0, 0
    for a_l, width, trl in _a0_cases():
        g = _geom(trl=trl, a_l=a_l)
        spec = BeamSpec(LAM, solve_waist(width, g.d_e2e, LAM, "diverging"))
        src = equivalent_source_3d(g, spec)
        p = gml_params_3d(g, spec, src)
        if not (0.5 <= min(p.nu1, p.nu2) and max(p.nu1, p.nu2) <= 3.0):
            continue
        n += 1
        quad = lens_fraction_quadrature(g, spec, src)
        worst = max(worst, abs(p.A0 - quad) / quad)
    assert n >= 8
    assert worst <= 0.01, f"worst relative deviation {worst:.4f} over {n} cases"
