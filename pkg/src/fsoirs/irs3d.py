"""Three-dimensional IRS link.

The IRS spans the x-y plane with the incident beam arriving in the x-z
plane (``phi_i = 0``). The equivalent mirror system uses a rotated
astigmatic source whose footprint on the IRS matches the actual one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import erf

from . import beam
from .beam import BeamSpec
from .geometry import AnglePair, eig_sym_2x2, rot, squeeze, squeeze_inv
from .irs2d import solve_waist


@dataclass(frozen=True)
class LinkGeometry3D:
    d_sr: float
    d_rl: float
    psi_i: AnglePair
    psi_r: AnglePair
    theta_rl: float
    a_l: float
    irs_half: tuple[float, float] = (0.1, 0.1)

    def __post_init__(self):
        if self.d_sr <= 0 or self.d_rl <= 0 or self.a_l <= 0:
            raise ValueError("distances and lens radius must be positive")
        if self.psi_i.phi != 0.0:
            raise ValueError("the axes are chosen so that the incident azimuth is zero")
        if not abs(self.theta_rl) < math.pi / 2:
            raise ValueError("theta_rl must lie in (-pi/2, pi/2)")

    @property
    def d_e2e(self) -> float:
        return self.d_sr + self.d_rl


@dataclass(frozen=True)
class EquivalentSource3D:
    w01: float
    w02: float
    phi_hat: float
    psi_hat: AnglePair
    lam1: float
    lam2: float

    def spec(self, base: BeamSpec) -> BeamSpec:
        return replace(base, w0=self.w01, w02=self.w02, phi_rot=self.phi_hat, n=3)


@dataclass(frozen=True)
class GmlParams3D:
    A0: float
    t: float
    nu1: float
    nu2: float
    delta1: float
    delta2: float


def _s_matrix(d, w0, wavelength):
    w = float(beam.width(d, w0, wavelength))
    return np.eye(2) / (w * w), w


def irs_density_3d(x, y, geom: LinkGeometry3D, spec: BeamSpec):
    """Elliptical footprint of the incident beam on the IRS."""
    s, w = _s_matrix(geom.d_sr, spec.w0, spec.wavelength)
    ti = geom.psi_i.theta
    m = s @ squeeze(ti) @ squeeze(ti)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    quad = m[0, 0] * x * x + 2 * m[0, 1] * x * y + m[1, 1] * y * y
    return 2.0 * math.cos(ti) / (math.pi * w * w) * np.exp(-2.0 * quad)


def footprint_matrix(geom: LinkGeometry3D, spec: BeamSpec, psi_hat: AnglePair) -> np.ndarray:
    """``T^-T R^T S T_i^2 R T^-1`` for a source arriving at ``psi_hat``."""
    s, _ = _s_matrix(geom.d_sr, spec.w0, spec.wavelength)
    ti = geom.psi_i.theta
    tinv = squeeze_inv(psi_hat.theta)
    r = rot(psi_hat.phi)
    a = tinv.T @ r.T @ s @ squeeze(ti) @ squeeze(ti) @ r @ tinv
    return 0.5 * (a + a.T)


def equivalent_source_3d(geom: LinkGeometry3D, spec: BeamSpec, psi_hat: AnglePair | None = None,
                         branch: str = "collimated") -> EquivalentSource3D:
    """Waists and rotation of the astigmatic source at ``psi_hat``.

    The larger eigenvalue pairs with the first (narrower) axis. The waist
    on each axis solves the 2D width equation with the given branch.
    """
    if psi_hat is None:
        psi_hat = geom.psi_r
    a = footprint_matrix(geom, spec, psi_hat)
    lam1, lam2, v1, v2 = eig_sym_2x2(a)
    if lam2 <= 0:
        raise ValueError("footprint matrix is not positive definite")
    lam = spec.wavelength
    w01 = solve_waist(1.0 / math.sqrt(lam1), geom.d_sr, lam, branch, w0_ref=spec.w0)
    w02 = solve_waist(1.0 / math.sqrt(lam2), geom.d_sr, lam, branch, w0_ref=spec.w0)
    if branch == "matched":
        # Snap exact matches so that the mirror configuration is exact.
        w_src = float(beam.width(geom.d_sr, spec.w0, lam))
        if abs(1.0 / math.sqrt(lam1) - w_src) <= 1e-14 * w_src:
            w01 = spec.w0
        if abs(1.0 / math.sqrt(lam2) - w_src) <= 1e-14 * w_src:
            w02 = spec.w0
    # R_phi = [v1, v2]^T with v1 = (cos phi, -sin phi).
    phi_hat = math.atan2(-v1[1], v1[0])
    return EquivalentSource3D(w01, w02, phi_hat, psi_hat, lam1, lam2)


def equivalent_density_3d(x, y, geom: LinkGeometry3D, spec: BeamSpec, src: EquivalentSource3D):
    """IRS footprint produced by the astigmatic source ``src``.

    Uses the astigmatic transverse density mapped onto the IRS plane; it
    must coincide with :func:`irs_density_3d`.
    """
    hat = src.spec(spec)
    th, ph = src.psi_hat.theta, src.psi_hat.phi
    m = squeeze(th) @ rot(-ph)
    a = np.stack(np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float)), axis=-1)
    ahat = a @ m.T
    return math.cos(th) * beam.intensity_orth(ahat, geom.d_sr, hat)


def _cos_sin(phi: float) -> tuple[float, float]:
    """cos and sin that are exact at multiples of pi/2."""
    q = 2.0 * phi / math.pi
    if q == round(q):
        return [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][int(round(q)) % 4]
    return math.cos(phi), math.sin(phi)


def phase_profile_3d(x, y, geom: LinkGeometry3D, spec: BeamSpec, branch: str = "collimated",
                     src: EquivalentSource3D | None = None):
    """Phase shift at ``(x, y)`` on the IRS (unwrapped).

    The Tx lies at azimuth ``phi_i = 0`` as seen from the IRS, so the
    incident beam travels towards ``-x`` and specular reflection has
    ``phi_r = pi``.
    """
    if src is None:
        src = equivalent_source_3d(geom, spec, geom.psi_r, branch)
    hat = src.spec(spec)
    ti = geom.psi_i.theta
    tr, pr = geom.psi_r.theta, geom.psi_r.phi
    cp, sp = _cos_sin(pr)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    a = np.stack([x, y], axis=-1)
    # The astigmatic phase applies R_phi_hat itself, so only T R_-phi here.
    m = squeeze(tr) @ np.array([[cp, sp], [-sp, cp]])
    ahat = a @ m.T
    str_ = math.sin(tr)
    sti = math.sin(ti)
    z_out = geom.d_sr + x * str_ * cp + y * str_ * sp
    z_in = geom.d_sr - x * sti
    out_x = beam.astig_excess_phase(ahat, z_out, hat)
    simple = replace(spec, n=3, w02=None, phi_rot=0.0)
    r_in = np.sqrt((math.cos(ti) * x) ** 2 + y * y)
    in_x = beam.gauss_excess_phase(r_in, z_in, simple)
    dz = x * (str_ * cp + sti) + y * str_ * sp
    return math.pi - spec.k * dz + (out_x - in_x)


def gml_params_3d(geom: LinkGeometry3D, spec: BeamSpec, src: EquivalentSource3D | None = None,
                  branch: str = "collimated") -> GmlParams3D:
    if src is None:
        src = equivalent_source_3d(geom, spec, geom.psi_r, branch)
    lam = spec.wavelength
    w1 = float(beam.width(geom.d_e2e, src.w01, lam))
    w2 = float(beam.width(geom.d_e2e, src.w02, lam))
    s = np.diag([1.0 / w1 ** 2, 1.0 / w2 ** 2])
    r = rot(src.phi_hat)
    t_rl = squeeze(geom.theta_rl)
    b = t_rl.T @ r.T @ s @ r @ t_rl
    d1, d2, _, _ = eig_sym_2x2(0.5 * (b + b.T))
    return gml_params_from_deltas(d1, d2, geom.a_l)


def gml_params_from_deltas(d1: float, d2: float, a_l: float) -> GmlParams3D:
    nu1 = a_l * math.sqrt(math.pi * d1 / 2.0)
    nu2 = a_l * math.sqrt(math.pi * d2 / 2.0)
    e1, e2 = float(erf(nu1)), float(erf(nu2))
    A0 = e1 * e2
    t = (math.pi * a_l ** 2 / (4.0 * nu1 * nu2)
         * math.sqrt(math.pi * e1 * e2 / (nu1 * nu2 * math.exp(-(nu1 ** 2 + nu2 ** 2)))))
    return GmlParams3D(A0=A0, t=t, nu1=nu1, nu2=nu2, delta1=d1, delta2=d2)


def a0_printed_form(geom: LinkGeometry3D, spec: BeamSpec, params: GmlParams3D,
                    src: EquivalentSource3D) -> float:
    """Peak fraction written with the peak intensity prefactor; equals ``A0``."""
    lam = spec.wavelength
    w1 = float(beam.width(geom.d_e2e, src.w01, lam))
    w2 = float(beam.width(geom.d_e2e, src.w02, lam))
    imax = 2.0 / (math.pi * w1 * w2)
    return (math.pi ** 2 * math.cos(geom.theta_rl) * imax * geom.a_l ** 2
            / (4.0 * params.nu1 * params.nu2) * erf(params.nu1) * erf(params.nu2))


def conditional_gml_3d(u, params: GmlParams3D):
    """GML for lens-plane misalignment ``u`` of shape ``(..., 2)``."""
    u = np.asarray(u, dtype=float)
    r2 = np.sum(u * u, axis=-1)
    return params.A0 * np.exp(-2.0 * r2 / params.t)


def special_case_params(d_sr: float, d_rl: float, theta_i: float, theta_r: float, w0: float,
                        wavelength: float, a_l: float, branch: str = "collimated") -> GmlParams3D:
    """Closed-form parameters for ``phi_r = pi`` and a lens facing the beam."""
    w_src = float(beam.width(d_sr, w0, wavelength))
    ratio = abs(math.cos(theta_r) / math.cos(theta_i))
    if branch == "matched" and ratio == 1.0:
        w01 = w0
    else:
        w01 = solve_waist(ratio * w_src, d_sr, wavelength, branch, w0_ref=w0)
    w02 = w0 if branch == "matched" else solve_waist(w_src, d_sr, wavelength, branch, w0_ref=w0)
    d = d_sr + d_rl
    d1 = 1.0 / float(beam.width(d, w01, wavelength)) ** 2
    d2 = 1.0 / float(beam.width(d, w02, wavelength)) ** 2
    return gml_params_from_deltas(d1, d2, a_l)


def lens_fraction_quadrature(geom: LinkGeometry3D, spec: BeamSpec, src: EquivalentSource3D,
                             n: int = 400) -> float:
    """Power through the tilted circular lens by direct 2D quadrature.

    The density on the lens plane is the astigmatic beam at ``d_e2e``
    mapped through ``T_theta_rl`` with the obliquity factor. Polar
    Gauss-Legendre rule on the disk.
    """
    hat = src.spec(spec)
    xr, wr = np.polynomial.legendre.leggauss(n)
    r = 0.5 * geom.a_l * (xr + 1.0)
    wr = 0.5 * geom.a_l * wr
    th = np.linspace(0.0, 2 * math.pi, 2 * n, endpoint=False)
    rr, tt = np.meshgrid(r, th, indexing="ij")
    pts = np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1)
    ahat = pts @ squeeze(geom.theta_rl).T
    dens = math.cos(geom.theta_rl) * beam.intensity_orth(ahat, geom.d_e2e, hat)
    return float(np.sum(dens * rr * wr[:, None]) * (2 * math.pi / th.size))
