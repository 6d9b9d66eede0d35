"""Building-sway misalignment and the resulting statistical GML laws."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import erfc, i0e

from . import irs2d, irs3d
from .geometry import eig_sym_2x2, rot, squeeze, squeeze_inv


@dataclass(frozen=True)
class SwayModel:
    """Standard deviations (m) of the Tx, IRS and Rx position jitter."""

    sigma_s: float = 0.0
    sigma_r: float = 0.0
    sigma_l: float = 0.0

    def __post_init__(self):
        if min(self.sigma_s, self.sigma_r, self.sigma_l) < 0:
            raise ValueError("sway standard deviations must be non-negative")

    def scaled(self, c: float) -> "SwayModel":
        return SwayModel(c * self.sigma_s, c * self.sigma_r, c * self.sigma_l)


@dataclass(frozen=True)
class Angles2D:
    theta_i: float
    theta_r: float
    theta_rl: float = 0.0


@dataclass(frozen=True)
class Angles3D:
    theta_i: float
    theta_r: float
    phi_r: float
    theta_rl: float = 0.0


@dataclass(frozen=True)
class GmlLaw:
    """Closed statistical description of the GML.

    ``variant`` is one of ``"2D"``, ``"3D"`` (Hoyt), ``"one-sided"`` (only
    the IRS sways in the special geometry) or ``"mirror"``.
    """

    variant: str
    A0: float
    t: float
    varpi: float = math.nan
    q: float = 1.0
    omega: float = math.nan
    rho: float = math.nan
    sigma_u2: float = math.nan
    sigma_t2: float = math.nan
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def exponent(self) -> float:
        """Power of ``h/A0`` that controls the density near ``h = 0``."""
        if self.variant == "one-sided":
            return self.rho - 1.0
        if self.variant == "2D":
            return self.varpi - 1.0
        return (1.0 + self.q ** 2) * self.varpi / (2.0 * self.q) - 1.0


# -- misalignment -----------------------------------------------------------

def misalignment_coeffs_2d(ang: Angles2D) -> np.ndarray:
    ti, tr, trl = ang.theta_i, ang.theta_r, ang.theta_rl
    c = 1.0 / math.cos(trl)
    return c * np.array([math.cos(tr) / math.cos(ti), -math.sin(ti + tr) / math.cos(ti), -1.0])


def misalignment_2d(eps_s, eps_r, eps_l, ang: Angles2D):
    cs, cr, cl = misalignment_coeffs_2d(ang)
    return cs * np.asarray(eps_s) + cr * np.asarray(eps_r) + cl * np.asarray(eps_l)


def misalignment_var_2d(sway: SwayModel, ang: Angles2D) -> float:
    cs, cr, cl = misalignment_coeffs_2d(ang)
    return (cs * sway.sigma_s) ** 2 + (cr * sway.sigma_r) ** 2 + (cl * sway.sigma_l) ** 2


def misalignment_maps_3d(ang: Angles3D):
    """Matrices ``(M_s, m_r, M_l)`` with ``u = M_s e_s + m_r e_r + M_l e_l``."""
    ti, tr, pr = ang.theta_i, ang.theta_r, ang.phi_r
    trl_inv = squeeze_inv(ang.theta_rl)
    base = squeeze(tr) @ rot(-pr)
    v = np.array([math.tan(tr) * math.cos(pr) - math.tan(ti), math.tan(tr) * math.sin(pr)])
    m_s = trl_inv @ base @ squeeze_inv(ti)
    m_r = -(trl_inv @ base @ v)
    m_l = -trl_inv
    return m_s, m_r, m_l


def misalignment_3d(eps_s, eps_r, eps_l, ang: Angles3D):
    """Lens-plane misalignment; ``eps_s``/``eps_l`` have shape ``(..., 2)``."""
    m_s, m_r, m_l = misalignment_maps_3d(ang)
    eps_s = np.asarray(eps_s, dtype=float)
    eps_l = np.asarray(eps_l, dtype=float)
    eps_r = np.asarray(eps_r, dtype=float)
    return eps_s @ m_s.T + eps_r[..., None] * m_r + eps_l @ m_l.T


def misalignment_cov_3d(sway: SwayModel, ang: Angles3D):
    """Covariance of ``u`` and its Hoyt parameters ``(Sigma, q, Omega)``."""
    m_s, m_r, m_l = misalignment_maps_3d(ang)
    sig = (m_s @ m_s.T * sway.sigma_s ** 2 + np.outer(m_r, m_r) * sway.sigma_r ** 2
           + m_l @ m_l.T * sway.sigma_l ** 2)
    sig = 0.5 * (sig + sig.T)
    chi1, chi2, _, _ = eig_sym_2x2(sig)
    omega = chi1 + chi2
    q = math.sqrt(max(chi2, 0.0) / chi1) if chi1 > 0 else 1.0
    return sig, q, omega


def sensitivity_coeffs_2d(ang: Angles2D) -> np.ndarray:
    """SD of ``u`` per unit SD of each of ``(eps_s, eps_r, eps_l)``."""
    return np.abs(misalignment_coeffs_2d(ang))


def sensitivity_coeffs_3d(ang: Angles3D) -> np.ndarray:
    """Rows ``s, r, l``; columns are the SDs of ``(u1, u2)`` per unit SD."""
    m_s, m_r, m_l = misalignment_maps_3d(ang)
    return np.array([np.sqrt(np.sum(m_s ** 2, axis=1)), np.abs(m_r),
                     np.sqrt(np.sum(m_l ** 2, axis=1))])


def special_case_variances(sway: SwayModel, theta_i: float, theta_r: float):
    """Component variances for ``phi_r = pi`` and a lens facing the beam."""
    ci = math.cos(theta_i)
    s1 = ((math.cos(theta_r) / ci) ** 2 * sway.sigma_s ** 2
          + (math.sin(theta_i + theta_r) / ci) ** 2 * sway.sigma_r ** 2 + sway.sigma_l ** 2)
    s2 = sway.sigma_s ** 2 + sway.sigma_l ** 2
    return s1, s2


def mirror_params(sway: SwayModel, theta_i: float):
    """Hoyt ``(q, Omega)`` for a plain mirror at incidence ``theta_i``."""
    base = sway.sigma_s ** 2 + sway.sigma_l ** 2
    extra = 4.0 * sway.sigma_r ** 2 * math.sin(theta_i) ** 2
    denom = base + extra
    q = math.sqrt(base / denom) if denom > 0 else 1.0
    return q, 2.0 * base + extra


# -- laws ------------------------------------------------------------------

def law_2d(A0: float, t: float, w_e2e: float, sigma_u2: float) -> GmlLaw:
    varpi = t * w_e2e ** 2 / (4.0 * sigma_u2)
    return GmlLaw("2D", A0=A0, t=t * w_e2e ** 2, varpi=varpi, sigma_u2=sigma_u2,
                  extra={"w_e2e": w_e2e, "t_dimless": t})


def law_3d(A0: float, t: float, q: float, omega: float) -> GmlLaw:
    """Hoyt law; a rank-one covariance (``q = 0``) gives the one-sided law."""
    if not omega > 0:
        raise ValueError("the misalignment has zero variance; the GML is the constant A0")
    if q == 0.0:
        return GmlLaw("one-sided", A0=A0, t=t, rho=t / (4.0 * omega), sigma_t2=omega, q=0.0,
                      omega=omega)
    varpi = (1.0 + q * q) * t / (4.0 * q * omega)
    return GmlLaw("3D", A0=A0, t=t, varpi=varpi, q=q, omega=omega)


def law_irs_only(A0: float, t: float, theta_i: float, theta_r: float, sigma_r: float) -> GmlLaw:
    sigma_t2 = (math.sin(theta_i + theta_r) / math.cos(theta_i)) ** 2 * sigma_r ** 2
    return GmlLaw("one-sided", A0=A0, t=t, rho=t / (4.0 * sigma_t2), sigma_t2=sigma_t2)


def _half_gauss_pdf(h, A0, p):
    """Density of ``A0 exp(-s)`` with ``s = chi2_1 / (2 p)``."""
    h = np.asarray(h, dtype=float)
    out = np.zeros_like(h)
    ok = (h > 0) & (h < A0)
    x = h[ok] / A0
    lg = -np.log(x)
    out[ok] = math.sqrt(p / math.pi) / A0 * lg ** -0.5 * np.exp((p - 1.0) * np.log(x))
    return out[()] if out.ndim == 0 else out


def gml_pdf_2d(h, law: GmlLaw):
    """Density of the 2D GML on ``(0, A0)``.

    Normalized to unit mass; see the project notes for the prefactor.
    """
    return _half_gauss_pdf(h, law.A0, law.varpi)


def gml_pdf_irs_only(h, law: GmlLaw):
    return _half_gauss_pdf(h, law.A0, law.rho)


def gml_pdf_3d(h, law: GmlLaw):
    """Hoyt-induced GML density, evaluated in log form with a scaled I0."""
    h = np.asarray(h, dtype=float)
    out = np.zeros_like(h)
    ok = (h > 0) & (h <= law.A0)
    lx = np.log(h[ok] / law.A0)          # <= 0
    q, vp = law.q, law.varpi
    expo = (1.0 + q * q) * vp / (2.0 * q) - 1.0
    if q == 1.0:
        out[ok] = vp / law.A0 * np.exp(expo * lx)
    else:
        arg = -(1.0 - q * q) * vp / (2.0 * q) * lx   # >= 0
        out[ok] = vp / law.A0 * np.exp(expo * lx + arg) * i0e(arg)
    return out[()] if out.ndim == 0 else out


def gml_pdf(h, law: GmlLaw):
    if law.variant == "2D":
        return gml_pdf_2d(h, law)
    if law.variant == "one-sided":
        return gml_pdf_irs_only(h, law)
    return gml_pdf_3d(h, law)


def gml_cdf(h, law: GmlLaw):
    """``P(h_g <= h)``; closed form for the Gaussian-family laws."""
    h = np.atleast_1d(np.asarray(h, dtype=float))
    out = np.empty_like(h)
    for i, hv in enumerate(h):
        if hv <= 0:
            out[i] = 0.0
        elif hv >= law.A0:
            out[i] = 1.0
        elif law.variant in ("2D", "one-sided"):
            p = law.varpi if law.variant == "2D" else law.rho
            out[i] = float(erfc(math.sqrt(p * math.log(law.A0 / hv))))
        else:
            out[i] = _cdf_quad(hv, law)
    return out if out.size > 1 else float(out[0])


def _cdf_quad(h, law: GmlLaw):
    # Integrate in s = ln(A0/h') over [ln(A0/h), inf).
    s0 = math.log(law.A0 / h)

    def integrand(s):
        return float(gml_pdf(law.A0 * math.exp(-s), law)) * law.A0 * math.exp(-s)

    val, _ = integrate.quad(integrand, s0, np.inf, limit=200, epsabs=1e-13, epsrel=1e-11)
    return min(1.0, val)


def pdf_mass(law: GmlLaw) -> float:
    """Total mass of the density by quadrature in ``s = ln(A0/h)``."""
    def integrand(s):
        return float(gml_pdf(law.A0 * math.exp(-s), law)) * law.A0 * math.exp(-s)

    if law.variant in ("2D", "one-sided"):
        # Split off the s^-1/2 endpoint with an algebraic weight.
        p = law.varpi if law.variant == "2D" else law.rho

        def smooth(s):
            return math.sqrt(p / math.pi) * math.exp(-p * s)

        a, _ = integrate.quad(smooth, 0.0, 1.0, weight="alg", wvar=(-0.5, 0.0), epsabs=1e-14)
        b, _ = integrate.quad(integrand, 1.0, np.inf, epsabs=1e-14, limit=200)
        return a + b
    val, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=400)
    return val


def bin_masses(law: GmlLaw, edges) -> np.ndarray:
    """Probability of each histogram bin under the law."""
    edges = np.asarray(edges, dtype=float)
    if law.variant in ("2D", "one-sided"):
        c = np.array([gml_cdf(e, law) for e in edges])
        return np.diff(c)
    masses = np.empty(edges.size - 1)
    for i in range(edges.size - 1):
        lo, hi = max(edges[i], 0.0), min(edges[i + 1], law.A0)
        if hi <= lo:
            masses[i] = 0.0
            continue
        sa, sb = math.log(law.A0 / hi), (math.log(law.A0 / lo) if lo > 0 else np.inf)

        def integrand(s):
            return float(gml_pdf(law.A0 * math.exp(-s), law)) * law.A0 * math.exp(-s)

        masses[i], _ = integrate.quad(integrand, sa, sb, epsabs=1e-14, epsrel=1e-10, limit=200)
    return masses


def mean_gml(law: GmlLaw) -> float:
    def integrand(s):
        h = law.A0 * math.exp(-s)
        return float(gml_pdf(h, law)) * h * h

    if law.variant in ("2D", "one-sided"):
        p = law.varpi if law.variant == "2D" else law.rho
        # E[A0 e^-s] with s ~ Gamma(1/2, 1/p).
        return law.A0 * (p / (p + 1.0)) ** 0.5
    val, _ = integrate.quad(integrand, 0.0, np.inf, limit=400)
    return val


# -- laws from link geometry -------------------------------------------------

def gml_law_2d(geom, spec, sway: SwayModel, branch: str = "collimated") -> GmlLaw:
    """2D law for a :class:`~fsoirs.irs2d.LinkGeometry2D` under ``sway``."""
    p = irs2d.approx_params_for(geom, spec, branch)
    s2 = misalignment_var_2d(sway, Angles2D(geom.theta_i, geom.theta_r, geom.theta_rl))
    return law_2d(p.A0, p.t, p.w_e2e, s2)


def gml_law_3d(geom, spec, sway: SwayModel, branch: str = "collimated") -> GmlLaw:
    """Hoyt law for a :class:`~fsoirs.irs3d.LinkGeometry3D` under ``sway``."""
    p = irs3d.gml_params_3d(geom, spec, branch=branch)
    ang = Angles3D(geom.psi_i.theta, geom.psi_r.theta, geom.psi_r.phi, geom.theta_rl)
    _, q, omega = misalignment_cov_3d(sway, ang)
    return law_3d(p.A0, p.t, q, omega)
