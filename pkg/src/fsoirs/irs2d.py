"""Two-dimensional IRS link: equivalent mirror system and conditional GML.

Coordinates: the IRS lies on the y axis, the z axis points into the
half-plane containing the source and the lens, and the origin is where the
incident beam line meets the IRS. The source sits at
``(-d_sr sin(theta_i), d_sr cos(theta_i))`` and the reflected beam leaves
the origin in direction ``(sin(theta_r), cos(theta_r))``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import erf

from . import beam
from .beam import BeamSpec
from .geometry import line_intersection

BRANCHES = ("collimated", "diverging", "matched")


class EquivalentWaistError(ValueError):
    """The requested footprint width cannot be produced at this distance."""


@dataclass(frozen=True)
class LinkGeometry2D:
    d_sr: float
    d_rl: float
    theta_i: float
    theta_r: float
    theta_rl: float
    a_r: float
    a_l: float
    y_l: float | None = None
    z_l: float | None = None
    y_r: float = 0.0

    def __post_init__(self):
        for name in ("d_sr", "d_rl", "a_r", "a_l"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("theta_i", "theta_r"):
            if not 0.0 <= getattr(self, name) < math.pi / 2:
                raise ValueError(f"{name} must lie in [0, pi/2)")
        if not abs(self.theta_rl) < math.pi / 2:
            raise ValueError("theta_rl must lie in (-pi/2, pi/2)")
        if (self.y_l is None) != (self.z_l is None):
            raise ValueError("give both lens coordinates or neither")

    @property
    def d_e2e(self) -> float:
        return self.d_sr + self.d_rl

    @property
    def lens_center(self) -> np.ndarray:
        if self.y_l is None:
            return self.d_rl * np.array([math.sin(self.theta_r), math.cos(self.theta_r)])
        return np.array([self.y_l, self.z_l])

    @property
    def lens_tilt(self) -> float:
        """Angle between the lens line and the y axis."""
        return self.theta_r - self.theta_rl

    @property
    def lens_dir(self) -> np.ndarray:
        tt = self.lens_tilt
        return np.array([math.cos(tt), -math.sin(tt)])

    @property
    def source(self) -> np.ndarray:
        return self.d_sr * np.array([-math.sin(self.theta_i), math.cos(self.theta_i)])

    def with_misalignment(self, u: float) -> "LinkGeometry2D":
        """Move the lens by ``-u`` along its own line, starting from the
        position where its center sits on the reflected beam line at ``d_rl``."""
        c = self.d_rl * np.array([math.sin(self.theta_r), math.cos(self.theta_r)]) - u * self.lens_dir
        return replace(self, y_l=float(c[0]), z_l=float(c[1]))


@dataclass(frozen=True)
class TruncationRegion:
    p_vs: np.ndarray
    s1: float
    s2: float

    def contains(self, p, tol: float = 1e-12) -> bool:
        """Point-in-wedge test for the region beyond the IRS.

        A point belongs to the wedge when the ray from the virtual source
        to it crosses the IRS line between the two edges.
        """
        y, z = float(p[0]), float(p[1])
        if z <= 0:
            return False
        vy, vz = self.p_vs
        y_cross = vy + (y - vy) * (-vz) / (z - vz)
        # The edges are where the boundary lines meet z = 0.
        e1 = vy - vz / self.s1
        e2 = vy - vz / self.s2
        lo, hi = min(e1, e2), max(e1, e2)
        return lo - tol <= y_cross <= hi + tol


@dataclass(frozen=True)
class GmlApproxParams2D:
    A0: float
    t: float
    nu: float
    w_e2e: float
    theta_rl: float = 0.0


def irs_density_2d(y, geom: LinkGeometry2D, spec: BeamSpec):
    """Power density of the incident beam along the IRS line."""
    w = beam.width(geom.d_sr, spec.w0, spec.wavelength)
    c = math.cos(geom.theta_i)
    y = np.asarray(y, dtype=float)
    return math.sqrt(2.0 / math.pi) * c / w * np.exp(-2.0 * c * c * y * y / (w * w))


def _waist_roots(target_width: float, d: float, wavelength: float):
    q = wavelength * d / math.pi
    t2 = target_width * target_width
    disc = t2 * t2 - 4.0 * q * q
    if disc < 0:
        raise EquivalentWaistError(
            f"width {target_width:.6g} m is below the minimum {math.sqrt(2 * q):.6g} m "
            f"reachable at distance {d:.6g} m")
    root = math.sqrt(disc)
    big = 0.5 * (t2 + root)
    # Product of the roots is q^2; this avoids cancellation in the small one.
    small = q * q / big
    return big, small, q


def solve_waist(target_width: float, d: float, wavelength: float, branch: str = "collimated",
                w0_ref: float | None = None) -> float:
    """Waist radius ``x`` with ``width(d, x) == target_width``.

    The width equation is a quadratic in ``x**2`` with roots on either
    side of ``q = wavelength*d/pi``. ``collimated`` returns the larger
    root, ``diverging`` the smaller one and ``matched`` the root in the
    same regime as ``w0_ref``.
    """
    big, small, q = _waist_roots(target_width, d, wavelength)
    if branch == "collimated":
        return math.sqrt(big)
    if branch == "diverging":
        return math.sqrt(small)
    if branch == "matched":
        if w0_ref is None:
            raise ValueError("matched branch needs the reference waist")
        return math.sqrt(small if w0_ref * w0_ref <= q else big)
    raise ValueError(f"unknown branch {branch!r}; expected one of {BRANCHES}")


def equivalent_waist_2d(d_sr: float, w0: float, wavelength: float, theta_i: float,
                        theta_hat: float, branch: str = "collimated") -> float:
    """Waist of a source at angle ``theta_hat`` that paints the same
    footprint on the IRS as the actual source at ``theta_i``."""
    ratio = math.cos(theta_hat) / math.cos(theta_i)
    if branch == "matched" and ratio == 1.0:
        return w0
    target = ratio * float(beam.width(d_sr, w0, wavelength))
    return solve_waist(target, d_sr, wavelength, branch, w0_ref=w0)


def equivalent_spec_2d(geom: LinkGeometry2D, spec: BeamSpec, branch: str = "collimated") -> BeamSpec:
    w0hat = equivalent_waist_2d(geom.d_sr, spec.w0, spec.wavelength, geom.theta_i, geom.theta_r, branch)
    return replace(spec, w0=w0hat, n=2)


def phase_profile_2d(y, geom: LinkGeometry2D, spec: BeamSpec, branch: str = "collimated",
                     w0hat: float | None = None):
    """Phase shift applied by the IRS at ``(y, 0)`` (unwrapped)."""
    spec2 = replace(spec, n=2)
    if w0hat is None:
        w0hat = equivalent_waist_2d(geom.d_sr, spec.w0, spec.wavelength, geom.theta_i,
                                    geom.theta_r, branch)
    hat = replace(spec2, w0=w0hat)
    y = np.asarray(y, dtype=float)
    ti, tr = geom.theta_i, geom.theta_r
    out_x = beam.gauss_excess_phase(y * math.cos(tr), geom.d_sr + y * math.sin(tr), hat)
    in_x = beam.gauss_excess_phase(y * math.cos(ti), geom.d_sr + y * math.sin(ti), spec2)
    # The k z parts differ by k y (sin tr - sin ti); forming that directly
    # keeps the result accurate to round-off of the small terms.
    dz = y * (math.sin(tr) - math.sin(ti))
    return math.pi - spec2.k * dz + (out_x - in_x)


def virtual_source_2d(geom: LinkGeometry2D):
    tr = geom.theta_r
    p_vs = np.array([-geom.d_sr * math.sin(tr), -geom.d_sr * math.cos(tr)])
    s1 = -p_vs[1] / (geom.y_r + geom.a_r - p_vs[0])
    s2 = -p_vs[1] / (geom.y_r - geom.a_r - p_vs[0])
    return p_vs, TruncationRegion(p_vs, s1, s2)


def footprint_center_2d(geom: LinkGeometry2D) -> np.ndarray:
    """Where the reflected beam line crosses the lens line."""
    d = np.array([math.sin(geom.theta_r), math.cos(geom.theta_r)])
    p = line_intersection(np.zeros(2), d, geom.lens_center, geom.lens_dir)
    if p is None:
        raise ValueError("lens line is parallel to the reflected beam")
    return p


def optimal_reflection_angle(y_l: float, z_l: float) -> float:
    return math.atan2(y_l, z_l)


def reflected_density_2d(r_hat, d_e2e: float, w0hat: float, wavelength: float):
    w = beam.width(d_e2e, w0hat, wavelength)
    r_hat = np.asarray(r_hat, dtype=float)
    return math.sqrt(2.0 / math.pi) / w * np.exp(-2.0 * r_hat * r_hat / (w * w))


def _clip_points(geom: LinkGeometry2D, region: TruncationRegion):
    """Intersections of the two wedge boundaries with the lens line."""
    tt = geom.lens_tilt
    yl, zl = geom.lens_center
    vs = region.p_vs
    out = []
    for s in (region.s1, region.s2):
        m = np.array([[s, -1.0], [math.tan(tt), 1.0]])
        det = s + math.tan(tt)
        if abs(det) < 1e-12:
            out.append(None)
            continue
        rhs = np.array([s * vs[0] - vs[1], math.tan(tt) * yl + zl])
        out.append(np.linalg.solve(m, rhs))
    return out


def lens_segment_2d(geom: LinkGeometry2D):
    """Corners ``p1, p2`` and their clipped versions ``p1_hat, p2_hat``."""
    _, region = virtual_source_2d(geom)
    c = geom.lens_center
    d = geom.lens_dir
    p1 = c + geom.a_l * d
    p2 = c - geom.a_l * d
    pt1, pt2 = _clip_points(geom, region)
    # Order the wedge boundaries along the lens direction (equivalent to the
    # y ordering whenever the lens is not vertical).
    pos = lambda p: float(np.dot(p - c, d))
    bounds = [p for p in (pt1, pt2) if p is not None]
    if len(bounds) < 2:
        return p1, p2, p1, p2
    lo, hi = sorted(bounds, key=pos)

    def clip(p):
        if pos(p) < pos(lo):
            return lo
        if pos(p) > pos(hi):
            return hi
        return p

    return p1, p2, clip(p1), clip(p2)


def conditional_gml_2d(geom: LinkGeometry2D, spec: BeamSpec, branch: str = "collimated",
                       w0hat: float | None = None) -> float:
    """Fraction of the transmitted power that enters the lens."""
    if w0hat is None:
        w0hat = equivalent_waist_2d(geom.d_sr, spec.w0, spec.wavelength, geom.theta_i,
                                    geom.theta_r, branch)
    p_vs, _ = virtual_source_2d(geom)
    pc = footprint_center_2d(geom)
    d_e2e = float(np.linalg.norm(pc - p_vs))
    r_c = float(np.linalg.norm(geom.lens_center - pc))
    if geom.a_l >= d_e2e / 100 or r_c >= d_e2e / 100:
        warnings.warn("lens size or offset is not small against the link length", RuntimeWarning)
    p1, p2, q1, q2 = lens_segment_2d(geom)
    rho1 = float(np.linalg.norm(pc - q1))
    rho2 = float(np.linalg.norm(pc - q2))
    rho12 = float(np.linalg.norm(pc - p1) + np.linalg.norm(pc - p2))
    w = float(beam.width(d_e2e, w0hat, spec.wavelength))
    c = math.sqrt(2.0) * math.cos(geom.theta_rl) / w
    # A footprint center on the lens segment splits the lens into two
    # pieces on either side of the beam axis.
    if abs(rho12 - 2.0 * geom.a_l) <= 1e-9 * geom.a_l:
        return 0.5 * float(erf(c * rho1) + erf(c * rho2))
    return 0.5 * abs(float(erf(c * rho1) - erf(c * rho2)))


def conditional_gml_2d_along(u, geom: LinkGeometry2D, spec: BeamSpec, branch: str = "collimated",
                             w0hat: float | None = None):
    """Vectorized :func:`conditional_gml_2d` for lenses shifted by ``-u``
    along their own line (see :meth:`LinkGeometry2D.with_misalignment`).

    The footprint center and the wedge crossings do not move with ``u``,
    so the lens is an interval on a fixed line clipped to a fixed window.
    """
    if w0hat is None:
        w0hat = equivalent_waist_2d(geom.d_sr, spec.w0, spec.wavelength, geom.theta_i,
                                    geom.theta_r, branch)
    g0 = geom.with_misalignment(0.0)
    p_vs, region = virtual_source_2d(g0)
    pc = footprint_center_2d(g0)
    d = g0.lens_dir
    pos = lambda p: float(np.dot(p - pc, d))
    bounds = [p for p in _clip_points(g0, region) if p is not None]
    lo, hi = (-np.inf, np.inf) if len(bounds) < 2 else sorted(pos(p) for p in bounds)
    c0 = pos(g0.lens_center)
    u = np.asarray(u, dtype=float)
    a = np.clip(c0 - u - geom.a_l, lo, hi)
    b = np.clip(c0 - u + geom.a_l, lo, hi)
    w = float(beam.width(float(np.linalg.norm(pc - p_vs)), w0hat, spec.wavelength))
    c = math.sqrt(2.0) * math.cos(geom.theta_rl) / w
    return 0.5 * (erf(c * b) - erf(c * a))


def gml_approx_params_2d(w_e2e: float, a_l: float, theta_rl: float = 0.0) -> GmlApproxParams2D:
    cr = math.cos(theta_rl)
    nu = math.sqrt(2.0) * cr * a_l / w_e2e
    A0 = float(erf(nu))
    t = math.sqrt(math.pi) * A0 / (2.0 * nu * math.exp(-nu * nu) * cr * cr)
    return GmlApproxParams2D(A0=A0, t=t, nu=nu, w_e2e=w_e2e, theta_rl=theta_rl)


def approx_params_for(geom: LinkGeometry2D, spec: BeamSpec, branch: str = "collimated",
                      w0hat: float | None = None) -> GmlApproxParams2D:
    if w0hat is None:
        w0hat = equivalent_waist_2d(geom.d_sr, spec.w0, spec.wavelength, geom.theta_i,
                                    geom.theta_r, branch)
    w = float(beam.width(geom.d_e2e, w0hat, spec.wavelength))
    return gml_approx_params_2d(w, geom.a_l, geom.theta_rl)


def conditional_gml_2d_approx(u, params: GmlApproxParams2D):
    u = np.asarray(u, dtype=float)
    w = params.w_e2e
    return params.A0 * np.exp(-2.0 * u * u / (params.t * w * w))


def truncation_onset_2d(geom: LinkGeometry2D, u_max: float, tol: float = 1e-12,
                        n_scan: int = 4001) -> float | None:
    """Smallest ``|u|`` at which a lens corner leaves the truncation wedge.

    The search scans ``u`` in ``[0, u_max]`` (both signs) and refines the
    first crossing by bisection. Returns None when no truncation occurs.
    """
    def clipped(u):
        g = geom.with_misalignment(u)
        p1, p2, q1, q2 = lens_segment_2d(g)
        return max(np.linalg.norm(p1 - q1), np.linalg.norm(p2 - q2)) > tol * geom.a_l

    best = None
    for sign in (1.0, -1.0):
        grid = np.linspace(0.0, u_max, n_scan)
        hit = next((i for i, u in enumerate(grid) if clipped(sign * u)), None)
        if hit is None or hit == 0:
            if hit == 0:
                return 0.0
            continue
        lo, hi = grid[hit - 1], grid[hit]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if clipped(sign * mid):
                hi = mid
            else:
                lo = mid
        best = hi if best is None else min(best, hi)
    return best
