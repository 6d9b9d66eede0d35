"""Physical-optics check of the 2D IRS link.

The field reflected by the IRS is propagated to the lens with the scalar
Huygens-Fresnel integral in two dimensions,

    E(r) = (s / (j sqrt(lambda))) * int E_irs(p) exp(j dphi(p)) exp(-j k |r-p|) / sqrt(|r-p|) dp,

where ``s`` is the passivity constant. The kernel sign follows the
``exp(-jkz)`` convention of :mod:`fsoirs.beam`. Four models of the
reflected power on the lens are compared:

``geometric``
    the equivalent-mirror closed form,
``huygens``
    a continuous IRS integrated with composite Simpson at step ``<= lambda/2``,
``discrete``
    point elements at pitch ``d_uc`` carrying the exact phase shift,
``quantized``
    the same elements with ``bits``-bit phase shifts.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable

import numpy as np

from . import beam, kernels
from ._parallel import worker_count
from .beam import BeamSpec
from .irs2d import (LinkGeometry2D, conditional_gml_2d, equivalent_waist_2d, phase_profile_2d,
                    reflected_density_2d, virtual_source_2d)

MODELS = ("geometric", "huygens", "discrete", "quantized")
LENS_CHUNK = 128


@dataclass(frozen=True)
class DiscreteIrs:
    """Element layout of a discrete IRS centered at ``center`` on the IRS line.

    ``bits=None`` keeps continuous phase shifts.
    """

    half_length: float
    d_uc: float
    bits: int | None = None
    center: float = 0.0
    varsigma: float = 1.0

    def __post_init__(self):
        if not self.d_uc > 0:
            raise ValueError("element pitch must be positive")
        if not self.half_length > 0:
            raise ValueError("IRS half-length must be positive")
        if self.bits is not None and not 1 <= self.bits <= 8:
            raise ValueError("quantization bits must lie in 1..8 (None for continuous)")

    @property
    def n_elements(self) -> int:
        return int(math.floor(2.0 * self.half_length / self.d_uc * (1 + 1e-12)))

    def centers(self) -> np.ndarray:
        n = self.n_elements
        return self.center + (np.arange(n) - 0.5 * (n - 1)) * self.d_uc


@dataclass(frozen=True)
class OracleSetup:
    geom: LinkGeometry2D
    spec: BeamSpec
    branch: str = "collimated"
    varsigma: str | float = "caption"
    bits: int = 4
    lens_samples: int = 10_000
    step: float | None = None
    d_uc: float | None = None
    profile: Callable | None = None
    threads: int | None = None

    def __post_init__(self):
        if self.spec.n != 2:
            object.__setattr__(self, "spec", replace(self.spec, n=2))
        if self.lens_samples < 1000:
            raise ValueError("the lens line needs at least 1000 samples")
        if self.step is not None and self.step > 0.5 * self.spec.wavelength * (1 + 1e-12):
            raise ValueError(f"IRS sampling step {self.step:g} m exceeds lambda/2")
        if self.step is not None and not self.step > 0:
            raise ValueError("IRS sampling step must be positive")

    @property
    def pitch(self) -> float:
        return self.d_uc if self.d_uc is not None else 0.5 * self.spec.wavelength

    def phase(self, y):
        if self.profile is not None:
            return self.profile(y)
        return phase_profile_2d(y, self.geom, self.spec, self.branch, self.w0hat)

    @property
    def w0hat(self) -> float:
        g = self.geom
        return equivalent_waist_2d(g.d_sr, self.spec.w0, self.spec.wavelength, g.theta_i,
                                   g.theta_r, self.branch)

    def discrete_irs(self, bits: int | None) -> DiscreteIrs:
        g = self.geom
        return DiscreteIrs(g.a_r, self.pitch, bits, g.y_r,
                           passivity_constant(self.varsigma, g.theta_i, g.theta_r))


@dataclass(frozen=True)
class OracleResult:
    fractions: dict
    lens_samples: int
    irs_samples: dict = dc_field(default_factory=dict)


def passivity_constant(mode: str | float, theta_i: float, theta_r: float) -> float:
    """``"caption"`` gives sqrt(cos ti / cos tr); ``"energy"`` gives
    sqrt(cos ti cos tr), which conserves power for a specular mirror."""
    if isinstance(mode, str):
        if mode == "caption":
            return math.sqrt(math.cos(theta_i) / math.cos(theta_r))
        if mode == "energy":
            return math.sqrt(math.cos(theta_i) * math.cos(theta_r))
        raise ValueError(f"unknown passivity mode {mode!r}")
    return float(mode)


def quantize_phase(phi, bits: int | None):
    """Nearest point of the ``2**bits`` grid on ``[0, 2 pi)``; ties go down."""
    phi = np.mod(np.asarray(phi, dtype=float), 2.0 * math.pi)
    if bits is None:
        return phi
    levels = 1 << bits
    q = 2.0 * math.pi / levels
    idx = np.ceil(phi / q - 0.5).astype(np.int64) % levels
    return idx * q


def incident_field(y, geom: LinkGeometry2D, spec: BeamSpec):
    """Field of the source beam at ``(y, 0)`` on the IRS line."""
    y = np.asarray(y, dtype=float)
    ti = geom.theta_i
    return beam.field(y * math.cos(ti), geom.d_sr + y * math.sin(ti), replace(spec, n=2))


def simpson_weights(n: int, h: float) -> np.ndarray:
    if n < 3 or n % 2 == 0:
        raise ValueError("composite Simpson needs an odd number of at least 3 nodes")
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


def irs_samples(setup: OracleSetup, model: str):
    """Sample positions and complex source weights ``s E_irs exp(j dphi) dw``."""
    g = setup.geom
    s = passivity_constant(setup.varsigma, g.theta_i, g.theta_r)
    if model == "huygens":
        h_max = setup.step if setup.step is not None else 0.5 * setup.spec.wavelength
        n = int(math.ceil(2.0 * g.a_r / h_max))
        n += 1 if n % 2 == 0 else 2  # odd node count
        y = np.linspace(g.y_r - g.a_r, g.y_r + g.a_r, n)
        wq = simpson_weights(n, y[1] - y[0])
        dphi = setup.phase(y)
    elif model in ("discrete", "quantized"):
        irs = setup.discrete_irs(setup.bits if model == "quantized" else None)
        y = irs.centers()
        wq = np.full(y.size, irs.d_uc)
        dphi = quantize_phase(setup.phase(y), irs.bits)
    else:
        raise ValueError(f"no aperture samples for model {model!r}")
    w = s * incident_field(y, g, setup.spec) * np.exp(1j * dphi) * wq
    return y, w


def hf_field(points, y, w, wavelength: float, threads: int | None = None):
    """Huygens-Fresnel field at ``points`` (shape ``(n, 2)``, IRS frame)
    radiated by sources of complex weight ``w`` at ``(y, 0)``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(pts[:, 1] <= 0):
        raise ValueError("observation points must lie in front of the IRS")
    k = 2.0 * math.pi / wavelength
    y = np.ascontiguousarray(y, dtype=float)
    wre = np.ascontiguousarray(np.real(w), dtype=float)
    wim = np.ascontiguousarray(np.imag(w), dtype=float)
    ry = np.ascontiguousarray(pts[:, 0])
    rz = np.ascontiguousarray(pts[:, 1])
    chunks = [slice(i, min(i + LENS_CHUNK, ry.size)) for i in range(0, ry.size, LENS_CHUNK)]

    def run(sl):
        return kernels.hf_line_sum(y, wre, wim, ry[sl], rz[sl], k)

    nw = min(worker_count(threads), len(chunks))
    if nw <= 1:
        parts = [run(sl) for sl in chunks]
    else:
        with ThreadPoolExecutor(max_workers=nw) as ex:
            parts = list(ex.map(run, chunks))
    re = np.concatenate([p[0] for p in parts]) if parts else np.zeros(0)
    im = np.concatenate([p[1] for p in parts]) if parts else np.zeros(0)
    # exp(-j k rz) was factored out inside the kernel.
    return (re + 1j * im) * np.exp(-1j * k * rz) / (1j * math.sqrt(wavelength))


def lens_points(geom: LinkGeometry2D, n: int, half: float | None = None):
    """Midpoints of ``n`` equal cells along the lens line, their offsets
    from the lens center, and the cell length."""
    half = geom.a_l if half is None else half
    ds = 2.0 * half / n
    s = -half + ds * (np.arange(n) + 0.5)
    pts = geom.lens_center[None, :] + s[:, None] * geom.lens_dir[None, :]
    return pts, s, ds


def _flux_density(field, setup: OracleSetup):
    return np.abs(field) ** 2 * math.cos(setup.geom.theta_rl) / beam.beam_power(setup.spec)


def geometric_density(s, setup: OracleSetup):
    """Geometric-optics power density on the lens line at offsets ``s``.

    Points outside the truncation wedge receive nothing.
    """
    g = setup.geom
    p_vs, region = virtual_source_2d(g)
    d = np.array([math.sin(g.theta_r), math.cos(g.theta_r)])
    pts = g.lens_center[None, :] + np.asarray(s, dtype=float)[:, None] * g.lens_dir[None, :]
    rel = pts - p_vs[None, :]
    along = rel @ d
    across = rel[:, 0] * d[1] - rel[:, 1] * d[0]
    dens = math.cos(g.theta_rl) * reflected_density_2d(across, along, setup.w0hat,
                                                       setup.spec.wavelength)
    inside = np.array([region.contains(p) for p in pts])
    return np.where(inside, dens, 0.0)


def density_profile(setup: OracleSetup, model: str, s):
    """Power density per meter of lens line for one model."""
    s = np.asarray(s, dtype=float)
    if model == "geometric":
        return geometric_density(s, setup)
    g = setup.geom
    pts = g.lens_center[None, :] + s[:, None] * g.lens_dir[None, :]
    y, w = irs_samples(setup, model)
    return _flux_density(hf_field(pts, y, w, setup.spec.wavelength, setup.threads), setup)


def lens_power_fraction(setup: OracleSetup, model: str) -> float:
    """Fraction of the transmitted power collected by the lens."""
    if model == "geometric":
        return conditional_gml_2d(setup.geom, setup.spec, setup.branch, setup.w0hat)
    pts, _, ds = lens_points(setup.geom, setup.lens_samples)
    y, w = irs_samples(setup, model)
    dens = _flux_density(hf_field(pts, y, w, setup.spec.wavelength, setup.threads), setup)
    return float(math.fsum(dens) * ds)


def compare_models(setup: OracleSetup, models=MODELS) -> OracleResult:
    fr = {}
    counts = {}
    for m in models:
        fr[m] = lens_power_fraction(setup, m)
        if m != "geometric":
            counts[m] = int(irs_samples(setup, m)[0].size)
    return OracleResult(fractions=fr, lens_samples=setup.lens_samples, irs_samples=counts)


def write_density_csv(path, s, density, header_lines=()):
    """RFC-4180 CSV with ``#`` comment lines ahead of the header row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\r\n")
        wr = csv.writer(fh, lineterminator="\r\n")
        wr.writerow(["y_m", "density_per_m"])
        for a, b in zip(np.asarray(s, float), np.asarray(density, float)):
            wr.writerow([repr(float(a)), repr(float(b))])
