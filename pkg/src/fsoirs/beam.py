"""Gaussian and astigmatic Gaussian beams in 2D and 3D.

All functions take SI units and broadcast over numpy arrays. The phase
convention follows ``exp(-jkz)`` propagation: the on-axis phase is
``-k z + gouy``. Phases are returned unwrapped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import AnglePair, rot, squeeze


@dataclass(frozen=True)
class BeamSpec:
    """A simple (``w02 is None``) or rotated astigmatic Gaussian beam."""

    wavelength: float
    w0: float
    w02: float | None = None
    phi_rot: float = 0.0
    E0: float = 1.0
    n: int = 3

    def __post_init__(self):
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if self.w0 <= 0 or (self.w02 is not None and self.w02 <= 0):
            raise ValueError("waist radii must be positive")
        if self.n not in (2, 3):
            raise ValueError("space dimension must be 2 or 3")

    @property
    def k(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def astigmatic(self) -> bool:
        return self.w02 is not None

    @property
    def waists(self) -> tuple[float, float]:
        return (self.w0, self.w02 if self.w02 is not None else self.w0)


@dataclass(frozen=True)
class ObliquePlane:
    """A plane at distance ``d`` along the beam line, hit at angles ``psi``."""

    d: float
    psi: AnglePair

    def __post_init__(self):
        if self.d <= 0:
            raise ValueError("plane distance must be positive")


def rayleigh(w0, wavelength):
    return np.pi * np.asarray(w0) ** 2 / wavelength


def width(z, w0, wavelength):
    zr = rayleigh(w0, wavelength)
    return w0 * np.sqrt(1.0 + (np.asarray(z, dtype=float) / zr) ** 2)


def inv_curvature(z, w0, wavelength):
    """``1/R(z)``; exactly zero at the waist."""
    z = np.asarray(z, dtype=float)
    zr = rayleigh(w0, wavelength)
    return z / (z * z + zr * zr)


def curvature(z, w0, wavelength):
    """Wavefront radius ``z (1 + (zR/z)^2)``; ``inf`` marks the flat waist."""
    inv = inv_curvature(z, w0, wavelength)
    with np.errstate(divide="ignore"):
        out = np.where(inv == 0.0, np.inf, 1.0 / np.where(inv == 0.0, 1.0, inv))
    return out[()] if np.ndim(out) == 0 else out


def gouy(z, w0, wavelength, n=3):
    return 0.5 * (n - 1) * np.arctan(np.asarray(z, dtype=float) / rayleigh(w0, wavelength))


def gouy_astig(z, w01, w02, wavelength):
    z = np.asarray(z, dtype=float)
    return 0.5 * (np.arctan(z / rayleigh(w01, wavelength)) + np.arctan(z / rayleigh(w02, wavelength)))


def gauss_phase(a, z, spec: BeamSpec):
    """Phase of a simple Gaussian beam at transverse offset ``a``, depth ``z``."""
    return -spec.k * np.asarray(z, dtype=float) + gauss_excess_phase(a, z, spec)


def gauss_excess_phase(a, z, spec: BeamSpec):
    """:func:`gauss_phase` without the ``-k z`` term.

    Differences of two beam phases at nearby depths lose most of their
    digits to ``k z``; callers that need them subtract the depths first and
    add the excess parts separately.
    """
    a = np.asarray(a, dtype=float)
    z = np.asarray(z, dtype=float)
    return (-0.5 * spec.k * a * a * inv_curvature(z, spec.w0, spec.wavelength)
            + gouy(z, spec.w0, spec.wavelength, spec.n))


def _rotated(ahat, phi_rot):
    ahat = np.asarray(ahat, dtype=float)
    if phi_rot == 0.0:
        return ahat[..., 0], ahat[..., 1]
    r = rot(phi_rot)
    return (r[0, 0] * ahat[..., 0] + r[0, 1] * ahat[..., 1],
            r[1, 0] * ahat[..., 0] + r[1, 1] * ahat[..., 1])


def astig_phase(ahat, z, spec: BeamSpec):
    """Phase of a rotated astigmatic beam; ``ahat`` has shape ``(..., 2)``."""
    return -spec.k * np.asarray(z, dtype=float) + astig_excess_phase(ahat, z, spec)


def astig_excess_phase(ahat, z, spec: BeamSpec):
    """:func:`astig_phase` without the ``-k z`` term."""
    w01, w02 = spec.waists
    x, y = _rotated(ahat, spec.phi_rot)
    z = np.asarray(z, dtype=float)
    k, lam = spec.k, spec.wavelength
    return (-0.5 * k * (x * x * inv_curvature(z, w01, lam) + y * y * inv_curvature(z, w02, lam))
            + gouy_astig(z, w01, w02, lam))


def intensity_orth(a, z, spec: BeamSpec):
    """Unit-power transverse density of the beam at depth ``z``.

    For 2D beams ``a`` is a scalar offset; for 3D beams it is either a
    radius or an array of shape ``(..., 2)``.
    """
    lam = spec.wavelength
    if spec.n == 2:
        w = width(z, spec.w0, lam)
        a = np.asarray(a, dtype=float)
        return math.sqrt(2.0 / math.pi) / w * np.exp(-2.0 * a * a / (w * w))
    if spec.astigmatic:
        w01, w02 = spec.waists
        w1, w2 = width(z, w01, lam), width(z, w02, lam)
        x, y = _rotated(a, spec.phi_rot)
        return 2.0 / (math.pi * w1 * w2) * np.exp(-2.0 * (x * x / (w1 * w1) + y * y / (w2 * w2)))
    w = width(z, spec.w0, lam)
    a = np.asarray(a, dtype=float)
    r2 = a * a if a.ndim == 0 or a.shape[-1] != 2 else np.sum(a * a, axis=-1)
    return 2.0 / (math.pi * w * w) * np.exp(-2.0 * r2 / (w * w))


def field(a, z, spec: BeamSpec):
    """Complex field of a simple Gaussian beam (``E0`` on axis at the waist)."""
    a = np.asarray(a, dtype=float)
    w = width(z, spec.w0, spec.wavelength)
    amp = spec.E0 * (spec.w0 / w) ** (0.5 * (spec.n - 1)) * np.exp(-a * a / (w * w))
    return amp * np.exp(1j * gauss_phase(a, z, spec))


def beam_power(spec: BeamSpec) -> float:
    """Total power carried by ``field`` (integral of ``|E|^2`` across the beam)."""
    if spec.n == 2:
        return spec.E0 ** 2 * spec.w0 * math.sqrt(math.pi / 2.0)
    w01, w02 = spec.waists
    return spec.E0 ** 2 * math.pi * w01 * w02 / 2.0


def oblique_density(density_orth: Callable, plane: ObliquePlane, atilde):
    """Density on a tilted plane from the density orthogonal to the beam.

    ``atilde`` are in-plane coordinates with shape ``(..., 2)``; they are
    mapped by ``T_theta R_{-phi}`` and the result is scaled by
    ``cos(theta)`` so that the flux through the plane is preserved.
    """
    th, ph = plane.psi.theta, plane.psi.phi
    m = squeeze(th) @ rot(-ph)
    atilde = np.asarray(atilde, dtype=float)
    ahat = atilde @ m.T
    return math.cos(th) * density_orth(ahat)


def oblique_density_2d(density_orth: Callable, theta: float, y):
    """Line version of :func:`oblique_density` for 2D beams."""
    c = math.cos(theta)
    return c * density_orth(c * np.asarray(y, dtype=float))
