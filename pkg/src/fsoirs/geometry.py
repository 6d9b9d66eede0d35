"""Planar transforms shared by the 2D and 3D link analyses.

Matrices are plain 2x2 numpy arrays. ``rot`` is the counter-clockwise
rotation and ``squeeze`` the projection ``diag(cos tau, 1)`` that maps a
tilted plane onto the plane orthogonal to a beam.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class SingularTransformError(ValueError):
    """Raised when inverting a squeeze with cos(tau) == 0."""


@dataclass(frozen=True)
class AnglePair:
    """Elevation ``theta`` and azimuth ``phi`` of a direction, in radians."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError("angles must be finite")
        if not 0.0 <= self.theta < math.pi / 2:
            raise ValueError(f"elevation must lie in [0, pi/2), got {self.theta}")
        if not -math.pi < self.phi <= math.pi:
            raise ValueError(f"azimuth must lie in (-pi, pi], got {self.phi}")


def rot(tau: float) -> np.ndarray:
    c, s = math.cos(tau), math.sin(tau)
    return np.array([[c, -s], [s, c]])


def squeeze(tau: float) -> np.ndarray:
    return np.array([[math.cos(tau), 0.0], [0.0, 1.0]])


def squeeze_inv(tau: float) -> np.ndarray:
    c = math.cos(tau)
    if abs(c) < 1e-15:
        raise SingularTransformError(f"squeeze({tau}) is singular")
    return np.array([[1.0 / c, 0.0], [0.0, 1.0]])


def eig_sym_2x2(m) -> tuple[float, float, np.ndarray, np.ndarray]:
    """Closed-form eigendecomposition of a symmetric 2x2 matrix.

    Returns ``(lam1, lam2, v1, v2)`` with ``lam1 >= lam2`` and a
    right-handed orthonormal pair (``det[v1 v2] = +1``). Degenerate input
    returns the canonical basis.
    """
    m = np.asarray(m, dtype=float)
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    scale = max(abs(a), abs(b), abs(c), abs(d), 1e-300)
    if abs(b - c) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    b = 0.5 * (b + c)
    half_diff = 0.5 * (a - d)
    mean = 0.5 * (a + d)
    radius = math.hypot(half_diff, b)
    if radius <= 1e-15 * scale:
        return mean, mean, np.array([1.0, 0.0]), np.array([0.0, 1.0])
    # The root of larger magnitude is free of cancellation; the other one
    # follows from the determinant, which keeps small eigenvalues accurate.
    big = mean + math.copysign(radius, mean)
    small = (a * d - b * b) / big
    lam1, lam2 = max(big, small), min(big, small)
    # Half-angle of the principal axis; atan2 keeps the branch stable.
    ang = 0.5 * math.atan2(b, half_diff)
    v1 = np.array([math.cos(ang), math.sin(ang)])
    v2 = np.array([-math.sin(ang), math.cos(ang)])
    return lam1, lam2, v1, v2


def line_intersection(p, d1, q, d2):
    """Intersection of lines ``p + s d1`` and ``q + t d2``; None if parallel."""
    a = np.array([[d1[0], -d2[0]], [d1[1], -d2[1]]], dtype=float)
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    if abs(det) < 1e-12:
        return None
    rhs = np.asarray(q, float) - np.asarray(p, float)
    s = (rhs[0] * a[1, 1] - a[0, 1] * rhs[1]) / det
    return np.asarray(p, float) + s * np.asarray(d1, float)
