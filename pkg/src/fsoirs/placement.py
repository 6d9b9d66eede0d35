"""IRS placement on an ellipse with the Tx and Rx at its foci.

All three nodes share one altitude. The IRS faces the Tx-Rx axis, the
lens faces the reflected beam and ``phi_r = pi``, so every position is an
instance of the special 3D geometry with a closed-form law.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import beam, irs3d
from .channel import outage
from .irs2d import EquivalentWaistError, solve_waist
from .pointing import GmlLaw, SwayModel, law_3d, special_case_variances


@dataclass(frozen=True)
class EllipsePlacement:
    """Ellipse with semi-axes ``a`` (along the Tx-Rx axis) and ``b``.

    The end-to-end path length is ``2 a`` for every IRS position.
    """

    a: float = 500.0
    b: float = 400.0

    def __post_init__(self):
        if not self.a > self.b > 0:
            raise ValueError("need a > b > 0")

    @property
    def focus(self) -> float:
        return math.sqrt(self.a ** 2 - self.b ** 2)

    @property
    def d_e2e(self) -> float:
        return 2.0 * self.a

    def link(self, x_r: float):
        """``(d_sr, d_rl, theta_i, theta_r)`` for the IRS at abscissa ``x_r``."""
        if not abs(x_r) < self.a:
            raise ValueError(f"x_r must lie strictly inside (-{self.a}, {self.a})")
        y_r = self.b * math.sqrt(1.0 - (x_r / self.a) ** 2)
        c = self.focus
        d_sr = math.hypot(x_r + c, y_r)
        d_rl = math.hypot(c - x_r, y_r)
        return d_sr, d_rl, math.acos(y_r / d_sr), math.acos(y_r / d_rl)


def placement_law(place: EllipsePlacement, x_r: float, spec, a_l: float, sway: SwayModel,
                  branch: str = "collimated") -> GmlLaw:
    d_sr, d_rl, ti, tr = place.link(x_r)
    p = irs3d.special_case_params(d_sr, d_rl, ti, tr, spec.w0, spec.wavelength, a_l, branch)
    s1, s2 = special_case_variances(sway, ti, tr)
    hi, lo = max(s1, s2), min(s1, s2)
    q = math.sqrt(lo / hi) if hi > 0 else 1.0
    return law_3d(p.A0, p.t, q, s1 + s2)


def outage_sweep(place: EllipsePlacement, xs, spec, a_l: float, sway: SwayModel, budget, turb,
                 branch: str = "collimated"):
    """Outage probability per IRS position; NaN where no equivalent source exists."""
    out = np.full(len(xs), np.nan)
    for i, x in enumerate(xs):
        try:
            law = placement_law(place, float(x), spec, a_l, sway, branch)
        except EquivalentWaistError:
            continue
        d_sr, d_rl, _, _ = place.link(float(x))
        out[i] = outage(budget, law, turb, d_sr, d_rl)
    return out


def beam_waist_for(width_at_d: float, d: float, wavelength: float) -> float:
    """Diverging waist producing ``width_at_d`` at distance ``d``."""
    w0 = solve_waist(width_at_d, d, wavelength, "diverging")
    assert abs(float(beam.width(d, w0, wavelength)) - width_at_d) <= 1e-9 * width_at_d
    return w0
