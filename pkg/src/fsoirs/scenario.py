"""Scenario files: loading, validation, variants and object construction.

A scenario is a JSON object with ``schema_version`` 1. Distances are in
meters and angles in radians. Sections:

``dimension``
    2 or 3.
``beam``
    ``wavelength`` and either ``w0`` or ``normalized_width``, the beam
    width at ``d_e2e`` divided by the lens diameter (the diverging waist
    that yields it is used).
``geometry``
    2D: ``d_sr, d_rl, theta_i, theta_r, theta_rl, a_r, a_l`` and optional
    ``y_l, z_l, y_r``. 3D: ``d_sr, d_rl, psi_i, psi_r`` (``[theta, phi]``),
    ``theta_rl, a_l`` and optional ``irs_half``.
``placement``
    optional ellipse ``{a, b}`` replacing the geometry in placement sweeps.
``branch``
    equivalent-source branch: collimated, diverging or matched.
``sway``
    ``sigma_s, sigma_r, sigma_l`` in meters, or in lens radii when
    ``"unit": "a_l"``.
``turbulence``
    ``{"kind": "none"}``, ``{"kind": "LN", "sigma2"}``, ``{"kind": "GG",
    "alpha", "beta"}``, or ``{"kind": "LN"|"GG", "cn2"}``.
``budget``
    ``eta, zeta, kappa, snr_db, gamma_thr_db, snr_convention``.
``rng``
    ``seed`` and ``stream_id``.
``sweep``
    ``variable`` with ``start, stop, steps``.
``oracle`` and ``mc``
    command-specific settings.
``variants``
    list of ``{"name": ..., "<section>.<key>": value}`` overrides; each
    command runs once per variant.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .beam import BeamSpec
from .channel import LinkBudget, TurbulenceModel
from .geometry import AnglePair
from .irs2d import BRANCHES, LinkGeometry2D, solve_waist
from .irs3d import LinkGeometry3D
from .montecarlo import MODES, RngSpec
from .placement import EllipsePlacement
from .pointing import SwayModel

SCHEMA_VERSION = 1

_SECTIONS = {
    "schema_version", "name", "description", "dimension", "beam", "geometry", "placement",
    "branch", "sway", "turbulence", "budget", "rng", "sweep", "oracle", "mc", "variants",
}
_KEYS = {
    "beam": {"wavelength", "w0", "normalized_width"},
    "geometry2": {"d_sr", "d_rl", "theta_i", "theta_r", "theta_rl", "a_r", "a_l", "y_l", "z_l", "y_r"},
    "geometry3": {"d_sr", "d_rl", "psi_i", "psi_r", "theta_rl", "a_l", "a_r", "irs_half"},
    "placement": {"a", "b"},
    "sway": {"sigma_s", "sigma_r", "sigma_l", "unit"},
    "turbulence": {"kind", "sigma2", "alpha", "beta", "cn2"},
    "budget": {"eta", "zeta", "kappa", "snr_db", "gamma_thr_db", "snr_convention"},
    "rng": {"seed", "stream_id"},
    "sweep": {"variable", "start", "stop", "steps"},
    "oracle": {"bits", "lens_samples", "varsigma", "density_half_width", "density_points",
               "step", "d_uc"},
    "mc": {"samples", "mode", "bins"},
}
SWEEP_VARIABLES = ("u_n", "snr_db", "x_r")


class ScenarioError(ValueError):
    """A scenario file is malformed; the message names the offending field."""


@dataclass(frozen=True)
class Scenario:
    data: dict
    source: str = "<memory>"

    @property
    def name(self) -> str:
        return self.data.get("name", Path(self.source).stem)

    @property
    def dimension(self) -> int:
        return int(self.data["dimension"])

    def digest(self) -> str:
        return scenario_hash(self.data)

    # -- variants ----------------------------------------------------------
    def variants(self) -> list[tuple[str, "Scenario"]]:
        """Expanded ``(name, scenario)`` pairs; a scenario without variants
        yields itself under the name ``"base"``."""
        vs = self.data.get("variants") or []
        if not vs:
            return [("base", self)]
        out = []
        for v in vs:
            d = copy.deepcopy({k: val for k, val in self.data.items() if k != "variants"})
            for key, val in v.items():
                if key == "name":
                    continue
                sec, _, field = key.partition(".")
                if not field:
                    d[sec] = copy.deepcopy(val)
                else:
                    d.setdefault(sec, {})[field] = copy.deepcopy(val)
            validate(d, self.source, allow_variants=False)
            out.append((v["name"], Scenario(d, self.source)))
        return out

    def with_overrides(self, **kw) -> "Scenario":
        """Copy with dotted-key overrides applied to the base and to every variant."""
        d = copy.deepcopy(self.data)
        for key, val in kw.items():
            sec, _, field = key.partition(".")
            d.setdefault(sec, {})[field] = val
            for v in d.get("variants") or []:
                v.pop(key, None)
        validate(d, self.source)
        return Scenario(d, self.source)

    # -- objects -----------------------------------------------------------
    def geometry(self):
        g = self.data["geometry"]
        if self.dimension == 2:
            return LinkGeometry2D(g["d_sr"], g["d_rl"], g["theta_i"], g["theta_r"], g["theta_rl"],
                                  g["a_r"], g["a_l"], g.get("y_l"), g.get("z_l"), g.get("y_r", 0.0))
        half = g.get("irs_half", [g.get("a_r", 0.1)] * 2)
        return LinkGeometry3D(g["d_sr"], g["d_rl"], AnglePair(*g["psi_i"]), AnglePair(*g["psi_r"]),
                              g["theta_rl"], g["a_l"], tuple(half))

    @property
    def a_l(self) -> float:
        return float(self.data["geometry"]["a_l"])

    def d_e2e(self) -> float:
        if "placement" in self.data:
            return EllipsePlacement(**self.data["placement"]).d_e2e
        g = self.data["geometry"]
        return float(g["d_sr"] + g["d_rl"])

    def beam(self) -> BeamSpec:
        b = self.data["beam"]
        lam = b["wavelength"]
        if "w0" in b:
            w0 = b["w0"]
        else:
            w0 = solve_waist(b["normalized_width"] * 2.0 * self.a_l, self.d_e2e(), lam, "diverging")
        return BeamSpec(lam, w0, n=self.dimension)

    @property
    def branch(self) -> str:
        return self.data.get("branch", "collimated")

    def sway(self) -> SwayModel:
        s = self.data.get("sway", {})
        c = self.a_l if s.get("unit") == "a_l" else 1.0
        return SwayModel(c * s.get("sigma_s", 0.0), c * s.get("sigma_r", 0.0), c * s.get("sigma_l", 0.0))

    def turbulence(self) -> TurbulenceModel:
        t = self.data.get("turbulence", {"kind": "none"})
        kind = t["kind"]
        if kind == "none":
            return TurbulenceModel("none")
        if "cn2" in t:
            return TurbulenceModel.from_cn2(t["cn2"], self.data["beam"]["wavelength"], self.d_e2e(),
                                            kind=kind)
        if kind == "LN":
            return TurbulenceModel.lognormal(t["sigma2"])
        return TurbulenceModel.gamma_gamma(t["alpha"], t["beta"])

    def budget(self) -> LinkBudget:
        return LinkBudget(**self.data.get("budget", {}))

    def rng(self) -> RngSpec:
        r = self.data.get("rng", {})
        return RngSpec(int(r.get("seed", 0)), int(r.get("stream_id", 0)))

    def placement(self) -> EllipsePlacement | None:
        p = self.data.get("placement")
        return EllipsePlacement(**p) if p else None

    def sweep(self):
        s = self.data.get("sweep")
        if s is None:
            return None, None
        return s["variable"], grid(s["start"], s["stop"], s["steps"])

    def section(self, name: str) -> dict:
        return dict(self.data.get(name, {}))


def grid(start: float, stop: float, steps: int) -> np.ndarray:
    return np.linspace(float(start), float(stop), int(steps))


def parse_grid(text: str) -> tuple[float, float, int]:
    """Parse ``a:b:n`` into ``(a, b, n)``."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ScenarioError(f"grid must look like start:stop:steps, got {text!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ScenarioError(f"grid must look like start:stop:steps, got {text!r}") from exc
    if n < 1:
        raise ScenarioError("grid needs at least one step")
    return a, b, n


def scenario_hash(data: dict) -> str:
    canon = json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


# -- validation --------------------------------------------------------------

def _err(src, path, msg):
    raise ScenarioError(f"{src}: {path}: {msg}")


def _num(src, path, v, lo=None, hi=None, lo_open=False, hi_open=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        _err(src, path, f"expected a finite number, got {v!r}")
    if lo is not None and (v < lo or (lo_open and v == lo)):
        _err(src, path, f"must be {'>' if lo_open else '>='} {lo:g}, got {v!r}")
    if hi is not None and (v > hi or (hi_open and v == hi)):
        _err(src, path, f"must be {'<' if hi_open else '<='} {hi:g}, got {v!r}")
    return v


def _keys(src, sec, d, allowed):
    if not isinstance(d, dict):
        _err(src, sec, "expected an object")
    extra = sorted(set(d) - allowed)
    if extra:
        _err(src, sec, f"unknown keys {extra}; allowed: {sorted(allowed)}")


def _angle_pair(src, path, v):
    if not (isinstance(v, list) and len(v) == 2):
        _err(src, path, "expected [theta, phi] in radians")
    _num(src, path + "[0]", v[0], 0.0, math.pi / 2, hi_open=True)
    _num(src, path + "[1]", v[1], -math.pi, math.pi, lo_open=True)


def validate(d: dict, src: str = "<memory>", allow_variants: bool = True) -> None:
    if not isinstance(d, dict):
        _err(src, "$", "scenario must be a JSON object")
    if d.get("schema_version") != SCHEMA_VERSION:
        _err(src, "schema_version", f"expected {SCHEMA_VERSION}, got {d.get('schema_version')!r}")
    extra = sorted(set(d) - _SECTIONS)
    if extra:
        _err(src, "$", f"unknown sections {extra}")
    dim = d.get("dimension")
    if dim not in (2, 3):
        _err(src, "dimension", "must be 2 or 3")
    half_pi = math.pi / 2

    b = d.get("beam")
    if b is None:
        _err(src, "beam", "section is required")
    _keys(src, "beam", b, _KEYS["beam"])
    _num(src, "beam.wavelength", b.get("wavelength"), 0.0, lo_open=True)
    if ("w0" in b) == ("normalized_width" in b):
        _err(src, "beam", "give exactly one of w0 and normalized_width")
    if "w0" in b:
        _num(src, "beam.w0", b["w0"], 0.0, lo_open=True)
    else:
        _num(src, "beam.normalized_width", b["normalized_width"], 0.0, lo_open=True)

    g = d.get("geometry")
    if g is None:
        _err(src, "geometry", "section is required")
    _keys(src, "geometry", g, _KEYS["geometry2" if dim == 2 else "geometry3"])
    for k in ("d_sr", "d_rl", "a_l"):
        _num(src, f"geometry.{k}", g.get(k), 0.0, lo_open=True)
    _num(src, "geometry.theta_rl", g.get("theta_rl"), -half_pi, half_pi, True, True)
    if dim == 2:
        _num(src, "geometry.a_r", g.get("a_r"), 0.0, lo_open=True)
        for k in ("theta_i", "theta_r"):
            _num(src, f"geometry.{k}", g.get(k), 0.0, half_pi, hi_open=True)
        if ("y_l" in g) != ("z_l" in g):
            _err(src, "geometry", "give both y_l and z_l or neither")
        for k in ("y_l", "z_l", "y_r"):
            if k in g:
                _num(src, f"geometry.{k}", g[k])
    else:
        _angle_pair(src, "geometry.psi_i", g.get("psi_i"))
        _angle_pair(src, "geometry.psi_r", g.get("psi_r"))
        if g["psi_i"][1] != 0:
            _err(src, "geometry.psi_i[1]", "the incident azimuth must be 0 (axes follow the beam)")
        if "irs_half" in g:
            h = g["irs_half"]
            if not (isinstance(h, list) and len(h) == 2):
                _err(src, "geometry.irs_half", "expected [half_x, half_y]")
            for i, v in enumerate(h):
                _num(src, f"geometry.irs_half[{i}]", v, 0.0, lo_open=True)

    if "placement" in d:
        _keys(src, "placement", d["placement"], _KEYS["placement"])
        a = _num(src, "placement.a", d["placement"].get("a"), 0.0, lo_open=True)
        _num(src, "placement.b", d["placement"].get("b"), 0.0, a, True, True)
    if d.get("branch", "collimated") not in BRANCHES:
        _err(src, "branch", f"must be one of {list(BRANCHES)}")

    s = d.get("sway", {})
    _keys(src, "sway", s, _KEYS["sway"])
    for k in ("sigma_s", "sigma_r", "sigma_l"):
        if k in s:
            _num(src, f"sway.{k}", s[k], 0.0)
    if s.get("unit", "m") not in ("m", "a_l"):
        _err(src, "sway.unit", "must be 'm' or 'a_l'")

    t = d.get("turbulence", {"kind": "none"})
    _keys(src, "turbulence", t, _KEYS["turbulence"])
    kind = t.get("kind")
    if kind not in ("none", "LN", "GG"):
        _err(src, "turbulence.kind", "must be none, LN or GG")
    if kind != "none" and "cn2" in t:
        _num(src, "turbulence.cn2", t["cn2"], 0.0, lo_open=True)
    elif kind == "LN":
        _num(src, "turbulence.sigma2", t.get("sigma2"), 0.0, lo_open=True)
    elif kind == "GG":
        _num(src, "turbulence.alpha", t.get("alpha"), 0.0, lo_open=True)
        _num(src, "turbulence.beta", t.get("beta"), 0.0, lo_open=True)

    bud = d.get("budget", {})
    _keys(src, "budget", bud, _KEYS["budget"])
    for k in ("eta", "zeta"):
        if k in bud:
            _num(src, f"budget.{k}", bud[k], 0.0, 1.0, lo_open=True)
    if "kappa" in bud:
        _num(src, "budget.kappa", bud["kappa"], 0.0)
    for k in ("snr_db", "gamma_thr_db"):
        if k in bud:
            _num(src, f"budget.{k}", bud[k])
    if bud.get("snr_convention", "transmit") not in ("transmit", "received"):
        _err(src, "budget.snr_convention", "must be 'transmit' or 'received'")

    r = d.get("rng", {})
    _keys(src, "rng", r, _KEYS["rng"])
    for k in ("seed", "stream_id"):
        if k in r and (not isinstance(r[k], int) or isinstance(r[k], bool) or not 0 <= r[k] < 2 ** 64):
            _err(src, f"rng.{k}", "must be an integer in [0, 2**64)")

    if "sweep" in d:
        sw = d["sweep"]
        _keys(src, "sweep", sw, _KEYS["sweep"])
        if sw.get("variable") not in SWEEP_VARIABLES:
            _err(src, "sweep.variable", f"must be one of {list(SWEEP_VARIABLES)}")
        _num(src, "sweep.start", sw.get("start"))
        _num(src, "sweep.stop", sw.get("stop"))
        if not isinstance(sw.get("steps"), int) or sw["steps"] < 1:
            _err(src, "sweep.steps", "must be a positive integer")
        if sw["variable"] == "x_r" and "placement" not in d:
            _err(src, "sweep", "an x_r sweep needs a placement section")

    o = d.get("oracle", {})
    _keys(src, "oracle", o, _KEYS["oracle"])
    if "bits" in o and (not isinstance(o["bits"], int) or not 1 <= o["bits"] <= 8):
        _err(src, "oracle.bits", "must be an integer in 1..8")
    if "lens_samples" in o and (not isinstance(o["lens_samples"], int) or o["lens_samples"] < 1000):
        _err(src, "oracle.lens_samples", "must be an integer >= 1000")
    if "varsigma" in o and not (o["varsigma"] in ("caption", "energy")
                                or isinstance(o["varsigma"], (int, float))):
        _err(src, "oracle.varsigma", "must be 'caption', 'energy' or a number")
    for k in ("density_half_width", "step", "d_uc"):
        if k in o:
            _num(src, f"oracle.{k}", o[k], 0.0, lo_open=True)
    if "density_points" in o and (not isinstance(o["density_points"], int) or o["density_points"] < 2):
        _err(src, "oracle.density_points", "must be an integer >= 2")

    m = d.get("mc", {})
    _keys(src, "mc", m, _KEYS["mc"])
    if "samples" in m and (not isinstance(m["samples"], int) or m["samples"] < 0):
        _err(src, "mc.samples", "must be a non-negative integer")
    if "mode" in m and m["mode"] not in MODES:
        _err(src, "mc.mode", f"must be one of {list(MODES)}")
    if m.get("mode") == "3D" and dim != 3 or m.get("mode", "3D") != "3D" and dim == 3:
        _err(src, "mc.mode", "mode does not match the scenario dimension")

    if "variants" in d:
        if not allow_variants:
            _err(src, "variants", "variants cannot be nested")
        vs = d["variants"]
        if not isinstance(vs, list):
            _err(src, "variants", "expected a list")
        names = set()
        for i, v in enumerate(vs):
            if not isinstance(v, dict) or not isinstance(v.get("name"), str) or not v["name"]:
                _err(src, f"variants[{i}]", "each variant needs a non-empty name")
            if v["name"] in names:
                _err(src, f"variants[{i}].name", f"duplicate name {v['name']!r}")
            names.add(v["name"])
            for key in v:
                if key != "name" and key.split(".")[0] not in _SECTIONS - {"variants", "schema_version"}:
                    _err(src, f"variants[{i}].{key}", "override must name a section or section.key")


def load(path) -> Scenario:
    p = Path(path)
    if not p.exists():
        builtin = resources.files("fsoirs") / "scenarios" / (p.name if p.suffix else p.name + ".json")
        if builtin.is_file():
            return loads(builtin.read_text(encoding="utf-8"), f"builtin:{builtin.name}")
        raise ScenarioError(f"{path}: no such file (and no built-in scenario of that name)")
    return loads(p.read_text(encoding="utf-8"), str(p))


def loads(text: str, source: str = "<memory>") -> Scenario:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{source}: invalid JSON: {exc}") from exc
    validate(d, source)
    # Expanding the variants validates each of them up front.
    sc = Scenario(d, source)
    sc.variants()
    return sc


def builtin_names() -> list[str]:
    root = resources.files("fsoirs") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))
