"""Command-line front end.

Every command reads a scenario, runs once per variant and writes UTF-8 CSV
files (CRLF line ends, ``#`` comment lines carrying the scenario hash)
plus one JSON summary. Outputs depend only on the scenario and the flags.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, irs2d, irs3d, montecarlo, oracle, pointing, scenario
from .channel import outage
from .geometry import AnglePair
from .placement import outage_sweep, placement_law
from .scenario import Scenario, ScenarioError

DEFAULT_GRIDS = {
    "gml": ("u_n", 0.0, 6.0, 601),
    "outage": ("snr_db", 0.0, 60.0, 13),
}


# -- output helpers ----------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(path: Path, header, rows, comments) -> None:
    buf = io.StringIO(newline="")
    for c in comments:
        buf.write(f"# {c}\r\n")
    wr = csv.writer(buf, lineterminator="\r\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([_fmt(v) for v in r])
    path.write_bytes(buf.getvalue().encode("utf-8"))


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def write_json(path: Path, obj) -> None:
    text = json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"
    path.write_bytes(text.encode("utf-8"))


class Run:
    """Output bookkeeping shared by the commands."""

    def __init__(self, command: str, sc: Scenario, out: Path, flags: dict):
        self.command = command
        self.sc = sc
        self.out = out
        self.flags = flags
        self.files: list[str] = []
        out.mkdir(parents=True, exist_ok=True)

    def comments(self, variant: str):
        flags = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(self.flags.items()) if v is not None)
        return [f"fsoirs {__version__} command={self.command}",
                f"scenario={self.sc.name} sha256={self.sc.digest()}",
                f"variant={variant}" + (f" {flags}" if flags else "")]

    def csv(self, variant: str, header, rows, suffix: str = "") -> str:
        name = f"{self.command}_{self.sc.name}_{variant}{suffix}.csv"
        write_csv(self.out / name, header, rows, self.comments(variant))
        self.files.append(name)
        return name

    def summary(self, body: dict) -> Path:
        path = self.out / f"{self.command}_{self.sc.name}.json"
        doc = {"command": self.command, "scenario": self.sc.name,
               "scenario_sha256": self.sc.digest(), "version": __version__,
               "flags": {k: v for k, v in sorted(self.flags.items()) if v is not None},
               "files": sorted(self.files), **body}
        write_json(path, doc)
        return path


def _require_dim(sc: Scenario, dim: int, command: str):
    if sc.dimension != dim:
        raise ScenarioError(f"{sc.source}: the {command} command needs a {dim}D scenario")


# -- commands ----------------------------------------------------------------

def cmd_gml(run: Run, threads=None) -> dict:
    """Conditional GML against normalized misalignment, exact and approximate."""
    results = {}
    for vname, sc in run.sc.variants():
        _require_dim(sc, 2, "gml")
        var, u_n = sc.sweep()
        if var != "u_n":
            raise ScenarioError(f"{sc.source}: gml sweeps u_n, not {var}")
        geom, spec = sc.geometry(), sc.beam()
        w0hat = irs2d.equivalent_waist_2d(geom.d_sr, spec.w0, spec.wavelength, geom.theta_i,
                                          geom.theta_r, sc.branch)
        u = u_n * 2.0 * geom.a_l
        exact = irs2d.conditional_gml_2d_along(u, geom, spec, sc.branch, w0hat)
        params = irs2d.approx_params_for(geom, spec, sc.branch, w0hat)
        approx = irs2d.conditional_gml_2d_approx(u, params)
        u_max = float(np.max(np.abs(u))) if u.size else 0.0
        onset = irs2d.truncation_onset_2d(geom, max(u_max, 2.0 * geom.a_l))
        knee = None if onset is None else onset / (2.0 * geom.a_l)
        below = np.abs(u_n) < (knee if knee is not None else np.inf)
        dev = float(np.max(np.abs(exact - approx)[below]) / params.A0) if np.any(below) else None
        run.csv(vname, ["u_n", "h_g_exact", "h_g_approx"], zip(u_n, exact, approx))
        results[vname] = {"A0": params.A0, "t": params.t, "w_e2e": params.w_e2e, "w0hat": w0hat,
                          "knee_u_n": knee, "max_rel_dev_below_knee": dev}
    return {"variants": results}


def _law(sc: Scenario):
    geom, spec, sway = sc.geometry(), sc.beam(), sc.sway()
    if sc.dimension == 2:
        return pointing.gml_law_2d(geom, spec, sway, sc.branch)
    return pointing.gml_law_3d(geom, spec, sway, sc.branch)


def cmd_pdf(run: Run, threads=None) -> dict:
    """Analytic GML density with Monte Carlo bin masses on a fixed grid."""
    results = {}
    for vname, sc in run.sc.variants():
        law = _law(sc)
        mc = sc.section("mc")
        n = int(mc.get("samples", 1_000_000))
        mode = mc.get("mode", "3D" if sc.dimension == 3 else "2D-approx")
        edges = np.linspace(0.0, law.A0, montecarlo.L1_BINS + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        pdf = pointing.gml_pdf(mid, law)
        m_an = pointing.bin_masses(law, edges)
        m_mc = np.full(mid.size, np.nan)
        l1 = None
        if n > 0:
            res = montecarlo.empirical_gml(sc.geometry(), sc.beam(), sc.sway(), n, mode, sc.rng(),
                                           sc.branch, threads)
            m_mc = res.histogram(edges)
            m_mc[-1] += np.count_nonzero(res.samples > law.A0) / n
            l1 = float(np.sum(np.abs(m_mc - m_an)))
        run.csv(vname, ["h_lo", "h_hi", "pdf_analytic", "mass_analytic", "mass_mc"],
                zip(edges[:-1], edges[1:], pdf, m_an, m_mc))
        results[vname] = {"A0": law.A0, "variant": law.variant, "varpi": law.varpi, "q": law.q,
                          "omega": law.omega, "mc_samples": n, "mc_mode": mode, "l1": l1,
                          "pdf_mass": pointing.pdf_mass(law)}
    return {"variants": results}


def _placement_sampler(sc: Scenario, x_r: float):
    place = sc.placement()
    d_sr, d_rl, ti, tr = place.link(x_r)
    geom = irs3d.LinkGeometry3D(d_sr, d_rl, AnglePair(ti, 0.0), AnglePair(tr, math.pi), 0.0, sc.a_l)
    return montecarlo.gml_sampler(geom, sc.beam(), sc.sway(), "3D", sc.branch), d_sr, d_rl


def cmd_outage(run: Run, threads=None) -> dict:
    """Outage probability against SNR or against the IRS position."""
    results = {}
    for vname, sc in run.sc.variants():
        var, xs = sc.sweep()
        budget, turb = sc.budget(), sc.turbulence()
        n = int(sc.section("mc").get("samples", 0))
        rows = []
        if var == "snr_db":
            geom = sc.geometry()
            law = _law(sc)
            sampler = None
            if n > 0:
                mode = "3D" if sc.dimension == 3 else "2D-approx"
                sampler = montecarlo.gml_sampler(geom, sc.beam(), sc.sway(), mode, sc.branch)
            for x in xs:
                b = replace(budget, snr_db=float(x))
                pa = outage(b, law, turb, geom.d_sr, geom.d_rl)
                pm = se = math.nan
                if sampler is not None:
                    r = montecarlo.empirical_outage(b, sampler, turb, geom.d_sr, geom.d_rl, n,
                                                    sc.rng(), threads)
                    pm, se = r.estimates["p_out"]
                rows.append((x, pa, pm, se))
            header = ["snr_db", "p_out_analytic", "p_out_mc", "p_out_mc_se"]
        elif var == "x_r":
            _require_dim(sc, 3, "outage placement sweep")
            place = sc.placement()
            pa_all = outage_sweep(place, xs, sc.beam(), sc.a_l, sc.sway(), budget, turb, sc.branch)
            for x, pa in zip(xs, pa_all):
                d_sr, d_rl, ti, tr = place.link(float(x))
                pm = se = math.nan
                if n > 0 and math.isfinite(pa):
                    sampler, _, _ = _placement_sampler(sc, float(x))
                    r = montecarlo.empirical_outage(budget, sampler, turb, d_sr, d_rl, n, sc.rng(),
                                                    threads)
                    pm, se = r.estimates["p_out"]
                rows.append((x, d_sr, d_rl, ti, tr, pa, pm, se))
            header = ["x_r", "d_sr", "d_rl", "theta_i", "theta_r", "p_out_analytic", "p_out_mc",
                      "p_out_mc_se"]
        else:
            raise ScenarioError(f"{sc.source}: outage sweeps snr_db or x_r, not {var}")
        run.csv(vname, header, rows)
        pa = np.array([r[-3] for r in rows], dtype=float)
        summ = {"sweep": var, "mc_samples": n, "turbulence": turb.kind,
                "snr_convention": budget.snr_convention, "gamma_thr_db": budget.gamma_thr_db}
        if np.any(np.isfinite(pa)):
            i = int(np.nanargmin(pa))
            summ.update(argmin=float(xs[i]), min_p_out=float(pa[i]))
        results[vname] = summ
    return {"variants": results}


def _oracle_setup(sc: Scenario, bits, threads) -> oracle.OracleSetup:
    o = sc.section("oracle")
    return oracle.OracleSetup(sc.geometry(), sc.beam(), branch=sc.branch,
                              varsigma=o.get("varsigma", "caption"),
                              bits=int(bits if bits is not None else o.get("bits", 4)),
                              lens_samples=int(o.get("lens_samples", 10_000)),
                              step=o.get("step"), d_uc=o.get("d_uc"), threads=threads)


def cmd_oracle(run: Run, threads=None, bits=None) -> dict:
    """Four-model lens power fractions plus density profiles on the lens line."""
    results = {}
    for vname, sc in run.sc.variants():
        _require_dim(sc, 2, "oracle")
        setup = _oracle_setup(sc, bits, threads)
        res = oracle.compare_models(setup)
        run.csv(vname, ["model", "fraction"], [(m, res.fractions[m]) for m in oracle.MODELS])
        o = sc.section("oracle")
        half = float(o.get("density_half_width", 0.3))
        s = np.linspace(-half, half, int(o.get("density_points", 601)))
        for m in oracle.MODELS:
            dens = oracle.density_profile(setup, m, s)
            run.csv(vname, ["y_m", "density_per_m"], zip(s, dens), suffix=f"_density_{m}")
        results[vname] = {"fractions": res.fractions, "bits": setup.bits,
                          "lens_samples": res.lens_samples, "irs_samples": res.irs_samples,
                          "varsigma": oracle.passivity_constant(setup.varsigma, setup.geom.theta_i,
                                                                setup.geom.theta_r)}
    return {"variants": results}


def cmd_mc(run: Run, threads=None) -> dict:
    """Monte Carlo GML histogram, optionally with an outage estimate."""
    results = {}
    for vname, sc in run.sc.variants():
        mc = sc.section("mc")
        n = int(mc.get("samples", 1_000_000))
        mode = mc.get("mode", "3D" if sc.dimension == 3 else "2D-approx")
        geom, spec, sway = sc.geometry(), sc.beam(), sc.sway()
        res = montecarlo.empirical_gml(geom, spec, sway, n, mode, sc.rng(), sc.branch, threads,
                                       bins=mc.get("bins", "fd"))
        run.csv(vname, ["bin_lo", "bin_hi", "mass"], zip(res.edges[:-1], res.edges[1:], res.masses))
        law = _law(sc)
        summ = {"samples": n, "mode": mode, "mean": res.estimates["mean"][0],
                "mean_se": res.estimates["mean"][1], "A0": res.estimates["A0"][0],
                "analytic_mean": pointing.mean_gml(law),
                "l1_vs_analytic": montecarlo.l1_distance(res, law)}
        turb = sc.turbulence()
        if turb.kind != "none":
            sampler = montecarlo.gml_sampler(geom, spec, sway, mode, sc.branch)
            b = sc.budget()
            r = montecarlo.empirical_outage(b, sampler, turb, geom.d_sr, geom.d_rl, n, sc.rng(),
                                            threads)
            summ.update(p_out_mc=r.estimates["p_out"][0], p_out_mc_se=r.estimates["p_out"][1],
                        p_out_analytic=outage(b, law, turb, geom.d_sr, geom.d_rl))
        results[vname] = summ
    return {"variants": results}


COMMANDS = {"gml": cmd_gml, "pdf": cmd_pdf, "outage": cmd_outage, "oracle": cmd_oracle, "mc": cmd_mc}


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fsoirs", description="IRS-assisted FSO channel models.")
    p.add_argument("--version", action="version", version=f"fsoirs {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=fn.__doc__.splitlines()[0], description=fn.__doc__)
        sp.add_argument("--scenario", required=True,
                        help="scenario JSON file, or the name of a built-in scenario")
        sp.add_argument("--out", default=".", help="output directory (default: current)")
        sp.add_argument("--seed", type=int, help="override rng.seed")
        sp.add_argument("--grid", help="sweep grid start:stop:steps")
        sp.add_argument("--threads", type=int, help="worker threads (FSOIRS_THREADS caps this)")
        sp.add_argument("--snr-convention", choices=("transmit", "received"),
                        help="override budget.snr_convention")
        sp.add_argument("--samples", type=int, help="override mc.samples")
        if name == "oracle":
            sp.add_argument("--bits", type=int, help="phase quantization bits (default 4)")
    return p


def _apply_flags(sc: Scenario, args, command: str) -> Scenario:
    over = {}
    if args.seed is not None:
        over["rng.seed"] = args.seed
    if args.snr_convention is not None:
        over["budget.snr_convention"] = args.snr_convention
    if args.samples is not None:
        over["mc.samples"] = args.samples
    if getattr(args, "bits", None) is not None:
        over["oracle.bits"] = args.bits
    if args.grid is not None:
        a, b, n = scenario.parse_grid(args.grid)
        var = (sc.data.get("sweep") or {}).get("variable") or DEFAULT_GRIDS.get(command, (None,))[0]
        if var is None:
            raise ScenarioError(f"the {command} command has no sweep to apply --grid to")
        sc = sc.with_overrides(**over)
        d = dict(sc.data)
        d["sweep"] = {"variable": var, "start": a, "stop": b, "steps": n}
        scenario.validate(d, sc.source)
        return Scenario(d, sc.source)
    sc = sc.with_overrides(**over) if over else sc
    if "sweep" not in sc.data and command in DEFAULT_GRIDS:
        var, a, b, n = DEFAULT_GRIDS[command]
        d = dict(sc.data)
        d["sweep"] = {"variable": var, "start": a, "stop": b, "steps": n}
        sc = Scenario(d, sc.source)
    return sc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = _apply_flags(scenario.load(args.scenario), args, args.command)
        flags = {"seed": args.seed, "grid": args.grid, "bits": getattr(args, "bits", None),
                 "snr_convention": args.snr_convention, "samples": args.samples}
        run = Run(args.command, sc, Path(args.out), flags)
        kw = {"threads": args.threads}
        if args.command == "oracle":
            kw["bits"] = args.bits
        body = COMMANDS[args.command](run, **kw)
        path = run.summary(body)
    except (ScenarioError, ValueError) as exc:
        print(f"fsoirs: error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
