"""Monte Carlo engine for sway, turbulence, GML and outage.

Every run is split into fixed-size chunks. Chunk ``i`` of stream ``s``
draws from its own Philox generator seeded with
``SeedSequence(seed, spawn_key=(s, i))``, so the samples depend only on
``(seed, stream_id, n)`` and never on how many workers are used. Chunk
results are reduced in chunk order.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import irs2d, irs3d, pointing
from ._parallel import worker_count
from .beam import BeamSpec
from .channel import LinkBudget, TurbulenceModel, atmospheric_loss
from .pointing import Angles2D, Angles3D, SwayModel

CHUNK = 1 << 16
MODES = ("2D-exact", "2D-approx", "3D")
L1_BINS = 200


@dataclass(frozen=True)
class RngSpec:
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= v < 2 ** 64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer")

    def chunk_rng(self, idx: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, idx))
        return np.random.Generator(np.random.Philox(ss))


@dataclass
class McResult:
    n: int
    edges: np.ndarray
    masses: np.ndarray
    estimates: dict = field(default_factory=dict)
    samples: np.ndarray | None = None

    def histogram(self, edges) -> np.ndarray:
        """Bin masses of the stored samples on ``edges`` (right edge closed)."""
        if self.samples is None:
            raise ValueError("samples were not kept")
        counts, _ = np.histogram(self.samples, bins=np.asarray(edges, dtype=float))
        return counts / self.n


def _chunks(n: int):
    return [(i, min(CHUNK, n - i * CHUNK)) for i in range((n + CHUNK - 1) // CHUNK)]


def map_chunks(fn: Callable, n: int, rng: RngSpec, threads: int | None = None) -> list:
    """Apply ``fn(generator, count)`` to every chunk; results in chunk order."""
    if n < 0:
        raise ValueError("sample count must be non-negative")
    jobs = _chunks(n)

    def run(job):
        idx, m = job
        return fn(rng.chunk_rng(idx), m)

    nw = min(worker_count(threads), len(jobs))
    if nw <= 1:
        return [run(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=nw) as ex:
        return list(ex.map(run, jobs))


# -- samplers --------------------------------------------------------------

def sample_sway(sway: SwayModel, n: int, rng: np.random.Generator, dim: int = 2):
    """Sway draws ``(eps_s, eps_r, eps_l)``.

    In 2D all three are scalars per draw. In 3D the Tx and Rx sway in their
    transverse planes (shape ``(n, 2)``) and the IRS along its normal.
    """
    if dim == 2:
        z = rng.standard_normal((n, 3))
        return sway.sigma_s * z[:, 0], sway.sigma_r * z[:, 1], sway.sigma_l * z[:, 2]
    if dim == 3:
        z = rng.standard_normal((n, 5))
        return sway.sigma_s * z[:, 0:2], sway.sigma_r * z[:, 2], sway.sigma_l * z[:, 3:5]
    raise ValueError("dim must be 2 or 3")


def sample_turbulence(model: TurbulenceModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-mean turbulence gains."""
    if model.kind == "none":
        return np.ones(n)
    if model.kind == "LN":
        x = rng.normal(0.0, math.sqrt(model.sigma2), n)
        return np.exp(2.0 * x - 2.0 * model.sigma2)
    a, b = model.alpha, model.beta
    return rng.gamma(a, 1.0 / a, n) * rng.gamma(b, 1.0 / b, n)


# -- GML samplers ------------------------------------------------------------

@dataclass(frozen=True)
class GmlSampler:
    """Maps a generator and a count to conditional GML draws."""

    mode: str
    A0: float
    draw: Callable = field(compare=False, repr=False)

    def __call__(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.draw(rng, n)


def gml_sampler(geom, spec: BeamSpec, sway: SwayModel, mode: str,
                branch: str = "collimated") -> GmlSampler:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode == "3D":
        if not isinstance(geom, irs3d.LinkGeometry3D):
            raise TypeError("3D mode needs a LinkGeometry3D")
        ang = Angles3D(geom.psi_i.theta, geom.psi_r.theta, geom.psi_r.phi, geom.theta_rl)
        params = irs3d.gml_params_3d(geom, spec, branch=branch)

        def draw(rng, n):
            es, er, el = sample_sway(sway, n, rng, dim=3)
            return irs3d.conditional_gml_3d(pointing.misalignment_3d(es, er, el, ang), params)

        return GmlSampler(mode, params.A0, draw)
    if not isinstance(geom, irs2d.LinkGeometry2D):
        raise TypeError("2D modes need a LinkGeometry2D")
    ang = Angles2D(geom.theta_i, geom.theta_r, geom.theta_rl)
    w0hat = irs2d.equivalent_waist_2d(geom.d_sr, spec.w0, spec.wavelength, geom.theta_i,
                                      geom.theta_r, branch)
    approx = irs2d.approx_params_for(geom, spec, branch, w0hat)

    def draw(rng, n):
        es, er, el = sample_sway(sway, n, rng, dim=2)
        u = pointing.misalignment_2d(es, er, el, ang)
        if mode == "2D-approx":
            return irs2d.conditional_gml_2d_approx(u, approx)
        return irs2d.conditional_gml_2d_along(u, geom, spec, branch, w0hat)

    A0 = approx.A0 if mode == "2D-approx" else float(
        irs2d.conditional_gml_2d_along(0.0, geom, spec, branch, w0hat))
    return GmlSampler(mode, A0, draw)


def _fd_edges(x: np.ndarray, bins) -> np.ndarray:
    edges = np.histogram_bin_edges(x, bins=bins)
    # Guard against an empty last bin boundary from round-off.
    edges[-1] = max(edges[-1], float(np.max(x)))
    return edges


def empirical_gml(geom, spec: BeamSpec, sway: SwayModel, n: int, mode: str, rng: RngSpec,
                  branch: str = "collimated", threads: int | None = None,
                  bins="fd") -> McResult:
    """Histogram of the conditional GML under random sway."""
    sampler = gml_sampler(geom, spec, sway, mode, branch)
    h = np.concatenate(map_chunks(sampler, n, rng, threads)) if n else np.zeros(0)
    if n == 0:
        return McResult(0, np.zeros(1), np.zeros(0))
    edges = _fd_edges(h, bins)
    counts, _ = np.histogram(h, bins=edges)
    mean = float(np.mean(h))
    se = float(np.std(h, ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    return McResult(n, edges, counts / n,
                    {"mean": (mean, se), "A0": (sampler.A0, 0.0)}, samples=h)


def l1_distance(result: McResult, law, A0: float | None = None, bins: int = L1_BINS) -> float:
    """Sum of absolute bin-mass differences on ``bins`` equal bins over ``[0, A0]``."""
    A0 = law.A0 if A0 is None else A0
    edges = np.linspace(0.0, A0, bins + 1)
    mc = result.histogram(edges)
    # Samples that round above A0 belong in the top bin.
    mc[-1] += np.count_nonzero(result.samples > A0) / result.n
    an = pointing.bin_masses(law, edges)
    return float(np.sum(np.abs(mc - an)))


def empirical_outage(budget: LinkBudget, sampler: GmlSampler, turb: TurbulenceModel,
                     d_sr: float, d_rl: float, n: int, rng: RngSpec,
                     threads: int | None = None) -> McResult:
    """Fraction of trials with ``h^2 gamma_bar <= gamma_thr``.

    Each chunk draws the sway first and the turbulence second.
    """
    h_p = atmospheric_loss(budget.zeta, budget.kappa, d_sr, d_rl)
    h_thr = budget.h_threshold(h_p)
    scale = budget.eta * h_p

    def count(g, m):
        hg = sampler(g, m)
        ha = sample_turbulence(turb, m, g)
        return int(np.count_nonzero(scale * hg * ha <= h_thr)) if h_thr > 0 else 0

    hits = sum(map_chunks(count, n, rng, threads))
    p = hits / n if n else math.nan
    se = math.sqrt(p * (1.0 - p) / n) if n else math.nan
    edges = np.array([0.0, 0.5, 1.0])
    return McResult(n, edges, np.array([1.0 - p, p]),
                    {"p_out": (p, se), "hits": (hits, 0.0), "h_thr": (h_thr, 0.0)})


def empirical_covariance(sway: SwayModel, ang: Angles3D, n: int, rng: RngSpec,
                         threads: int | None = None):
    """Sample covariance of the 3D misalignment and ``E||u||^2`` with its SE."""
    def stats(g, m):
        es, er, el = sample_sway(sway, m, g, dim=3)
        u = pointing.misalignment_3d(es, er, el, ang)
        r2 = np.sum(u * u, axis=1)
        return u.T @ u, float(np.sum(r2)), float(np.sum(r2 * r2))

    parts = map_chunks(stats, n, rng, threads)
    s = sum(p[0] for p in parts)
    s1 = math.fsum(p[1] for p in parts)
    s2 = math.fsum(p[2] for p in parts)
    mean_r2 = s1 / n
    var_r2 = max(s2 / n - mean_r2 ** 2, 0.0)
    return s / n, mean_r2, math.sqrt(var_r2 / n)
