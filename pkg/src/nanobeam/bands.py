"""Bloch band structure of one lattice period of the nanobeam.

Each k-point is a time-domain run of a single period with a Bloch phase
across the x walls, absorbing layers in y and z, and a broadband dipole at a
pseudo-random low-symmetry position. Frequencies come from harmonic
inversion of the summed monitor signals.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np

from .analysis.harminv import harmonic_inversion
from .geometry import NanobeamGeometry, rasterize_unit_cell
from .solver import Monitor, Simulation, SimulationConfig, SourceSpec
from .solver.simulation import TimeSeries


@dataclass(frozen=True)
class BandPoint:
    k: float                   # units of pi/a
    frequencies: tuple         # a/lambda, ascending

    def __post_init__(self):
        object.__setattr__(self, "frequencies", tuple(sorted(self.frequencies)))


@dataclass(frozen=True)
class BandGap:
    lower: float               # a/lambda
    upper: float

    @property
    def midgap(self):
        return 0.5 * (self.lower + self.upper)

    @property
    def gap_midgap_ratio(self):
        return (self.upper - self.lower) / self.midgap

    def contains(self, f):
        return self.lower < f < self.upper


@dataclass(frozen=True)
class BandRunConfig:
    resolution: float = 20.0
    courant: float = 0.9
    padding: tuple = (0.0, 300.0, 300.0)
    pml_cells: int = 12
    f_min: float = 0.15            # a/lambda band searched
    f_max: float = 0.5
    ringdown_periods: float = 80.0
    n_monitors: int = 4
    seed: int = 7
    parity: tuple = ("even", "even")   # Ey scalar parity in y and z
    guided_only: bool = True
    min_q: float = 500.0
    # Guided Bloch modes are lossless, so a short record can fit them with a
    # tiny spurious growth rate; accept it up to this fraction of omega.
    max_growth: float = 1e-4
    # A guided mode whose evanescent tail decays more slowly than this many
    # paddings lives mostly in the absorber; near the light line the box also
    # produces such continuum resonances, so they are not reported.
    max_decay_paddings: float = 2.0


def cell_resolution(period, resolution):
    """Closest spacing not above ``resolution`` fitting the period exactly."""
    return period / math.ceil(period / resolution - 1e-9)


def mirror_cell(geom: NanobeamGeometry):
    return geom.mirror_period, geom.mirror_radius


def taper_end_cell(geom: NanobeamGeometry):
    return geom.taper_period, geom.taper_radius


def _positions(rng, period, geom, n):
    # Points inside the folded quarter of the beam cross-section.
    half_w = geom.scaled_width / 2
    half_t = geom.thickness / 2
    pts = []
    for _ in range(n):
        pts.append((rng.uniform(0.05, 0.95) * period,
                    rng.uniform(0.1, 0.8) * half_w,
                    rng.uniform(0.05, 0.8) * half_t))
    return pts


def bloch_spectrum(geom: NanobeamGeometry, cell, k, run: BandRunConfig = BandRunConfig(),
                   return_series=False):
    """Band frequencies (a/lambda) of the TE-like parity at Bloch k (pi/a units).

    ``cell`` is a (period, radius) pair in unscaled nm; ``geom`` supplies the
    beam cross-section, indices, ellipticity and scale.
    """
    if not 0 <= abs(k) <= 1:
        raise ValueError("k must lie in [-1, 1] (units of pi/a)")
    period, radius = cell
    a = period * geom.scale
    delta = cell_resolution(a, run.resolution)
    grid = rasterize_unit_cell(period, radius, geom, delta, padding=run.padding,
                               pml_cells=run.pml_cells)
    rng = np.random.default_rng(run.seed)
    pts = _positions(rng, a, geom, run.n_monitors + 1)
    lam_lo = a / run.f_max
    lam_hi = a / run.f_min
    lam_c = 2 * a / (run.f_min + run.f_max)
    src = SourceSpec(position=pts[0], component="y", wavelength=lam_c, lambda_min=lam_lo,
                     lambda_max=lam_hi)
    cfg = SimulationConfig(
        resolution=delta, courant=run.courant, padding=run.padding, pml_cells=run.pml_cells,
        symmetry=("none",) + tuple(run.parity), boundaries=("periodic", "pml", "pml"),
        bloch_phase=(k * math.pi, 0.0, 0.0), source=src,
        monitors=tuple(Monitor(p, "y") for p in pts[1:]), ringdown_periods=run.ringdown_periods,
        dtype="float64")
    sim = Simulation(grid, cfg)
    series = sim.run()
    weights = rng.uniform(0.5, 1.5, size=len(series))
    total = sum(w * np.real(s.samples) for w, s in zip(weights, series))
    ts = TimeSeries(series[0].dt, total, series[0].post_source_index)
    modes = harmonic_inversion(ts, (lam_lo, lam_hi), max_modes=50,
                               max_growth=run.max_growth)
    n_bg = geom.n_background
    max_decay = run.max_decay_paddings * min(run.padding[1], run.padding[2])
    freqs = []
    for m in modes:
        f = a / m.wavelength
        if m.q < run.min_q:
            continue
        if run.guided_only and f >= abs(k) / (2 * n_bg):
            continue
        if run.guided_only and _decay_length(k, f, a, n_bg) > max_decay:
            continue
        freqs.append(f)
    point = BandPoint(k=float(k), frequencies=tuple(_dedupe(sorted(freqs))))
    if return_series:
        return point, ts
    return point


def _decay_length(k, f, a, n_bg):
    """1/e length (nm) of the evanescent tail of a mode below the light line."""
    kappa = 2 * math.pi / a * math.sqrt(max((k / 2) ** 2 - (f * n_bg) ** 2, 0.0))
    return math.inf if kappa == 0 else 1.0 / kappa


def _dedupe(freqs, rel=1e-6):
    out = []
    for f in freqs:
        if not out or abs(f - out[-1]) > rel * f:
            out.append(f)
    return out


def band_structure(geom, cell, k_points=16, run: BandRunConfig = BandRunConfig()):
    ks = np.linspace(0.0, 1.0, k_points)
    return [bloch_spectrum(geom, cell, float(k), run) for k in ks]


def band_gap(points) -> BandGap | None:
    """Gap between the top of band 1 and the bottom of band 2.

    Points with no band-1 (or band-2) frequency are skipped for that band.
    In a lattice periodic along one axis the lowest gap opens at the zone
    edge, so a single frequency at the largest sampled k means the two bands
    touch there. Returns None in that case and when the bands overlap.
    """
    if len(points) < 8:
        raise ValueError("band_gap needs at least 8 k-points")
    edge = max(points, key=lambda p: abs(p.k))
    if len(edge.frequencies) < 2:
        return None
    b1 = [p.frequencies[0] for p in points if len(p.frequencies) >= 1]
    b2 = [p.frequencies[1] for p in points if len(p.frequencies) >= 2]
    if not b1 or not b2:
        return None
    lower, upper = max(b1), min(b2)
    if upper <= lower:
        return None
    return BandGap(lower, upper)


def bands_to_csv(points):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k_over_pi_a", "band_index", "a_over_lambda"])
    for p in points:
        for i, f in enumerate(p.frequencies, start=1):
            w.writerow([repr(p.k), i, repr(float(f))])
    return buf.getvalue()


def scaled_run(run: BandRunConfig, **changes):
    return replace(run, **changes)
