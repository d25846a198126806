"""End-to-end cavity run: geometry, rasterization, time stepping, analysis."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as C0

from .analysis.harminv import ResonanceMode, dominant_mode, harmonic_inversion
from .analysis.modes import ModeVolumeResult, mode_volume, purcell_factor
from .geometry import NanobeamGeometry, build_nanobeam, rasterize
from .solver import Simulation, SimulationConfig
from .solver.simulation import TimeSeries


class NoResonanceError(RuntimeError):
    pass


@dataclass(frozen=True)
class AnalysisOptions:
    subpixel_samples: int = 16
    min_q: float = 100.0            # weaker resonances are treated as leakage
    noise_floor: float = 1e-5       # relative to the peak of the full monitor record
    max_modes: int = 10
    compute_mode_volume: bool = True


@dataclass
class ModeProfile:
    """Driven E component on the z = 0 plane, unfolded to the full beam."""

    x_nm: np.ndarray
    y_nm: np.ndarray
    values: np.ndarray          # normalized to max |value| = 1
    component: str


@dataclass
class CavityResult:
    geometry: NanobeamGeometry
    config: SimulationConfig
    mode: ResonanceMode
    modes: list
    series: TimeSeries
    mode_volume: ModeVolumeResult | None = None
    purcell: float | None = None
    profile: ModeProfile | None = None
    snapshot: np.ndarray | None = None      # folded node field of the driven component
    grid_shape: tuple = ()
    steps: int = 0
    timings: dict = field(default_factory=dict)


def _parity(sym):
    return -1.0 if sym == "odd" else 1.0


def find_resonances(ts: TimeSeries, band, options: AnalysisOptions = AnalysisOptions()):
    """Resonances in ``band`` above the noise floor and ``min_q``, strongest first."""
    modes = harmonic_inversion(ts, band, max_modes=max(options.max_modes, 20))
    ref = float(np.max(np.abs(ts.samples))) if len(ts) else 0.0
    keep = [m for m in modes
            if m.q >= options.min_q and abs(m.amplitude) >= options.noise_floor * ref]
    return keep[:options.max_modes]


def simulate_cavity(geom: NanobeamGeometry, cfg: SimulationConfig,
                    options: AnalysisOptions = AnalysisOptions()) -> CavityResult:
    """Run the default ring-down experiment on one nanobeam.

    Raises ``NoResonanceError`` when nothing in the source band rings.
    """
    timings = {}
    t = time.perf_counter()
    holes = build_nanobeam(geom)
    grid = rasterize(holes, geom, cfg.resolution, subpixel_samples=options.subpixel_samples,
                     padding=cfg.padding, pml_cells=cfg.pml_cells)
    timings["rasterize_s"] = time.perf_counter() - t

    t = time.perf_counter()
    sim = Simulation(grid, cfg)
    ts = sim.run()[0]
    timings["solve_s"] = time.perf_counter() - t

    t = time.perf_counter()
    band = (cfg.source.lambda_min, cfg.source.lambda_max)
    modes = find_resonances(ts, band, options)
    window = (len(ts) - ts.post_source_index) * ts.dt
    mode = dominant_mode(modes, window)
    timings["inversion_s"] = time.perf_counter() - t
    if mode is None:
        raise NoResonanceError(
            f"no resonance with Q >= {options.min_q:g} found between "
            f"{band[0]:g} and {band[1]:g} nm")

    result = CavityResult(geometry=geom, config=cfg, mode=mode, modes=modes, series=ts,
                          grid_shape=sim.shape, steps=sim.state.n, timings=timings)
    if options.compute_mode_volume:
        t = time.perf_counter()
        _mode_analysis(sim, result)
        timings["mode_volume_s"] = time.perf_counter() - t
    return result


def _mode_analysis(sim: Simulation, result: CavityResult):
    """Mode volume and field profile from two snapshots a quarter period apart.

    For a single ringing mode E(t) = Re[A exp(i w t)], the sum of squares of
    two samples a quarter period apart equals |A|^2 up to the slow decay, so
    the intensity is free of the oscillation nodes of either snapshot.
    """
    mode = result.mode
    period = mode.wavelength * 1e-9 / C0
    quarter = max(1, int(round(period / 4 / sim.dt)))
    first = sim.node_fields()
    sim.run(steps=quarter)
    second = sim.node_fields()
    intensity = sum(np.abs(a) ** 2 + np.abs(b) ** 2 for a, b in zip(first, second))

    geom = result.geometry
    result.mode_volume = mode_volume(intensity, sim.grid.eps, sim.grid.delta, mode.wavelength,
                                     geom.n_slab, weights=sim.node_weights())
    result.purcell = (purcell_factor(mode.q, result.mode_volume.vm_normalized)
                      if math.isfinite(mode.q) else math.inf)

    comp = "xyz".index(sim.cfg.source.component)
    a, b = first[comp], second[comp]
    field_ = a if np.max(np.abs(a)) >= np.max(np.abs(b)) else b
    field_ = np.real(field_)
    result.snapshot = field_.astype(np.float32)
    plane = field_[:, :, 0] if sim.axes[2].folded else field_[:, :, sim.grid.center_index(2)]
    xs = sim.grid.node_coords(0)
    ys = sim.grid.node_coords(1)
    sym = sim.cfg.symmetry
    if sim.axes[0].folded:
        plane = np.concatenate([_parity(sym[0]) * plane[:0:-1], plane], axis=0)
        xs = np.concatenate([-xs[:0:-1], xs])
    if sim.axes[1].folded:
        plane = np.concatenate([_parity(sym[1]) * plane[:, :0:-1], plane], axis=1)
        ys = np.concatenate([-ys[:0:-1], ys])
    peak = np.max(np.abs(plane))
    if peak > 0:
        plane = plane / peak
    result.profile = ModeProfile(xs, ys, plane, sim.cfg.source.component)
