"""Verb implementations: each writes its outputs into ``out_dir`` and returns a manifest."""

from __future__ import annotations

import csv
import json
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..analysis.lorentz import (FitError, LorentzianFit, SpectrumError, lorentzian,
                                lorentzian_fit, read_spectrum_csv)
from ..bands import (BandRunConfig, band_gap, band_structure, bands_to_csv, mirror_cell,
                     taper_end_cell)
from ..cavity import CavityResult, NoResonanceError, simulate_cavity
from ..geometry import apply_scale
from ..solver.fieldio import write_field_binary, write_slice_csv
from . import plotting
from .config import RunConfig, dump_config


def _num(x, digits=12):
    """JSON-safe float rounded to ``digits`` significant figures (None if not finite)."""
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.{digits}g}")


def write_json(path, data):
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


@dataclass
class RunManifest:
    command: str
    config_hash: str
    geometry: dict
    resolution_nm: float
    wall_time_s: float = 0.0
    version: str = __version__
    outputs: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "command": self.command,
            "config_hash": self.config_hash,
            "geometry": self.geometry,
            "resolution_nm": self.resolution_nm,
            "wall_time_s": self.wall_time_s,
            "version": self.version,
            "outputs": sorted(self.outputs),
            **self.extra,
        }

    def write(self, out_dir):
        missing = [p for p in self.outputs if not (Path(out_dir) / p).exists()]
        if missing:
            raise RuntimeError(f"manifest lists missing outputs: {missing}")
        write_json(Path(out_dir) / "manifest.json", self.to_dict())


def _prepare(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    (out / "error.json").unlink(missing_ok=True)      # stale report from an earlier failure


def _start(cfg: RunConfig, command, out_dir, resolution):
    out = Path(out_dir)
    _prepare(out)
    (out / "config.toml").write_text(dump_config(cfg))
    return RunManifest(command=command, config_hash=cfg.hash(), geometry=cfg.geometry.to_dict(),
                       resolution_nm=float(resolution), outputs=["config.toml"])


# -- simulate ---------------------------------------------------------------

def cavity_summary(cfg: RunConfig, res: CavityResult):
    m = res.mode
    nx, ny, nz = res.grid_shape
    out = {
        "status": "ok",
        "config_hash": cfg.hash(),
        "lambda0_nm": _num(m.wavelength),
        "q_dimless": _num(m.q),
        "omega0_rad_per_s": _num(m.omega0),
        "decay_rate_per_s": _num(m.decay_rate),
        "resolution_nm": _num(res.config.resolution),
        "time_step_s": _num(res.config.dt),
        "steps_count": int(res.steps),
        "grid_cells_x_count": int(nx),
        "grid_cells_y_count": int(ny),
        "grid_cells_z_count": int(nz),
        "modes": [{"lambda0_nm": _num(k.wavelength), "q_dimless": _num(k.q),
                   "amplitude_field_units": _num(abs(k.amplitude))} for k in res.modes],
    }
    if res.mode_volume is not None:
        mv = res.mode_volume
        out["mode_volume_lambda_over_n_cubed"] = _num(mv.vm_normalized)
        out["mode_volume_um3"] = _num(mv.vm_physical)
        out["mode_volume_index_dimless"] = _num(mv.index)
        out["purcell_factor_dimless"] = _num(res.purcell)
    return out


def _write_cavity_outputs(out: Path, cfg: RunConfig, res: CavityResult, manifest: RunManifest):
    ts = res.series
    t_fs = (ts.t0 + np.arange(len(ts)) * ts.dt) * 1e15
    with (out / "ringdown.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_fs", f"e{ts.component}_field_units"])
        for t, v in zip(t_fs, ts.samples):
            w.writerow([f"{t:.9g}", f"{float(np.real(v)):.9g}"])
    plotting.ringdown(out / "ringdown.svg", t_fs, np.real(ts.samples))
    manifest.outputs += ["ringdown.csv", "ringdown.svg"]
    if res.profile is not None:
        p = res.profile
        write_slice_csv(out / "mode_profile.csv", p.x_nm, p.y_nm, p.values)
        plotting.mode_profile(out / "mode_profile.svg", p.x_nm, p.y_nm, p.values, p.component)
        manifest.outputs += ["mode_profile.csv", "mode_profile.svg"]
    if res.snapshot is not None:
        write_field_binary(out / "field_snapshot.bin", res.snapshot, res.config.resolution,
                           f"E{res.config.source.component}")
        manifest.outputs.append("field_snapshot.bin")


def run_cavity(cfg: RunConfig, out_dir, command="simulate"):
    """Simulate one device and write its report; raises on failure."""
    t0 = time.perf_counter()
    sim_cfg = cfg.simulation_config()
    out = Path(out_dir)
    manifest = _start(cfg, command, out, sim_cfg.resolution)
    res = simulate_cavity(cfg.geometry, sim_cfg, cfg.analysis_options())
    summary = cavity_summary(cfg, res)
    write_json(out / "summary.json", summary)
    manifest.outputs.append("summary.json")
    _write_cavity_outputs(out, cfg, res, manifest)
    manifest.wall_time_s = time.perf_counter() - t0
    manifest.extra["timings_s"] = {k: round(v, 3) for k, v in res.timings.items()}
    manifest.write(out)
    return summary, manifest


def cmd_simulate(cfg: RunConfig, out_dir):
    return run_cavity(cfg, out_dir)


# -- sweeps -----------------------------------------------------------------

@dataclass
class SweepResult:
    variable: str
    rows: list          # dicts: value, status, lambda0_nm, q_dimless, mode volume, point_dir

    def values(self):
        return [r["value"] for r in self.rows]

    def ok_rows(self):
        return [r for r in self.rows if r["status"] == "ok"]


def _run_points(cfg_for_value, values, out: Path, variable):
    rows = []
    for i, v in enumerate(values):
        point_dir = f"point_{i:03d}"
        row = {"value": float(v), "point_dir": point_dir}
        try:
            cfg_v = cfg_for_value(v)
            summary, _ = run_cavity(cfg_v, out / point_dir, command=f"sweep:{variable}")
        except NoResonanceError as exc:
            row.update(status="no_resonance", error=str(exc))
        except Exception as exc:                           # recorded, sweep continues
            row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        else:
            row.update(status="ok", lambda0_nm=summary["lambda0_nm"], q_dimless=summary["q_dimless"],
                       mode_volume_lambda_over_n_cubed=summary.get(
                           "mode_volume_lambda_over_n_cubed"))
        rows.append(row)
    return SweepResult(variable, rows)


def _write_sweep_csv(path, result: SweepResult, value_header):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([value_header, "status", "lambda0_nm", "q_dimless",
                    "mode_volume_lambda_over_n_cubed", "point_dir"])
        for r in result.rows:
            w.writerow([repr(r["value"]), r["status"], r.get("lambda0_nm", ""),
                        r.get("q_dimless", ""), r.get("mode_volume_lambda_over_n_cubed", "") or "",
                        r["point_dir"]])


def linear_fit(x, y):
    """Least-squares line; returns (slope, intercept, r_squared)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def cmd_sweep_scale(cfg: RunConfig, out_dir, factors=None, mode=None):
    t0 = time.perf_counter()
    factors = list(cfg.sweep["scale_factors"] if factors is None else factors)
    mode = mode or cfg.sweep["scale_mode"]
    if any(b <= a for a, b in zip(factors, factors[1:])):
        factors = sorted(set(factors))
    out = Path(out_dir)
    manifest = _start(cfg, "sweep-scale", out, cfg.simulation["resolution"])

    def cfg_for(v):
        return RunConfig(apply_scale(cfg.geometry, v, uniform=(mode == "uniform")),
                         cfg.simulation, cfg.sweep)

    result = _run_points(cfg_for, factors, out, "scale_percent")
    _write_sweep_csv(out / "sweep_scale.csv", result, "scale_percent")
    summary = {"variable": "scale_percent", "scale_mode": mode,
               "requested_points_count": len(factors),
               "points": [_clean_row(r) for r in result.rows]}
    ok = result.ok_rows()
    fit = None
    if len(ok) >= 2:
        xs = [r["value"] for r in ok]
        ys = [r["lambda0_nm"] for r in ok]
        slope, intercept, r2 = linear_fit(xs, ys)
        fit = (slope, intercept)
        summary.update(slope_nm_per_percent=_num(slope), intercept_nm=_num(intercept),
                       r_squared_dimless=_num(r2), span_nm=_num(max(ys) - min(ys)),
                       strictly_increasing=bool(all(b > a for a, b in zip(ys, ys[1:]))))
    if ok:
        plotting.sweep(out / "sweep_scale.svg", [r["value"] for r in ok],
                       [r["lambda0_nm"] for r in ok], "scale change (%)", "resonance (nm)",
                       fit=fit)
        manifest.outputs.append("sweep_scale.svg")
    write_json(out / "sweep_summary.json", summary)
    manifest.outputs += ["sweep_scale.csv", "sweep_summary.json"]
    manifest.wall_time_s = time.perf_counter() - t0
    manifest.write(out)
    return result, summary


def gap_values(start, stop, step):
    """Cavity lengths from ``start`` to ``stop`` inclusive; warns when the step exceeds the range."""
    if step > stop - start:
        if stop > start:
            warnings.warn(f"step {step} nm exceeds the range {start}-{stop} nm; "
                          "running a single point", UserWarning)
        return [float(start)]
    n = int(math.floor((stop - start) / step + 1e-9))
    return [float(start + i * step) for i in range(n + 1)]


def cmd_sweep_gap(cfg: RunConfig, out_dir, start=None, stop=None, step=None):
    t0 = time.perf_counter()
    w = cfg.sweep
    start = w["gap_start"] if start is None else start
    stop = w["gap_stop"] if stop is None else stop
    step = w["gap_step"] if step is None else step
    values = gap_values(start, stop, step)
    out = Path(out_dir)
    manifest = _start(cfg, "sweep-gap", out, cfg.simulation["resolution"])
    result = _run_points(lambda v: cfg.with_geometry(cavity_length=v), values, out,
                         "cavity_length_nm")
    _write_sweep_csv(out / "sweep_gap.csv", result, "cavity_length_nm")
    summary = {"variable": "cavity_length_nm", "requested_points_count": len(values),
               "points": [_clean_row(r) for r in result.rows]}
    ok = [r for r in result.ok_rows() if r["q_dimless"] is not None]
    if ok:
        best = max(ok, key=lambda r: r["q_dimless"])
        qs = [r["q_dimless"] for r in ok]
        summary.update(best_cavity_length_nm=best["value"], best_q_dimless=best["q_dimless"],
                       q_max_over_min_dimless=_num(max(qs) / min(qs)))
        plotting.sweep(out / "sweep_gap.svg", [r["value"] for r in ok], qs,
                       "cavity length (nm)", "Q", logy=True)
        manifest.outputs.append("sweep_gap.svg")
    write_json(out / "sweep_summary.json", summary)
    manifest.outputs += ["sweep_gap.csv", "sweep_summary.json"]
    manifest.wall_time_s = time.perf_counter() - t0
    manifest.write(out)
    return result, summary


def _clean_row(r):
    return {k: v for k, v in r.items() if v is not None}


# -- fit-spectrum -----------------------------------------------------------

def cmd_fit_spectrum(csv_path, out_dir, window=None):
    t0 = time.perf_counter()
    out = Path(out_dir)
    _prepare(out)
    spec = read_spectrum_csv(csv_path)
    try:
        fit: LorentzianFit = lorentzian_fit(spec, window=window)
    except FitError as exc:
        raise FitError(f"{csv_path}: {exc}", exc.residual_rms) from exc
    except SpectrumError as exc:
        raise SpectrumError(f"{csv_path}: {exc}") from exc
    record = fit.to_record()
    record["bin_width_nm"] = _num(spec.bin_width)
    record["source_file"] = str(Path(csv_path).name)
    write_json(out / "fit.json", record)

    shown = spec.window(*window) if window is not None else spec
    wl_fine = np.linspace(shown.wavelength[0], shown.wavelength[-1], 400)
    curve = lorentzian(wl_fine, fit.center, fit.fwhm, fit.amplitude, fit.background)
    with (out / "fit_curve.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["wavelength_nm", "counts"])
        for x, y in zip(wl_fine, curve):
            w.writerow([f"{x:.9f}", f"{y:.9g}"])
    plotting.spectrum_fit(out / "spectrum_fit.svg", shown.wavelength, shown.intensity, wl_fine,
                          curve, fit.q)
    manifest = RunManifest(command="fit-spectrum", config_hash="", geometry={},
                           resolution_nm=_num(spec.bin_width),
                           outputs=["fit.json", "fit_curve.csv", "spectrum_fit.svg"])
    manifest.wall_time_s = time.perf_counter() - t0
    manifest.write(out)
    return fit, manifest


# -- bands ------------------------------------------------------------------

def band_run_config(cfg: RunConfig, resolution=None):
    w = cfg.sweep
    res = resolution or w["band_resolution"] or cfg.simulation["resolution"]
    return BandRunConfig(resolution=float(res), courant=w["band_courant"],
                         ringdown_periods=w["band_ringdown_periods"])


def cmd_bands(cfg: RunConfig, out_dir, cell=None, resolution=None):
    t0 = time.perf_counter()
    geom = cfg.geometry
    cell = cell or cfg.sweep["band_cell"]
    if cell == "mirror":
        period, radius = mirror_cell(geom)
    elif cell == "taper_end":
        period, radius = taper_end_cell(geom)
    elif cell == "no_holes":
        period, radius = geom.mirror_period, 0.0
    else:
        raise ValueError(f"unknown band cell {cell!r}")
    run = band_run_config(cfg, resolution)
    out = Path(out_dir)
    manifest = _start(cfg, "bands", out, run.resolution)
    points = band_structure(geom, (period, radius), k_points=cfg.sweep["k_points"], run=run)
    (out / "bands.csv").write_text(bands_to_csv(points))
    gap = band_gap(points)
    a = period * geom.scale
    target = a / cfg.simulation["source_wavelength"]
    report = {"cell": cell, "period_nm": _num(a), "radius_nm": _num(radius * geom.scale),
              "k_points_count": len(points), "target_a_over_lambda": _num(target)}
    if gap is None:
        report.update(status="no_gap")
    else:
        report.update(status="gap", gap_lower_a_over_lambda=_num(gap.lower),
                      gap_upper_a_over_lambda=_num(gap.upper),
                      gap_midgap_a_over_lambda=_num(gap.midgap),
                      gap_midgap_ratio_dimless=_num(gap.gap_midgap_ratio),
                      contains_target=bool(gap.contains(target)))
    write_json(out / "band_gap.json", report)
    plotting.band_diagram(out / "bands.svg", points, gap, target, geom.n_background)
    manifest.outputs += ["bands.csv", "bands.svg", "band_gap.json"]
    manifest.wall_time_s = time.perf_counter() - t0
    manifest.write(out)
    return points, report

