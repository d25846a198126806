"""TOML run configuration: [geometry], [simulation] and [sweep] sections."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, fields, replace
from pathlib import Path

import tomli
import tomlkit

from ..cavity import AnalysisOptions
from ..geometry import GeometryError, NanobeamGeometry
from ..solver.config import (ConfigurationError, Monitor, PMLParams, SimulationConfig,
                             SourceSpec)


class ConfigError(ValueError):
    """Invalid configuration file; ``field_name`` names the offending key."""

    def __init__(self, message, field_name=None, line=None):
        super().__init__(message)
        self.field_name = field_name
        self.line = line


GEOMETRY_KEYS = {f.name for f in fields(NanobeamGeometry)}

SIMULATION_DEFAULTS = {
    "resolution": 20.0,
    "courant": 0.5,
    "padding": [500.0, 450.0, 450.0],
    "pml_cells": 12,
    "pml_order": 3.0,
    "pml_sigma_factor": 1.0,
    "pml_kappa_max": 1.0,
    "pml_alpha_max": 0.0,
    "symmetry": ["even", "even", "even"],
    "source_component": "y",
    "source_wavelength": 637.0,
    "lambda_min": 550.0,
    "lambda_max": 750.0,
    "ringdown_periods": 300.0,
    "run_steps": 0,
    "dtype": "float32",
    "check_interval": 100,
    "subpixel_samples": 16,
    "min_q": 100.0,
    "mode_volume": True,
}

SWEEP_DEFAULTS = {
    "scale_factors": [-2.0, 2.0, 5.0, 10.0],
    "scale_mode": "in_plane",
    "gap_start": 195.0,
    "gap_stop": 210.0,
    "gap_step": 5.0,
    "k_points": 16,
    "band_cell": "mirror",
    "band_resolution": 0.0,         # 0: follow simulation.resolution
    "band_courant": 0.9,
    "band_ringdown_periods": 80.0,
}

_SECTIONS = {"geometry": None, "simulation": SIMULATION_DEFAULTS, "sweep": SWEEP_DEFAULTS}


@dataclass(frozen=True)
class RunConfig:
    geometry: NanobeamGeometry
    simulation: dict
    sweep: dict

    def simulation_config(self, resolution=None) -> SimulationConfig:
        s = self.simulation
        src = SourceSpec(component=s["source_component"], wavelength=s["source_wavelength"],
                         lambda_min=s["lambda_min"], lambda_max=s["lambda_max"])
        pml = PMLParams(order=s["pml_order"], sigma_factor=s["pml_sigma_factor"],
                        kappa_max=s["pml_kappa_max"], alpha_max=s["pml_alpha_max"])
        return SimulationConfig(
            resolution=float(resolution if resolution is not None else s["resolution"]),
            courant=s["courant"], padding=tuple(s["padding"]), pml_cells=s["pml_cells"],
            pml=pml, symmetry=tuple(s["symmetry"]), source=src,
            monitors=(Monitor(component=s["source_component"]),),
            run_steps=s["run_steps"], ringdown_periods=s["ringdown_periods"],
            dtype=s["dtype"], check_interval=s["check_interval"])

    def analysis_options(self) -> AnalysisOptions:
        s = self.simulation
        return AnalysisOptions(subpixel_samples=s["subpixel_samples"], min_q=s["min_q"],
                               compute_mode_volume=s["mode_volume"])

    def with_resolution(self, resolution):
        if resolution is None:
            return self
        sim = dict(self.simulation, resolution=float(resolution))
        out = RunConfig(self.geometry, sim, self.sweep)
        out.simulation_config()
        return out

    def with_geometry(self, **changes):
        return RunConfig(replace(self.geometry, **changes), self.simulation, self.sweep)

    def to_dict(self):
        return {"geometry": self.geometry.to_dict(), "simulation": dict(self.simulation),
                "sweep": dict(self.sweep)}

    def hash(self):
        """SHA-256 of the canonical JSON form of the fully resolved config."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _line_of(text, section, key):
    """1-based line where ``key`` is set inside ``[section]``, or None."""
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped.strip("[]").strip()
        elif current == section and stripped.split("=")[0].strip() == key:
            return i
    return None


def _coerce(section, key, value, default, text):
    line = _line_of(text, section, key)
    where = f" (line {line})" if line else ""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{section}.{key} must be true or false{where}", key, line)
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{section}.{key} must be an integer{where}", key, line)
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{section}.{key} must be a number{where}", key, line)
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{section}.{key} must be a string{where}", key, line)
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{section}.{key} must be an array{where}", key, line)
        if default and isinstance(default[0], float):
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
                raise ConfigError(f"{section}.{key} must contain numbers{where}", key, line)
            return [float(v) for v in value]
        return list(value)
    return value


def parse_config(text, source="<string>") -> RunConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}", line=getattr(exc, "lineno", None)) from None

    unknown = set(data) - set(_SECTIONS)
    if unknown:
        name = sorted(unknown)[0]
        raise ConfigError(f"{source}: unknown section [{name}]", name)

    geo_in = data.get("geometry", {})
    for key in geo_in:
        if key not in GEOMETRY_KEYS:
            line = _line_of(text, "geometry", key)
            raise ConfigError(f"{source}: unknown key geometry.{key} (line {line})", key, line)
    defaults = NanobeamGeometry.__dataclass_fields__
    geo_kwargs = {}
    for key, value in geo_in.items():
        dflt = defaults[key].default
        geo_kwargs[key] = _coerce("geometry", key, value, dflt, text)
    try:
        geometry = NanobeamGeometry(**geo_kwargs)
    except GeometryError as exc:
        line = _line_of(text, "geometry", exc.field_name) if exc.field_name else None
        raise ConfigError(f"{source}: {exc}", exc.field_name, line) from None

    resolved = {}
    for section in ("simulation", "sweep"):
        given = data.get(section, {})
        table = dict(_SECTIONS[section])
        for key, value in given.items():
            if key not in table:
                line = _line_of(text, section, key)
                raise ConfigError(f"{source}: unknown key {section}.{key} (line {line})", key, line)
            table[key] = _coerce(section, key, value, _SECTIONS[section][key], text)
        resolved[section] = table

    cfg = RunConfig(geometry, resolved["simulation"], resolved["sweep"])
    validate(cfg, text, source)
    return cfg


def validate(cfg: RunConfig, text="", source="<config>"):
    def fail(msg, section, key):
        line = _line_of(text, section, key)
        raise ConfigError(f"{source}: {msg}", key, line)

    s = cfg.simulation
    if len(s["padding"]) != 3:
        fail("simulation.padding needs three values (x, y, z)", "simulation", "padding")
    if len(s["symmetry"]) != 3:
        fail("simulation.symmetry needs three entries (x, y, z)", "simulation", "symmetry")
    if s["subpixel_samples"] < 1:
        fail("simulation.subpixel_samples must be >= 1", "simulation", "subpixel_samples")
    if not s["min_q"] > 0:
        fail("simulation.min_q must be positive", "simulation", "min_q")
    try:
        cfg.simulation_config()
    except ConfigurationError as exc:
        key = {"source": "source_wavelength", "pml_cells": "pml_cells"}.get(
            exc.field_name, exc.field_name)
        fail(str(exc), "simulation", key)

    w = cfg.sweep
    if w["scale_mode"] not in ("in_plane", "uniform"):
        fail("sweep.scale_mode must be 'in_plane' or 'uniform'", "sweep", "scale_mode")
    if not w["scale_factors"]:
        fail("sweep.scale_factors must not be empty", "sweep", "scale_factors")
    if any(f <= -100 for f in w["scale_factors"]):
        fail("sweep.scale_factors must be greater than -100", "sweep", "scale_factors")
    if not w["gap_step"] > 0:
        fail("sweep.gap_step must be positive", "sweep", "gap_step")
    if w["gap_stop"] < w["gap_start"]:
        fail("sweep.gap_stop must not be below gap_start", "sweep", "gap_stop")
    if w["k_points"] < 8:
        fail("sweep.k_points must be >= 8", "sweep", "k_points")
    if w["band_cell"] not in ("mirror", "taper_end", "no_holes"):
        fail("sweep.band_cell must be 'mirror', 'taper_end' or 'no_holes'", "sweep", "band_cell")
    if w["band_resolution"] < 0:
        fail("sweep.band_resolution must be >= 0", "sweep", "band_resolution")
    if not 0 < w["band_courant"] <= 1:
        fail("sweep.band_courant must lie in (0, 1]", "sweep", "band_courant")


def load_config(path=None) -> RunConfig:
    """Read a config file; ``None`` gives the documented defaults."""
    if path is None:
        return parse_config("")
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def dump_config(cfg: RunConfig) -> str:
    doc = tomlkit.document()
    for name, table in cfg.to_dict().items():
        t = tomlkit.table()
        for k, v in table.items():
            t.add(k, v)
        doc.add(name, t)
    return tomlkit.dumps(doc)
