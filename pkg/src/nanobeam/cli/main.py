"""``nanobeam`` command line entry point."""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

from ..analysis.harminv import InversionInputError
from ..analysis.lorentz import FitError, SpectrumError
from ..analysis.modes import DegenerateFieldError
from ..cavity import NoResonanceError
from ..geometry import GeometryError, SizingError
from ..solver.config import ConfigurationError
from ..solver.simulation import DivergenceError
from .config import ConfigError, load_config

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_NO_RESONANCE = 4

_VALIDATION = (ConfigError, GeometryError, SizingError, ConfigurationError, SpectrumError,
               InversionInputError, FileNotFoundError)
_NUMERICAL = (DivergenceError, FitError, DegenerateFieldError, FloatingPointError)


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML configuration file")
    common.add_argument("--resolution", metavar="NM", type=float,
                        help="grid spacing in nm (overrides the config)")
    common.add_argument("--out", metavar="DIR", default="nanobeam_out", help="output directory")
    common.add_argument("--threads", metavar="N", type=int,
                        help="worker threads (default: NANOBEAM_THREADS or all cores)")

    p = argparse.ArgumentParser(prog="nanobeam", parents=[common],
                                description="Photonic crystal nanobeam cavity simulator")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="simulate one cavity")
    s = sub.add_parser("sweep-scale", parents=[common], help="resonance versus lithographic scale")
    s.add_argument("--factors", type=float, nargs="+", metavar="PCT")
    s.add_argument("--mode", choices=("in_plane", "uniform"))
    g = sub.add_parser("sweep-gap", parents=[common], help="Q versus cavity length")
    g.add_argument("--start", type=float, metavar="NM")
    g.add_argument("--stop", type=float, metavar="NM")
    g.add_argument("--step", type=float, metavar="NM")
    f = sub.add_parser("fit-spectrum", parents=[common], help="Lorentzian fit of a spectrum CSV")
    f.add_argument("spectrum", nargs="?", help="two-column CSV (wavelength_nm, counts)")
    f.add_argument("--bundled", action="store_true", help="fit the bundled synthetic spectrum")
    f.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
    b = sub.add_parser("bands", parents=[common], help="band structure of a lattice cell")
    b.add_argument("--cell", choices=("mirror", "taper_end", "no_holes"))
    return p


def resolve_threads(requested=None, env=None):
    """Thread cap: explicit flag, else NANOBEAM_THREADS, else all cores."""
    env = os.environ if env is None else env
    cores = os.cpu_count() or 1
    if requested is None:
        raw = env.get("NANOBEAM_THREADS")
        if raw:
            try:
                requested = int(raw)
            except ValueError:
                raise ConfigError(f"NANOBEAM_THREADS must be an integer, got {raw!r}",
                                  "NANOBEAM_THREADS") from None
    if requested is None:
        return cores
    if requested < 1:
        raise ConfigError("thread count must be >= 1", "threads")
    return min(requested, cores)


def _error_report(out, code, exc):
    report = {"status": {EXIT_VALIDATION: "validation_error", EXIT_NUMERICAL: "numerical_failure",
                         EXIT_NO_RESONANCE: "no_resonance"}.get(code, "error"),
              "exit_code": code, "error_type": type(exc).__name__, "message": str(exc)}
    field_name = getattr(exc, "field_name", None)
    if field_name:
        report["field"] = field_name
    line = getattr(exc, "line", None)
    if line:
        report["line"] = line
    try:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / "error.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    except OSError:
        pass
    print(f"nanobeam: error: {exc}", file=sys.stderr)
    return code


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        return _dispatch(args)
    except NoResonanceError as exc:
        return _error_report(args.out, EXIT_NO_RESONANCE, exc)
    except _VALIDATION as exc:
        return _error_report(args.out, EXIT_VALIDATION, exc)
    except _NUMERICAL as exc:
        return _error_report(args.out, EXIT_NUMERICAL, exc)


def _dispatch(args):
    from ..solver.kernels import set_threads
    from . import commands

    set_threads(resolve_threads(args.threads))
    if args.resolution is not None and not args.resolution > 0:
        raise ConfigError("--resolution must be positive", "resolution")

    if args.command == "fit-spectrum":
        if args.bundled:
            from ..data import bundled_spectrum_path
            path = bundled_spectrum_path()
        elif args.spectrum:
            path = args.spectrum
        else:
            raise ConfigError("fit-spectrum needs a CSV path or --bundled", "spectrum")
        fit, _ = commands.cmd_fit_spectrum(path, args.out, window=args.window)
        print(f"lambda0 = {fit.center:.4f} nm  Q = {fit.q:,.0f}"
              + ("  (resolution limited)" if fit.resolution_limited else ""))
        return EXIT_OK

    cfg = load_config(args.config)
    if args.command == "bands":
        _, report = commands.cmd_bands(cfg, args.out, cell=args.cell, resolution=args.resolution)
        if report["status"] == "gap":
            print(f"gap {report['gap_lower_a_over_lambda']:.4f} - "
                  f"{report['gap_upper_a_over_lambda']:.4f} a/lambda")
        else:
            print("no gap")
        return EXIT_OK

    cfg = cfg.with_resolution(args.resolution)
    if args.command == "simulate":
        summary, _ = commands.cmd_simulate(cfg, args.out)
        print(f"lambda0 = {summary['lambda0_nm']:.2f} nm  Q = {summary['q_dimless']:.4g}")
        return EXIT_OK
    if args.command == "sweep-scale":
        result, _ = commands.cmd_sweep_scale(cfg, args.out, factors=args.factors, mode=args.mode)
    else:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", UserWarning)
            result, _ = commands.cmd_sweep_gap(cfg, args.out, args.start, args.stop, args.step)
        for w in caught:
            print(f"nanobeam: warning: {w.message}", file=sys.stderr)
    for r in result.rows:
        detail = (f"lambda0 = {r['lambda0_nm']:.2f} nm  Q = {r['q_dimless']:.4g}"
                  if r["status"] == "ok" else r["status"])
        print(f"{result.variable} = {r['value']:g}: {detail}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
