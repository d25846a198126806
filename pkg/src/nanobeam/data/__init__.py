"""Bundled example data."""

from importlib import resources

SPECTRUM_FILE = "synthetic_spectrum_q55000.csv"
# Generation parameters of the bundled spectrum.
SPECTRUM_PARAMS = {"center_nm": 623.7, "q": 55000.0, "n_points": 50, "half_span_fwhm": 4.0,
                   "amplitude": 1000.0, "background": 100.0, "noise": 0.05, "seed": 0}


def bundled_spectrum_path():
    return resources.files(__name__) / SPECTRUM_FILE


def regenerate(path=None):
    """Rebuild the bundled spectrum file from ``SPECTRUM_PARAMS``."""
    from ..analysis.lorentz import synthetic_spectrum, write_spectrum_csv

    p = dict(SPECTRUM_PARAMS)
    spec = synthetic_spectrum(p.pop("center_nm"), p.pop("q"), **p)
    write_spectrum_csv(path or bundled_spectrum_path(), spec)
    return spec
