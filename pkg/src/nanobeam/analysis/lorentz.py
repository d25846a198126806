"""Spectra: ingestion, Lorentzian lineshape fitting, polarization extinction."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares


class SpectrumError(ValueError):
    pass


class FitError(RuntimeError):
    def __init__(self, message, residual_rms=None):
        super().__init__(message)
        self.residual_rms = residual_rms


@dataclass(frozen=True)
class Spectrum:
    wavelength: np.ndarray     # nm, strictly increasing
    intensity: np.ndarray      # counts

    def __post_init__(self):
        w = np.asarray(self.wavelength, dtype=float)
        y = np.asarray(self.intensity, dtype=float)
        if w.shape != y.shape or w.ndim != 1:
            raise SpectrumError("wavelength and intensity must be 1D arrays of equal length")
        if w.size > 1 and not np.all(np.diff(w) > 0):
            raise SpectrumError("wavelengths must be strictly increasing")
        if np.any(y < 0):
            raise SpectrumError("intensities must be non-negative")
        object.__setattr__(self, "wavelength", w)
        object.__setattr__(self, "intensity", y)

    def window(self, lo, hi):
        m = (self.wavelength >= lo) & (self.wavelength <= hi)
        return Spectrum(self.wavelength[m], self.intensity[m])

    @property
    def bin_width(self):
        return float(np.median(np.diff(self.wavelength))) if self.wavelength.size > 1 else math.nan


def read_spectrum_csv(path) -> Spectrum:
    """Two-column CSV (wavelength_nm, counts); a header row is optional.

    Rows are sorted by wavelength.
    """
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise SpectrumError(f"{path}:{lineno}: expected two columns")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                if rows:
                    raise SpectrumError(f"{path}:{lineno}: non-numeric value") from None
                continue    # header
    if not rows:
        raise SpectrumError(f"{path}: no data rows")
    arr = np.array(sorted(rows))
    return Spectrum(arr[:, 0], arr[:, 1])


def write_spectrum_csv(path, spec: Spectrum):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["wavelength_nm", "counts"])
        for x, y in zip(spec.wavelength, spec.intensity):
            w.writerow([repr(float(x)), repr(float(y))])


def lorentzian(wl, center, fwhm, amplitude, background):
    hw2 = (fwhm / 2) ** 2
    return amplitude * hw2 / ((wl - center) ** 2 + hw2) + background


@dataclass(frozen=True)
class LorentzianFit:
    center: float          # nm
    fwhm: float            # nm
    amplitude: float
    background: float
    residual_rms: float
    q: float
    resolution_limited: bool = False
    reliable: bool = True

    @classmethod
    def build(cls, center, fwhm, amplitude, background, residual_rms, bin_width, span=None):
        """``span`` is the (first, last) wavelength of the fitted data.

        A fit counts as reliable when the peak stands five residual RMS above
        the background and sits at least one FWHM inside the data span.
        """
        fwhm = abs(fwhm)
        inside = span is None or (span[0] + fwhm <= center <= span[1] - fwhm)
        return cls(center=float(center), fwhm=float(fwhm), amplitude=float(amplitude),
                   background=float(background), residual_rms=float(residual_rms),
                   q=float(center / fwhm),
                   resolution_limited=bool(np.isfinite(bin_width) and fwhm < 2 * bin_width),
                   reliable=bool(amplitude > 5 * residual_rms and inside))

    def to_record(self):
        return {
            "lambda0_nm": self.center,
            "fwhm_nm": self.fwhm,
            "q_dimless": self.q,
            "amplitude_counts": self.amplitude,
            "background_counts": self.background,
            "residual_rms_counts": self.residual_rms,
            "resolution_limited": self.resolution_limited,
            "reliable": self.reliable,
        }


def _initial_guess(wl, y):
    k = int(np.argmax(y))
    if k == 0 or k == y.size - 1:
        raise FitError("peak lies on the edge of the fit window")
    bg = float(np.median(np.concatenate([y[: max(1, y.size // 10)], y[-max(1, y.size // 10):]])))
    amp = float(y[k] - bg)
    if not amp > 0:
        raise FitError("no peak above background in the fit window")
    half = bg + amp / 2

    def crossing(start, stop, step):
        for i in range(start, stop, step):
            if y[i] < half:
                inner = i - step
                return wl[inner] + (half - y[inner]) * (wl[i] - wl[inner]) / (y[i] - y[inner])
        return None

    right = crossing(k + 1, y.size, 1)
    left = crossing(k - 1, -1, -1)
    if left is None and right is None:
        raise FitError("no half-maximum crossing in the fit window")
    if left is None:
        fwhm = 2 * (right - wl[k])
    elif right is None:
        fwhm = 2 * (wl[k] - left)
    else:
        fwhm = right - left
    fwhm = max(fwhm, 0.5 * float(np.min(np.diff(wl))))
    return float(wl[k]), float(fwhm), amp, bg


def lorentzian_fit(spec: Spectrum, window=None, max_iterations=200) -> LorentzianFit:
    """Least-squares Lorentzian plus constant background; Q = center / FWHM."""
    s = spec.window(*window) if window is not None else spec
    if s.wavelength.size < 6:
        raise SpectrumError(f"{s.wavelength.size} points in window; at least 6 are required")
    wl, y = s.wavelength, s.intensity
    c0, g0, a0, b0 = _initial_guess(wl, y)

    # Centre and scale the problem: offsets in units of the initial width,
    # intensities in units of the initial amplitude.
    xs = (wl - c0) / g0
    ys = y / a0

    def resid(p):
        return lorentzian(xs, p[0], p[1], p[2], p[3]) - ys

    def jac(p):
        c, g, a, _ = p
        hw2 = (g / 2) ** 2
        d = (xs - c) ** 2 + hw2
        shape = hw2 / d
        return np.column_stack([
            a * shape * 2 * (xs - c) / d,
            a * (g / 2) * (xs - c) ** 2 / d ** 2,
            shape,
            np.ones_like(xs),
        ])

    res = least_squares(resid, x0=[0.0, 1.0, 1.0, b0 / a0], jac=jac, method="lm",
                        max_nfev=max_iterations, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    rms = float(np.sqrt(np.mean(res.fun ** 2)) * a0)
    if res.status == 0:
        raise FitError(f"fit did not converge within {max_iterations} iterations "
                       f"(residual rms {rms:.4g})", residual_rms=rms)
    if not res.success or not np.all(np.isfinite(res.x)):
        raise FitError(f"fit failed: {res.message}", residual_rms=rms)
    cx, gx, ax, bx = res.x
    center = c0 + cx * g0
    fwhm = abs(gx) * g0
    if not (wl[0] <= center <= wl[-1]) or fwhm <= 0:
        raise FitError("fitted peak falls outside the window", residual_rms=rms)
    if fwhm < 0.1 * s.bin_width:
        # A line this narrow rests on a single sample: no width is measured.
        raise FitError(f"fit collapsed onto one sample (FWHM {fwhm:.3g} nm, bin "
                       f"{s.bin_width:.3g} nm)", residual_rms=rms)
    return LorentzianFit.build(center, fwhm, ax * a0, bx * a0, rms, s.bin_width,
                               span=(wl[0], wl[-1]))


@dataclass(frozen=True)
class ExtinctionResult:
    ratio: float
    lower_bound: bool
    parallel_peak: float
    perpendicular_peak: float

    def to_record(self):
        return asdict(self)


def _peak_above_background(s: Spectrum):
    y = s.intensity
    k = max(1, y.size // 10)
    edges = np.concatenate([y[:k], y[-k:]])
    bg = float(np.median(edges))
    noise = float(np.std(edges))
    return float(np.max(y) - bg), noise, bg


def extinction_ratio(parallel: Spectrum, perpendicular: Spectrum, window) -> ExtinctionResult:
    """Peak-above-background ratio of co- and cross-polarized spectra.

    When the perpendicular peak is not above three times its background
    noise, the ratio is reported against that noise level as a lower bound.
    """
    lo, hi = window
    for name, s in (("parallel", parallel), ("perpendicular", perpendicular)):
        if s.wavelength.size == 0 or s.wavelength[0] > lo or s.wavelength[-1] < hi:
            raise SpectrumError(f"{name} spectrum does not cover the window {window}")
    pa = parallel.window(lo, hi)
    pe = perpendicular.window(lo, hi)
    if pa.wavelength.size < 3 or pe.wavelength.size < 3:
        raise SpectrumError("too few points inside the window")
    p_par, _, _ = _peak_above_background(pa)
    p_perp, noise, bg = _peak_above_background(pe)
    floor = 3 * noise
    if p_perp > floor and p_perp > 0:
        return ExtinctionResult(p_par / p_perp, False, p_par, p_perp)
    floor = max(floor, 1e-12 * max(abs(bg), abs(p_par), 1e-300))
    return ExtinctionResult(p_par / floor, True, p_par, p_perp)


def synthetic_spectrum(center, q, n_points=50, half_span_fwhm=4.0, amplitude=1000.0,
                       background=100.0, noise=0.05, seed=0):
    """Lorentzian sampled on a uniform grid with Gaussian noise.

    ``noise`` is the standard deviation as a fraction of ``amplitude``;
    negative samples are clipped to zero.
    """
    fwhm = center / q
    wl = np.linspace(center - half_span_fwhm * fwhm, center + half_span_fwhm * fwhm, n_points)
    y = lorentzian(wl, center, fwhm, amplitude, background)
    if noise:
        rng = np.random.default_rng(seed)
        y = y + rng.normal(0.0, noise * amplitude, size=wl.size)
    return Spectrum(wl, np.clip(y, 0.0, None))
