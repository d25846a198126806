"""Harmonic inversion of ring-down signals by a filtered matrix pencil.

The signal is mixed down to the centre of the requested band, low-pass
filtered with a linear-phase FIR and decimated, then decomposed with the
matrix-pencil method. An FIR filter maps every damped exponential ``z**n`` to
``H(z) z**n`` (after its transient), so poles survive the preprocessing
exactly; amplitudes are corrected by ``H`` afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal
from scipy.constants import c as C0


FILTER_ATTENUATION_DB = 120.0


class InversionInputError(ValueError):
    pass


@dataclass(frozen=True)
class ResonanceMode:
    """A decaying sinusoid ``Re[amplitude * exp((i*omega0 - decay_rate) * t)]``.

    ``t`` is measured from the first analysed sample. ``decay_rate`` is the
    amplitude decay rate, so ``q = omega0 / (2 * decay_rate)``.
    """

    wavelength: float            # nm
    omega0: float                # rad/s
    q: float
    amplitude: complex
    decay_rate: float            # 1/s

    @classmethod
    def from_pole(cls, omega, gamma, amplitude):
        q = omega / (2 * gamma) if gamma > 0 else math.inf
        return cls(wavelength=2 * math.pi * C0 / omega * 1e9, omega0=omega, q=q,
                   amplitude=complex(amplitude), decay_rate=gamma)


def matrix_pencil(x, threshold=1e-8, pencil=None):
    """Poles and complex amplitudes of ``x[n] = sum_k b_k p_k**n``.

    Model order is the count of singular values above ``threshold`` times
    the largest one.
    """
    x = np.asarray(x, dtype=np.complex128)
    n = x.size
    if pencil is None:
        pencil = min(n // 3, 500)
    pencil = max(1, pencil)
    if n < pencil + 2:
        raise InversionInputError(f"{n} samples cannot support pencil parameter {pencil}")
    rows = n - pencil
    idx = np.arange(rows)[:, None] + np.arange(pencil + 1)[None, :]
    hankel = x[idx]
    _, s, vh = np.linalg.svd(hankel, full_matrices=False)
    if s[0] == 0:
        return np.empty(0, complex), np.empty(0, complex)
    order = int(np.count_nonzero(s > threshold * s[0]))
    order = min(order, pencil)
    vm = vh[:order]
    a = vm[:, 1:] @ np.linalg.pinv(vm[:, :-1])
    poles = np.linalg.eigvals(a)
    # Growing poles cannot be resolved as modes and would overflow the fit.
    poles = poles[np.abs(poles) ** n < 1e6]
    if poles.size == 0:
        return poles, poles
    vander = poles[None, :] ** np.arange(n)[:, None]
    amps, *_ = np.linalg.lstsq(vander, x, rcond=None)
    return poles, amps


def harmonic_inversion(ts, band, max_modes=10, threshold=1e-8, min_amplitude=1e-6,
                       use_post_source=True, skip=0, max_growth=1e-6):
    """Extract decaying sinusoids with wavelengths inside ``band`` (nm).

    ``ts`` is a ``TimeSeries``; by default only its post-source samples are
    used, after dropping ``skip`` further samples. Modes are ranked by
    amplitude magnitude; those below ``min_amplitude`` times the signal peak
    are treated as noise. Poles growing faster than ``max_growth`` times
    their angular frequency are rejected as fit artefacts.
    """
    lam_lo, lam_hi = sorted(band)
    if not lam_lo > 0:
        raise InversionInputError("band edges must be positive wavelengths")
    start = (ts.post_source_index if use_post_source else 0) + skip
    x = np.asarray(ts.samples[start:])
    dt = ts.dt
    peak = np.max(np.abs(x)) if x.size else 0.0
    if peak == 0.0 or not np.isfinite(peak):
        return []

    w_lo = 2 * math.pi * C0 / (lam_hi * 1e-9)
    w_hi = 2 * math.pi * C0 / (lam_lo * 1e-9)
    w_mix = 0.5 * (w_lo + w_hi)
    half = 0.5 * (w_hi - w_lo)
    cycles = x.size * dt * w_mix / (2 * math.pi)
    if cycles < 20:
        raise InversionInputError(
            f"series spans {cycles:.1f} optical cycles; at least 20 are required")

    # Normalising first keeps every later step independent of overall scale.
    y = x / peak
    fs = 1.0 / dt
    f_half = half / (2 * math.pi)
    decim = max(1, int(fs // (4.0 * f_half)))
    complex_input = np.iscomplexobj(y)
    n_idx = np.arange(y.size)
    mixer = np.exp(-1j * w_mix * dt * n_idx)
    z = y * mixer

    if decim > 1:
        # 120 dB keeps the stop-band leakage of the conjugate (negative
        # frequency) image well below the amplitude floor once decimated.
        nyq_d = fs / decim / 2
        trans = nyq_d - 1.25 * f_half
        ntaps, beta = signal.kaiserord(FILTER_ATTENUATION_DB, trans / (fs / 2))
        ntaps |= 1
        taps = signal.firwin(ntaps, 1.25 * f_half, window=("kaiser", beta), fs=fs)
        if z.size < ntaps + 20 * decim:
            raise InversionInputError("series too short for the band-limiting filter")
        filt = signal.oaconvolve(z, taps, mode="valid")
        w = filt[::decim]
        lag = ntaps - 1
    else:
        taps = np.array([1.0])
        w = z
        lag = 0

    poles_d, amps_d = matrix_pencil(w, threshold=threshold)
    if poles_d.size == 0:
        return []
    step = decim * dt
    s = np.log(poles_d) / step                 # baseband complex rates
    gamma = -s.real
    omega = w_mix + s.imag
    # Undo filter gain and lag: amplitude at the first analysed sample.
    z1 = np.exp(s * dt)
    gain = np.polyval(taps[::-1], 1.0 / z1) if decim > 1 else np.ones_like(z1)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = amps_d / (gain * z1 ** lag)
    amp = c * peak * (1.0 if complex_input else 2.0)

    modes = []
    for om, ga, a in zip(omega, gamma, amp):
        if not (np.isfinite(om) and np.isfinite(a)):
            continue
        if not w_lo <= om <= w_hi or om <= 0:
            continue
        if abs(a) < min_amplitude * peak:
            continue
        if ga < 0 and -ga > max_growth * om:
            continue        # growing: unphysical fit artefact
        modes.append(ResonanceMode.from_pole(float(om), float(max(ga, 0.0)), a))
    modes.sort(key=lambda m: -abs(m.amplitude))
    return modes[:max_modes]


def dominant_mode(modes, window):
    """Mode carrying the most signal energy over ``window`` seconds."""
    if not modes:
        return None

    def weight(m):
        g = m.decay_rate
        e = (1 - math.exp(-2 * g * window)) / (2 * g) if g > 0 else window
        return abs(m.amplitude) ** 2 * e

    return max(modes, key=weight)
