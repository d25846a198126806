"""Resonance extraction, spectra and cavity figures of merit."""

from .harminv import InversionInputError, ResonanceMode, dominant_mode, harmonic_inversion
from .lorentz import (ExtinctionResult, FitError, LorentzianFit, Spectrum, SpectrumError,
                      extinction_ratio, lorentzian, lorentzian_fit, read_spectrum_csv,
                      synthetic_spectrum, write_spectrum_csv)
from .modes import (ConvergenceReport, DegenerateFieldError, ModeVolumeResult, mode_volume,
                    purcell_factor, q_convergence)

__all__ = [
    "ConvergenceReport", "DegenerateFieldError", "ExtinctionResult", "FitError",
    "InversionInputError", "LorentzianFit", "ModeVolumeResult", "ResonanceMode", "Spectrum",
    "SpectrumError", "dominant_mode", "extinction_ratio", "harmonic_inversion", "lorentzian",
    "lorentzian_fit", "mode_volume", "purcell_factor", "q_convergence", "read_spectrum_csv",
    "synthetic_spectrum", "write_spectrum_csv",
]
