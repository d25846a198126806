"""Cavity figures of merit: mode volume, Purcell factor, Q convergence."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DegenerateFieldError(ValueError):
    pass


@dataclass(frozen=True)
class ModeVolumeResult:
    vm_physical: float         # um^3
    vm_normalized: float       # (lambda/n)^3
    wavelength: float          # nm
    index: float

    def to_record(self):
        return {
            "mode_volume_um3": self.vm_physical,
            "mode_volume_lambda_over_n_cubed": self.vm_normalized,
            "mode_volume_wavelength_nm": self.wavelength,
            "mode_volume_index_dimless": self.index,
        }


def mode_volume(intensity, eps, delta, wavelength, index, weights=None) -> ModeVolumeResult:
    """Vm = sum(eps |E|^2 dV) / max(eps |E|^2), normalized by (lambda/n)^3.

    ``intensity`` is |E|^2 on the node lattice, ``delta`` the spacing in nm.
    ``weights`` is an optional triple of per-axis node weights (absorber
    exclusion and symmetry unfolding); nodes with zero weight are ignored
    when locating the maximum as well.
    """
    intensity = np.asarray(intensity, dtype=float)
    eps = np.broadcast_to(np.asarray(eps, dtype=float), intensity.shape)
    dens = eps * intensity
    if weights is None:
        total = float(dens.sum())
        peak = float(dens.max()) if dens.size else 0.0
    else:
        wx, wy, wz = (np.asarray(w, dtype=float) for w in weights)
        total = float(np.einsum("ijk,i,j,k->", dens, wx, wy, wz))
        mask = (wx[:, None, None] > 0) & (wy[None, :, None] > 0) & (wz[None, None, :] > 0)
        peak = float(np.max(dens, where=mask, initial=0.0))
    if not peak > 0:
        raise DegenerateFieldError("field energy density vanishes everywhere")
    vol_nm3 = total / peak * delta ** 3
    vm_um3 = vol_nm3 * 1e-9
    norm = (wavelength / index) ** 3
    return ModeVolumeResult(vm_physical=vm_um3, vm_normalized=vol_nm3 / norm,
                            wavelength=float(wavelength), index=float(index))


def purcell_factor(q, vm_normalized):
    """F = 3/(4 pi^2) * Q / V, with V in units of (lambda/n)^3."""
    if not q > 0 or not vm_normalized > 0:
        raise ValueError("Q and mode volume must be positive")
    return 3.0 / (4.0 * math.pi ** 2) * q / vm_normalized


@dataclass(frozen=True)
class ConvergenceReport:
    resolutions: tuple          # nm, finest last
    q_values: tuple
    q_extrapolated: float
    order: float
    monotonic: bool             # Q strictly increases as the grid is refined

    def to_record(self):
        return {
            "resolutions_nm": list(self.resolutions),
            "q_values_dimless": list(self.q_values),
            "q_extrapolated_dimless": self.q_extrapolated,
            "convergence_order_dimless": self.order,
            "monotonic": self.monotonic,
        }


def q_convergence(series, order=2.0) -> ConvergenceReport:
    """Richardson-style extrapolation of Q(delta) to delta -> 0.

    Fits ``Q = Q_inf + c * delta**order`` by least squares over all points.
    """
    pts = sorted(((float(d), float(q)) for d, q in series), key=lambda p: -p[0])
    if len(pts) < 3:
        raise ValueError("need at least three resolutions")
    d = np.array([p[0] for p in pts])
    q = np.array([p[1] for p in pts])
    a = np.column_stack([np.ones_like(d), d ** order])
    (q_inf, _), *_ = np.linalg.lstsq(a, q, rcond=None)
    monotonic = bool(np.all(np.diff(q) > 0))
    return ConvergenceReport(tuple(d.tolist()), tuple(q.tolist()), float(q_inf), float(order),
                             monotonic)
