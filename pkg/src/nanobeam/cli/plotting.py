"""SVG figures for run reports. Data behind every plot is also written as CSV."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "nanobeam"
_META = {"Date": None, "Creator": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def mode_profile(path, xs, ys, values, component="y"):
    fig, ax = plt.subplots(figsize=(8, 2.6))
    lim = float(np.max(np.abs(values))) or 1.0
    im = ax.imshow(np.asarray(values).T, origin="lower", cmap="RdBu_r", vmin=-lim, vmax=lim,
                   extent=(xs[0], xs[-1], ys[0], ys[-1]), aspect="equal")
    ax.set_xlabel("x (nm)")
    ax.set_ylabel("y (nm)")
    ax.set_title(f"E{component} at z = 0")
    fig.colorbar(im, ax=ax, shrink=0.8)
    _save(fig, path)


def ringdown(path, t_fs, samples):
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.plot(t_fs, samples, lw=0.4)
    ax.set_xlabel("time (fs)")
    ax.set_ylabel("field (arb.)")
    _save(fig, path)


def sweep(path, x, y, xlabel, ylabel, logy=False, fit=None):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(x, y, "o-")
    if fit is not None:
        slope, intercept = fit
        xx = np.linspace(min(x), max(x), 50)
        ax.plot(xx, slope * xx + intercept, "--", lw=1)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    _save(fig, path)


def spectrum_fit(path, wl, counts, wl_fit, fit_curve, q):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(wl, counts, "o", ms=3, label="data")
    ax.plot(wl_fit, fit_curve, "r-", lw=1.2, label=f"Lorentzian fit, Q = {q:,.0f}")
    ax.set_xlabel("wavelength (nm)")
    ax.set_ylabel("counts")
    ax.legend(frameon=False)
    ax.ticklabel_format(useOffset=False, axis="x")
    _save(fig, path)


def band_diagram(path, points, gap=None, target=None, n_background=1.0):
    fig, ax = plt.subplots(figsize=(4.5, 4))
    for p in points:
        ax.plot([p.k] * len(p.frequencies), p.frequencies, "k.", ms=4)
    kk = np.linspace(0, 1, 50)
    ax.plot(kk, kk / (2 * n_background), "b-", lw=0.8, label="light line")
    if gap is not None:
        ax.axhspan(gap.lower, gap.upper, color="0.85", label="gap")
    if target is not None:
        ax.axhline(target, color="r", ls="--", lw=0.8, label="target")
    ax.set_xlim(0, 1)
    ax.set_xlabel("k (pi/a)")
    ax.set_ylabel("a / lambda")
    ax.legend(frameon=False, loc="upper left")
    _save(fig, path)
