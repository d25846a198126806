"""Parametric nanobeam cavity: hole layout, lithographic scaling, rasterization.

Axes: x along the beam, y across the width, z through the slab thickness.
All lengths are in nanometres. The cavity centre sits at the origin and the
unperturbed device is mirror-symmetric about all three coordinate planes.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field, fields, replace
from typing import NamedTuple, Sequence

import numpy as np


class GeometryError(ValueError):
    """Invalid geometry parameters or overlapping holes."""

    def __init__(self, message, field_name=None):
        super().__init__(message)
        self.field_name = field_name


class SizingError(ValueError):
    """Requested domain cannot hold the device, padding and absorber."""


class UnderResolvedWarning(UserWarning):
    pass


@dataclass(frozen=True)
class NanobeamGeometry:
    thickness: float = 200.0
    width: float = 300.0
    n_slab: float = 2.0
    n_background: float = 1.0
    mirror_period: float = 250.0
    mirror_radius: float = 70.0
    taper_period: float = 205.0
    taper_radius: float = 55.0
    n_taper: int = 4
    n_mirror: int = 10
    cavity_length: float = 205.0
    ellipticity: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        positive = ("thickness", "width", "n_slab", "n_background", "mirror_period",
                    "mirror_radius", "taper_period", "taper_radius", "cavity_length",
                    "ellipticity", "scale")
        for name in positive:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise GeometryError(f"{name} must be a positive finite number, got {value!r}", name)
        for name in ("n_taper", "n_mirror"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise GeometryError(f"{name} must be an integer, got {value!r}", name)
        if self.n_taper < 0:
            raise GeometryError("n_taper must be >= 0", "n_taper")
        if self.n_mirror < 1:
            raise GeometryError("n_mirror must be >= 1", "n_mirror")
        if self.taper_radius > self.mirror_radius:
            raise GeometryError("taper_radius must not exceed mirror_radius", "taper_radius")
        if self.taper_period > self.mirror_period:
            raise GeometryError("taper_period must not exceed mirror_period", "taper_period")
        if 2 * self.mirror_radius * self.across_factor >= self.width:
            raise GeometryError("mirror_radius too large: holes do not fit inside the beam width",
                                "mirror_radius")
        if self.cavity_length <= 2 * self.taper_radius:
            raise GeometryError("cavity_length must exceed twice the taper radius",
                                "cavity_length")

    @property
    def along_factor(self):
        # Area-preserving ellipse: semi-axes r*sqrt(e) along x and r/sqrt(e) across.
        return math.sqrt(self.ellipticity)

    @property
    def across_factor(self):
        return 1.0 / math.sqrt(self.ellipticity)

    @property
    def scaled_width(self):
        return self.width * self.scale

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


class Hole(NamedTuple):
    center_x: float
    radius_along: float
    radius_across: float


@dataclass(frozen=True)
class HoleList:
    """Holes ordered by x, mirror-symmetric about x = 0."""

    holes: tuple[Hole, ...]

    def __len__(self):
        return len(self.holes)

    def __iter__(self):
        return iter(self.holes)

    def __getitem__(self, i):
        return self.holes[i]

    def side(self):
        """Holes with x > 0, innermost first."""
        return [h for h in self.holes if h.center_x > 0]

    @property
    def extent(self):
        """Largest |x| reached by any hole edge."""
        if not self.holes:
            return 0.0
        return max(abs(h.center_x) + h.radius_along for h in self.holes)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["center_x_nm", "radius_along_nm", "radius_across_nm"])
        for h in self.holes:
            writer.writerow([repr(float(h.center_x)), repr(float(h.radius_along)),
                             repr(float(h.radius_across))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        reader = csv.DictReader(io.StringIO(text))
        return cls(tuple(Hole(float(r["center_x_nm"]), float(r["radius_along_nm"]),
                              float(r["radius_across_nm"])) for r in reader))


def taper_profile(params: NanobeamGeometry):
    """Unscaled per-side (radii, pitches) sequences, innermost hole first.

    ``pitches[k]`` is the spacing from hole k to hole k+1. The taper steps
    linearly from the centre values and reaches the mirror period and radius
    after ``n_taper`` steps.
    """
    nt, nm = params.n_taper, params.n_mirror
    a, r, a0, r1 = (params.mirror_period, params.mirror_radius,
                    params.taper_period, params.taper_radius)
    radii = []
    pitches = []
    for k in range(nt + nm):
        if k < nt:
            radii.append(r1 + k * (r - r1) / nt)
            pitches.append(a0 + (k + 1) * (a - a0) / nt)
        else:
            radii.append(r)
            pitches.append(a)
    return radii, pitches[:-1]


def build_nanobeam(params: NanobeamGeometry) -> HoleList:
    radii, pitches = taper_profile(params)
    s = params.scale
    fa, fc = params.along_factor, params.across_factor
    xs = [params.cavity_length / 2]
    for p in pitches:
        xs.append(xs[-1] + p)
    side = [Hole(x * s, rad * s * fa, rad * s * fc) for x, rad in zip(xs, radii)]

    if side[0].center_x <= side[0].radius_along:
        raise GeometryError(
            f"central holes -0 and +0 overlap (cavity_length {params.cavity_length} nm)",
            "cavity_length")
    for k in range(len(side) - 1):
        h0, h1 = side[k], side[k + 1]
        if h1.center_x - h0.center_x <= h0.radius_along + h1.radius_along:
            raise GeometryError(f"holes {k} and {k + 1} overlap")

    mirrored = [Hole(-h.center_x, h.radius_along, h.radius_across) for h in reversed(side)]
    return HoleList(tuple(mirrored + side))


def apply_scale(geom: NanobeamGeometry, factor_percent: float,
                uniform: bool = False) -> NanobeamGeometry:
    """Scale all in-plane dimensions by ``1 + factor_percent / 100``.

    With ``uniform=True`` the slab thickness is scaled as well, which is a
    pure change of length unit for the whole structure.
    """
    f = 1.0 + factor_percent / 100.0
    if not f > 0:
        raise GeometryError(f"scale factor {factor_percent}% leaves a non-positive size", "scale")
    if factor_percent == 0:
        return geom
    if uniform:
        return replace(geom, scale=geom.scale * f, thickness=geom.thickness * f)
    return replace(geom, scale=geom.scale * f)


@dataclass
class PermittivityGrid:
    """Relative permittivity sampled on a uniform node lattice.

    ``eps[i, j, k]`` is the box average around node ``origin + (i, j, k) * delta``.
    The optional ``eps_x/eps_y/eps_z`` arrays are box averages centred on the
    Yee E-component positions (shape reduced by one along their own axis).
    """

    delta: float
    origin: tuple[float, float, float]
    eps: np.ndarray
    eps_x: np.ndarray | None = None
    eps_y: np.ndarray | None = None
    eps_z: np.ndarray | None = None
    periodic: tuple[bool, bool, bool] = (False, False, False)
    meta: dict = field(default_factory=dict)

    @property
    def shape(self):
        """Number of cells per axis."""
        return tuple(n - 1 for n in self.eps.shape)

    def node_coords(self, axis):
        n = self.eps.shape[axis]
        return self.origin[axis] + np.arange(n) * self.delta

    def center_index(self, axis):
        """Node index sitting at coordinate 0, or None."""
        idx = -self.origin[axis] / self.delta
        i = int(round(idx))
        if abs(idx - i) > 1e-9 or not 0 <= i < self.eps.shape[axis]:
            return None
        return i

    def component_eps(self, axis):
        comp = (self.eps_x, self.eps_y, self.eps_z)[axis]
        if comp is not None:
            return comp
        sl0 = [slice(None)] * 3
        sl1 = [slice(None)] * 3
        sl0[axis] = slice(0, -1)
        sl1[axis] = slice(1, None)
        return 0.5 * (self.eps[tuple(sl0)] + self.eps[tuple(sl1)])

    def is_symmetric(self, axis, atol=0.0):
        """Reflection symmetry about coordinate 0 along ``axis``."""
        c = self.center_index(axis)
        n = self.eps.shape[axis]
        if c is None or 2 * c != n - 1:
            return False
        flipped = np.flip(self.eps, axis=axis)
        if atol == 0.0:
            return bool(np.array_equal(self.eps, flipped))
        return bool(np.allclose(self.eps, flipped, rtol=0.0, atol=atol))

    def dielectric_volume(self):
        """Sum of (eps - 1) * delta^3 over the node lattice, in nm^3."""
        return float(np.sum(self.eps - 1.0) * self.delta ** 3)

    @classmethod
    def uniform(cls, shape, delta, eps=1.0, origin=(0.0, 0.0, 0.0), periodic=(False, False, False)):
        nodes = tuple(n + 1 for n in shape)
        return cls(delta=float(delta), origin=tuple(float(o) for o in origin),
                   eps=np.full(nodes, float(eps)), periodic=tuple(periodic))


def _sample_offsets(s):
    # Midpoints of s equal sub-intervals of [-1/2, 1/2], in units of delta.
    return (np.arange(s) + 0.5) / s - 0.5


def _sample_points(n_lo, n_nodes, shift, delta, s):
    """Sub-sample coordinates for nodes ``n_lo .. n_lo + n_nodes - 1``.

    Built from integers and exactly representable fractions so that mirrored
    nodes produce exactly negated coordinates.
    """
    base = (np.arange(n_nodes) + n_lo + shift)[:, None]
    return ((base + _sample_offsets(s)[None, :]) * delta).ravel()


def _interval_fraction(centres, delta, half):
    """Exact fraction of each box [c - delta/2, c + delta/2] inside [-half, half]."""
    lo = np.maximum(centres - delta / 2, -half)
    hi = np.minimum(centres + delta / 2, half)
    return np.clip(hi - lo, 0.0, delta) / delta


def _node_centres(nodes, shift, delta):
    return (np.asarray(nodes, dtype=float) + shift) * delta


def inplane_fraction(holes, width, x_nodes, y_nodes, delta, s, shift=(0.0, 0.0)):
    """Fraction of each node's delta x delta box occupied by beam material.

    ``x_nodes``/``y_nodes`` are consecutive integer node indices (coordinate
    = index*delta). The straight side walls are integrated exactly; the area
    of each hole inside a box is estimated from ``s`` x ``s`` sub-samples.
    """
    x_nodes = np.asarray(x_nodes)
    y_nodes = np.asarray(y_nodes)
    cx = _node_centres(x_nodes, shift[0], delta)
    cy = _node_centres(y_nodes, shift[1], delta)
    frac = np.broadcast_to(_interval_fraction(cy, delta, width / 2)[None, :],
                           (cx.size, cy.size)).copy()
    for h in holes:
        if h.radius_along <= 0 or h.radius_across <= 0:
            continue
        ix = np.nonzero(np.abs(cx - h.center_x) < h.radius_along + delta / 2)[0]
        iy = np.nonzero(np.abs(cy) < h.radius_across + delta / 2)[0]
        if ix.size == 0 or iy.size == 0:
            continue
        i0, i1, j0, j1 = ix[0], ix[-1] + 1, iy[0], iy[-1] + 1
        xs = _sample_points(int(x_nodes[i0]), i1 - i0, shift[0], delta, s)
        ys = _sample_points(int(y_nodes[j0]), j1 - j0, shift[1], delta, s)
        dx = (xs - h.center_x) / h.radius_along
        dy = ys / h.radius_across
        hole = (dx[:, None] ** 2 + dy[None, :] ** 2 < 1.0) & (np.abs(ys) < width / 2)[None, :]
        frac[i0:i1, j0:j1] -= hole.reshape(i1 - i0, s, j1 - j0, s).mean(axis=(1, 3))
    return frac


def slab_fraction(thickness, z_nodes, delta, s=None, shift=0.0):
    """Exact fraction of each node's box inside the slab |z| < thickness / 2."""
    return _interval_fraction(_node_centres(z_nodes, shift, delta), delta, thickness / 2)


def _compose(fxy, fz, n_bg, n_slab):
    eb, es = n_bg ** 2, n_slab ** 2
    eps = eb + (es - eb) * (fxy[:, :, None] * fz[None, None, :])
    return eps


def default_half_extent(holes, params, delta, padding, pml_cells):
    pad = np.asarray(padding, dtype=float)
    core = np.array([holes.extent, params.scaled_width / 2, params.thickness / 2])
    return core + pad + pml_cells * delta


def rasterize(holes: HoleList, params: NanobeamGeometry, delta: float,
              subpixel_samples: int = 16, padding=(500.0, 450.0, 450.0), pml_cells: int = 12,
              half_extent=None, component_resolved: bool = False) -> PermittivityGrid:
    """Rasterize the nanobeam onto a node lattice symmetric about the origin.

    ``half_extent`` (nm per axis) overrides the domain size, which otherwise
    covers the holes plus ``padding`` plus ``pml_cells`` absorber cells. The
    beam itself runs through the whole x extent.
    """
    if not delta > 0:
        raise SizingError(f"grid spacing must be positive, got {delta}")
    if subpixel_samples < 1:
        raise ValueError("subpixel_samples must be >= 1")
    min_radius = min((min(h.radius_along, h.radius_across) for h in holes), default=math.inf)
    if delta > min_radius:
        warnings.warn(f"grid spacing {delta} nm exceeds smallest hole radius "
                      f"{min_radius:.1f} nm; holes are under-resolved", UnderResolvedWarning)

    needed = default_half_extent(holes, params, delta, padding, pml_cells)
    if half_extent is None:
        half = needed
    else:
        half = np.asarray(half_extent, dtype=float)
        short = [ax for ax in range(3) if half[ax] < needed[ax] - 1e-9]
        if short:
            names = ", ".join("xyz"[ax] for ax in short)
            raise SizingError(f"domain too small along {names}: need half-extent "
                              f"{needed.round(1).tolist()} nm, got {half.tolist()} nm")
    n_half = [int(math.ceil(h / delta - 1e-9)) for h in half]
    idx = [np.arange(-n, n + 1) for n in n_half]
    s = subpixel_samples

    def build(shift):
        fxy = inplane_fraction(holes, params.scaled_width, idx[0], idx[1], delta, s, shift[:2])
        fz = slab_fraction(params.thickness, idx[2], delta, s, shift[2])
        return _compose(fxy, fz, params.n_background, params.n_slab)

    eps = build((0.0, 0.0, 0.0))
    comps = [None, None, None]
    if component_resolved:
        for ax in range(3):
            shift = [0.0, 0.0, 0.0]
            shift[ax] = 0.5
            full = build(tuple(shift))
            sl = [slice(None)] * 3
            sl[ax] = slice(0, -1)
            comps[ax] = full[tuple(sl)]

    origin = tuple(-n * delta for n in n_half)
    return PermittivityGrid(delta=float(delta), origin=origin, eps=eps, eps_x=comps[0],
                            eps_y=comps[1], eps_z=comps[2],
                            meta={"n_slab": params.n_slab, "n_background": params.n_background,
                                  "pml_cells": pml_cells})


def rasterize_unit_cell(period: float, radius: float, params: NanobeamGeometry, delta: float,
                        subpixel_samples: int = 16, padding=(0.0, 450.0, 450.0),
                        pml_cells: int = 12) -> PermittivityGrid:
    """One lattice period along x (periodic), hole centred at x = 0.

    ``period`` and ``radius`` are unscaled; ``params.scale`` and ellipticity
    apply as in ``build_nanobeam``. The period must be an integer number of
    cells.
    """
    a = period * params.scale
    ncell = a / delta
    if abs(ncell - round(ncell)) > 1e-6:
        raise SizingError(f"period {a} nm is not a whole number of {delta} nm cells")
    ncell = int(round(ncell))
    r = radius * params.scale
    holes = [Hole(m * a, r * params.along_factor, r * params.across_factor) for m in (-1, 0, 1)]
    half_y = params.scaled_width / 2 + padding[1] + pml_cells * delta
    half_z = params.thickness / 2 + padding[2] + pml_cells * delta
    ny, nz = int(math.ceil(half_y / delta - 1e-9)), int(math.ceil(half_z / delta - 1e-9))
    s = subpixel_samples
    fxy = inplane_fraction(holes, params.scaled_width, np.arange(0, ncell + 1),
                           np.arange(-ny, ny + 1), delta, s)
    fz = slab_fraction(params.thickness, np.arange(-nz, nz + 1), delta, s)
    eps = _compose(fxy, fz, params.n_background, params.n_slab)
    return PermittivityGrid(delta=float(delta), origin=(0.0, -ny * delta, -nz * delta), eps=eps,
                            periodic=(True, False, False),
                            meta={"n_slab": params.n_slab, "n_background": params.n_background,
                                  "pml_cells": pml_cells, "period_nm": a})


def fold_grid(grid: PermittivityGrid, axes: Sequence[int]) -> PermittivityGrid:
    """Keep the non-negative half of the grid along each axis in ``axes``."""
    sl = [slice(None)] * 3
    origin = list(grid.origin)
    for ax in axes:
        c = grid.center_index(ax)
        if c is None:
            raise GeometryError(f"grid has no node at 0 along {'xyz'[ax]}")
        sl[ax] = slice(c, None)
        origin[ax] = 0.0
    comps = []
    for ax, comp in enumerate((grid.eps_x, grid.eps_y, grid.eps_z)):
        comps.append(None if comp is None else comp[tuple(sl)])
    return replace(grid, origin=tuple(origin), eps=grid.eps[tuple(sl)], eps_x=comps[0],
                   eps_y=comps[1], eps_z=comps[2])
