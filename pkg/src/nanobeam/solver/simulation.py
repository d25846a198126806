"""Yee-grid FDTD time stepping with CPML, symmetry planes and Bloch walls.

Fields are stored in normalized units: ``H`` is multiplied by the vacuum
impedance so both updates share the Courant number ``c*dt/delta``.

Array layout (per axis, ``n`` cells): index ``I`` holds grid index
``i = I - 1``; ``I = 0`` is a ghost layer and ``I = n + 1`` the high wall.
E components tangential to an axis sit on integer planes along it, normal
components on half-integer planes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import PermittivityGrid, fold_grid
from . import kernels
from .config import AXES, C0, ConfigurationError, Monitor, SimulationConfig, axis_index

log = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    def __init__(self, step):
        super().__init__(f"non-finite field values detected at step {step}")
        self.step = step


@dataclass
class TimeSeries:
    """One field component sampled at one monitor every time step."""

    dt: float
    samples: np.ndarray
    post_source_index: int = 0
    component: str = "y"
    position: tuple = (0.0, 0.0, 0.0)
    t0: float = 0.0

    def __len__(self):
        return len(self.samples)

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(len(self.samples))

    def post_source(self):
        """The portion recorded after the source envelope fell below 1e-8."""
        k = self.post_source_index
        return TimeSeries(self.dt, self.samples[k:], 0, self.component, self.position,
                          self.t0 + k * self.dt)


@dataclass
class AxisSetup:
    n: int
    low: str                 # 'pec', 'pmc', 'periodic', 'pml'
    high: str                # 'pec', 'periodic', 'pml'
    phase: complex = 1.0
    folded: bool = False
    kinv_e: np.ndarray = None
    kinv_h: np.ndarray = None
    idx_e: np.ndarray = None
    b_e: np.ndarray = None
    c_e: np.ndarray = None
    idx_h: np.ndarray = None
    b_h: np.ndarray = None
    c_h: np.ndarray = None
    depth_node: np.ndarray = None


@dataclass
class FieldState:
    ex: np.ndarray
    ey: np.ndarray
    ez: np.ndarray
    hx: np.ndarray
    hy: np.ndarray
    hz: np.ndarray
    psi: dict = field(default_factory=dict)
    n: int = 0
    dt: float = 0.0

    @property
    def e(self):
        return (self.ex, self.ey, self.ez)

    @property
    def h(self):
        return (self.hx, self.hy, self.hz)

    def all_finite(self):
        return all(np.isfinite(a).all() for a in self.e + self.h)


def _low_boundary(parity, comp_axis, axis):
    # Scalar parity of the driven component -> electric or magnetic wall.
    normal = comp_axis == axis
    if parity == "even":
        return "pec" if normal else "pmc"
    return "pmc" if normal else "pec"


def _pml_profile(n, npml, low, high, params, sc, dtype):
    """1/kappa, compact CPML (idx, b, c) for E (nodes) and H (half nodes)."""
    pos_node = np.arange(n + 2) - 1.0
    pos_half = pos_node + 0.5

    def depth(pos):
        d = np.zeros_like(pos)
        if high == "pml":
            d = np.maximum(d, (pos - (n - npml)) / npml)
        if low == "pml":
            d = np.maximum(d, (npml - pos) / npml)
        return np.clip(d, 0.0, 1.0)

    m = params.order
    sig_max = params.sigma_factor * 0.8 * (m + 1) * sc
    out = []
    for pos in (pos_node, pos_half):
        d = depth(pos)
        d[0] = 0.0
        d[-1] = 0.0
        sig = sig_max * d ** m
        kap = 1.0 + (params.kappa_max - 1.0) * d ** m
        alp = params.alpha_max * (1.0 - d)
        b = np.exp(-(sig / kap + alp))
        denom = sig * kap + kap ** 2 * alp
        c = np.where(sig > 0, sig / np.where(denom > 0, denom, 1.0) * (b - 1.0), 0.0)
        inside = np.nonzero(d > 0)[0]
        inside = inside[(inside >= 1) & (inside <= n)]
        out.append(((1.0 / kap).astype(dtype), inside.astype(np.int64),
                    b[inside].astype(dtype), c[inside].astype(dtype), d))
    return out


class Simulation:
    """Owns the field state for one grid/config pair."""

    def __init__(self, grid: PermittivityGrid, cfg: SimulationConfig):
        self.cfg = cfg
        self.full_grid = grid
        comp_axis = axis_index(cfg.source.component)

        folded = []
        for ax in range(3):
            if cfg.symmetry[ax] != "none":
                if grid.periodic[ax]:
                    raise ConfigurationError(f"symmetry requested on periodic axis {AXES[ax]}",
                                             "symmetry")
                if not grid.is_symmetric(ax):
                    raise ConfigurationError(
                        f"symmetry requested along {AXES[ax]} but the grid is not "
                        "reflection-symmetric there", "symmetry")
                folded.append(ax)
            if cfg.boundaries[ax] == "periodic" and not grid.periodic[ax]:
                raise ConfigurationError(f"periodic boundary along {AXES[ax]} needs a periodic grid",
                                         "boundaries")
        self.grid = fold_grid(grid, folded) if folded else grid
        if abs(self.grid.delta - cfg.resolution) > 1e-9 * cfg.resolution:
            raise ConfigurationError(
                f"grid spacing {self.grid.delta} nm differs from resolution {cfg.resolution} nm",
                "resolution")

        self.dtype = np.dtype(cfg.dtype)
        phases = []
        for p in cfg.bloch_phase:
            ph = complex(math.cos(p), math.sin(p))
            # k = 0 and zone-edge phases are real; keep real arithmetic for them.
            phases.append(complex(round(ph.real), 0.0) if abs(ph.imag) < 1e-12 else ph)
        if any(cfg.boundaries[ax] == "periodic" and phases[ax].imag != 0 for ax in range(3)):
            self.dtype = np.dtype(np.complex128)
        real_dtype = np.float32 if self.dtype == np.float32 else np.float64
        self.sc = real_dtype(cfg.courant_number)
        self.dt = cfg.dt

        shape_cells = self.grid.shape
        self.axes = []
        for ax in range(3):
            n = shape_cells[ax]
            b = cfg.boundaries[ax]
            if ax in folded:
                low = _low_boundary(cfg.symmetry[ax], comp_axis, ax)
                high = b
            elif b == "periodic":
                low = high = "periodic"
            else:
                low = high = b
            if "pml" in (low, high) and n < cfg.pml_cells * (2 if low == high else 1) + 1:
                raise ConfigurationError(f"grid too small along {AXES[ax]} for the absorber",
                                         "pml_cells")
            setup = AxisSetup(n=n, low=low, high=high, phase=phases[ax], folded=ax in folded)
            npml = cfg.pml_cells if "pml" in (low, high) else 0
            (ke, ie, be, ce, de), (kh, ih, bh, ch, _) = _pml_profile(
                n, max(npml, 1), low, high, cfg.pml, float(self.sc), real_dtype)
            setup.kinv_e, setup.idx_e, setup.b_e, setup.c_e = ke, ie, be, ce
            setup.kinv_h, setup.idx_h, setup.b_h, setup.c_h = kh, ih, bh, ch
            setup.depth_node = de
            self.axes.append(setup)

        self._build_coefficients()
        self.state = self._zero_state()
        self.source_index = self._locate(cfg.source.position, cfg.source.component, "source")
        self.monitors = list(cfg.monitors)
        self.monitor_index = [self._locate(m.position, m.component, "monitor", offset=2)
                              for m in self.monitors]

    # -- setup ------------------------------------------------------------
    @property
    def shape(self):
        return tuple(a.n for a in self.axes)

    def _array_shape(self):
        return tuple(a.n + 2 for a in self.axes)

    def _build_coefficients(self):
        shp = self._array_shape()
        real_dtype = np.float32 if self.dtype == np.float32 else np.float64
        self.ce = []
        self.eps_comp = []
        for ax in range(3):
            eps_c = self.grid.component_eps(ax)
            arr = np.zeros(shp, dtype=real_dtype)
            epsf = np.ones(shp, dtype=np.float64)
            sl = tuple(slice(1, 1 + s) for s in eps_c.shape)
            arr[sl] = self.sc / eps_c
            epsf[sl] = eps_c
            # Tangential E on an electric wall never moves.
            for other in range(3):
                if other == ax:
                    continue
                if self.axes[other].low == "pec":
                    pin = [slice(None)] * 3
                    pin[other] = 1
                    arr[tuple(pin)] = 0.0
                pin = [slice(None)] * 3
                pin[other] = self.axes[other].n + 1
                arr[tuple(pin)] = 0.0
            self.ce.append(arr)
            self.eps_comp.append(epsf)

    def _zero_state(self):
        shp = self._array_shape()
        arrays = [np.zeros(shp, dtype=self.dtype) for _ in range(6)]
        st = FieldState(*arrays, dt=self.dt)
        nx, ny, nz = self.shape
        for ax, a in enumerate(self.axes):
            for kind, idx in (("e", a.idx_e), ("h", a.idx_h)):
                if idx.size == 0:
                    continue
                pshape = list(shp)
                pshape[ax] = idx.size
                st.psi[(kind, ax)] = (np.zeros(pshape, self.dtype), np.zeros(pshape, self.dtype))
        return st

    def _locate(self, position, component, what, offset=1):
        ax = axis_index(component)
        d = self.grid.delta
        if position is None:
            position = (offset * d, 0.0, 0.0)
        idx = []
        for k in range(3):
            rel = (position[k] - self.grid.origin[k]) / d
            i = int(math.floor(rel)) if k == ax else int(math.floor(rel + 0.5))
            hi = self.axes[k].n - 1 if k == ax else self.axes[k].n
            if not 0 <= i <= hi:
                raise ConfigurationError(f"{what} position {position} lies outside the grid",
                                         what)
            idx.append(i + 1)
        return ax, tuple(idx)

    def component_position(self, located):
        """Physical coordinates (nm) of a located component sample."""
        ax, idx = located
        pos = []
        for k in range(3):
            i = idx[k] - 1 + (0.5 if k == ax else 0.0)
            pos.append(self.grid.origin[k] + i * self.grid.delta)
        return tuple(pos)

    # -- boundaries -------------------------------------------------------
    def _fill_e_ghosts(self):
        st = self.state
        for ax, a in enumerate(self.axes):
            if a.low != "periodic":
                continue
            n = a.n
            for arr in st.e:
                dst = [slice(None)] * 3
                src = [slice(None)] * 3
                dst[ax], src[ax] = n + 1, 1
                if arr.dtype.kind == "c":
                    arr[tuple(dst)] = arr[tuple(src)] * a.phase
                else:
                    arr[tuple(dst)] = arr[tuple(src)] * a.phase.real

    def _fill_h_ghosts(self):
        st = self.state
        for ax, a in enumerate(self.axes):
            if a.low == "pmc":
                for comp in range(3):
                    if comp == ax:
                        continue
                    arr = st.h[comp]
                    dst = [slice(None)] * 3
                    src = [slice(None)] * 3
                    dst[ax], src[ax] = 0, 1
                    arr[tuple(dst)] = -arr[tuple(src)]
            elif a.low == "periodic":
                for arr in st.h:
                    dst = [slice(None)] * 3
                    src = [slice(None)] * 3
                    dst[ax], src[ax] = 0, a.n
                    if arr.dtype.kind == "c":
                        arr[tuple(dst)] = arr[tuple(src)] * np.conj(a.phase)
                    else:
                        arr[tuple(dst)] = arr[tuple(src)] * a.phase.real

    # -- stepping ---------------------------------------------------------
    def step(self):
        st = self.state
        nx, ny, nz = self.shape
        ax_x, ax_y, ax_z = self.axes
        sc = self.sc
        self._fill_e_ghosts()
        kernels.bulk_h(st.ex, st.ey, st.ez, st.hx, st.hy, st.hz, sc,
                       ax_x.kinv_h, ax_y.kinv_h, ax_z.kinv_h, nx, ny, nz)
        p = st.psi
        if ("h", 0) in p:
            kernels.pml_h_x(st.ey, st.ez, st.hy, st.hz, sc, ax_x.idx_h, ax_x.b_h, ax_x.c_h,
                            *p[("h", 0)], ny, nz)
        if ("h", 1) in p:
            kernels.pml_h_y(st.ex, st.ez, st.hx, st.hz, sc, ax_y.idx_h, ax_y.b_h, ax_y.c_h,
                            *p[("h", 1)], nx, nz)
        if ("h", 2) in p:
            kernels.pml_h_z(st.ex, st.ey, st.hx, st.hy, sc, ax_z.idx_h, ax_z.b_h, ax_z.c_h,
                            *p[("h", 2)], nx, ny)
        self._fill_h_ghosts()
        cex, cey, cez = self.ce
        kernels.bulk_e(st.ex, st.ey, st.ez, st.hx, st.hy, st.hz, cex, cey, cez,
                       ax_x.kinv_e, ax_y.kinv_e, ax_z.kinv_e, nx, ny, nz)
        if ("e", 0) in p:
            kernels.pml_e_x(st.ey, st.ez, st.hy, st.hz, cey, cez, ax_x.idx_e, ax_x.b_e, ax_x.c_e,
                            *p[("e", 0)], ny, nz)
        if ("e", 1) in p:
            kernels.pml_e_y(st.ex, st.ez, st.hx, st.hz, cex, cez, ax_y.idx_e, ax_y.b_e, ax_y.c_e,
                            *p[("e", 1)], nx, nz)
        if ("e", 2) in p:
            kernels.pml_e_z(st.ex, st.ey, st.hx, st.hy, cex, cey, ax_z.idx_e, ax_z.b_e, ax_z.c_e,
                            *p[("e", 2)], nx, ny)
        self.inject_source((st.n + 0.5) * self.dt)
        st.n += 1
        ci = self.cfg.check_interval
        if ci and st.n % ci == 0 and not st.all_finite():
            raise DivergenceError(st.n)

    def inject_source(self, t):
        w = self.cfg.source.waveform(t)
        if w == 0.0:
            return
        ax, idx = self.source_index
        self.state.e[ax][idx] -= self.ce[ax][idx] * w

    def auto_steps(self):
        src = self.cfg.source
        n_src = int(math.ceil(src.t_off / self.dt))
        period = src.wavelength * 1e-9 / C0
        return n_src + int(math.ceil(self.cfg.ringdown_periods * period / self.dt))

    def run(self, steps=None, callback=None):
        """Advance ``steps`` steps recording every monitor after each step.

        ``callback(sim)`` is invoked after every step when given.
        """
        if steps is None:
            steps = self.cfg.run_steps or self.auto_steps()
        st = self.state
        rec = np.zeros((steps, len(self.monitor_index)), dtype=self.dtype)
        start = st.n
        quiet = self.cfg.source.quiet_time()
        for s in range(steps):
            self.step()
            for m, (ax, idx) in enumerate(self.monitor_index):
                rec[s, m] = st.e[ax][idx]
            if callback is not None:
                callback(self)
        if st.all_finite() is False:
            raise DivergenceError(st.n)
        t_first = (start + 1) * self.dt
        post = max(0, int(math.ceil((quiet - t_first) / self.dt - 1e-9)))
        out = []
        for m, mon in enumerate(self.monitors):
            out.append(TimeSeries(dt=self.dt, samples=rec[:, m].astype(
                np.float64 if rec.dtype.kind == "f" else np.complex128),
                post_source_index=min(post, steps), component=mon.component,
                position=self.component_position(self.monitor_index[m]), t0=t_first))
        return out

    # -- diagnostics ------------------------------------------------------
    def interior_weights(self, axis):
        a = self.axes[axis]
        w = np.zeros(a.n + 2)
        w[1:a.n + 1] = 1.0
        w[a.depth_node > 0] = 0.0
        return w

    def total_energy(self):
        """Discrete electromagnetic energy over non-absorber cells.

        0.5 * sum(eps*|E^n|^2 + H^(n-1/2) . H^(n+1/2)) * delta^3 in normalized
        units (eps0 = mu0 = 1, delta in nm). The H product is the time-centred
        form the leapfrog scheme conserves exactly in a closed lossless box;
        the next H half step is computed on a scratch copy.
        """
        st = self.state
        nx, ny, nz = self.shape
        self._fill_e_ghosts()
        hn = [h.copy() for h in st.h]
        kernels.bulk_h(st.ex, st.ey, st.ez, hn[0], hn[1], hn[2], self.sc,
                       self.axes[0].kinv_h, self.axes[1].kinv_h, self.axes[2].kinv_h, nx, ny, nz)
        w = [self.interior_weights(ax) for ax in range(3)]
        total = 0.0
        for comp in range(3):
            e2 = np.abs(st.e[comp]) ** 2 * self.eps_comp[comp]
            hh = np.real(st.h[comp] * np.conj(hn[comp]))
            total += np.einsum("ijk,i,j,k->", e2 + hh, w[0], w[1], w[2])
        return 0.5 * total * self.grid.delta ** 3

    def node_fields(self):
        """E components averaged (two-point) onto the integer node lattice.

        Returns three arrays of shape (nx+1, ny+1, nz+1).
        """
        st = self.state
        out = []
        for comp in range(3):
            arr = st.e[comp]
            a = self.axes[comp]
            n = a.n
            lo = arr.take(0, axis=comp)
            first = arr.take(1, axis=comp)
            if a.low == "pmc":
                lo = -first
            elif a.low == "pec":
                lo = first if a.folded else np.zeros_like(first)
            elif a.low == "periodic":
                last = arr.take(n, axis=comp)
                lo = last * (np.conj(a.phase) if arr.dtype.kind == "c" else a.phase.real)
            padded = np.concatenate([np.expand_dims(lo, comp),
                                     np.take(arr, np.arange(1, n + 2), axis=comp)], axis=comp)
            avg = 0.5 * (np.take(padded, np.arange(0, n + 1), axis=comp)
                         + np.take(padded, np.arange(1, n + 2), axis=comp))
            for other in range(3):
                if other != comp:
                    avg = np.take(avg, np.arange(1, self.axes[other].n + 2), axis=other)
            out.append(avg)
        return out

    def node_weights(self):
        """Per-axis quadrature weights on nodes for full-domain integrals.

        Absorber nodes get 0; symmetry-plane nodes count once, the rest of a
        folded axis twice; outer wall nodes of closed boxes count one half.
        """
        ws = []
        for ax, a in enumerate(self.axes):
            n = a.n
            w = np.ones(n + 1)
            d = a.depth_node[1:n + 2]
            w[d > 0] = 0.0
            if a.folded:
                w[1:] *= 2.0
            elif a.low == "periodic":
                w[n] = 0.0
            else:
                if d[0] == 0:
                    w[0] *= 0.5
            if a.high != "periodic" and d[n] == 0:
                w[n] *= 0.5
            ws.append(w)
        return ws


def init_simulation(grid: PermittivityGrid, cfg: SimulationConfig) -> Simulation:
    return Simulation(grid, cfg)


def step(sim: Simulation) -> Simulation:
    sim.step()
    return sim


def inject_source(sim: Simulation, t: float) -> Simulation:
    sim.inject_source(t)
    return sim


def run(grid: PermittivityGrid, cfg: SimulationConfig, steps=None):
    return Simulation(grid, cfg).run(steps)


def total_energy(sim: Simulation) -> float:
    return sim.total_energy()
