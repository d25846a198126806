"""Simulation configuration records."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from scipy.constants import c as C0

AXES = "xyz"
SYMMETRIES = ("none", "even", "odd")
BOUNDARIES = ("pml", "pec", "periodic")


class ConfigurationError(ValueError):
    def __init__(self, message, field_name=None):
        super().__init__(message)
        self.field_name = field_name


def axis_index(name):
    try:
        return AXES.index(name)
    except ValueError:
        raise ConfigurationError(f"unknown axis {name!r}; expected one of x, y, z") from None


@dataclass(frozen=True)
class PMLParams:
    order: float = 3.0
    sigma_factor: float = 1.0   # multiple of the polynomial-grading optimum
    kappa_max: float = 1.0
    alpha_max: float = 0.0      # CFS shift, in units of 1/dt (alpha*dt/eps0)


@dataclass(frozen=True)
class SourceSpec:
    """Gaussian-enveloped sinusoidal point current.

    ``position`` of None places the source one cell along +x from the origin.
    The spectral amplitude falls to 1/e at ``lambda_min`` and ``lambda_max``.
    """

    position: tuple[float, float, float] | None = None
    component: str = "y"
    wavelength: float = 637.0
    lambda_min: float = 550.0
    lambda_max: float = 750.0
    amplitude: float = 1.0
    cutoff: float = 5.0         # envelope peak delay, in units of the 1/e width

    @property
    def omega0(self):
        return 2 * math.pi * C0 / (self.wavelength * 1e-9)

    @property
    def tau(self):
        """1/e half-width of the temporal envelope (s)."""
        dw = math.pi * C0 * (1 / (self.lambda_min * 1e-9) - 1 / (self.lambda_max * 1e-9))
        return 2.0 / dw

    @property
    def t_peak(self):
        return self.cutoff * self.tau

    @property
    def t_off(self):
        return 2 * self.t_peak

    def envelope(self, t):
        return math.exp(-((t - self.t_peak) / self.tau) ** 2)

    def waveform(self, t):
        if t < 0 or t > self.t_off:
            return 0.0
        return self.amplitude * self.envelope(t) * math.sin(self.omega0 * (t - self.t_peak))

    def quiet_time(self, threshold=1e-8):
        """Time after which the envelope stays below ``threshold`` of its peak."""
        return self.t_peak + self.tau * math.sqrt(-math.log(threshold))


@dataclass(frozen=True)
class Monitor:
    position: tuple[float, float, float] | None = None   # None: two cells along +x
    component: str = "y"


@dataclass(frozen=True)
class SimulationConfig:
    resolution: float = 20.0
    courant: float = 0.5
    padding: tuple[float, float, float] = (500.0, 450.0, 450.0)
    pml_cells: int = 12
    pml: PMLParams = field(default_factory=PMLParams)
    symmetry: tuple[str, str, str] = ("even", "even", "even")
    boundaries: tuple[str, str, str] = ("pml", "pml", "pml")
    bloch_phase: tuple[float, float, float] = (0.0, 0.0, 0.0)
    source: SourceSpec = field(default_factory=SourceSpec)
    monitors: tuple[Monitor, ...] = (Monitor(),)
    run_steps: int = 0              # 0: source window plus ringdown_periods
    ringdown_periods: float = 300.0
    dtype: str = "float32"
    check_interval: int = 100

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.resolution > 0:
            raise ConfigurationError("resolution must be positive", "resolution")
        if not 0 < self.courant <= 1:
            raise ConfigurationError("courant must lie in (0, 1]", "courant")
        if any(b not in BOUNDARIES for b in self.boundaries):
            raise ConfigurationError(f"boundaries must be drawn from {BOUNDARIES}", "boundaries")
        if any(s not in SYMMETRIES for s in self.symmetry):
            raise ConfigurationError(f"symmetry must be drawn from {SYMMETRIES}", "symmetry")
        if "pml" in self.boundaries and self.pml_cells < 8:
            raise ConfigurationError("pml_cells must be >= 8", "pml_cells")
        for ax in range(3):
            if self.boundaries[ax] == "periodic" and self.symmetry[ax] != "none":
                raise ConfigurationError(
                    f"axis {AXES[ax]} cannot be both periodic and a symmetry plane", "symmetry")
        if any(p < 0 for p in self.padding):
            raise ConfigurationError("padding must be non-negative", "padding")
        if self.dtype not in ("float32", "float64"):
            raise ConfigurationError("dtype must be float32 or float64", "dtype")
        if self.run_steps < 0:
            raise ConfigurationError("run_steps must be >= 0", "run_steps")
        if not self.ringdown_periods >= 0:
            raise ConfigurationError("ringdown_periods must be >= 0", "ringdown_periods")
        axis_index(self.source.component)
        for m in self.monitors:
            axis_index(m.component)
        s = self.source
        if not 0 < s.lambda_min < s.wavelength < s.lambda_max:
            raise ConfigurationError("source band must satisfy lambda_min < wavelength < lambda_max",
                                     "source")

    @property
    def dt(self):
        """Time step (s): S * delta / (c * sqrt(3))."""
        return self.courant * self.resolution * 1e-9 / (C0 * math.sqrt(3))

    @property
    def courant_number(self):
        """c * dt / delta."""
        return self.courant / math.sqrt(3)

    def to_dict(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("pml", "source"):
                v = {g.name: getattr(v, g.name) for g in fields(v)}
            elif f.name == "monitors":
                v = [{"position": m.position, "component": m.component} for m in v]
            out[f.name] = v
        return out
