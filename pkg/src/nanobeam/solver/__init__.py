"""3D FDTD solver: Yee leapfrog, CPML, symmetry planes, Bloch walls."""

from .config import (ConfigurationError, Monitor, PMLParams, SimulationConfig, SourceSpec)
from .simulation import (DivergenceError, FieldState, Simulation, TimeSeries, init_simulation,
                         inject_source, run, step, total_energy)

__all__ = [
    "ConfigurationError", "DivergenceError", "FieldState", "Monitor", "PMLParams",
    "Simulation", "SimulationConfig", "SourceSpec", "TimeSeries", "init_simulation",
    "inject_source", "run", "step", "total_energy",
]
