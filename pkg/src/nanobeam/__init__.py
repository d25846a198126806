"""FDTD design and analysis toolkit for photonic-crystal nanobeam cavities."""

__version__ = "0.1.0"
