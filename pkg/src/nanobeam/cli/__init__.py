"""Command line interface and run orchestration."""

from .config import ConfigError, RunConfig, dump_config, load_config, parse_config
from .main import main

__all__ = ["ConfigError", "RunConfig", "dump_config", "load_config", "main", "parse_config"]
