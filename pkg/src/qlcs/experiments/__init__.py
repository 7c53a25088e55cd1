"""Experiment harness: strict YAML configs, grid runners, CSV/SVG output, CLI."""
from .config import ConfigError, ExperimentConfig, config_from_dict, load_config
from .runners import RateGrid, run_astero, run_fig1, run_fig4, run_fig6, run_probe_suite

__all__ = ["ConfigError", "ExperimentConfig", "config_from_dict", "load_config", "RateGrid",
           "run_astero", "run_fig1", "run_fig4", "run_fig6", "run_probe_suite"]
