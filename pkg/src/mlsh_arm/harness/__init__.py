"""Command-line front end, experiment files and CSV outputs."""

from .config import ConfigError, ExperimentConfig, load_experiment, parse_experiment

__all__ = ["ConfigError", "ExperimentConfig", "load_experiment", "parse_experiment"]
