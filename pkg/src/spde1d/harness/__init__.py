"""Experiment harness: configs, presets, drivers, manifests, figures."""

from .config import ExperimentConfig, VerifyOptions, load_config, preset_names
from .runner import RunManifest, run_experiment

__all__ = [
    "ExperimentConfig",
    "VerifyOptions",
    "load_config",
    "preset_names",
    "RunManifest",
    "run_experiment",
]
