"""Experiment harness: configuration, seeded runs, traces, plots and the CLI."""
from .config import CellSpec, ExperimentConfig, NoiseConfig, ProblemConfig, load_config
from .experiment import Manifest, derive_seed, reproduce_figure3, run_experiment

__all__ = ["CellSpec", "ExperimentConfig", "NoiseConfig", "ProblemConfig", "load_config", "Manifest",
           "derive_seed", "reproduce_figure3", "run_experiment"]
