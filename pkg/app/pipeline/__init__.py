"""Experiment configs, acceptance checks and the full-suite workflow"""
from app.pipeline.checks import SUBCOMMANDS, Experiment
from app.pipeline.state import ExperimentConfig, SuiteState, Verdict, load_experiment

__all__ = ["SUBCOMMANDS", "Experiment", "ExperimentConfig", "SuiteState", "Verdict", "load_experiment"]
