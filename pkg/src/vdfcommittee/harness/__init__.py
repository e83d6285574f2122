"""Experiment runner, statistical oracles, scenarios and reports."""

from .config import ExperimentConfig, NetworkSpec, SpeedSpec, Thresholds, load_config
from .report import REPORT_FIELDS, emit_report
from .runner import TrialResult, check_assertions, run_experiment, run_trial, summarize
from .scenarios import run_scenario, scenario_catalog, schedule_sweep
from .stats import chernoff_band

__all__ = [
    "ExperimentConfig",
    "NetworkSpec",
    "SpeedSpec",
    "Thresholds",
    "load_config",
    "REPORT_FIELDS",
    "emit_report",
    "TrialResult",
    "check_assertions",
    "run_experiment",
    "run_trial",
    "summarize",
    "run_scenario",
    "scenario_catalog",
    "schedule_sweep",
    "chernoff_band",
]
