"""Sparse signal detection under Ising models: samplers, statistics, calibrated tests."""

from .experiments import ExperimentConfig, PowerSurface, run_power_grid, verify_suite
from .model import (
    ConditionReport,
    CouplingMatrix,
    SignalVector,
    SpinConfiguration,
    build_coupling,
    condition_report,
    local_fields,
    make_signal,
)
from .samplers import GlauberConfig, draw, enumerate_model
from .statistics import StatisticKind, evaluate_statistic, f_statistic, total_magnetization
from .testing import CriticalValue, ModelSpec, calibrate, estimate_power, estimate_risk, run_test

__version__ = "0.1.0"

__all__ = [
    "ConditionReport",
    "CouplingMatrix",
    "CriticalValue",
    "ExperimentConfig",
    "GlauberConfig",
    "ModelSpec",
    "PowerSurface",
    "SignalVector",
    "SpinConfiguration",
    "StatisticKind",
    "build_coupling",
    "calibrate",
    "condition_report",
    "draw",
    "enumerate_model",
    "estimate_power",
    "estimate_risk",
    "evaluate_statistic",
    "f_statistic",
    "local_fields",
    "make_signal",
    "run_power_grid",
    "run_test",
    "total_magnetization",
    "verify_suite",
]
