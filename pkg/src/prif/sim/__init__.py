"""Deterministic discrete-event simulation: scenarios, traces, replay."""

from .engine import apply_axis, run, run_sweep
from .metrics import MetricsLedger, MetricsReport
from .scenario import GroupSpec, Scenario, desk_preset, paper_preset, scenario_from_ini
from .trace import ContactTrace, build_trace

__all__ = [
    "ContactTrace",
    "GroupSpec",
    "MetricsLedger",
    "MetricsReport",
    "Scenario",
    "apply_axis",
    "build_trace",
    "desk_preset",
    "paper_preset",
    "run",
    "run_sweep",
    "scenario_from_ini",
]
