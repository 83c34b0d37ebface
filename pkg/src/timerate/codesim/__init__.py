"""Seeded simulation of staged-deadline erasure codes."""

from .scheme import CodeScheme, Demand, build_two_phase_erasure_scheme
from .simulate import (AccessLog, ScalingReport, SimConfig, SimReport, erasure_setup, run_trials, simulate,
                       verify_claim1_scaling, wilson_half_width)

__all__ = [
    "AccessLog", "CodeScheme", "Demand", "ScalingReport", "SimConfig", "SimReport",
    "build_two_phase_erasure_scheme", "erasure_setup", "run_trials", "simulate",
    "verify_claim1_scaling", "wilson_half_width",
]
