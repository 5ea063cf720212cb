"""Study harness: configuration, eps sweeps, slope fits and output files."""

from .config import ConfigError, RunConfig, load_config
from .kernel import KernelSample, kernel_integral, kernel_samples
from .report import ConvergenceReport, emit_outputs, fit_slope
from .studies import (
    run_decay_probe, run_energy_drift, run_highfreq_core, run_kernel_bound, run_linear_convergence,
    run_main_convergence, run_remainder_decay,
)

__all__ = [
    "ConfigError", "RunConfig", "load_config", "KernelSample", "kernel_integral", "kernel_samples",
    "ConvergenceReport", "emit_outputs", "fit_slope", "run_decay_probe", "run_energy_drift",
    "run_highfreq_core", "run_kernel_bound", "run_linear_convergence", "run_main_convergence",
    "run_remainder_decay",
]
