"""Simulator and post-processing chain for free-running RFI QKD.

The package splits along the data flow: ``protocol`` holds the scalar
security math, ``channel`` the expectation-level link model, ``drift``
the misalignment trajectories, ``intervals`` the Monte Carlo sampler and
log format, ``slicing`` the angle estimator and slice merge, ``decoy``
the single-photon bounds, ``keyrate`` the per-slice key accounting, and
``analytic`` the expectation-only fast path behind the sweeps.  ``cli``
wires them into the ``rfiqkd`` command.
"""

from .analytic import (
    FREE_RUNNING,
    ORIGINAL_OPTIMAL,
    LossSweepPoint,
    ThetaSweepRow,
    cutoff_loss,
    original_optimal_report,
    sweep_loss,
    sweep_theta,
    uniform_slice_report,
    write_loss_sweep,
    write_theta_sweep,
)
from .channel import (
    INTENSITIES,
    PAIR_LABELS,
    PAIRS,
    SystemParams,
    background_yield,
    expected_gain,
    expected_qber,
    interval_expectation,
    span_expectation,
    total_transmittance,
)
from .config import ConfigError, ScenarioConfig, load_config
from .decoy import DecoyBounds, decoy_bounds, fluctuation_adjust
from .drift import DriftKind, DriftModel, theta_at
from .intervals import (
    DataFormatError,
    IntervalTally,
    read_log,
    simulate_intervals,
    total_duration,
    write_log,
)
from .keyrate import (
    KeyRateReport,
    SliceReport,
    ValidityCheck,
    analyze_tallies,
    average_key_rate,
    baseline_original_rfi,
    format_summary,
    report_from_accumulators,
    run_validity,
    slice_c_value,
    slice_key_length,
    write_report,
)
from .protocol import (
    Basis,
    CorrelationSet,
    Intensity,
    ParameterError,
    PhysicalityWarning,
    SecurityParams,
    ValidityBounds,
    binary_entropy,
    c_value,
    correlation_from_qber,
    eve_information,
    validity_bounds,
)
from .slicing import (
    AccumulationResult,
    SliceAccumulator,
    accumulate,
    estimate_theta,
    slice_index,
    write_slice_summary,
)

__version__ = "0.1.0"

__all__ = [
    "AccumulationResult",
    "Basis",
    "ConfigError",
    "CorrelationSet",
    "DataFormatError",
    "DecoyBounds",
    "DriftKind",
    "DriftModel",
    "FREE_RUNNING",
    "INTENSITIES",
    "Intensity",
    "IntervalTally",
    "KeyRateReport",
    "LossSweepPoint",
    "ORIGINAL_OPTIMAL",
    "PAIRS",
    "PAIR_LABELS",
    "ParameterError",
    "PhysicalityWarning",
    "ScenarioConfig",
    "SecurityParams",
    "SliceAccumulator",
    "SliceReport",
    "SystemParams",
    "ThetaSweepRow",
    "ValidityBounds",
    "ValidityCheck",
    "accumulate",
    "analyze_tallies",
    "average_key_rate",
    "background_yield",
    "baseline_original_rfi",
    "binary_entropy",
    "c_value",
    "correlation_from_qber",
    "cutoff_loss",
    "decoy_bounds",
    "estimate_theta",
    "eve_information",
    "expected_gain",
    "expected_qber",
    "fluctuation_adjust",
    "format_summary",
    "interval_expectation",
    "load_config",
    "original_optimal_report",
    "read_log",
    "report_from_accumulators",
    "run_validity",
    "simulate_intervals",
    "slice_c_value",
    "slice_index",
    "slice_key_length",
    "span_expectation",
    "sweep_loss",
    "sweep_theta",
    "theta_at",
    "total_duration",
    "total_transmittance",
    "uniform_slice_report",
    "validity_bounds",
    "write_log",
    "write_loss_sweep",
    "write_report",
    "write_slice_summary",
    "write_theta_sweep",
]
