"""Decoherence-free-subspace memory toolkit."""

from ._core import (
    ConfigError,
    FitResult,
    NumericalError,
    bootstrap_tau_interval,
    calibrate_delta_b,
    closure_residual,
    decay_fidelity,
    default_confusion,
    echo_phase,
    f_manifold_levels,
    fit_gamma_to_leakage,
    fit_mle,
    frequency_difference,
    interpret_pattern,
    leak_channel_count,
    optimize_sequence,
    prepare_logical,
    quasistatic_coherence,
    simulate_storage,
    single_ion_leakage,
    solve_entangler_phase,
    storage_survival,
)

__version__ = "0.1.0"
