"""Robustness-optimized error correction on the three-qubit phase-flip code."""

from .code import (
    KrausChannel,
    LogicalState,
    PhaseFlipCode,
    build_code,
    build_faulty_recovery,
    build_ideal_recovery,
    build_measure_only,
    build_opt_recovery,
    logical_two_design,
)
from .exact import ExperimentParams, FidelitySurface, average_fidelity, fidelity_vs_pfb_polynomial
from .noise import NoiseParams, gaussian_damping, sample_noise, segment_unitary
from .optimize import GridSpec, OptimizationResult, PfbOptimum, optimize_cell, optimize_pfb, sweep_grid
from .oracle import (
    MonteCarloSpec,
    QuadratureSpec,
    fidelity_fixed_noise,
    monte_carlo_fidelity,
    quadrature_fidelity,
    single_qubit_fidelity,
)

__version__ = "0.1.0"
