"""Quantum harmonic analysis on a finite phase space: Cohen-class
concentration problems, their optimizers and strict-gap diagnostics."""
from .concentration import (
    ConcentrationProblem,
    ConcentrationResult,
    EscapeFamily,
    OptimizerConfig,
    concentration_functional,
    essential_value_estimate,
    localization_operator,
    optimize_concentration,
    strict_gap_check,
)
from .experiments import AffineParameters, ExperimentReport, affine_autovoice, run_experiment
from .gap_criteria import GapConstants, c_p, c_p_pow_p, gap_constants, m_d, wigner_ball_verdict
from .operator_rep import (
    DoublePhaseFunction,
    husimi_transform,
    optimize_operator_concentration,
    polarized_adjoint,
    polarized_cohen,
    total_correlation,
)
from .oracles import identity_suite
from .phase_space import GridModel, PhasePoint, Region, Signal, make_region, special_signal, tf_shift
from .qha import (
    PhaseFunction,
    ambiguity,
    cohen_transform,
    fn_op_convolution,
    fourier_wigner,
    inverse_fourier_wigner,
    op_convolution,
    stft,
    symplectic_fourier,
    weyl_symbol,
)
from .windows import OperatorWindow, build_window, numerical_radius, schatten_norm, weyl_quantize

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
