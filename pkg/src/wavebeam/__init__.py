"""Spectral analysis, Ingham estimates and HUM controls for a wave-beam system with memory."""
import os as _os

# LAB_THREADS caps BLAS worker threads; it must be read before numpy loads
_n = _os.environ.get("LAB_THREADS", "")
if _n.isdigit() and int(_n) > 0:
    for _k in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_k, _n)

from .errors import (ClassificationError, ConditioningError, ControllabilityError, ConvergenceError,
                     DivergenceError, InvalidInput, InvalidParameter, PreconditionError, WavebeamError)
from .expsum import ExponentialSum, gram_matrix
from .memory_kernel import ExpKernel, SampledFunction, resolvent_kernel, solve_backward_volterra
from .spectrum import ModelParams, SpectralBranch, solve_branch, solve_spectrum, validate_hypotheses
from .modal import FinalData, modal_coefficients, synthesize_solutions
from .hum import assemble_gram, hum_controls, rhs_vector, synthesize_controls
from .forward_sim import run_to_T

__all__ = [
    "ClassificationError", "ConditioningError", "ControllabilityError", "ConvergenceError",
    "DivergenceError", "InvalidInput", "InvalidParameter", "PreconditionError", "WavebeamError",
    "ExponentialSum", "gram_matrix", "ExpKernel", "SampledFunction", "resolvent_kernel",
    "solve_backward_volterra", "ModelParams", "SpectralBranch", "solve_branch", "solve_spectrum",
    "validate_hypotheses", "FinalData", "modal_coefficients", "synthesize_solutions",
    "assemble_gram", "hum_controls", "rhs_vector", "synthesize_controls", "run_to_T",
]
