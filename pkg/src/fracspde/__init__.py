"""Fractional stochastic heat/Burgers equations driven by Levy space-time noise.

Modules:
    specialfn   Mittag-Leffler function E_{a,b} on the real line
    kernel      lattice fundamental solutions Z, Y, Z* and their scaling
    conditions  admissibility inequalities for (alpha, beta, gamma, d, p)
    noise       frozen Gaussian and compensated Poisson noise on a lattice
    solver      truncated Picard iteration of the mild equation
    cli         command-line front end
"""

from ._accel import BACKEND, USE_NUMBA
from .conditions import AdmissibilityReport, check, check_global, check_pure_jump, check_white_noise
from .errors import (FracSPDEError, InadmissibleParams, MissingInitialVelocity, MLDomainError,
                     NoConvergence, RateTooHigh, ResolutionInsufficient, SymbolNotIntegrable)
from .kernel import (KernelGrid, build_gradient, build_kernel, fit_scaling_slope, fourier_symbol,
                     lp_norm, scaling_exponent, tail_exponent_check)
from .noise import MarkIntensity, TimeGrid, make_rng, sample_gaussian, sample_poisson
from .params import LatticeSpec, ModelParams
from .solver import (FieldPath, NonlinearitySpec, SolverConfig, detect_stopping, picard_rhs, solve,
                     truncate_lp, volterra_oracle, weighted_norm)
from .specialfn import ml_eval, switch_points

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "USE_NUMBA", "AdmissibilityReport", "check", "check_global", "check_pure_jump",
    "check_white_noise", "FracSPDEError", "InadmissibleParams", "MissingInitialVelocity",
    "MLDomainError", "NoConvergence", "RateTooHigh", "ResolutionInsufficient",
    "SymbolNotIntegrable", "KernelGrid", "build_gradient", "build_kernel", "fit_scaling_slope",
    "fourier_symbol", "lp_norm", "scaling_exponent", "tail_exponent_check", "MarkIntensity",
    "TimeGrid", "make_rng", "sample_gaussian", "sample_poisson", "LatticeSpec", "ModelParams",
    "FieldPath", "NonlinearitySpec", "SolverConfig", "detect_stopping", "picard_rhs", "solve",
    "truncate_lp", "volterra_oracle", "weighted_norm", "ml_eval", "switch_points",
]
