"""Double-well energies perturbed by fractional Gagliardo seminorms near ``s = 1/2``."""

from __future__ import annotations

__version__ = "0.1.0"

from .energy import EnergyBreakdown, KeyLemmaBound, functional, functional_local, key_lemma_bound, verify_key_lemma
from .errors import (AlignmentError, DomainError, GeometryError, OptimizationFailure, RangeError,
                     ResolutionError, UnsupportedOperation)
from .gagliardo import SeminormForm, assemble_form, kernel_mass, seminorm_sq, seminorm_sq_local
from .gridfn import GridFunction, StepFunction, measure_condition, recovery_sequence, truncate
from .potentials import DoubleWell, WellForm, c_eta, eval_W, eval_W_prime
from .profile import (ProfileProblem, ProfileResult, analytic_lower_bound, analytic_upper_bound,
                      m_half_extrapolate, m_half_truncated, m_s_extrapolate, minimize_profile)
from .scaling import FracParams, lambda_continuous, lambda_minus, lambda_plus, regime, scaled_coefficients

__all__ = [
    "AlignmentError", "DomainError", "DoubleWell", "EnergyBreakdown", "FracParams", "GeometryError",
    "GridFunction", "KeyLemmaBound", "OptimizationFailure", "ProfileProblem", "ProfileResult",
    "RangeError", "ResolutionError", "SeminormForm", "StepFunction", "UnsupportedOperation",
    "WellForm", "analytic_lower_bound", "analytic_upper_bound", "assemble_form", "c_eta",
    "eval_W", "eval_W_prime", "functional", "functional_local", "kernel_mass", "key_lemma_bound",
    "lambda_continuous", "lambda_minus", "lambda_plus", "m_half_extrapolate", "m_half_truncated",
    "m_s_extrapolate", "measure_condition", "minimize_profile", "recovery_sequence", "regime",
    "scaled_coefficients", "seminorm_sq", "seminorm_sq_local", "truncate", "verify_key_lemma",
]
