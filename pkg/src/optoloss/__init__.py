"""Lossy nonlinear optomechanics: closed forms plus brute-force validation."""

from .errors import (ConvergenceError, GridCoverageError, InputDomainError,
                     LeakageError, MemoryBudgetError, OptolossError,
                     TruncationError)
from .kernels import (CallbackCoupling, ConstantCoupling, CouplingKernels,
                      FCoeffs, TabulatedCoupling, displacement_G,
                      f_coeffs_constant, f_coeffs_general, interference_B,
                      phase_A, profile_from_csv)
from .observables import (FidelityTruncation, InitialState, MechCoherent,
                          MechThermal, ObservableTrace, SystemParams,
                          cat_fidelity, cat_fidelity_series, expect_a,
                          expect_a_thermal, fidelity_bounds, for_alpha,
                          photon_number, quadrature_decay_bound,
                          quadrature_trace)
from .quadrature import QuadConfig, adaptive_quad

__version__ = "0.1.0"

__all__ = [
    "CallbackCoupling", "ConstantCoupling", "ConvergenceError",
    "CouplingKernels", "FCoeffs", "FidelityTruncation", "GridCoverageError",
    "InitialState", "InputDomainError", "LeakageError", "MechCoherent",
    "MechThermal", "MemoryBudgetError", "ObservableTrace", "OptolossError",
    "QuadConfig", "SystemParams", "TabulatedCoupling", "TruncationError",
    "adaptive_quad", "cat_fidelity", "cat_fidelity_series", "displacement_G",
    "expect_a", "expect_a_thermal", "f_coeffs_constant", "f_coeffs_general",
    "fidelity_bounds", "for_alpha", "interference_B", "phase_A",
    "photon_number", "profile_from_csv", "quadrature_decay_bound",
    "quadrature_trace",
]
