"""Finite-difference exterior solver and the estimates checked on its output."""
from .config import (BlowUp, Field, Nonlinearity, RunRecord, SERIES_COLUMNS, SolverConfig,
                     SupportError, load_snapshot, parse_key_values, save_snapshot)
from .fdtd import (CartesianSolver, RadialSolver, energy, init, local_energy, make_solver, run,
                   step)
from .decomposition import (DecompositionResult, decomposition_convergence,
                            verify_cutoff_decomposition)
from .diagnostics import (DecayFit, fit_local_energy_decay, fit_power_decay, non_growing,
                          probe_decay_exponents, weighted_pointwise_diagnostic,
                          z_energy_norm, z_field_derivatives)
from .estimates import certify_elliptic, certify_sobolev
from .verification import energy_drift, manufactured_errors, richardson_check

__all__ = [
    "BlowUp", "Field", "Nonlinearity", "RunRecord", "SERIES_COLUMNS", "SolverConfig",
    "SupportError", "load_snapshot", "parse_key_values", "save_snapshot", "CartesianSolver",
    "RadialSolver", "energy", "init", "local_energy", "make_solver", "run", "step",
    "DecompositionResult", "decomposition_convergence", "verify_cutoff_decomposition",
    "DecayFit", "fit_local_energy_decay", "fit_power_decay", "non_growing",
    "probe_decay_exponents", "weighted_pointwise_diagnostic", "z_energy_norm",
    "z_field_derivatives", "certify_elliptic", "certify_sobolev", "energy_drift",
    "manufactured_errors", "richardson_check",
]
