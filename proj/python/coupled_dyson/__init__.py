"""Coupled matrix Ornstein-Uhlenbeck processes (C++ core)."""

from ._coupled_dyson import (
    CoupledDysonError,
    __version__,
    closed_form_stationary_covariance,
    hamiltonian,
    rate_function,
    run_cli,
    semicircle_density,
    semicircle_stieltjes,
    simulate_coupled_traces,
    solve_instanton,
    spectral_form_factor,
    stationary_covariance,
    stieltjes_of_sample,
    subcommands,
)

__all__ = [
    "CoupledDysonError",
    "__version__",
    "closed_form_stationary_covariance",
    "hamiltonian",
    "rate_function",
    "run_cli",
    "semicircle_density",
    "semicircle_stieltjes",
    "simulate_coupled_traces",
    "solve_instanton",
    "spectral_form_factor",
    "stationary_covariance",
    "stieltjes_of_sample",
    "subcommands",
]
