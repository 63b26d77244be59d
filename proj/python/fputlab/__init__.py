"""Python bindings for the fputlab chain library."""

from ._core import (
    ChainState,
    FputlabError,
    density_terms,
    evolve,
    hamiltonian,
    hartley,
    moment,
    normal_modes,
    run_checks,
    sample,
    solve_theta,
    toda_integral,
    toda_integral_trace,
)

__all__ = [
    "ChainState",
    "FputlabError",
    "density_terms",
    "evolve",
    "hamiltonian",
    "hartley",
    "moment",
    "normal_modes",
    "run_checks",
    "sample",
    "solve_theta",
    "toda_integral",
    "toda_integral_trace",
]
