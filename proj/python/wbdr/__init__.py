"""Wasserstein barycenters with dimensionality reduction and coresets."""

from ._core import (
    Distribution,
    Error,
    ProjectionMap,
    gen_coreset_synthetic,
    gen_ot_pair,
    jl_dimension,
    make_map,
    reduce_solve_reconstruct,
    run_cli,
    sensitivity_scores,
    solve_barycenter,
    solve_ot,
    solve_transport,
    wasserstein,
)

__all__ = [
    "Distribution",
    "Error",
    "ProjectionMap",
    "gen_coreset_synthetic",
    "gen_ot_pair",
    "jl_dimension",
    "make_map",
    "reduce_solve_reconstruct",
    "run_cli",
    "sensitivity_scores",
    "solve_barycenter",
    "solve_ot",
    "solve_transport",
    "wasserstein",
]
