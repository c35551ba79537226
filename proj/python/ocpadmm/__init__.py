"""Inexact ADMM with inner CG for box-constrained optimal control of PDEs."""

from ._core import (
    ConfigError,
    DimensionError,
    IoError,
    NotSpdError,
    Problem,
    StagnationError,
    convergence_order,
    custom_problem,
    example,
    oracle_check,
    project,
    reproduce,
    run_config,
    sigma_from_beta,
    solve,
)
from ._core import fem_matrices as _fem_matrices

__all__ = [
    "ConfigError",
    "DimensionError",
    "IoError",
    "NotSpdError",
    "Problem",
    "StagnationError",
    "convergence_order",
    "custom_problem",
    "example",
    "fem_matrices",
    "oracle_check",
    "project",
    "reproduce",
    "run_config",
    "sigma_from_beta",
    "solve",
]


def fem_matrices(mesh, family="p1"):
    """Mass and stiffness matrices as scipy CSR matrices, or raw CSR tuples without scipy."""
    mass, stiff = _fem_matrices(mesh, family)
    try:
        from scipy.sparse import csr_matrix
    except ImportError:
        return mass, stiff
    return tuple(csr_matrix((d, i, p), shape=s) for d, i, p, s in (mass, stiff))
