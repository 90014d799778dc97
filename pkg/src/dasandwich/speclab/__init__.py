"""Finite-state laboratory for DA and sandwich Markov operators."""

from .core import (
    GroupAction,
    JointTable,
    Kernel,
    build_da_kernel,
    build_group_R,
    build_sandwich_kernel,
    identity_kernel,
    projection_kernel,
    random_table,
)
from .spectral import (
    PropertyReport,
    SpectralReport,
    SvdBasis,
    check_shared_conditional,
    chi_square_distance,
    chi_square_oracle,
    domination_report,
    eigen_mean_zero,
    eigenvalues_mean_zero,
    svd_ratio,
    verify_lemma1,
    verify_lemma2,
)
from .io import format_report, load_action, load_table, parse_report

__all__ = [
    "GroupAction",
    "JointTable",
    "Kernel",
    "PropertyReport",
    "SpectralReport",
    "SvdBasis",
    "build_da_kernel",
    "build_group_R",
    "build_sandwich_kernel",
    "check_shared_conditional",
    "chi_square_distance",
    "chi_square_oracle",
    "domination_report",
    "eigen_mean_zero",
    "eigenvalues_mean_zero",
    "format_report",
    "identity_kernel",
    "load_action",
    "load_table",
    "parse_report",
    "projection_kernel",
    "random_table",
    "svd_ratio",
    "verify_lemma1",
    "verify_lemma2",
]
