"""Lie-group-valued Koopman eigenfunctions of smooth flows.

The building blocks are the exterior derivative ``dz`` of a map ``z: M -> G``
into a matrix Lie group, the eigenfunction test ``dz(V) == const``, the
rescaling test for vector fields and local lifts through ``exp``.
"""

__version__ = "0.1.0"

from .differential import (GroupValuedMap, dz, dz_along_field, dz_two_paths, gradient, jacobian, kernel_basis,
                           regular_rank)
from .errors import LieKoopError
from .groups import (GroupSpec, Heisenberg, SO3, Torus, exp_alg, get_group, group_exp_flow, left_pushforward,
                     log_grp, trivialize)
from .koopman import (check_rescalable, compute_alpha, estimate_frequency, s1_candidate_check,
                      semiconjugacy_residual, verify_eigenfunction)
from .lift import build_lift, d_theta_canonical, lift_gap_check, psi, tilde_d_theta
from .manifold import ChartModel, RiemannianMetric, VectorField, flow, metric_inner, pushforward_map

__all__ = [
    "GroupValuedMap", "dz", "dz_along_field", "dz_two_paths", "gradient", "jacobian", "kernel_basis",
    "regular_rank", "LieKoopError", "GroupSpec", "Heisenberg", "SO3", "Torus", "exp_alg", "get_group",
    "group_exp_flow", "left_pushforward", "log_grp", "trivialize", "check_rescalable", "compute_alpha",
    "estimate_frequency", "s1_candidate_check", "semiconjugacy_residual", "verify_eigenfunction", "build_lift",
    "d_theta_canonical", "psi", "lift_gap_check", "tilde_d_theta", "ChartModel", "RiemannianMetric", "VectorField",
    "flow", "metric_inner", "pushforward_map",
]
