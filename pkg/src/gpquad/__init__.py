"""Gaussian process quadrature rules and quadrature-based filtering."""

__version__ = "0.1.0"

from .filtering import (
    AdditiveStateSpaceModel,
    FilterOutput,
    GaussianState,
    predict,
    run_filter,
    run_smoother,
    update,
)
from .hermite import MultiIndex, enumerate_indices, gh_roots_weights, hermite_multi, hermite_uni
from .kernels import (
    HermitePolynomialKernel,
    SquaredExponentialKernel,
    make_gh_kernel,
    make_ut_kernel,
)
from .points import (
    ClassicalRule,
    UnitPointSet,
    cubature_points,
    gauss_hermite_points,
    hammersley_points,
    optimize_points,
    random_points,
    symmetric5_points,
    ut_points,
)
from .quadrature import (
    QuadratureRule,
    TransformResult,
    apply_rule,
    gp_regression_mean,
    gp_transform,
    gpq_variance,
    gpq_weights,
    matrix_sqrt,
)

__all__ = [
    "AdditiveStateSpaceModel",
    "ClassicalRule",
    "FilterOutput",
    "GaussianState",
    "HermitePolynomialKernel",
    "MultiIndex",
    "QuadratureRule",
    "SquaredExponentialKernel",
    "TransformResult",
    "UnitPointSet",
    "apply_rule",
    "cubature_points",
    "enumerate_indices",
    "gauss_hermite_points",
    "gh_roots_weights",
    "gp_regression_mean",
    "gp_transform",
    "gpq_variance",
    "gpq_weights",
    "hammersley_points",
    "hermite_multi",
    "hermite_uni",
    "make_gh_kernel",
    "make_ut_kernel",
    "matrix_sqrt",
    "optimize_points",
    "predict",
    "random_points",
    "run_filter",
    "run_smoother",
    "symmetric5_points",
    "update",
    "ut_points",
]
