"""Singular value thresholding for low-rank matrix recovery."""

from .errors import DimensionError, MatrixMarketError, NumericalFailure, SizeCapError, SvtError
from .linear_maps import DenseLinearMap, LinearMap, SamplingOperator, StackedLinearMap
from .matrix_core import LowRankMatrix, svd_dense
from .partial_svd import PartialSvdParams, svd_above_threshold, top_singular_triplets
from .problems import ProblemSpec, generate, relative_error
from .sampled import IndexSet, SampledMatrix, read_matrix_market, write_matrix_market
from .shrinkage import shrink_dense, shrink_sparse
from .solvers import (
    SolveReport,
    SvtConfig,
    svt_complete,
    svt_dantzig,
    svt_inequality,
    svt_linear,
)

__version__ = "0.1.0"

__all__ = [
    "DenseLinearMap",
    "DimensionError",
    "IndexSet",
    "LinearMap",
    "LowRankMatrix",
    "MatrixMarketError",
    "NumericalFailure",
    "PartialSvdParams",
    "ProblemSpec",
    "SampledMatrix",
    "SamplingOperator",
    "SizeCapError",
    "SolveReport",
    "StackedLinearMap",
    "SvtConfig",
    "SvtError",
    "generate",
    "read_matrix_market",
    "relative_error",
    "shrink_dense",
    "shrink_sparse",
    "svd_above_threshold",
    "svd_dense",
    "svt_complete",
    "svt_dantzig",
    "svt_inequality",
    "svt_linear",
    "top_singular_triplets",
    "write_matrix_market",
]
