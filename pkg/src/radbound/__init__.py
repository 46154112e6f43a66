"""Data-dependent Rademacher complexity bounds for structured function classes."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .bounds import (BoundReport, corollary_bound, dict_sharing_bound, dict_sparsity_bound,
                     expected_lambda_bound, generalization_gap, lemma_main_bound, mkl_bound,
                     structured_sparsity_bound, subspace_bound)
from .concentration import (TailCheckReport, bounded_difference_check, gaussian_lipschitz_check,
                            lemma_main_check, tail_check_supremum, trace_inequality_check)
from .errors import InvalidInputError, NumericFailureError, ParseError, ResourceLimitError
from .kernels import (GramMatrix, gaussian_gram, gaussian_lambda_bound, kernel_cov_summary,
                      linear_gram, min_pairwise_distance)
from .linalg import CovarianceSummary, center, covariance, sym_eigen
from .montecarlo import RademacherEstimate, estimate_complexity, sample_signs
from .oracles import (ClassSpec, MultitaskDataset, SupResult, dict_sharing_sup, dict_sparsity_sup,
                      exact_expectation, family_oracle, mkl_sup, projection_sup, subspace_sup)

__all__ = [
    "BACKEND", "BoundReport", "ClassSpec", "CovarianceSummary", "GramMatrix", "InvalidInputError",
    "MultitaskDataset", "NumericFailureError", "ParseError", "RademacherEstimate",
    "ResourceLimitError", "SupResult", "TailCheckReport", "bounded_difference_check", "center",
    "corollary_bound", "covariance", "dict_sharing_bound", "dict_sharing_sup",
    "dict_sparsity_bound", "dict_sparsity_sup", "estimate_complexity", "exact_expectation",
    "expected_lambda_bound", "family_oracle", "gaussian_gram", "gaussian_lambda_bound",
    "gaussian_lipschitz_check", "generalization_gap", "kernel_cov_summary", "lemma_main_bound",
    "lemma_main_check", "linear_gram", "min_pairwise_distance", "mkl_bound", "mkl_sup",
    "projection_sup", "sample_signs", "structured_sparsity_bound", "subspace_bound",
    "subspace_sup", "sym_eigen", "tail_check_supremum", "trace_inequality_check",
]
