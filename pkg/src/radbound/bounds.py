"""Closed-form complexity bounds built from covariance summaries.

Every family bound has the shape ``strong + c * weak * sqrt(log(count) / (n T))``
where ``strong`` bounds the largest single-class complexity, ``weak`` is the
square root of the largest mean-square function value over the union, and
``c`` is 8 for Rademacher averages and 4 for Gaussian averages.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidInputError
from .kernels import GramMatrix, kernel_cov_summary
from .linalg import as_matrix, covariance
from .oracles import MultitaskDataset, _check_projection

LEMMA_CONSTANT = {"rademacher": 4.0, "gaussian": 2.0}
ETA_GRID_SIZE = 64
ETA_GRID_RANGE = (1e-4, 3.9)


class SmallClassCountWarning(UserWarning):
    """The union lemma was applied with fewer than four classes."""


def _lemma_constant(variant: str) -> float:
    try:
        return LEMMA_CONSTANT[variant]
    except KeyError:
        raise InvalidInputError(f"variant must be rademacher or gaussian, got {variant!r}") from None


def weak_constant(variant: str = "rademacher") -> float:
    """Constant in front of the weak term: twice the lemma constant."""
    return 2.0 * _lemma_constant(variant)


@dataclass(frozen=True)
class BoundReport:
    """One family bound with its decomposition.

    ``bound`` equals the sum of ``terms``. ``strong`` is the bound on the
    strong parameter (all terms except the weak one), ``weak`` the weak
    parameter itself. ``diagnostics`` holds comparison values that are not
    part of the bound.
    """

    family: str
    strong: float
    weak: float
    class_count: int | None
    log_class_count: float
    bound: float
    terms: dict
    n: int
    T: int
    variant: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "strong": self.strong,
            "weak": self.weak,
            "class_count": self.class_count,
            "log_class_count": self.log_class_count,
            "bound": self.bound,
            "terms": dict(self.terms),
            "n": self.n,
            "T": self.T,
            "variant": self.variant,
            "diagnostics": dict(self.diagnostics),
        }


def _report(family, strong_terms: dict, weak, log_count, n, T, variant, class_count,
            diagnostics=None) -> BoundReport:
    c = weak_constant(variant)
    weak_term = c * weak * math.sqrt(log_count / (n * T)) if log_count > 0 else 0.0
    terms = {**strong_terms, "weak_term": weak_term}
    strong = math.fsum(strong_terms.values())
    bound = math.fsum(terms.values())
    return BoundReport(family, strong, float(weak), class_count, float(log_count), bound,
                       terms, n, T, variant, diagnostics or {})


def lemma_main_bound(class_expectations: Sequence[float], sup_norm: float,
                     variant: str = "rademacher") -> float:
    """``max_m E_m + c * sup_norm * sqrt(ln M)`` with c = 4 (signs) or 2 (normals).

    The union lemma is stated for M >= 4; smaller M is computed with the
    same constant and a :class:`SmallClassCountWarning`.
    """
    c = _lemma_constant(variant)
    vals = [float(v) for v in class_expectations]
    if not vals:
        raise InvalidInputError("class_expectations must be non-empty")
    if sup_norm < 0:
        raise InvalidInputError("sup_norm must be non-negative")
    m = len(vals)
    if m < 4:
        warnings.warn(f"union lemma applied with M={m} < 4", SmallClassCountWarning, stacklevel=2)
    return max(vals) + c * sup_norm * math.sqrt(math.log(m))


def corollary_bound(strong: float, weak: float, M: int, n: int, variant: str = "rademacher") -> float:
    """``strong + 8 weak sqrt(ln M / n)`` (constant 4 for Gaussian averages)."""
    if n < 1 or M < 1:
        raise InvalidInputError("n and M must be at least 1")
    return strong + weak_constant(variant) * weak * math.sqrt(math.log(M) / n)


def mkl_bound(grams: Sequence[GramMatrix], variant: str = "rademacher") -> BoundReport:
    """Bound for the unit ball of the group norm over M kernel feature spaces."""
    if not grams:
        raise InvalidInputError("mkl_bound needs at least one gram matrix")
    n = grams[0].n
    if any(g.n != n for g in grams):
        raise InvalidInputError("mkl_bound: gram matrices differ in size")
    summaries = [kernel_cov_summary(g) for g in grams]
    return _union_report("mkl", summaries, n, variant)


def _union_report(family, summaries, n, variant) -> BoundReport:
    m = len(summaries)
    max_trace = max(s.trace for s in summaries)
    strong = 2.0 * math.sqrt(max_trace / n)
    weak = math.sqrt(max(s.lambda_max for s in summaries))
    log_m = math.log(m)
    diagnostics = {
        "trace_comparator": math.sqrt(max_trace * log_m / n),
        "max_trace": max_trace,
        "max_lambda": weak * weak,
        "per_class": [{k: v for k, v in s.to_dict().items() if k != "spectrum"} for s in summaries],
    }
    return _report(family, {"strong": strong}, weak, log_m, n, 1, variant, m, diagnostics)


def structured_sparsity_bound(data, projections, variant: str = "rademacher") -> BoundReport:
    """Bound for the unit ball of the infimal-convolution norm of ``projections``."""
    x = as_matrix(data)
    mats = [_check_projection(p) for p in projections]
    if not mats:
        raise InvalidInputError("structured_sparsity_bound needs at least one operator")
    for p in mats:
        if p.shape != (x.shape[1], x.shape[1]):
            raise InvalidInputError(f"projection shape {p.shape} does not match d={x.shape[1]}")
    summaries = [covariance(x @ p) for p in mats]
    return _union_report("projection", summaries, x.shape[0], variant)


def _as_dataset(data) -> MultitaskDataset:
    return data if isinstance(data, MultitaskDataset) else MultitaskDataset(data)


def _check_k(K) -> int:
    if int(K) != K or K < 1:
        raise InvalidInputError(f"K must be a positive integer, got {K!r}")
    return int(K)


def dict_sparsity_bound(data, K: int, variant: str = "rademacher") -> BoundReport:
    """Dictionary class with the sparsity norm (max over tasks of row l1 norms)."""
    ds = _as_dataset(data)
    K = _check_k(K)
    n, T = ds.n, ds.T
    pooled = covariance(ds.pooled())
    task_lams = [covariance(x).lambda_max for x in ds.tasks]
    weak_sq = math.fsum(task_lams) / T
    strong = 2.0 * math.sqrt(K * pooled.trace / (n * T))
    log_count = T * math.log(2 * K)
    diagnostics = {"pooled_trace": pooled.trace, "pooled_lambda_max": pooled.lambda_max,
                   "task_lambda_max": task_lams}
    return _report("dict_sparsity", {"strong": strong}, math.sqrt(weak_sq), log_count, n, T,
                   variant, (2 * K) ** T, diagnostics)


def dict_sharing_bound(data, K: int, variant: str = "rademacher") -> BoundReport:
    """Dictionary class with the sharing norm (sum over atoms of column max)."""
    ds = _as_dataset(data)
    K = _check_k(K)
    n, T = ds.n, ds.T
    pooled = covariance(ds.pooled())
    strong = 2.0 * math.sqrt(pooled.trace / (n * T))
    log_count = T * math.log(2) + math.log(K)
    diagnostics = {"pooled_trace": pooled.trace, "pooled_lambda_max": pooled.lambda_max}
    return _report("dict_sharing", {"strong": strong}, math.sqrt(pooled.lambda_max), log_count,
                   n, T, variant, 2**T * K, diagnostics)


def eta_grid(K: int | None = None, d: int | None = None) -> np.ndarray:
    """Log-spaced covering radii, plus ``sqrt(K/d)`` when both are known."""
    grid = np.geomspace(*ETA_GRID_RANGE, ETA_GRID_SIZE)
    if K is not None and d is not None:
        grid = np.unique(np.append(grid, math.sqrt(K / d)))
    return grid


def subspace_terms(trace: float, lam: float, K: int, n: int, T: int, eta: float,
                   variant: str = "rademacher") -> dict:
    """The three terms of the subspace bound at covering radius ``eta``."""
    c = weak_constant(variant)
    return {
        "strong": 2.0 * math.sqrt(K * trace / (n * T)),
        "covering": 2.0 * eta * math.sqrt(trace / n),
        "weak_term": c * math.sqrt(K * lam * math.log(4.0 / eta) / n),
    }


def subspace_bound(data, K: int, eta: float | None = None, variant: str = "rademacher") -> BoundReport:
    """Orthonormal-dictionary (subspace) class, via an eta-cover of the weights.

    With ``eta=None`` the radius minimizing the bound over :func:`eta_grid`
    is used. The diagnostics also carry the value at ``eta = sqrt(K/d)``
    and the closed form ``strong + 8 sqrt(K lam ln(16 d / K) / n)``; the
    closed form drops the covering term and the 1/2 from
    ``ln(4/eta) = ln(16 d/K) / 2``, which together is still an upper bound
    because ``lam >= trace / d``.
    """
    ds = _as_dataset(data)
    K = _check_k(K)
    n, T, d = ds.n, ds.T, ds.d
    if K > d:
        raise InvalidInputError(f"subspace: K={K} exceeds dimension d={d}")
    pooled = covariance(ds.pooled())
    tr, lam = pooled.trace, pooled.lambda_max

    def total(e):
        return math.fsum(subspace_terms(tr, lam, K, n, T, e, variant).values())

    if eta is None:
        grid = eta_grid(K, d)
        values = [total(float(e)) for e in grid]
        eta_used = float(grid[int(np.argmin(values))])
    else:
        if not (0 < eta < 4):
            raise InvalidInputError(f"eta must lie in (0, 4), got {eta!r}")
        eta_used = float(eta)

    terms = subspace_terms(tr, lam, K, n, T, eta_used, variant)
    eta_default = math.sqrt(K / d)
    c = weak_constant(variant)
    diagnostics = {
        "eta": eta_used,
        "eta_sqrt_k_over_d": eta_default,
        "bound_at_sqrt_k_over_d": total(eta_default),
        "closed_form_ln16d_over_k": terms["strong"] + c * math.sqrt(K * lam * math.log(16 * d / K) / n),
        "pooled_trace": tr,
        "pooled_lambda_max": lam,
    }
    strong_terms = {"strong": terms["strong"], "covering": terms["covering"]}
    log_count = K * T * math.log(4.0 / eta_used)
    return _report("subspace", strong_terms, math.sqrt(lam), log_count, n, T, variant, None,
                   diagnostics)


def generalization_gap(complexity: float, n: int, delta: float) -> float:
    """``complexity + sqrt(9 ln(2/delta) / (2n))`` for [0, 1]-valued losses."""
    if not (0 < delta < 1):
        raise InvalidInputError(f"delta must lie in (0, 1), got {delta!r}")
    if n < 1:
        raise InvalidInputError("n must be at least 1")
    return complexity + math.sqrt(9.0 * math.log(2.0 / delta) / (2.0 * n))


def expected_lambda_bound(true_lambda_max: float, n: int, dim: int) -> float:
    """Bound on ``E sqrt(lambda_max)`` of an iid sample with ``||X_i|| <= 1``."""
    if n < 1 or dim < 1:
        raise InvalidInputError("n and dim must be at least 1")
    if true_lambda_max < 0:
        raise InvalidInputError("true_lambda_max must be non-negative")
    return math.sqrt(true_lambda_max) + 4.0 * math.sqrt((math.log(min(dim, n)) + 1.0) / n)
