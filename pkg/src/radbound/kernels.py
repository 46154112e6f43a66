"""Gaussian kernel Gram matrices and their normalized spectra."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import InvalidInputError, ResourceLimitError
from .linalg import CovarianceSummary, as_matrix, summarize_spectrum, sym_eigen

MAX_GRAM_N = 5000


@dataclass(frozen=True)
class GramMatrix:
    """Kernel matrix ``K[i, j] = k(x_i, x_j)``.

    ``kernel_width`` is the Gaussian width, ``None`` for the linear kernel.
    """

    entries: np.ndarray
    kernel_width: float | None = None

    def __post_init__(self):
        k = np.asarray(self.entries, dtype=np.float64)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise InvalidInputError(f"gram: expected a square matrix, got {k.shape}")
        if not np.all(np.isfinite(k)):
            raise InvalidInputError("gram: contains non-finite entries")
        if not np.array_equal(k, k.T):
            scale = float(np.max(np.abs(k))) or 1.0
            if float(np.max(np.abs(k - k.T))) > 1e-10 * scale:
                raise InvalidInputError("gram: matrix is not symmetric")
            k = 0.5 * (k + k.T)
        k.setflags(write=False)
        object.__setattr__(self, "entries", k)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def _squared_distances(x: np.ndarray) -> np.ndarray:
    sq = np.einsum("ij,ij->i", x, x)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return 0.5 * (d2 + d2.T)


def gaussian_gram(data, sigma: float, *, max_n: int = MAX_GRAM_N) -> GramMatrix:
    """Gram matrix of ``exp(-||x_i - x_j||^2 / sigma^2)``.

    The denominator is ``sigma**2``, not ``2 sigma**2``; the spectral bound in
    :func:`gaussian_lambda_bound` is stated for this convention.
    """
    x = as_matrix(data)
    if not (sigma > 0 and math.isfinite(sigma)):
        raise InvalidInputError(f"sigma must be positive and finite, got {sigma!r}")
    if x.shape[0] > max_n:
        raise ResourceLimitError(f"gram with n={x.shape[0]} exceeds the cap of {max_n}")
    k = np.exp(-_squared_distances(x) / (sigma * sigma))
    np.fill_diagonal(k, 1.0)
    return GramMatrix(k, float(sigma))


def linear_gram(data, *, max_n: int = MAX_GRAM_N) -> GramMatrix:
    """Degree-1 polynomial kernel ``<x_i, x_j>``; its feature map is the identity."""
    x = as_matrix(data)
    if x.shape[0] > max_n:
        raise ResourceLimitError(f"gram with n={x.shape[0]} exceeds the cap of {max_n}")
    return GramMatrix(x @ x.T, None)


def kernel_cov_summary(gram: GramMatrix) -> CovarianceSummary:
    """Spectrum of the feature-space covariance, i.e. eigenvalues of ``K / n``."""
    k = gram.entries
    n = k.shape[0]
    trace = float(np.trace(k)) / n
    w = sym_eigen(k / n, vectors=False).values
    summary = summarize_spectrum(w, trace, n)
    keep = max(summary.rank, 1)
    spec = summary.spectrum[:keep].copy()
    spec.setflags(write=False)
    return CovarianceSummary(dim=keep, trace=summary.trace, spectrum=spec,
                             lambda_max=summary.lambda_max, rank=summary.rank)


def min_pairwise_distance(data) -> float:
    """Smallest Euclidean distance between two distinct observations."""
    x = as_matrix(data)
    if x.shape[0] < 2:
        raise InvalidInputError("min_pairwise_distance needs at least two points")
    return math.sqrt(_backend.min_sq_distance(np.ascontiguousarray(x)))


def gaussian_lambda_bound(n: int, delta: float, sigma: float) -> float:
    """Upper bound ``1/n + exp(-delta^2 / sigma^2)`` on lambda_max(K)/n.

    ``delta`` is the minimum pairwise distance of the sample.
    """
    if n < 1:
        raise InvalidInputError("n must be at least 1")
    if delta < 0:
        raise InvalidInputError("delta must be non-negative")
    if not sigma > 0:
        raise InvalidInputError("sigma must be positive")
    return 1.0 / n + math.exp(-(delta * delta) / (sigma * sigma))
