"""Dense symmetric eigensolver and empirical covariance summaries.

Data matrices are plain ``float64`` numpy arrays with samples in rows.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _backend
from .errors import InvalidInputError, NumericFailureError

JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-10
NEGATIVE_CLAMP = 1e-10


def as_matrix(data, name: str = "data") -> np.ndarray:
    """Validate ``data`` as a non-empty, finite 2-D float64 array."""
    try:
        arr = np.array(data, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name}: not a numeric matrix ({exc})") from None
    if arr.ndim != 2:
        raise InvalidInputError(f"{name}: expected a 2-D matrix, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"{name}: empty matrix of shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name}: contains non-finite entries")
    return arr


class Eigen(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray | None
    sweeps: int


def sym_eigen(a, *, vectors: bool = True, tol: float = JACOBI_TOL,
              max_sweeps: int = JACOBI_MAX_SWEEPS) -> Eigen:
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi sweeps.

    Parameters
    ----------
    a : array_like, shape (d, d)
        Symmetric matrix. Relative asymmetry above 1e-10 is rejected.
    vectors : bool
        Accumulate eigenvectors. Skipping them roughly halves the work.
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm is at most
        ``tol * ||a||_F``.
    max_sweeps : int
        Hard cap on sweeps; exceeding it raises :class:`NumericFailureError`.

    Returns
    -------
    Eigen
        ``values`` in descending order; ``vectors[:, k]`` is the unit
        eigenvector for ``values[k]`` (``None`` if not requested).
    """
    a = as_matrix(a, "a")
    if a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"a: expected a square matrix, got {a.shape}")
    scale = float(np.max(np.abs(a)))
    if scale > 0 and float(np.max(np.abs(a - a.T))) > SYMMETRY_TOL * scale:
        raise InvalidInputError("a: matrix is not symmetric")
    a = 0.5 * (a + a.T)

    w, v, sweeps = _backend.jacobi_eigh(np.ascontiguousarray(a), tol, max_sweeps, vectors)
    if sweeps < 0:
        raise NumericFailureError(f"Jacobi did not converge within {max_sweeps} sweeps")
    order = np.argsort(-w, kind="stable")
    w = w[order]
    if v is not None:
        v = v[:, order]
    return Eigen(w, v, sweeps)


@dataclass(frozen=True)
class CovarianceSummary:
    """Trace and spectrum of an uncentered empirical covariance.

    ``spectrum`` is descending and has ``dim`` entries; for kernel
    covariances it is cut to the numerically nonzero part.
    """

    dim: int
    trace: float
    spectrum: np.ndarray
    lambda_max: float
    rank: int

    @property
    def ratio(self) -> float:
        """``lambda_max / trace``, or 0 for an all-zero covariance."""
        return self.lambda_max / self.trace if self.trace > 0 else 0.0

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "trace": self.trace,
            "lambda_max": self.lambda_max,
            "ratio": self.ratio,
            "rank": self.rank,
            "spectrum": [float(x) for x in self.spectrum],
        }


def summarize_spectrum(eigenvalues, trace: float, dim: int) -> CovarianceSummary:
    """Build a :class:`CovarianceSummary`, clamping round-off negatives to 0."""
    spec = np.sort(np.asarray(eigenvalues, dtype=np.float64))[::-1].copy()
    floor = -NEGATIVE_CLAMP * max(trace, np.finfo(float).tiny)
    if spec.size and spec[-1] < floor:
        raise NumericFailureError(
            f"covariance spectrum has eigenvalue {spec[-1]:.3e} below the PSD round-off floor"
        )
    spec[spec < 0] = 0.0
    if spec.size < dim:
        spec = np.concatenate([spec, np.zeros(dim - spec.size)])
    lam = float(spec[0]) if spec.size else 0.0
    rank_tol = max(dim, spec.size) * np.finfo(float).eps * max(lam, 0.0)
    rank = int(np.count_nonzero(spec > rank_tol))
    spec.setflags(write=False)
    return CovarianceSummary(dim=dim, trace=float(trace), spectrum=spec,
                             lambda_max=lam, rank=rank)


def covariance_matrix(data) -> np.ndarray:
    """Explicit ``(1/n) X^T X``."""
    x = as_matrix(data)
    return x.T @ x / x.shape[0]


def covariance(data) -> CovarianceSummary:
    """Summary of the uncentered covariance ``(1/n) sum_i x_i x_i^T``.

    The d x d matrix is diagonalized when ``d <= n``; otherwise the n x n
    Gram matrix ``X X^T / n`` is used, which has the same nonzero spectrum.
    """
    x = as_matrix(data)
    n, d = x.shape
    trace = float(np.einsum("ij,ij->", x, x)) / n
    small = x.T @ x if d <= n else x @ x.T
    w = sym_eigen(small / n, vectors=False).values
    return summarize_spectrum(w, trace, d)


def center(data) -> np.ndarray:
    """Subtract the column mean from every row."""
    x = as_matrix(data)
    return x - x.mean(axis=0, keepdims=True)
