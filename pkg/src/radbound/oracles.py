"""Suprema of Rademacher/Gaussian sums over the supported function classes.

For a fixed sign (or Gaussian) vector each oracle returns
``sup_{f in F} sum_i eps_i f(x_i)``. The ``*_batch`` functions take a stack
of sign vectors and are what the Monte-Carlo and exact-enumeration paths
call; the single-vector functions wrap them and return a :class:`SupResult`.

Multitask sign vectors have shape ``(T, n)``; flattened they are laid out
task-major, index ``t * n + i``.
"""
from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidInputError, ResourceLimitError
from .kernels import GramMatrix
from .linalg import as_matrix

DEFAULT_BUDGET = 10**7
EXACT_MAX_BITS = 22
FAMILIES = ("mkl", "projection", "dict_sparsity", "dict_sharing", "subspace")

SUBSPACE_RESTARTS = 5
SUBSPACE_MAX_ITER = 100
SUBSPACE_RTOL = 1e-9
SUBSPACE_WEIGHT_FLOOR = 1e-12


def default_budget() -> int:
    """Enumeration budget, overridable through ``RADBOUND_BUDGET``."""
    raw = os.environ.get("RADBOUND_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(float(raw))
    except ValueError:
        raise InvalidInputError(f"RADBOUND_BUDGET={raw!r} is not a number") from None
    if value < 1:
        raise InvalidInputError("RADBOUND_BUDGET must be positive")
    return value


# ---------------------------------------------------------------------------
# data containers


@dataclass(frozen=True)
class MultitaskDataset:
    """``T`` tasks with ``n`` samples of dimension ``d`` each, stored (T, n, d)."""

    tasks: np.ndarray

    def __post_init__(self):
        arr = np.array(self.tasks, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[None]
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise InvalidInputError(f"dataset: expected shape (T, n, d), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("dataset: contains non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "tasks", arr)

    @classmethod
    def from_tasks(cls, tasks: Sequence) -> "MultitaskDataset":
        mats = [as_matrix(t, f"task {k}") for k, t in enumerate(tasks)]
        if not mats:
            raise InvalidInputError("dataset: no tasks")
        shapes = {m.shape for m in mats}
        if len(shapes) != 1:
            raise InvalidInputError(f"dataset: tasks differ in shape {sorted(shapes)}")
        return cls(np.stack(mats))

    @classmethod
    def single(cls, data) -> "MultitaskDataset":
        return cls(as_matrix(data)[None])

    @property
    def T(self) -> int:
        return self.tasks.shape[0]

    @property
    def n(self) -> int:
        return self.tasks.shape[1]

    @property
    def d(self) -> int:
        return self.tasks.shape[2]

    def pooled(self) -> np.ndarray:
        """All ``n * T`` samples as one (nT, d) matrix, task-major."""
        return self.tasks.reshape(-1, self.d)


@dataclass(frozen=True)
class ClassSpec:
    """Describes one function-class family and its parameters.

    Use the ``ClassSpec.mkl(...)``-style constructors rather than filling the
    fields by hand.
    """

    family: str
    K: int | None = None
    grams: tuple = field(default=(), repr=False)
    projections: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInputError(f"unknown family {self.family!r}")
        if self.family == "mkl":
            if not self.grams:
                raise InvalidInputError("mkl: needs at least one gram matrix")
            if len({g.n for g in self.grams}) != 1:
                raise InvalidInputError("mkl: gram matrices differ in size")
        elif self.family == "projection":
            if not self.projections:
                raise InvalidInputError("projection: needs at least one operator")
            mats = tuple(_check_projection(p) for p in self.projections)
            if len({p.shape for p in mats}) != 1:
                raise InvalidInputError("projection: operators differ in size")
            object.__setattr__(self, "projections", mats)
        else:
            if self.K is None or int(self.K) != self.K or self.K < 1:
                raise InvalidInputError(f"{self.family}: K must be a positive integer")
            object.__setattr__(self, "K", int(self.K))

    @classmethod
    def mkl(cls, grams) -> "ClassSpec":
        return cls("mkl", grams=tuple(grams))

    @classmethod
    def projection(cls, projections) -> "ClassSpec":
        return cls("projection", projections=tuple(projections))

    @classmethod
    def dict_sparsity(cls, K: int) -> "ClassSpec":
        return cls("dict_sparsity", K=K)

    @classmethod
    def dict_sharing(cls, K: int) -> "ClassSpec":
        return cls("dict_sharing", K=K)

    @classmethod
    def subspace(cls, K: int) -> "ClassSpec":
        return cls("subspace", K=K)

    @property
    def M(self) -> int | None:
        if self.family == "mkl":
            return len(self.grams)
        if self.family == "projection":
            return len(self.projections)
        return None

    @property
    def multitask(self) -> bool:
        return self.family not in ("mkl", "projection")


def _check_projection(p) -> np.ndarray:
    p = as_matrix(p, "projection")
    if p.shape[0] != p.shape[1]:
        raise InvalidInputError(f"projection: expected square operator, got {p.shape}")
    scale = float(np.max(np.abs(p))) or 1.0
    if float(np.max(np.abs(p - p.T))) > 1e-10 * scale:
        raise InvalidInputError("projection: operator is not symmetric")
    p = 0.5 * (p + p.T)
    p.setflags(write=False)
    return p


@dataclass(frozen=True)
class SupResult:
    """A supremum, or a certified bracket ``value <= sup <= upper``."""

    value: float
    upper: float
    exact: bool

    def __post_init__(self):
        if self.value > self.upper:
            raise ValueError(f"bracket inverted: {self.value} > {self.upper}")
        if self.exact and self.value != self.upper:
            raise ValueError("exact result must have value == upper")


# ---------------------------------------------------------------------------
# batched oracles


def _as_batch(signs, width: int) -> tuple[np.ndarray, bool]:
    e = np.asarray(signs, dtype=np.float64)
    single = e.ndim == 1
    e = np.atleast_2d(e)
    if e.ndim != 2 or e.shape[1] != width:
        raise InvalidInputError(f"signs: expected length {width}, got shape {np.shape(signs)}")
    return e, single


def mkl_sup_batch(signs, grams: Sequence[GramMatrix]) -> np.ndarray:
    """``max_m sqrt(eps^T K_m eps)`` for each row of ``signs``."""
    if not grams:
        raise InvalidInputError("mkl: needs at least one gram matrix")
    n = grams[0].n
    e, _ = _as_batch(signs, n)
    best = np.full(e.shape[0], -np.inf)
    for g in grams:
        if g.n != n:
            raise InvalidInputError("mkl: gram matrices differ in size")
        q = np.einsum("bi,bi->b", e @ g.entries, e)
        np.maximum(best, np.sqrt(np.maximum(q, 0.0)), out=best)
    return best


def projection_sup_batch(signs, data, projections) -> np.ndarray:
    """``max_m ||P_m sum_i eps_i x_i||`` for each row of ``signs``."""
    x = as_matrix(data)
    e, _ = _as_batch(signs, x.shape[0])
    z = e @ x
    best = np.full(e.shape[0], -np.inf)
    for p in projections:
        p = np.asarray(p, dtype=np.float64)
        if p.shape != (x.shape[1], x.shape[1]):
            raise InvalidInputError(f"projection: shape {p.shape} does not match d={x.shape[1]}")
        np.maximum(best, np.linalg.norm(z @ p, axis=1), out=best)
    return best


def task_sums(signs, data: MultitaskDataset) -> np.ndarray:
    """Per-task vectors ``u_t = sum_i eps_ti x_ti``, shape (B, T, d)."""
    e = np.asarray(signs, dtype=np.float64)
    if e.ndim == 1:
        e = e[None]
    if e.ndim == 2:
        if e.shape[1] != data.T * data.n:
            raise InvalidInputError(
                f"signs: expected {data.T * data.n} entries per vector, got {e.shape[1]}")
        e = e.reshape(-1, data.T, data.n)
    elif e.ndim == 3:
        if e.shape[1:] != (data.T, data.n):
            raise InvalidInputError(f"signs: expected (T, n)=({data.T}, {data.n}), got {e.shape[1:]}")
    else:
        raise InvalidInputError(f"signs: bad shape {e.shape}")
    return np.einsum("btn,tnd->btd", e, data.tasks)


def _sign_patterns(k: int) -> np.ndarray:
    """All ``2**(k-1)`` sign vectors of length k with the first entry +1."""
    if k <= 1:
        return np.ones((1, k))
    rest = np.array(list(itertools.product((1.0, -1.0), repeat=k - 1)))
    return np.hstack([np.ones((rest.shape[0], 1)), rest])


def _signed_subset_max(u: np.ndarray) -> np.ndarray:
    """``g[:, S] = max_sigma ||sum_{t in S} sigma_t u_t||`` for every bitmask S.

    One sign can be fixed because the norm is even in sigma.
    """
    b, t_count, _ = u.shape
    g = np.zeros((b, 1 << t_count))
    for mask in range(1, 1 << t_count):
        members = [t for t in range(t_count) if mask >> t & 1]
        pats = _sign_patterns(len(members))
        sums = np.einsum("pk,bkd->bpd", pats, u[:, members, :])
        g[:, mask] = np.linalg.norm(sums, axis=2).max(axis=1)
    return g


def dict_sparsity_cost(T: int, K: int) -> int:
    """Inner evaluations used by :func:`dict_sparsity_sup_batch` per sign vector."""
    return (3**T + 1) // 2 + max(K - 1, 0) * 3**T


def dict_sparsity_sup_batch(signs, data: MultitaskDataset, K: int,
                            budget: int | None = None) -> np.ndarray:
    """Exact sup for the sparsity-norm dictionary class.

    Extreme points assign each task one atom ``phi_t`` and a sign
    ``sigma_t``; the atoms then align with the per-atom signed sums, so the
    value is ``sum_k ||sum_{phi_t = k} sigma_t u_t||``. Atoms are
    interchangeable, so only set partitions of the tasks into at most K
    blocks matter, and the signs decouple across blocks. The maximum over
    partitions is a subset dynamic program over bitmasks.
    """
    budget = default_budget() if budget is None else budget
    cost = dict_sparsity_cost(data.T, K)
    if cost > budget:
        raise ResourceLimitError(
            f"dict_sparsity with T={data.T}, K={K} needs {cost} evaluations (budget {budget})")
    u = task_sums(signs, data)
    g = _signed_subset_max(u)
    full = (1 << data.T) - 1
    f = g.copy()
    for _ in range(1, min(K, data.T)):
        nxt = f.copy()
        for mask in range(1, full + 1):
            low = mask & -mask
            rest = mask ^ low
            # blocks containing the lowest member of mask
            sub = rest
            while True:
                block = sub | low
                if block != mask:
                    np.maximum(nxt[:, mask], g[:, block] + f[:, mask ^ block], out=nxt[:, mask])
                if sub == 0:
                    break
                sub = (sub - 1) & rest
        f = nxt
    return f[:, full]


def dict_sharing_sup_batch(signs, data: MultitaskDataset, K: int,
                           budget: int | None = None) -> np.ndarray:
    """``max_{v in {+-1}^T} ||sum_t v_t u_t||``; K does not enter."""
    budget = default_budget() if budget is None else budget
    if 2**data.T > budget:
        raise ResourceLimitError(f"dict_sharing with T={data.T} exceeds budget {budget}")
    u = task_sums(signs, data)
    pats = _sign_patterns(data.T)
    sums = np.einsum("pt,btd->bpd", pats, u)
    return np.linalg.norm(sums, axis=2).max(axis=1)


def _top_frame(g: np.ndarray, k: int) -> np.ndarray:
    _, vecs = np.linalg.eigh(g)
    return vecs[:, ::-1][:, :k]


def _frame_objective(q: np.ndarray, u: np.ndarray) -> float:
    return float(np.linalg.norm(u @ q, axis=1).sum())


def _subspace_ascent(u: np.ndarray, q: np.ndarray) -> tuple[float, np.ndarray]:
    """Reweighted eigenspace iteration, then a Grassmann gradient polish."""
    k = q.shape[1]
    best = _frame_objective(q, u)
    best_q = q
    for _ in range(SUBSPACE_MAX_ITER):
        norms = np.linalg.norm(u @ q, axis=1)
        w = 1.0 / np.maximum(norms, SUBSPACE_WEIGHT_FLOOR)
        q = _top_frame((u.T * w) @ u, k)
        val = _frame_objective(q, u)
        improved = val > best
        if improved:
            change = (val - best) / max(val, SUBSPACE_WEIGHT_FLOOR)
            best, best_q = val, q
        if not improved or change < SUBSPACE_RTOL:
            break

    # gradient of sum_t ||Q^T u_t|| on the Grassmannian: (I - QQ^T) G Q
    q = best_q
    step = 1.0
    for _ in range(SUBSPACE_MAX_ITER):
        norms = np.linalg.norm(u @ q, axis=1)
        w = 1.0 / np.maximum(norms, SUBSPACE_WEIGHT_FLOOR)
        gq = ((u.T * w) @ u) @ q
        grad = gq - q @ (q.T @ gq)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= 1e-14 * max(best, 1.0):
            break
        moved = False
        while step > 1e-12:
            cand, _ = np.linalg.qr(q + step * grad)
            val = _frame_objective(cand, u)
            if val > best:
                rel = (val - best) / max(val, SUBSPACE_WEIGHT_FLOOR)
                best, q, moved = val, cand, True
                step *= 2.0
                break
            step *= 0.5
        if not moved or rel < 1e-15:
            break
    return best, q


def _subspace_upper(u: np.ndarray, k: int) -> np.ndarray:
    """Certified upper bound, batched over the leading axis of ``u``."""
    t_count = u.shape[1]
    gram = np.einsum("btd,bte->bde", u, u)
    lam = np.linalg.eigvalsh(gram)[:, ::-1][:, :k]
    cs = np.sqrt(t_count * np.maximum(lam, 0.0).sum(axis=1))
    total = np.linalg.norm(u, axis=2).sum(axis=1)
    return np.minimum(cs, total)


def _random_frames(d: int, k: int, count: int) -> list[np.ndarray]:
    rng = np.random.Generator(np.random.Philox(key=0x5B5CA5E))
    frames = []
    for _ in range(count):
        q, _ = np.linalg.qr(rng.standard_normal((d, k)))
        frames.append(q)
    return frames


def subspace_sup_batch(signs, data: MultitaskDataset, K: int,
                       bracket: str = "both") -> tuple[np.ndarray | None, np.ndarray | None]:
    """Bracket ``sup_S sum_t ||P_S u_t||`` over K-dimensional subspaces S.

    Returns ``(lower, upper)``; pass ``bracket="upper"`` or ``"lower"`` to
    skip the other side (it comes back as ``None``). The lower bound is the
    best objective reached by ascent from the top-K eigenspace of
    ``sum_t u_t u_t^T`` and four fixed random frames. The upper bound is
    ``min(sqrt(T * sum_{j<=K} lambda_j), sum_t ||u_t||)``.
    """
    if K > data.d:
        raise InvalidInputError(f"subspace: K={K} exceeds dimension d={data.d}")
    if bracket not in ("both", "lower", "upper"):
        raise InvalidInputError(f"bracket must be both/lower/upper, got {bracket!r}")
    u = task_sums(signs, data)
    total = np.linalg.norm(u, axis=2).sum(axis=1)
    upper = lower = None
    if bracket in ("both", "upper"):
        upper = total.copy() if K == data.d else _subspace_upper(u, K)
    if bracket in ("both", "lower"):
        if K == data.d:
            lower = total.copy()
        else:
            frames = _random_frames(data.d, K, SUBSPACE_RESTARTS - 1)
            lower = np.empty(u.shape[0])
            for b in range(u.shape[0]):
                lower[b] = _subspace_lower_single(u[b], K, frames)
            if upper is not None:
                np.minimum(lower, upper, out=lower)
    return lower, upper


def _subspace_lower_single(ub: np.ndarray, k: int, frames) -> float:
    norms = np.linalg.norm(ub, axis=1)
    if not np.any(norms > 0):
        return 0.0
    if np.linalg.matrix_rank(ub) <= k:
        # some K-dim subspace contains every u_t
        return float(norms.sum())
    best = -np.inf
    for q0 in [_top_frame(ub.T @ ub, k), *frames]:
        val, _ = _subspace_ascent(ub, q0)
        best = max(best, val)
    return float(best)


# ---------------------------------------------------------------------------
# single-vector wrappers


def mkl_sup(signs, grams: Sequence[GramMatrix]) -> SupResult:
    v = float(mkl_sup_batch(np.asarray(signs, dtype=np.float64)[None], grams)[0])
    return SupResult(v, v, True)


def projection_sup(signs, data, projections) -> SupResult:
    v = float(projection_sup_batch(np.asarray(signs, dtype=np.float64)[None], data, projections)[0])
    return SupResult(v, v, True)


def _one(signs) -> np.ndarray:
    return np.asarray(signs, dtype=np.float64)[None]


def dict_sparsity_sup(signs, data: MultitaskDataset, K: int, budget: int | None = None) -> SupResult:
    v = float(dict_sparsity_sup_batch(_one(signs), data, K, budget)[0])
    return SupResult(v, v, True)


def dict_sharing_sup(signs, data: MultitaskDataset, K: int, budget: int | None = None) -> SupResult:
    v = float(dict_sharing_sup_batch(_one(signs), data, K, budget)[0])
    return SupResult(v, v, True)


def subspace_sup(signs, data: MultitaskDataset, K: int) -> SupResult:
    lower, upper = subspace_sup_batch(_one(signs), data, K)
    lo, hi = float(lower[0]), float(upper[0])
    exact = K == data.d or lo == hi
    return SupResult(hi if exact else lo, hi, exact)


def finite_set_sup_batch(signs, points) -> np.ndarray:
    """``max_{z in A} <eps, z>`` for a finite set A given as rows of ``points``."""
    z = as_matrix(points, "points")
    e, _ = _as_batch(signs, z.shape[1])
    return (e @ z.T).max(axis=1)


def finite_set_sup(signs, points) -> SupResult:
    v = float(finite_set_sup_batch(_one(signs), points)[0])
    return SupResult(v, v, True)


# ---------------------------------------------------------------------------
# family dispatch and exact expectation


def signs_width(spec: ClassSpec, data: MultitaskDataset | None) -> int:
    """Length of one flattened sign vector for ``spec`` on ``data``."""
    if spec.family == "mkl":
        return spec.grams[0].n
    if data is None:
        raise InvalidInputError(f"{spec.family}: needs a dataset")
    if spec.family == "projection" and data.T != 1:
        raise InvalidInputError("projection: expects a single-task dataset")
    return data.T * data.n


def family_oracle(spec: ClassSpec, data: MultitaskDataset | None, bracket: str = "lower",
                  budget: int | None = None) -> Callable[[np.ndarray], np.ndarray]:
    """Batched oracle ``signs (B, width) -> sup values (B,)`` for ``spec``.

    ``bracket`` picks the side reported by the subspace family and is
    ignored by the exact families.
    """
    fam = spec.family
    if fam == "mkl":
        if data is not None and data.n * data.T != spec.grams[0].n:
            raise InvalidInputError("mkl: gram size does not match the dataset")
        return lambda e: mkl_sup_batch(e, spec.grams)
    if data is None:
        raise InvalidInputError(f"{fam}: needs a dataset")
    if fam == "projection":
        signs_width(spec, data)
        x = data.tasks[0]
        if spec.projections[0].shape[0] != data.d:
            raise InvalidInputError("projection: operator size does not match d")
        return lambda e: projection_sup_batch(e, x, spec.projections)
    if fam == "dict_sparsity":
        budget = default_budget() if budget is None else budget
        cost = dict_sparsity_cost(data.T, spec.K)
        if cost > budget:
            raise ResourceLimitError(
                f"dict_sparsity with T={data.T}, K={spec.K} needs {cost} evaluations (budget {budget})")
        return lambda e: dict_sparsity_sup_batch(e, data, spec.K, budget)
    if fam == "dict_sharing":
        budget = default_budget() if budget is None else budget
        if 2**data.T > budget:
            raise ResourceLimitError(f"dict_sharing with T={data.T} exceeds budget {budget}")
        return lambda e: dict_sharing_sup_batch(e, data, spec.K, budget)
    if spec.K > data.d:
        raise InvalidInputError(f"subspace: K={spec.K} exceeds dimension d={data.d}")
    if bracket == "upper":
        return lambda e: subspace_sup_batch(e, data, spec.K, "upper")[1]
    if bracket == "lower":
        return lambda e: subspace_sup_batch(e, data, spec.K, "lower")[0]
    raise InvalidInputError(f"bracket must be lower or upper, got {bracket!r}")


def all_sign_vectors(n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows ``start..stop`` of the 2**n sign vectors in binary order (+1 for bit 0)."""
    stop = 2**n if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(n - 1, -1, -1, dtype=np.int64)) & 1
    return 1.0 - 2.0 * bits


def exact_expectation(oracle: Callable[[np.ndarray], np.ndarray], n_total: int, *,
                      max_bits: int = EXACT_MAX_BITS, chunk: int = 1 << 15) -> float:
    """Average of a batched oracle over all ``2**n_total`` sign vectors."""
    if n_total < 1:
        raise InvalidInputError("n_total must be at least 1")
    if n_total > max_bits:
        raise ResourceLimitError(f"exact enumeration of 2^{n_total} signs exceeds 2^{max_bits}")
    total = 2**n_total
    acc = math.fsum(
        math.fsum(np.asarray(oracle(all_sign_vectors(n_total, lo, min(lo + chunk, total))), dtype=float))
        for lo in range(0, total, chunk)
    )
    return acc / total
