"""Empirical checks of the concentration inequalities and the union lemma.

Tail checks compare ``Pr{F > mean(F) + s}`` on a grid of ``s`` against an
exponential bound. A grid point counts as a violation only when the
empirical tail exceeds the bound by more than four binomial standard
deviations plus ``1/trials``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bounds import SmallClassCountWarning, lemma_main_bound
from .errors import InvalidInputError, ResourceLimitError
from .linalg import as_matrix, covariance
from .montecarlo import _check_variant, estimate_from_samples, sample_oracle
from .oracles import EXACT_MAX_BITS, all_sign_vectors

GRID_POINTS = 32
GRID_RANGE = (0.1, 4.0)
SLACK_SIGMAS = 4.0
SLACK_RULE = "4*sqrt(p(1-p)/trials) + 1/trials"
PROBES_PER_COORD = 64
PROBE_CONFIGS = 256
LIPSCHITZ_PROBES = 1000
QUADRATURE_NODES = 200
QUADRATURE_MAX_POINTS = 200_000


@dataclass(frozen=True)
class TailCheckReport:
    name: str
    scale: float
    s_grid: np.ndarray
    empirical_tail: np.ndarray
    theoretical_tail: np.ndarray
    trials: int
    violations: int
    slack_rule: str = SLACK_RULE

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def rows(self):
        """``(s, empirical, theoretical)`` triples for tabular output."""
        return list(zip(self.s_grid.tolist(), self.empirical_tail.tolist(),
                        self.theoretical_tail.tolist()))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "scale": self.scale,
            "trials": self.trials,
            "violations": self.violations,
            "passed": self.passed,
            "slack_rule": self.slack_rule,
            "s_grid": self.s_grid.tolist(),
            "empirical_tail": self.empirical_tail.tolist(),
            "theoretical_tail": self.theoretical_tail.tolist(),
        }


def s_grid(scale: float) -> np.ndarray:
    return np.linspace(GRID_RANGE[0] * scale, GRID_RANGE[1] * scale, GRID_POINTS)


def supremum_tail(s, sup_norm: float, variant: str = "rademacher") -> np.ndarray:
    """``exp(-s^2 / (8 v^2))`` for bounded variables, ``exp(-s^2 / (2 v^2))`` for normals."""
    denom = 8.0 if _check_variant(variant) == "rademacher" else 2.0
    s = np.asarray(s, dtype=np.float64)
    if sup_norm == 0:
        return np.zeros_like(s)
    return np.exp(-(s * s) / (denom * sup_norm * sup_norm))


def _tail_report(name, samples, grid, theoretical, scale, mean=None) -> TailCheckReport:
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise InvalidInputError("samples must be non-empty")
    trials = samples.size
    center = math.fsum(samples) / trials if mean is None else float(mean)
    sorted_vals = np.sort(samples)
    above = trials - np.searchsorted(sorted_vals, center + grid, side="right")
    emp = above / trials
    slack = SLACK_SIGMAS * np.sqrt(emp * (1.0 - emp) / trials) + 1.0 / trials
    violations = int(np.count_nonzero(emp > theoretical + slack))
    return TailCheckReport(name, float(scale), grid, emp, np.asarray(theoretical, dtype=float),
                           trials, violations)


def tail_check_supremum(samples, sup_norm: float, variant: str = "rademacher", *,
                        mean: float | None = None, name: str = "supremum") -> TailCheckReport:
    """Tail of ``sup_{z in A} <eps, z>`` against its sub-Gaussian bound.

    ``sup_norm`` is ``sup_{z in A} ||z||``. ``mean`` defaults to the sample
    mean; pass an exact expectation when one is available.
    """
    if not sup_norm > 0:
        raise InvalidInputError("sup_norm must be positive")
    grid = s_grid(sup_norm)
    return _tail_report(name, samples, grid, supremum_tail(grid, sup_norm, variant), sup_norm, mean)


def probe_functionals(f: Callable[[np.ndarray], np.ndarray], sampler, n: int, rng,
                      configs: int = PROBE_CONFIGS,
                      probes: int = PROBES_PER_COORD) -> tuple[float, float]:
    """Sampled estimates of the bounded-difference functionals ``(A^2, B^2)``.

    For each probe configuration x and coordinate k, the coordinate is
    replaced by ``probes`` fresh draws; the range of F over those
    replacements stands in for ``sup_k F - inf_k F`` and ``F - inf_k F``.
    The suprema over configurations are sampled, so these are lower
    estimates of the essential suprema.
    """
    base = np.asarray(sampler(rng, configs), dtype=np.float64)
    f_base = np.asarray(f(base), dtype=np.float64)
    repl = np.asarray(sampler(rng, probes), dtype=np.float64)
    a_sum = np.zeros(configs)
    b_sum = np.zeros(configs)
    for k in range(n):
        x = np.repeat(base, probes, axis=0)
        x[:, k] = np.tile(repl[:, k], configs)
        vals = np.asarray(f(x), dtype=np.float64).reshape(configs, probes)
        hi = np.maximum(vals.max(axis=1), f_base)
        lo = np.minimum(vals.min(axis=1), f_base)
        a_sum += (hi - lo) ** 2
        b_sum += (f_base - lo) ** 2
    return float(a_sum.max()), float(b_sum.max())


def bounded_difference_check(f: Callable[[np.ndarray], np.ndarray],
                             sampler: Callable[[np.random.Generator, int], np.ndarray],
                             n: int, trials: int, seed: int = 0, *,
                             a_squared: float | None = None, b_squared: float | None = None,
                             mean: float | None = None,
                             name: str = "bounded_difference") -> dict[str, TailCheckReport]:
    """Check both bounded-difference tails for ``F = f(X)`` with independent coordinates.

    Part (i) is ``exp(-2 s^2 / A^2)``, part (ii) is ``exp(-s^2 / (2 B^2))``.
    ``f`` maps an (m, n) batch to m values; ``sampler(rng, m)`` returns an
    (m, n) batch. Missing ``a_squared``/``b_squared`` are probe-estimated.

    Returns
    -------
    dict
        ``{"i": report, "ii": report}``.
    """
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    if a_squared is None or b_squared is None:
        a_est, b_est = probe_functionals(f, sampler, n, rng)
        a_squared = a_est if a_squared is None else a_squared
        b_squared = b_est if b_squared is None else b_squared
    if a_squared < 0 or b_squared < 0:
        raise InvalidInputError("A^2 and B^2 must be non-negative")

    samples = np.asarray(f(np.asarray(sampler(rng, trials), dtype=np.float64)), dtype=np.float64)
    constant = bool(np.all(samples == samples[0]))
    if (a_squared == 0 or b_squared == 0) and not constant:
        raise InvalidInputError("degenerate A or B with non-constant samples")

    out = {}
    for part, value, fn in (
        ("i", a_squared, lambda s, v: np.exp(-2.0 * s * s / v)),
        ("ii", b_squared, lambda s, v: np.exp(-s * s / (2.0 * v))),
    ):
        scale = math.sqrt(value) if value > 0 else 1.0
        grid = s_grid(scale)
        theo = fn(grid, value) if value > 0 else np.zeros_like(grid)
        out[part] = _tail_report(f"{name}_{part}", samples, grid, theo, scale, mean)
    return out


def check_lipschitz(f, lipschitz: float, n: int, rng, probes: int = LIPSCHITZ_PROBES) -> float:
    """Largest observed ratio ``|f(x)-f(y)| / ||x-y||`` over random pairs.

    Half the pairs are independent normals, half are small perturbations, so
    both global and local slopes get probed. Raises when a ratio exceeds
    ``lipschitz``.
    """
    half = probes // 2
    x = rng.standard_normal((probes, n))
    y = np.empty_like(x)
    y[:half] = rng.standard_normal((half, n))
    y[half:] = x[half:] + 1e-3 * rng.standard_normal((probes - half, n))
    dist = np.linalg.norm(x - y, axis=1)
    diff = np.abs(np.asarray(f(x), dtype=float) - np.asarray(f(y), dtype=float))
    ok = dist > 0
    ratio = float(np.max(diff[ok] / dist[ok])) if np.any(ok) else 0.0
    if ratio > lipschitz * (1.0 + 1e-9) + 1e-12:
        raise InvalidInputError(
            f"declared Lipschitz constant {lipschitz} falsified (observed ratio {ratio:.6g})")
    return ratio


def gaussian_lipschitz_check(f: Callable[[np.ndarray], np.ndarray], lipschitz: float, n: int,
                             trials: int, seed: int = 0, *, mean: float | None = None,
                             name: str = "gaussian_lipschitz") -> TailCheckReport:
    """Tail of ``f(X)``, X standard normal in R^n, against ``exp(-s^2 / (2 L^2))``."""
    if not lipschitz > 0:
        raise InvalidInputError("lipschitz must be positive")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    check_lipschitz(f, lipschitz, n, rng)
    samples = sample_oracle(f, n, trials, seed, "gaussian")
    grid = s_grid(lipschitz)
    theo = np.exp(-grid * grid / (2.0 * lipschitz * lipschitz))
    return _tail_report(name, samples, grid, theo, lipschitz, mean)


@dataclass(frozen=True)
class TraceInequalityVerdict:
    passed: bool
    mean_norm: float
    mean_norm_stderr: float
    bound: float
    second_moment: float
    second_moment_stderr: float
    expected_second_moment: float
    trials: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def trace_inequality_check(data, trials: int = 100_000, seed: int = 0,
                           variant: str = "rademacher") -> TraceInequalityVerdict:
    """Check ``E||sum eps_i x_i|| <= sqrt(n tr C)`` and the second-moment identity.

    The first moment must lie below the bound plus three standard errors;
    the second moment must be within four standard errors of ``n tr C``
    (plus 1e-9 relative for zero-variance cases).
    """
    x = as_matrix(data)
    n = x.shape[0]
    tr = covariance(x).trace if x.shape[1] <= n else float(np.einsum("ij,ij->", x, x)) / n
    target = n * tr
    sq = sample_oracle(lambda e: np.einsum("bd,bd->b", e @ x, e @ x), n, trials, seed, variant)
    norms = np.sqrt(sq)
    first = estimate_from_samples(norms, 1.0, seed, variant)
    second = estimate_from_samples(sq, 1.0, seed, variant)
    bound = math.sqrt(target)
    ok_first = first.mean <= bound + 3.0 * first.stderr + 1e-12 * max(bound, 1.0)
    ok_second = abs(second.mean - target) <= 4.0 * second.stderr + 1e-9 * max(target, 1.0)
    return TraceInequalityVerdict(bool(ok_first and ok_second), first.mean, first.stderr, bound,
                                  second.mean, second.stderr, target, trials)


@dataclass(frozen=True)
class LemmaVerdict:
    passed: bool
    lhs: float
    class_expectations: tuple
    sup_norm: float
    rhs: float
    mode: str
    variant: str
    slack: float = 0.0

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["class_expectations"] = list(self.class_expectations)
        return out


def _stack_sets(sets) -> tuple[np.ndarray, list[slice]]:
    mats = [as_matrix(a, f"set {k}") for k, a in enumerate(sets)]
    if not mats:
        raise InvalidInputError("need at least one set")
    n = mats[0].shape[1]
    if any(m.shape[1] != n for m in mats):
        raise InvalidInputError("all sets must live in the same R^n")
    spans, start = [], 0
    for m in mats:
        spans.append(slice(start, start + m.shape[0]))
        start += m.shape[0]
    return np.vstack(mats), spans


def _set_maxima(values: np.ndarray, spans) -> np.ndarray:
    """Per-set maxima of the inner products, shape (batch, M)."""
    return np.stack([values[:, sl].max(axis=1) for sl in spans], axis=1)


def gauss_hermite_rule(n: int, nodes: int = QUADRATURE_NODES,
                       max_points: int = QUADRATURE_MAX_POINTS) -> tuple[int, np.ndarray, np.ndarray]:
    """Per-axis Gauss-Hermite rule for N(0, 1), capped so the tensor grid fits.

    Returns ``(nodes_per_axis, nodes, weights)``; weights sum to 1.
    """
    per_axis = max(2, min(nodes, int(math.floor(max_points ** (1.0 / n) + 1e-9))))
    x, w = np.polynomial.hermite_e.hermegauss(per_axis)
    return per_axis, x, w / w.sum()


def gaussian_set_expectations(z: np.ndarray, spans, *, nodes: int = QUADRATURE_NODES,
                              max_points: int = QUADRATURE_MAX_POINTS,
                              chunk: int = 1 << 14) -> tuple[float, np.ndarray]:
    """Tensor Gauss-Hermite values of ``E max_{z in A} <g, z>`` for the union and each set."""
    n = z.shape[1]
    per_axis, x, w = gauss_hermite_rule(n, nodes, max_points)
    total = per_axis**n
    acc_union = 0.0
    acc_sets = np.zeros(len(spans))
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total))
        digits = np.stack([(idx // per_axis**k) % per_axis for k in range(n)], axis=1)
        pts = x[digits]
        wts = np.prod(w[digits], axis=1)
        vals = pts @ z.T
        acc_union += float(wts @ vals.max(axis=1))
        acc_sets += wts @ _set_maxima(vals, spans)
    return acc_union, acc_sets


def lemma_main_check(sets: Sequence, mode: str = "exact", variant: str = "rademacher", *,
                     trials: int = 100_000, seed: int = 0) -> LemmaVerdict:
    """Verify the union lemma on finite sets ``A_1..A_M`` (rows of each array).

    ``mode="exact"`` enumerates all sign vectors (Rademacher) or uses a
    tensor Gauss-Hermite rule (Gaussian). ``mode="mc"`` uses Monte-Carlo
    estimates and allows three standard errors of slack on the union side.
    """
    _check_variant(variant)
    z, spans = _stack_sets(sets)
    n = z.shape[1]
    sup_norm = float(np.max(np.linalg.norm(z, axis=1)))
    slack = 0.0
    if mode == "exact":
        if variant == "rademacher":
            if n > EXACT_MAX_BITS:
                raise ResourceLimitError(f"exact enumeration of 2^{n} signs exceeds 2^{EXACT_MAX_BITS}")
            vals = all_sign_vectors(n) @ z.T
            lhs = float(vals.max(axis=1).mean())
            per_set = _set_maxima(vals, spans).mean(axis=0)
        else:
            lhs, per_set = gaussian_set_expectations(z, spans)
    elif mode == "mc":
        both = sample_oracle(lambda e: np.hstack([(e @ z.T).max(axis=1, keepdims=True),
                                                  _set_maxima(e @ z.T, spans)]),
                             n, trials, seed, variant)
        union = estimate_from_samples(both[:, 0], 1.0, seed, variant)
        lhs = union.mean
        per_set = both[:, 1:].mean(axis=0)
        slack = 3.0 * union.stderr
    else:
        raise InvalidInputError(f"mode must be exact or mc, got {mode!r}")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SmallClassCountWarning)
        rhs = lemma_main_bound(per_set, sup_norm, variant)
    passed = lhs - slack <= rhs + 1e-12 * max(1.0, abs(rhs))
    return LemmaVerdict(bool(passed), float(lhs), tuple(float(v) for v in per_set), sup_norm,
                        float(rhs), mode, variant, float(slack))
