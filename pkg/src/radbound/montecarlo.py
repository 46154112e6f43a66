"""Seeded Monte-Carlo estimates of Rademacher and Gaussian complexities.

Random draws come from a counter-based stream: the word used by trial ``j``
at position ``p`` depends only on ``(seed, j, p)``. Trials can therefore be
split into chunks, evaluated in any order or concurrently, and reduced by
trial index with bit-identical results.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidInputError
from .oracles import ClassSpec, MultitaskDataset, family_oracle, signs_width, subspace_sup_batch

VARIANTS = ("rademacher", "gaussian")
DEFAULT_TRIALS = 10_000
DEFAULT_TAIL_TRIALS = 1_000_000
DEFAULT_CHUNK = 4096

_MASK64 = (1 << 64) - 1
_TWO_NEG53 = 2.0**-53


def _check_variant(variant: str) -> str:
    if variant not in VARIANTS:
        raise InvalidInputError(f"variant must be one of {VARIANTS}, got {variant!r}")
    return variant


def _stride(width: int) -> int:
    # Philox4x64 emits four words per counter step; pad each trial to a multiple
    return max(4, -(-width // 4) * 4)


def raw_words(seed: int, start: int, stop: int, width: int) -> np.ndarray:
    """uint64 words for trials ``start..stop``, shape (stop - start, width)."""
    if stop < start:
        raise InvalidInputError("stop must not precede start")
    stride = _stride(width)
    gen = np.random.Philox(key=int(seed) & _MASK64, counter=start * (stride // 4))
    words = gen.random_raw((stop - start) * stride).reshape(stop - start, stride)
    return words[:, :width]


def signs_from_words(words: np.ndarray) -> np.ndarray:
    return np.where(words >> np.uint64(63), -1.0, 1.0)


def normals_from_words(words: np.ndarray) -> np.ndarray:
    """Box-Muller on consecutive word pairs; an odd tail uses a padding word."""
    b, width = words.shape
    if width % 2:
        words = np.concatenate([words, words[:, :1] ^ np.uint64(0x9E3779B97F4A7C15)], axis=1)
    u1 = ((words[:, 0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO_NEG53
    u2 = (words[:, 1::2] >> np.uint64(11)).astype(np.float64) * _TWO_NEG53
    r = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    out = np.empty((b, words.shape[1]))
    out[:, 0::2] = r * np.cos(angle)
    out[:, 1::2] = r * np.sin(angle)
    return out[:, :width]


def draw_block(seed: int, start: int, stop: int, width: int, variant: str = "rademacher") -> np.ndarray:
    """Sign or standard-normal vectors for trials ``start..stop``."""
    words = raw_words(seed, start, stop, width)
    if _check_variant(variant) == "rademacher":
        return signs_from_words(words)
    return normals_from_words(words)


def sample_signs(count: int, seed: int, trial: int = 0) -> np.ndarray:
    """``count`` uniform signs for one trial of the stream ``seed``."""
    return draw_block(seed, trial, trial + 1, count, "rademacher")[0]


def sample_normals(count: int, seed: int, trial: int = 0) -> np.ndarray:
    """``count`` standard normals for one trial of the stream ``seed``."""
    return draw_block(seed, trial, trial + 1, count, "gaussian")[0]


@dataclass(frozen=True)
class RademacherEstimate:
    """Normalized Monte-Carlo estimate ``normalizer * mean(sup)``.

    ``stderr`` is on the same normalized scale as ``mean``.
    """

    mean: float
    stderr: float
    trials: int
    seed: int
    variant: str
    normalizer: float
    bracket: str | None = None

    def to_dict(self) -> dict:
        out = {
            "mean": self.mean,
            "stderr": self.stderr,
            "trials": self.trials,
            "seed": self.seed,
            "variant": self.variant,
            "normalizer": self.normalizer,
        }
        if self.bracket is not None:
            out["bracket"] = self.bracket
        return out


def sample_oracle(oracle: Callable[[np.ndarray], np.ndarray], width: int, trials: int, seed: int,
                  variant: str = "rademacher", *, chunk: int = DEFAULT_CHUNK,
                  workers: int = 1) -> np.ndarray:
    """Raw oracle values for trials ``0..trials-1``, in trial order."""
    _check_variant(variant)
    if trials < 1:
        raise InvalidInputError("trials must be at least 1")
    bounds = [(lo, min(lo + chunk, trials)) for lo in range(0, trials, chunk)]

    def run(span):
        lo, hi = span
        vals = np.asarray(oracle(draw_block(seed, lo, hi, width, variant)), dtype=np.float64)
        return vals

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(span) for span in bounds]
    return np.concatenate(parts)


def estimate_from_samples(values: np.ndarray, normalizer: float, seed: int, variant: str,
                          bracket: str | None = None) -> RademacherEstimate:
    values = np.asarray(values, dtype=np.float64)
    trials = values.size
    mean = math.fsum(values) / trials
    if trials > 1:
        var = math.fsum((values - mean) ** 2) / (trials - 1)
        stderr = math.sqrt(var / trials)
    else:
        stderr = 0.0
    return RademacherEstimate(normalizer * mean, normalizer * stderr, trials, int(seed),
                              variant, normalizer, bracket)


def estimate_oracle(oracle, width: int, trials: int, seed: int, variant: str = "rademacher",
                    normalizer: float = 1.0, **kwargs) -> RademacherEstimate:
    """Estimate ``normalizer * E oracle(eps)`` for a batched oracle."""
    if trials < 2:
        raise InvalidInputError("trials must be at least 2")
    vals = sample_oracle(oracle, width, trials, seed, variant, **kwargs)
    return estimate_from_samples(vals, normalizer, seed, variant)


def normalizer_for(spec: ClassSpec, data: MultitaskDataset | None) -> float:
    """``2 / (n T)``; single-task families use ``2 / n``."""
    return 2.0 / signs_width(spec, data)


def estimate_complexity(spec: ClassSpec, data: MultitaskDataset | None, trials: int = DEFAULT_TRIALS,
                        seed: int = 0, variant: str = "rademacher", *, bracket: str = "both",
                        budget: int | None = None, chunk: int = DEFAULT_CHUNK, workers: int = 1):
    """Monte-Carlo estimate of the (multitask) Rademacher or Gaussian complexity.

    For exact families a single :class:`RademacherEstimate` is returned.
    For the subspace family the oracle only brackets the supremum;
    ``bracket="both"`` returns a ``(lower, upper)`` pair of estimates
    computed on the same draws, while ``"lower"`` or ``"upper"`` returns one.
    """
    if trials < 2:
        raise InvalidInputError("trials must be at least 2")
    width = signs_width(spec, data)
    norm = normalizer_for(spec, data)
    opts = {"chunk": chunk, "workers": workers}
    if spec.family != "subspace":
        vals = sample_oracle(family_oracle(spec, data, budget=budget), width, trials, seed, variant, **opts)
        return estimate_from_samples(vals, norm, seed, variant)
    if bracket in ("lower", "upper"):
        vals = sample_oracle(family_oracle(spec, data, bracket), width, trials, seed, variant, **opts)
        return estimate_from_samples(vals, norm, seed, variant, bracket)
    if bracket != "both":
        raise InvalidInputError(f"bracket must be both/lower/upper, got {bracket!r}")

    def both(e):
        lo, hi = subspace_sup_batch(e, data, spec.K, "both")
        return np.stack([lo, hi], axis=1)

    pairs = sample_oracle(both, width, trials, seed, variant, **opts)
    return (estimate_from_samples(pairs[:, 0], norm, seed, variant, "lower"),
            estimate_from_samples(pairs[:, 1], norm, seed, variant, "upper"))


def sample_sup_distribution(spec, data: MultitaskDataset | None = None,
                            trials: int = DEFAULT_TAIL_TRIALS, seed: int = 0,
                            variant: str = "rademacher", *, width: int | None = None,
                            bracket: str = "lower", budget: int | None = None,
                            chunk: int = DEFAULT_CHUNK) -> np.ndarray:
    """Un-normalized supremum values per trial, ordered by trial index.

    ``spec`` is a :class:`ClassSpec` or any batched oracle callable; a
    callable also needs ``width``.
    """
    if isinstance(spec, ClassSpec):
        oracle = family_oracle(spec, data, bracket, budget)
        width = signs_width(spec, data)
    else:
        if width is None:
            raise InvalidInputError("width is required for a bare oracle")
        oracle = spec
    return sample_oracle(oracle, width, trials, seed, variant, chunk=chunk)
