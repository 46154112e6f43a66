import math

import numpy as np
import pytest

from radbound.concentration import gaussian_set_expectations
from radbound.errors import InvalidInputError
from radbound.kernels import GramMatrix, linear_gram
from radbound.montecarlo import (draw_block, estimate_complexity, estimate_oracle, raw_words,
                                 sample_normals, sample_oracle, sample_signs,
                                 sample_sup_distribution)
from radbound.oracles import ClassSpec, MultitaskDataset, exact_expectation, family_oracle, finite_set_sup_batch


def test_signs_deterministic():
    np.testing.assert_array_equal(sample_signs(50, 7), sample_signs(50, 7))
    assert not np.array_equal(sample_signs(50, 7), sample_signs(50, 8))
    assert set(np.unique(sample_signs(1000, 1))) == {-1.0, 1.0}


def test_sign_mean():
    s = sample_signs(10**6, 11)
    assert abs(s.mean()) <= 4 / math.sqrt(10**6)


def test_normal_moments():
    z = sample_normals(10**6, 12)
    assert abs(z.mean()) <= 4e-3
    assert abs(z.var() - 1.0) <= 0.01
    assert np.all(np.isfinite(z))


def test_trial_stream_independent_of_chunking():
    full = draw_block(5, 0, 100, 7)
    parts = np.vstack([draw_block(5, lo, min(lo + 13, 100), 7) for lo in range(0, 100, 13)])
    np.testing.assert_array_equal(full, parts)
    np.testing.assert_array_equal(draw_block(5, 42, 43, 7)[0], sample_signs(7, 5, trial=42))


def test_odd_width_normals_chunking():
    a = draw_block(3, 0, 50, 5, "gaussian")
    b = np.vstack([draw_block(3, i, i + 1, 5, "gaussian") for i in range(50)])
    np.testing.assert_array_equal(a, b)


def test_raw_word_prefix_stable():
    # widening a trial changes the stride, but within a width the words are fixed
    np.testing.assert_array_equal(raw_words(1, 3, 5, 6), raw_words(1, 0, 5, 6)[3:])


def test_workers_do_not_change_results(rng):
    g = [linear_gram(rng.normal(size=(10, 3)))]
    f = family_oracle(ClassSpec.mkl(g), None)
    a = sample_oracle(f, 10, 5000, 9, chunk=512)
    b = sample_oracle(f, 10, 5000, 9, chunk=700, workers=4)
    np.testing.assert_array_equal(a, b)


def test_estimate_reproducible(rng):
    ds = MultitaskDataset(rng.normal(size=(3, 4, 3)))
    spec = ClassSpec.dict_sparsity(2)
    assert estimate_complexity(spec, ds, 500, seed=4) == estimate_complexity(spec, ds, 500, seed=4)


def test_zero_class():
    est = estimate_oracle(lambda e: np.zeros(e.shape[0]), 6, 100, 0, normalizer=2 / 6)
    assert est.mean == 0.0 and est.stderr == 0.0


def test_identity_gram_is_deterministic():
    est = estimate_complexity(ClassSpec.mkl([GramMatrix(np.eye(25))]), None, 200, seed=1)
    assert est.mean == pytest.approx(2 / 5, rel=1e-14)
    assert est.stderr == pytest.approx(0.0, abs=1e-15)
    assert est.normalizer == 2 / 25


def test_mc_matches_exact_mkl(rng):
    grams = [linear_gram(rng.normal(size=(8, 2))), linear_gram(rng.normal(size=(8, 4)))]
    spec = ClassSpec.mkl(grams)
    exact = 2 / 8 * exact_expectation(family_oracle(spec, None), 8)
    est = estimate_complexity(spec, None, 10**6, seed=2)
    assert abs(est.mean - exact) <= 3 * est.stderr


def test_subspace_returns_bracket(rng):
    ds = MultitaskDataset(rng.normal(size=(2, 3, 3)))
    lo, hi = estimate_complexity(ClassSpec.subspace(2), ds, 50, seed=0)
    assert lo.bracket == "lower" and hi.bracket == "upper"
    assert lo.mean <= hi.mean
    single = estimate_complexity(ClassSpec.subspace(2), ds, 50, seed=0, bracket="upper")
    assert single == hi


def test_trials_validated():
    with pytest.raises(InvalidInputError):
        estimate_complexity(ClassSpec.mkl([GramMatrix(np.eye(3))]), None, 1)
    with pytest.raises(InvalidInputError):
        draw_block(0, 0, 4, 3, "uniform")


def test_single_point_samples():
    e1 = np.eye(4)[:1]
    s = sample_sup_distribution(lambda e: finite_set_sup_batch(e, e1), width=4, trials=10**5, seed=3)
    assert set(np.unique(s)) == {-1.0, 1.0}
    assert abs(np.mean(s == 1.0) - 0.5) <= 0.01


def test_constant_oracle_samples():
    s = sample_sup_distribution(lambda e: np.full(e.shape[0], 2.5), width=3, trials=100, seed=0)
    np.testing.assert_array_equal(s, 2.5)


def test_sample_mean_near_exact(rng):
    ds = MultitaskDataset(rng.normal(size=(2, 5, 3)))
    spec = ClassSpec.dict_sharing(2)
    s = sample_sup_distribution(spec, ds, 20_000, seed=6)
    exact = exact_expectation(family_oracle(spec, ds), 10)
    assert abs(s.mean() - exact) <= 4 * s.std(ddof=1) / math.sqrt(s.size)


def test_variant_difference_explained(rng):
    """Gaussian minus Rademacher estimate agrees with the exact difference."""
    pts = rng.normal(size=(5, 6))
    pts = np.vstack([pts, -pts])
    f = lambda e: finite_set_sup_batch(e, pts)  # noqa: E731
    rad_exact = exact_expectation(f, 6)
    gauss_exact, _ = gaussian_set_expectations(pts, [slice(0, 10)])
    r = estimate_oracle(f, 6, 200_000, 8)
    g = estimate_oracle(f, 6, 200_000, 8, "gaussian")
    diff = (g.mean - r.mean) - (gauss_exact - rad_exact)
    assert abs(diff) <= 4 * math.hypot(g.stderr, r.stderr)
