import math
import warnings

import numpy as np
import pytest

from radbound.bounds import (SmallClassCountWarning, corollary_bound, dict_sharing_bound,
                             dict_sparsity_bound, eta_grid, expected_lambda_bound,
                             generalization_gap, lemma_main_bound, mkl_bound,
                             structured_sparsity_bound, subspace_bound, subspace_terms)
from radbound.errors import InvalidInputError
from radbound.kernels import GramMatrix, gaussian_gram
from radbound.linalg import covariance, covariance_matrix
from radbound.montecarlo import estimate_complexity
from radbound.oracles import ClassSpec, MultitaskDataset


def test_lemma_single_class():
    with pytest.warns(SmallClassCountWarning):
        assert lemma_main_bound([0.7], 3.0) == 0.7


def test_lemma_direct_substitution():
    # the largest class expectation is 4
    assert lemma_main_bound([1, 2, 3, 4], 1.0) == pytest.approx(4 + 4 * math.sqrt(math.log(4)))
    assert lemma_main_bound([1, 2, 3, 4], 1.0, "gaussian") == pytest.approx(4 + 2 * math.sqrt(math.log(4)))


def test_lemma_no_warning_at_four():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        lemma_main_bound([0, 0, 0, 0], 1.0)


def test_lemma_rejects_empty():
    with pytest.raises(InvalidInputError):
        lemma_main_bound([], 1.0)


def test_corollary_values():
    assert corollary_bound(0.3, 5.0, 1, 10) == 0.3
    assert corollary_bound(0.1, 0.2, math.e, 100) == pytest.approx(0.26, rel=1e-14)


def test_corollary_monotone():
    base = corollary_bound(0.1, 0.2, 8, 50)
    assert corollary_bound(0.2, 0.2, 8, 50) >= base
    assert corollary_bound(0.1, 0.3, 8, 50) >= base
    assert corollary_bound(0.1, 0.2, 9, 50) >= base
    assert corollary_bound(0.1, 0.2, 8, 51) <= base


def _check_report(r):
    assert r.bound == pytest.approx(math.fsum(r.terms.values()), rel=1e-12)
    assert r.bound >= r.strong >= 0 and r.weak >= 0


def test_mkl_identity_gram():
    r = mkl_bound([GramMatrix(np.eye(16))])
    _check_report(r)
    assert r.bound == pytest.approx(0.5, rel=1e-15)


def test_mkl_gaussian_strong_term(rng):
    x = rng.normal(size=(25, 2))
    r = mkl_bound([gaussian_gram(x, s) for s in (0.3, 1.0, 4.0)])
    _check_report(r)
    assert r.terms["strong"] == pytest.approx(2 / 5, rel=1e-14)
    assert r.class_count == 3


def test_mkl_bound_above_estimate(rng):
    x = rng.normal(size=(30, 2))
    grams = [gaussian_gram(x, s) for s in np.geomspace(0.1, 10, 6)]
    r = mkl_bound(grams)
    est = estimate_complexity(ClassSpec.mkl(grams), None, 4000, seed=3)
    assert est.mean <= r.bound + 3 * est.stderr


def test_projection_identity_and_axes():
    x = np.array([[1.0, 0.0], [0.0, 2.0]])
    r = structured_sparsity_bound(x, [np.eye(2)])
    assert r.bound == pytest.approx(2 * math.sqrt(2.5 / 2))
    axes = structured_sparsity_bound(x, [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    # covariances diag(1/2, 0) and diag(0, 2)
    expected = 2 * math.sqrt(2.0 / 2) + 8 * math.sqrt(2.0 * math.log(2) / 2)
    assert axes.bound == pytest.approx(expected, rel=1e-13)
    _check_report(axes)


def test_projection_shape_mismatch():
    with pytest.raises(InvalidInputError):
        structured_sparsity_bound(np.ones((3, 2)), [np.eye(3)])


def test_sparsity_trivial_instance():
    ds = MultitaskDataset(np.array([[[1.0, 0.0]]]))
    r = dict_sparsity_bound(ds, 1)
    assert r.bound == pytest.approx(2 + 8 * math.sqrt(math.log(2)), rel=1e-14)
    _check_report(r)


def test_pooled_covariance_identity(rng):
    ds = MultitaskDataset(rng.normal(size=(4, 6, 3)))
    pooled = covariance_matrix(ds.pooled())
    np.testing.assert_allclose(pooled, np.mean([covariance_matrix(x) for x in ds.tasks], axis=0),
                               atol=1e-14)


def test_sharing_without_log_k():
    ds = MultitaskDataset(np.array([[[1.0, 0.0]], [[1.0, 0.0]]]))
    r = dict_sharing_bound(ds, 1)
    lam = 1.0
    assert r.terms["weak_term"] == pytest.approx(8 * math.sqrt(lam / 1 * math.log(2)))


def test_sharing_weak_never_above_sparsity(rng):
    for _ in range(20):
        ds = MultitaskDataset(rng.normal(size=(3, 5, 4)) * rng.uniform(0.1, 3, size=(3, 1, 1)))
        assert dict_sharing_bound(ds, 2).weak <= dict_sparsity_bound(ds, 2).weak + 1e-12


def test_dictionary_bounds_above_estimates(rng):
    ds = MultitaskDataset(rng.normal(size=(3, 6, 4)))
    spars = estimate_complexity(ClassSpec.dict_sparsity(2), ds, 3000, seed=1)
    assert spars.mean <= dict_sparsity_bound(ds, 2).bound + 3 * spars.stderr
    ds = MultitaskDataset(rng.normal(size=(4, 6, 4)))
    share = estimate_complexity(ClassSpec.dict_sharing(3), ds, 3000, seed=2)
    assert share.mean <= dict_sharing_bound(ds, 3).bound + 3 * share.stderr


def test_subspace_eta_unit_log():
    t = subspace_terms(2.0, 0.5, 3, 10, 4, 4 / math.e)
    assert t["weak_term"] == pytest.approx(8 * math.sqrt(3 * 0.5 / 10), rel=1e-14)


def test_subspace_eta_identity():
    K, d = 2, 7
    eta = math.sqrt(K / d)
    assert math.log(4 / eta) == pytest.approx(0.5 * math.log(16 * d / K), rel=1e-14)


def test_subspace_grid_minimum_and_closed_form(rng):
    ds = MultitaskDataset(rng.normal(size=(3, 8, 5)))
    r = subspace_bound(ds, 2)
    _check_report(r)
    assert r.bound <= r.diagnostics["bound_at_sqrt_k_over_d"] + 1e-12
    assert r.diagnostics["bound_at_sqrt_k_over_d"] <= r.diagnostics["closed_form_ln16d_over_k"]
    fixed = subspace_bound(ds, 2, eta=0.3)
    assert fixed.diagnostics["eta"] == 0.3 and fixed.bound >= r.bound


def test_subspace_eta_grid():
    g = eta_grid(2, 8)
    assert g.min() >= 1e-4 and g.max() <= 3.9 and 0.5 in g
    assert np.all(np.diff(g) > 0)


@pytest.mark.parametrize("eta", [0.0, 4.0, 5.0])
def test_subspace_rejects_eta(rng, eta):
    with pytest.raises(InvalidInputError):
        subspace_bound(MultitaskDataset(rng.normal(size=(2, 3, 3))), 2, eta=eta)


def test_subspace_rejects_large_k():
    with pytest.raises(InvalidInputError):
        subspace_bound(MultitaskDataset(np.ones((2, 3, 3))), 4)


def test_scale_law(rng):
    ds = MultitaskDataset(rng.normal(size=(3, 5, 4)))
    big = MultitaskDataset(2.0 * ds.tasks)
    for fn in (dict_sparsity_bound, dict_sharing_bound, subspace_bound):
        assert fn(big, 2).bound == pytest.approx(2.0 * fn(ds, 2).bound, rel=1e-12)
    ops = [np.diag([1.0, 1, 0, 0]), np.diag([0.0, 0, 1, 1])]
    x = ds.tasks[0]
    assert structured_sparsity_bound(3 * x, ops).bound == pytest.approx(
        3 * structured_sparsity_bound(x, ops).bound, rel=1e-12)


def test_gaussian_variant_constant(rng):
    ds = MultitaskDataset(rng.normal(size=(3, 5, 4)))
    r, g = dict_sharing_bound(ds, 2), dict_sharing_bound(ds, 2, "gaussian")
    assert g.terms["weak_term"] == pytest.approx(0.5 * r.terms["weak_term"])


def test_generalization_gap():
    delta = 2 * math.exp(-2)
    assert generalization_gap(0.25, 9, delta) == pytest.approx(1.25, rel=1e-14)
    assert generalization_gap(0.0, 100, 0.05) == pytest.approx(math.sqrt(9 * math.log(40) / 200))
    for bad in (0.0, 1.0):
        with pytest.raises(InvalidInputError):
            generalization_gap(0.0, 10, bad)


def test_expected_lambda_bound():
    d = 50
    assert expected_lambda_bound(1 / d, d, d) == pytest.approx(
        1 / math.sqrt(d) + 4 * math.sqrt((math.log(d) + 1) / d))
    assert expected_lambda_bound(0.3, 10**12, 5) == pytest.approx(math.sqrt(0.3), abs=1e-5)


def test_expected_lambda_sphere_sampling(rng):
    n, d = 2000, 5
    vals = []
    for _ in range(20):
        x = rng.normal(size=(n, d))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        vals.append(math.sqrt(covariance(x).lambda_max))
    assert np.mean(vals) <= expected_lambda_bound(1 / d, n, d)
