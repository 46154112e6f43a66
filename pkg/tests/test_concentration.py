import math

import numpy as np
import pytest

from radbound.concentration import (GRID_POINTS, bounded_difference_check, check_lipschitz,
                                    gauss_hermite_rule, gaussian_lipschitz_check,
                                    gaussian_set_expectations, lemma_main_check, s_grid,
                                    supremum_tail, tail_check_supremum, trace_inequality_check)
from radbound.errors import InvalidInputError, ResourceLimitError
from radbound.montecarlo import sample_sup_distribution
from radbound.oracles import finite_set_sup_batch


def test_grid_shape():
    g = s_grid(2.0)
    assert g.size == GRID_POINTS and g[0] == pytest.approx(0.2) and g[-1] == pytest.approx(8.0)


def test_gaussian_curve_below_rademacher():
    s = s_grid(1.5)
    assert np.all(supremum_tail(s, 1.5, "gaussian") <= supremum_tail(s, 1.5, "rademacher"))


def test_constant_samples_no_violations():
    r = tail_check_supremum(np.full(1000, 3.0), 1.0)
    assert r.violations == 0 and np.all(r.empirical_tail == 0)


def test_single_point_tail():
    e1 = np.eye(5)[:1]
    s = sample_sup_distribution(lambda e: finite_set_sup_batch(e, e1), width=5, trials=10**4, seed=0)
    r = tail_check_supremum(s, 1.0, mean=0.0)
    at_one = np.searchsorted(r.s_grid, 1.0)
    assert np.all(r.empirical_tail[r.s_grid >= 1.0] == 0.0)
    assert r.theoretical_tail[at_one] <= math.exp(-1 / 8) + 1e-12
    assert r.passed


def test_tails_non_increasing(rng):
    r = tail_check_supremum(rng.normal(size=5000), 1.0, "gaussian")
    assert np.all(np.diff(r.empirical_tail) <= 0)
    assert np.all(np.diff(r.theoretical_tail) <= 0)
    assert len(r.rows()) == GRID_POINTS


def test_violation_is_detected():
    # a point mass far above the mean breaks any sub-Gaussian tail at v = 0.1
    samples = np.concatenate([np.zeros(500), np.full(500, 10.0)])
    assert tail_check_supremum(samples, 0.1).violations > 0


def test_sphere_sup_gaussian():
    s = sample_sup_distribution(lambda e: np.linalg.norm(e, axis=1), width=20, trials=10**5,
                                seed=1, variant="gaussian")
    assert tail_check_supremum(s, 1.0, "gaussian").passed


def test_hoeffding_average():
    n = 12
    f = lambda x: x.mean(axis=1)  # noqa: E731
    sampler = lambda rng, m: rng.choice([-1.0, 1.0], size=(m, n))  # noqa: E731
    out = bounded_difference_check(f, sampler, n, 10**5, seed=2, a_squared=4 / n, b_squared=4 / n)
    assert out["i"].passed and out["ii"].passed


def test_constant_function_degenerate_ok():
    sampler = lambda rng, m: rng.uniform(size=(m, 3))  # noqa: E731
    out = bounded_difference_check(lambda x: np.zeros(len(x)), sampler, 3, 1000, seed=0)
    assert out["i"].violations == 0 and out["ii"].violations == 0


def test_degenerate_functional_rejected():
    sampler = lambda rng, m: rng.uniform(size=(m, 3))  # noqa: E731
    with pytest.raises(InvalidInputError):
        bounded_difference_check(lambda x: x.sum(axis=1), sampler, 3, 100, a_squared=0.0, b_squared=0.0)


def test_probe_estimated_max_uniform():
    n = 10
    sampler = lambda rng, m: rng.uniform(size=(m, n))  # noqa: E731
    out = bounded_difference_check(lambda x: x.max(axis=1), sampler, n, 10**5, seed=3)
    assert out["ii"].passed and out["i"].passed


def test_linear_functional_lipschitz():
    u = np.array([0.6, 0.8, 0.0])
    r = gaussian_lipschitz_check(lambda x: x @ u, 1.0, 3, 10**5, seed=4, mean=0.0)
    assert r.passed


def test_constant_lipschitz():
    r = gaussian_lipschitz_check(lambda x: np.ones(len(x)), 2.0, 4, 1000, seed=0)
    assert r.violations == 0


def test_lipschitz_falsified(rng):
    with pytest.raises(InvalidInputError):
        check_lipschitz(lambda x: 3 * x[:, 0], 1.0, 2, rng)


def test_trace_inequality_orthonormal():
    v = trace_inequality_check(np.eye(6), trials=1000, seed=0)
    assert v.passed
    assert v.mean_norm == pytest.approx(math.sqrt(6), rel=1e-14)
    assert v.bound == pytest.approx(math.sqrt(6), rel=1e-14)


def test_trace_inequality_single_sample():
    v = trace_inequality_check([[3.0, 4.0]], trials=100, seed=0)
    assert v.passed and v.mean_norm == pytest.approx(5.0) and v.bound == pytest.approx(5.0)


def test_trace_inequality_random(rng):
    assert trace_inequality_check(rng.normal(size=(30, 6)), trials=10**5, seed=5).passed


def test_lemma_single_set_equality(rng):
    pts = rng.normal(size=(4, 6))
    v = lemma_main_check([pts])
    assert v.passed and v.lhs == pytest.approx(v.rhs, rel=1e-12)


def test_lemma_identical_sets(rng):
    pts = rng.normal(size=(4, 6))
    v = lemma_main_check([pts] * 5)
    assert v.passed
    assert v.lhs == pytest.approx(max(v.class_expectations), rel=1e-12)
    assert v.rhs - v.lhs == pytest.approx(4 * v.sup_norm * math.sqrt(math.log(5)), rel=1e-9)


def test_lemma_random_exact_and_mc(rng):
    for _ in range(10):
        sets = [rng.normal(size=(int(rng.integers(1, 9)), 8)) for _ in range(int(rng.integers(4, 12)))]
        assert lemma_main_check(sets).passed
        assert lemma_main_check(sets, mode="mc", trials=5000, seed=1).passed
        assert lemma_main_check(sets, variant="gaussian").passed


def test_lemma_budget():
    with pytest.raises(ResourceLimitError):
        lemma_main_check([np.ones((2, 30))])


def test_gauss_hermite_moments():
    per_axis, x, w = gauss_hermite_rule(2, nodes=20)
    assert per_axis == 20
    assert w.sum() == pytest.approx(1.0, rel=1e-13)
    assert np.sum(w * x**2) == pytest.approx(1.0, rel=1e-12)
    assert np.sum(w * x**4) == pytest.approx(3.0, rel=1e-12)


def test_gauss_hermite_grid_cap():
    assert gauss_hermite_rule(2)[0] == 200
    assert gauss_hermite_rule(6)[0] == 7


def test_gaussian_expectation_of_abs():
    z = np.array([[1.0], [-1.0]])
    union, per = gaussian_set_expectations(z, [slice(0, 2)])
    # the kink at 0 limits the rule to roughly 1/nodes accuracy
    assert union == pytest.approx(math.sqrt(2 / math.pi), rel=5e-3)
    assert per[0] == union
