import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from cvbounds.learners import (
    CLIPPED_ABSOLUTE,
    EMPTY_INTERVAL,
    ZERO_ONE,
    Dataset,
    HypothesisClass,
    IntervalPredictor,
    SyntheticDistribution,
    ThresholdPredictor,
    empirical_risk,
    erm_fit,
    shatter_bound,
    true_risk,
)
from cvbounds.resampling import BinaryVector


def full_mask(n):
    return BinaryVector((1,) * n)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.array([0.1, 0.2]), np.array([0.0, 1.5]))  # label > 1
    with pytest.raises(ValueError):
        Dataset(np.array([[0.1]]), np.array([[0.0]]))  # not 1-d
    with pytest.raises(ValueError):
        Dataset(np.array([np.nan]), np.array([0.0]))
    d = Dataset(np.array([0.3, 0.4]), np.array([0.0, 1.0]))
    assert d.n == 2
    with pytest.raises(ValueError):
        d.x[0] = 0.9  # frozen


def test_dataset_csv_roundtrip(tmp_path):
    d = Dataset(np.array([0.1, 1 / 3, 0.97531]), np.array([0.0, 1.0, 1.0]))
    path = tmp_path / "d.csv"
    d.to_csv(path)
    back = Dataset.from_csv(path)
    assert np.array_equal(back.x, d.x)
    assert np.array_equal(back.y, d.y)
    with pytest.raises(ValueError):
        Dataset.from_csv(__file__)  # wrong header


def test_zero_one_loss_values():
    got = ZERO_ONE(np.array([0.0, 1.0, 1.0]), np.array([0.0, 0.0, 1.0]))
    assert got.tolist() == [0.0, 1.0, 0.0]


def test_clipped_absolute_loss_values():
    got = CLIPPED_ABSOLUTE(np.array([0.2, 1.0]), np.array([0.5, 0.0]))
    assert got.tolist() == pytest.approx([0.3, 1.0])


@given(
    st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=20),
    st.floats(min_value=-2.0, max_value=2.0),
)
def test_clipped_absolute_stays_in_unit_range(ys, shift):
    y = np.array(ys)
    got = CLIPPED_ABSOLUTE(y, y + shift)
    assert np.all(got >= 0.0) and np.all(got <= 1.0)


def test_empirical_risk_two_points():
    d = Dataset(np.array([0.1, 0.9]), np.array([0.0, 1.0]))
    assert empirical_risk(ThresholdPredictor(0.5), full_mask(2), d, ZERO_ONE) == 0.0


def test_empirical_risk_on_subsample():
    d = Dataset(np.array([0.1, 0.6, 0.9]), np.array([1.0, 0.0, 1.0]))
    # mask keeps points 0 and 2; predictor 1{x >= 0.5} errs on point 0 only
    risk = empirical_risk(ThresholdPredictor(0.5), BinaryVector((1, 0, 1)), d, ZERO_ONE)
    assert risk == 0.5
    with pytest.raises(ValueError):
        empirical_risk(ThresholdPredictor(0.5), BinaryVector((1, 0)), d, ZERO_ONE)


def test_threshold_erm_separable():
    d = Dataset(np.array([0.1, 0.2, 0.7, 0.8]), np.array([0.0, 0.0, 1.0, 1.0]))
    phi = erm_fit(HypothesisClass.threshold(), full_mask(4), d, ZERO_ONE)
    assert empirical_risk(phi, full_mask(4), d, ZERO_ONE) == 0.0
    assert 0.2 < phi.threshold <= 0.7


def test_threshold_erm_single_point():
    d = Dataset(np.array([0.5]), np.array([1.0]))
    phi = erm_fit(HypothesisClass.threshold(), full_mask(1), d, ZERO_ONE)
    assert empirical_risk(phi, full_mask(1), d, ZERO_ONE) == 0.0


def test_threshold_erm_one_flipped_label_matches_brute_force():
    x = [0.1, 0.25, 0.4, 0.55, 0.7, 0.85]
    y = [0.0, 0.0, 1.0, 1.0, 0.0, 1.0]  # one flip at 0.7
    d = Dataset(np.array(x), np.array(y))
    phi = erm_fit(HypothesisClass.threshold(), full_mask(6), d, ZERO_ONE)
    t_ref, e_ref = oracles.brute_threshold_erm(x, y)
    assert phi.threshold == t_ref
    assert empirical_risk(phi, full_mask(6), d, ZERO_ONE) == e_ref / 6


def test_threshold_erm_tie_break_smallest_cut():
    # all labels 1: cut 0.0 and every other boundary below x_min give 0
    # errors; the smallest candidate must win
    d = Dataset(np.array([0.4, 0.6]), np.array([1.0, 1.0]))
    phi = erm_fit(HypothesisClass.threshold(), full_mask(2), d, ZERO_ONE)
    assert phi.threshold == 0.0


def test_threshold_erm_permutation_invariant():
    rng = np.random.Generator(np.random.Philox(key=np.uint64(5)))
    x = rng.random(15)
    y = (rng.random(15) < 0.5).astype(np.float64)
    d = Dataset(x, y)
    phi = erm_fit(HypothesisClass.threshold(), full_mask(15), d, ZERO_ONE)
    perm = rng.permutation(15)
    phi_p = erm_fit(
        HypothesisClass.threshold(), full_mask(15), Dataset(x[perm], y[perm]), ZERO_ONE
    )
    assert phi.threshold == phi_p.threshold


@settings(max_examples=60)
@given(st.integers(min_value=0, max_value=2**20))
def test_threshold_erm_exact_against_exhaustive(seed):
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    n = int(rng.integers(1, 13))
    x = rng.random(n)
    y = (rng.random(n) < 0.5).astype(np.float64)
    d = Dataset(x, y)
    phi = erm_fit(HypothesisClass.threshold(), full_mask(n), d, ZERO_ONE)
    t_ref, e_ref = oracles.brute_threshold_erm(x.tolist(), y.tolist())
    assert phi.threshold == t_ref
    assert empirical_risk(phi, full_mask(n), d, ZERO_ONE) == pytest.approx(
        e_ref / n, abs=1e-15
    )


def test_threshold_erm_beats_random_predictors():
    rng = np.random.Generator(np.random.Philox(key=np.uint64(9)))
    cls = HypothesisClass.threshold()
    x = rng.random(30)
    y = (rng.random(30) < 0.4).astype(np.float64)
    d = Dataset(x, y)
    fitted = empirical_risk(erm_fit(cls, full_mask(30), d, ZERO_ONE), full_mask(30), d, ZERO_ONE)
    for _ in range(1000):
        phi = cls.sample_predictor(rng)
        assert fitted <= empirical_risk(phi, full_mask(30), d, ZERO_ONE)


def test_interval_erm_matches_brute_force():
    rng = np.random.Generator(np.random.Philox(key=np.uint64(21)))
    cls = HypothesisClass.interval()
    for _ in range(25):
        n = int(rng.integers(1, 11))
        x = rng.random(n)
        y = (rng.random(n) < 0.5).astype(np.float64)
        d = Dataset(x, y)
        phi = erm_fit(cls, full_mask(n), d, ZERO_ONE)
        got = empirical_risk(phi, full_mask(n), d, ZERO_ONE)
        assert got == pytest.approx(oracles.brute_interval_erm(x, y) / n, abs=1e-15)


def test_interval_erm_prefers_empty_interval_on_ties():
    d = Dataset(np.array([0.2, 0.5, 0.8]), np.array([0.0, 0.0, 0.0]))
    phi = erm_fit(HypothesisClass.interval(), full_mask(3), d, ZERO_ONE)
    assert (phi.low, phi.high) == EMPTY_INTERVAL
    assert empirical_risk(phi, full_mask(3), d, ZERO_ONE) == 0.0


def test_interval_erm_separable_island():
    d = Dataset(
        np.array([0.1, 0.35, 0.5, 0.65, 0.9]),
        np.array([0.0, 1.0, 1.0, 1.0, 0.0]),
    )
    phi = erm_fit(HypothesisClass.interval(), full_mask(5), d, ZERO_ONE)
    assert empirical_risk(phi, full_mask(5), d, ZERO_ONE) == 0.0
    assert 0.1 < phi.low <= 0.35 and 0.65 <= phi.high < 0.9


def test_erm_rejects_non_zero_one_loss():
    d = Dataset(np.array([0.5]), np.array([1.0]))
    with pytest.raises(ValueError):
        erm_fit(HypothesisClass.threshold(), full_mask(1), d, CLIPPED_ABSOLUTE)


def test_erm_rejects_non_binary_labels():
    d = Dataset(np.array([0.5, 0.6]), np.array([0.25, 1.0]))
    with pytest.raises(ValueError):
        erm_fit(HypothesisClass.threshold(), full_mask(2), d, ZERO_ONE)


def test_true_risk_at_the_step():
    dist = SyntheticDistribution(theta_star=0.4, eta=0.0)
    assert true_risk(ThresholdPredictor(0.4), dist, ZERO_ONE) == 0.0
    assert true_risk(ThresholdPredictor(0.6), dist, ZERO_ONE) == pytest.approx(0.2)
    noisy = SyntheticDistribution(theta_star=0.4, eta=0.1)
    assert true_risk(ThresholdPredictor(0.4), noisy, ZERO_ONE) == pytest.approx(0.1)
    assert noisy.bayes_risk == 0.1


def test_true_risk_matches_monte_carlo():
    dist = SyntheticDistribution(theta_star=0.3, eta=0.1)
    phi = ThresholdPredictor(0.45)
    exact = true_risk(phi, dist, ZERO_ONE)
    rng = np.random.Generator(np.random.Philox(key=np.uint64(3)))
    m = 10**6
    d = dist.sample(m, rng)
    emp = float(np.mean(phi.predict(d.x) != d.y))
    assert abs(emp - exact) <= 3.0 * math.sqrt(exact * (1.0 - exact) / m)


def test_true_risk_rejects_unsupported_inputs():
    dist = SyntheticDistribution(theta_star=0.3, eta=0.1)
    with pytest.raises(ValueError):
        true_risk(IntervalPredictor(0.2, 0.4), dist, ZERO_ONE)
    with pytest.raises(ValueError):
        true_risk(ThresholdPredictor(0.3), dist, CLIPPED_ABSOLUTE)
    with pytest.raises(ValueError):
        true_risk(ThresholdPredictor(1.5), dist, ZERO_ONE)


def test_distribution_sampling_draw_order():
    # contract: n feature uniforms first, then n flip uniforms
    dist = SyntheticDistribution(theta_star=0.5, eta=0.2)
    rng = np.random.Generator(np.random.Philox(key=np.uint64(7)))
    d = dist.sample(10, rng)
    ref = np.random.Generator(np.random.Philox(key=np.uint64(7)))
    x = ref.random(10)
    flips = ref.random(10) < 0.2
    y = ((x >= 0.5) != flips).astype(np.float64)
    assert np.array_equal(d.x, x)
    assert np.array_equal(d.y, y)


def test_distribution_validation():
    with pytest.raises(ValueError):
        SyntheticDistribution(theta_star=1.2, eta=0.1)
    with pytest.raises(ValueError):
        SyntheticDistribution(theta_star=0.5, eta=0.5)


def test_shatter_bound_small_values():
    assert shatter_bound(1, 3).value == pytest.approx(8.0)
    got = shatter_bound(2, 1)
    assert got.value == pytest.approx(3.0)
    # exact behavior count of half-lines on 2 distinct points is also 3
    behaviors = {
        tuple(ThresholdPredictor(t).predict([0.3, 0.7]).tolist())
        for t in [0.0, 0.5, 1.0]
    }
    assert got.value == pytest.approx(len(behaviors))


def test_shatter_bound_log_path():
    got = shatter_bound(10**6, 10)
    assert got.log_value == pytest.approx(10 * math.log(10**6 + 1), rel=1e-15)
    assert got.value == pytest.approx(math.exp(got.log_value))
    huge = shatter_bound(10**6, 100)
    assert huge.value is None
    assert huge.log_value == pytest.approx(100 * math.log(10**6 + 1), rel=1e-15)


def test_hypothesis_class_validation_and_sampling():
    with pytest.raises(ValueError):
        HypothesisClass("forest", 3)
    rng = np.random.Generator(np.random.Philox(key=np.uint64(1)))
    assert isinstance(HypothesisClass.threshold().sample_predictor(rng), ThresholdPredictor)
    phi = HypothesisClass.interval().sample_predictor(rng)
    assert phi.low <= phi.high
