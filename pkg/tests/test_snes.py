import math

import numpy as np
import pytest

from freqneuro.snes import (
    ask,
    learning_rates,
    make_distribution,
    minimize,
    population_size,
    rank_utilities,
    resized,
    tell,
    utilities,
)


def test_population_size_examples():
    assert population_size(1) == 8
    assert population_size(20) == 16
    assert population_size(728) == 27


def test_population_size_base_ten():
    assert population_size(20, math.log10) == 8 + 3


def test_learning_rate_examples():
    assert learning_rates(1) == (0.6, 0.6)
    assert learning_rates(20)[0] == pytest.approx(0.268137, abs=5e-7)
    assert learning_rates(3680)[1] == pytest.approx(0.036960, abs=5e-7)


@pytest.mark.parametrize("fn", [population_size, learning_rates])
def test_dimension_must_be_positive(fn):
    with pytest.raises(ValueError):
        fn(0)


@pytest.mark.parametrize("lam", [4, 8, 16, 27])
def test_utilities(lam):
    u = utilities(lam)
    assert abs(u.sum()) < 1e-15
    assert np.all(np.diff(u) <= 0)
    raw = [max(0.0, math.log(lam / 2 + 1) - math.log(j)) for j in range(1, lam + 1)]
    np.testing.assert_allclose(u, np.array(raw) / sum(raw) - 1 / lam, atol=1e-15)


def test_rank_utilities_assign_best_first():
    u = rank_utilities([0.1, 0.9, 0.5, 0.3], maximize=True)
    assert u[1] == utilities(4)[0]
    assert rank_utilities([0.1, 0.9, 0.5, 0.3], maximize=False)[0] == utilities(4)[0]


def test_rank_utilities_reject_nan():
    with pytest.raises(ValueError, match="non-finite fitness"):
        rank_utilities([1.0, math.nan, 0.0, 2.0])


def test_lambda_lower_bound():
    with pytest.raises(ValueError):
        make_distribution(np.zeros(3), popsize=3)


def test_zero_sigma_samples_equal_mean():
    d = make_distribution([1.0, -2.0, 3.0], sigma=0.0, seed=1)
    x, _ = ask(d)
    assert np.all(x == np.array([1.0, -2.0, 3.0]))


def test_ask_is_seeded():
    a, _ = ask(make_distribution(np.zeros(5), seed=42))
    b, _ = ask(make_distribution(np.zeros(5), seed=42))
    assert np.array_equal(a, b)


def test_sample_mean():
    d = make_distribution([0.5, -1.0], sigma=[2.0, 0.1], seed=3, popsize=100_000)
    x, _ = ask(d)
    bound = 3 * d.sigma / math.sqrt(100_000)
    assert np.all(np.abs(x.mean(axis=0) - d.mu) < bound)


def test_equal_fitness_is_no_update():
    d = make_distribution(np.arange(4.0), sigma=0.7, seed=0)
    _, z = ask(d)
    after = tell(d, z, np.full(d.popsize, 3.0))
    assert np.array_equal(after.mu, d.mu) and np.array_equal(after.sigma, d.sigma)


def test_update_invariant_to_shift_and_scale():
    d = make_distribution(np.zeros(6), seed=5)
    x, z = ask(d)
    f = -np.sum(x**2, axis=1)
    ref = tell(d, z, f)
    for g in (f + 3.5, f * 2.0, f * 0.37 - 11.0):
        other = tell(d, z, g)
        assert other.mu.tobytes() == ref.mu.tobytes()
        assert other.sigma.tobytes() == ref.sigma.tobytes()


def test_sigma_stays_positive():
    d = make_distribution(np.zeros(3), seed=2)
    for _ in range(500):
        x, z = ask(d)
        d = tell(d, z, -np.abs(x).sum(axis=1))
        assert np.all(d.sigma > 0)


def test_one_dimensional_sphere_moves_toward_zero():
    finals = []
    for seed in range(100):
        d = make_distribution([1.0], sigma=0.5, seed=seed)
        x, z = ask(d)
        finals.append(tell(d, z, -(x[:, 0] ** 2)).mu[0])
    assert np.mean(finals) < 1.0


def test_determinism_of_trajectory():
    def run():
        d = make_distribution(np.ones(4), seed=9)
        trace = []
        for _ in range(20):
            x, z = ask(d)
            d = tell(d, z, -np.sum(x**2, axis=1))
            trace.append(d.mu.copy())
        return np.array(trace)

    assert run().tobytes() == run().tobytes()


def test_resized_keeps_generator_and_recomputes_rates():
    d = make_distribution(np.zeros(10), seed=1)
    r = resized(d, np.zeros(20), np.ones(20))
    assert r.rng is d.rng
    assert r.popsize == population_size(20) and r.eta_mu == learning_rates(20)[0]


def test_sphere_within_relaxed_budget():
    lam = population_size(20)
    results = [
        minimize(lambda v: float(v @ v), np.zeros(20), 1.0, seed=s, max_evals=300 * lam, target=1e-3)[1]
        for s in range(11)
    ]
    assert np.median(results) < 1e-3
