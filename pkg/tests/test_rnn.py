import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqneuro.encoding import NetworkWeights
from freqneuro.rnn import reset, step


def weights(n, i, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    return NetworkWeights(rng.normal(0, scale, (n, i)), rng.normal(0, scale, (n, n)), rng.normal(0, scale, n))


@pytest.mark.parametrize("n", [8, 32])
def test_reset(n):
    assert reset(n).tolist() == [0.0] * n


def test_zero_weights_give_half():
    w = NetworkWeights(np.zeros((8, 5)), np.zeros((8, 8)), np.zeros(8))
    state, out = step(w, reset(8), np.arange(5.0))
    assert state.tolist() == [0.0] * 8
    assert out.tolist() == [0.5] * 8


def test_single_neuron_bias():
    w = NetworkWeights(np.zeros((1, 0)), np.zeros((1, 1)), np.array([0.3]))
    state, out = step(w, reset(1), np.zeros(0))
    assert state[0] == pytest.approx(math.tanh(0.3), abs=1e-15)
    assert out[0] == pytest.approx((math.tanh(0.3) + 1) / 2, abs=1e-15)


def test_two_steps_match_straight_line_trace():
    w = weights(3, 2, 4)
    x1, x2 = [0.5, -1.0], [2.0, 0.25]
    a = [0.0, 0.0, 0.0]
    for x in (x1, x2):
        new = []
        for r in range(3):
            s = w.bias[r]
            s += w.input_matrix[r, 0] * x[0] + w.input_matrix[r, 1] * x[1]
            s += sum(w.recurrent_matrix[r, c] * a[c] for c in range(3))
            new.append(math.tanh(s))
        a = new
    state = reset(3)
    for x in (x1, x2):
        state, out = step(w, state, np.array(x))
    np.testing.assert_allclose(state, a, atol=1e-14)
    np.testing.assert_allclose(out, [(v + 1) / 2 for v in a], atol=1e-14)


def test_input_size_checked():
    with pytest.raises(ValueError):
        step(weights(2, 3, 0), reset(2), np.zeros(4))


@pytest.mark.parametrize("bad", [math.nan, math.inf])
def test_non_finite_input(bad):
    with pytest.raises(ValueError, match="non-finite network input"):
        step(weights(2, 3, 0), reset(2), np.array([0.0, bad, 1.0]))


def test_determinism():
    w = weights(6, 10, 1)
    x = np.random.default_rng(2).normal(size=10)
    s0 = np.random.default_rng(3).uniform(-1, 1, 6)
    a = step(w, s0, x)
    b = step(w, s0.copy(), x.copy())
    assert a[0].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 12), st.integers(0, 12), st.floats(0.01, 1e3), st.integers(0, 2**32 - 1))
def test_bounded(n, i, scale, seed):
    w = weights(n, i, seed, scale)
    x = np.random.default_rng(seed + 1).normal(0, scale, i)
    state, out = step(w, reset(n), x)
    state, out = step(w, state, x)
    # tanh rounds to exactly +-1 in double precision once |input| > ~19
    assert np.all(np.abs(state) <= 1.0)
    assert np.all((out >= 0.0) & (out <= 1.0))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_open_interval_for_moderate_inputs(n, seed):
    w = weights(n, 4, seed, 0.5)
    state, _ = step(w, reset(n), np.random.default_rng(seed).uniform(-1, 1, 4))
    assert np.all(np.abs(state) < 1.0)
