"""Fully-connected recurrent network used as the arm controller.

Neurons update synchronously: every neuron reads the previous activations.
The squashing function is tanh; outputs map activations onto [0, 1]
muscle intensities via ``(a + 1) / 2``.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .encoding import NetworkWeights


@njit(cache=True)
def step_kernel(w_in, w_rec, bias, state, x, out_state, out_act):
    n, i = w_in.shape
    for r in range(n):
        acc = bias[r]
        for c in range(i):
            acc += w_in[r, c] * x[c]
        for c in range(n):
            acc += w_rec[r, c] * state[c]
        a = math.tanh(acc)
        out_state[r] = a
        out_act[r] = min(1.0, max(0.0, 0.5 * (a + 1.0)))


def reset(n: int) -> np.ndarray:
    return np.zeros(n)


def step(weights: NetworkWeights, state, inputs):
    """One update. Returns ``(new_state, outputs)``."""
    x = np.ascontiguousarray(inputs, dtype=float)
    if x.shape != (weights.i,):
        raise ValueError(f"expected {weights.i} inputs, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite network input")
    state = np.ascontiguousarray(state, dtype=float)
    new_state = np.empty(weights.n)
    out = np.empty(weights.n)
    step_kernel(
        np.ascontiguousarray(weights.input_matrix, dtype=float),
        np.ascontiguousarray(weights.recurrent_matrix, dtype=float),
        np.ascontiguousarray(weights.bias, dtype=float),
        state, x, new_state, out,
    )
    return new_state, out
