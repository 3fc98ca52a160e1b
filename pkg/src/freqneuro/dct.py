"""Type-II / type-III discrete cosine transforms.

The inverse transform (type III) turns frequency coefficients into weights::

    w_k = (c_0 + 2 * sum_{n>=1} c_n cos(pi/N * n * (k + 1/2))) / sqrt(N)

The forward transform (type II) is normalised so that it exactly inverts
the above::

    c_n = sum_k x_k cos(pi/N * n * (k + 1/2)) / sqrt(N)

Multi-dimensional transforms apply the 1-D transform along axis 0 first,
then axis 1, and so on. Arrays are stored row-major (C order).
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

MAX_DIMS = 4


@lru_cache(maxsize=256)
def _cos_table(n: int) -> np.ndarray:
    # table[n, k] = cos(pi/N * n * (k + 1/2))
    freq = np.arange(n)[:, None]
    pos = np.arange(n)[None, :] + 0.5
    table = np.cos(np.pi / n * freq * pos)
    table.flags.writeable = False
    return table


@lru_cache(maxsize=256)
def dct3_matrix(n: int) -> np.ndarray:
    """Matrix M with ``w = M @ c`` for the inverse transform of length n."""
    m = 2.0 * _cos_table(n).T
    m[:, 0] = 1.0
    m /= np.sqrt(n)
    m.flags.writeable = False
    return m


@lru_cache(maxsize=256)
def dct2_matrix(n: int) -> np.ndarray:
    """Matrix F with ``c = F @ x``; exact inverse of :func:`dct3_matrix`."""
    f = _cos_table(n) / np.sqrt(n)
    f.flags.writeable = False
    return f


def _as_sequence(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D sequence, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("empty sequence")
    return arr


def dct3_1d(coeffs) -> np.ndarray:
    c = _as_sequence(coeffs)
    return dct3_matrix(c.size) @ c


def dct2_1d(values) -> np.ndarray:
    x = _as_sequence(values)
    return dct2_matrix(x.size) @ x


def _check_array(array) -> np.ndarray:
    arr = np.asarray(array, dtype=float)
    if not 1 <= arr.ndim <= MAX_DIMS:
        raise ValueError(f"arrays must have 1..{MAX_DIMS} dimensions, got {arr.ndim}")
    if arr.size == 0:
        raise ValueError(f"array extents must be positive, got {arr.shape}")
    return arr


def _apply_along(arr: np.ndarray, matrix_for, axes) -> np.ndarray:
    out = arr
    for axis in axes:
        m = matrix_for(out.shape[axis])
        out = np.moveaxis(np.tensordot(m, out, axes=([1], [axis])), 0, axis)
    return np.ascontiguousarray(out)


def dct3_nd(array, axes=None) -> np.ndarray:
    """Separable inverse transform. ``axes`` overrides the application order."""
    arr = _check_array(array)
    return _apply_along(arr, dct3_matrix, range(arr.ndim) if axes is None else axes)


def dct2_nd(array, axes=None) -> np.ndarray:
    arr = _check_array(array)
    return _apply_along(arr, dct2_matrix, range(arr.ndim) if axes is None else axes)
