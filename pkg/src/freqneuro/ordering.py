"""Frequency-importance ordering of coefficient-array cells.

Cells are grouped into simplexes by coordinate sum (low to high
frequency). Inside one simplex, the corners of the array (cells with a
single non-zero coordinate, sitting at an axis extreme) are visited in a
cycle, ordered by descending axis extent; each visit takes the remaining
cell nearest to that corner. Ties in distance go to the lexicographically
smallest coordinates, ties in extent to the earlier axis. The corner cycle
restarts for every simplex, so each 2-D anti-diagonal starts on the side
of the longer dimension and fills from the edges toward the centre.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .dct import MAX_DIMS


def _check_dims(dims) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not 1 <= len(dims) <= MAX_DIMS:
        raise ValueError(f"need 1..{MAX_DIMS} dimensions, got {len(dims)}")
    if any(d < 1 for d in dims):
        raise ValueError(f"array extents must be >= 1, got {dims}")
    return dims


def corners(dims) -> np.ndarray:
    """Corner points as rows, sorted by descending extent (stable)."""
    dims = _check_dims(dims)
    axes = sorted((a for a, d in enumerate(dims) if d > 1), key=lambda a: -dims[a])
    k = np.zeros((len(axes), len(dims)), dtype=int)
    for row, axis in enumerate(axes):
        k[row, axis] = dims[axis] - 1
    return k


@lru_cache(maxsize=None)
def _order(dims: tuple[int, ...]) -> np.ndarray:
    cells = np.array(list(itertools.product(*(range(d) for d in dims))), dtype=int)
    sums = cells.sum(axis=1)
    k = corners(dims)
    out = []
    for i in range(int(sums.max()) + 1):
        simplex = cells[sums == i]  # already lexicographic
        if len(k) == 0:
            out.extend(simplex)
            continue
        # squared distances are exact integers, so ties are exact
        dist = ((simplex[None, :, :] - k[:, None, :]) ** 2).sum(axis=2)
        left = np.ones(len(simplex), dtype=bool)
        for step in range(len(simplex)):
            row = dist[step % len(k)]
            j = int(np.argmin(np.where(left, row, np.iinfo(row.dtype).max)))
            left[j] = False
            out.append(simplex[j])
    order = np.array(out, dtype=int).reshape(-1, len(dims))
    order.flags.writeable = False
    return order


def simplex_order(dims) -> np.ndarray:
    """Cell coordinates in importance order, shape (prod(dims), len(dims))."""
    return _order(_check_dims(dims))


@lru_cache(maxsize=None)
def _flat_order(dims: tuple[int, ...]) -> np.ndarray:
    flat = np.ravel_multi_index(tuple(_order(dims).T), dims)
    flat.flags.writeable = False
    return flat


def flat_order(dims) -> np.ndarray:
    """Row-major flat indices of the cells in importance order."""
    return _flat_order(_check_dims(dims))


def fill_array(dims, chromosome) -> np.ndarray:
    dims = _check_dims(dims)
    values = np.asarray(chromosome, dtype=float).ravel()
    size = int(np.prod(dims))
    if values.size > size:
        raise ValueError(
            f"chromosome exceeds array capacity ({values.size} > {size} cells of {dims})"
        )
    out = np.zeros(size)
    out[_flat_order(dims)[: values.size]] = values
    return out.reshape(dims)


def read_array(array, count=None) -> np.ndarray:
    """Inverse of :func:`fill_array`: read cells along the importance order."""
    arr = np.asarray(array, dtype=float)
    values = arr.ravel()[_flat_order(_check_dims(arr.shape))]
    return values if count is None else values[:count]
