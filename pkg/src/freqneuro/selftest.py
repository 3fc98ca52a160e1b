"""Quick oracle checks runnable from the command line (``freqneuro selftest``)."""
from __future__ import annotations

import itertools
import math

import numpy as np

from . import snes
from .arm import trial_score
from .dct import dct2_nd, dct3_nd
from .encoding import NetworkWeights, architecture, build_scheme, decode, encode, grow_lengths
from .ordering import simplex_order


def _dct3_direct(c: np.ndarray) -> np.ndarray:
    """Term-by-term separable sum over every coefficient."""
    out = np.zeros(c.shape)
    for k in itertools.product(*(range(d) for d in c.shape)):
        total = 0.0
        for n in itertools.product(*(range(d) for d in c.shape)):
            term = c[n]
            for kj, nj, dj in zip(k, n, c.shape):
                term *= (1.0 if nj == 0 else 2.0 * math.cos(math.pi / dj * nj * (kj + 0.5))) / math.sqrt(dj)
            total += term
        out[k] = total
    return out


def _check_dct(rng):
    worst = 0.0
    for _ in range(20):
        dims = tuple(rng.integers(1, 5, size=rng.integers(1, 4)))
        c = rng.uniform(-10, 10, dims)
        worst = max(worst, np.abs(dct3_nd(c) - _dct3_direct(c)).max(),
                    np.abs(dct3_nd(dct2_nd(c)) - c).max())
    return worst < 1e-9, f"max error {worst:.2e}"


def _check_ordering(rng):
    for _ in range(30):
        dims = tuple(int(d) for d in rng.integers(1, 6, size=rng.integers(1, 5)))
        order = simplex_order(dims)
        sums = order.sum(axis=1)
        if len({tuple(c) for c in order}) != math.prod(dims) or np.any(np.diff(sums) < 0):
            return False, f"bad order for {dims}"
    return True, "permutation, monotone simplexes"


def _check_encoding(rng):
    worst = 0.0
    for name, arch in (("psi1", "theta1"), ("psi2", "theta1"), ("psi1", "theta2"), ("psi3", "theta2")):
        s = build_scheme(name, arch, 4)
        w = NetworkWeights.from_flat(rng.normal(size=s.arch.weight_count), s.arch)
        g = encode(w, s)
        worst = max(worst, np.abs(decode(g, s).flat() - w.flat()).max(),
                    np.abs(encode(decode(g, s), s).coefficients - g.coefficients).max())
    ok = worst < 1e-9 and grow_lengths((4, 3, 3), (99, 99, 99), 10) == (7, 7, 6)
    return ok, f"round-trip error {worst:.2e}"


def _check_arithmetic(rng):
    ok = (architecture("theta1", 10).weight_count == 728
          and architecture("theta2", 10).weight_count == 3680
          and architecture("theta2", 10).weight_count // 20 == 184
          and snes.population_size(728) == 27
          and abs(snes.learning_rates(1)[0] - 0.6) < 1e-12
          and trial_score(50, 100, 0.5, 1.0) == 0.75)
    return ok, "weight totals, population size, rates, fitness"


CHECKS = {
    "dct": _check_dct,
    "ordering": _check_ordering,
    "encoding": _check_encoding,
    "arithmetic": _check_arithmetic,
}


def run(seed: int = 0) -> list[tuple[str, bool, str]]:
    rng = np.random.default_rng(seed)
    return [(name, *fn(rng)) for name, fn in CHECKS.items()]
