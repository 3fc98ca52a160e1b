"""Separable natural evolution strategies (diagonal Gaussian search)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

LOGS = {"e": math.log, "10": math.log10}


def population_size(c: int, log=math.log) -> int:
    # literally 4 + floor(3 log C) + 4
    if c < 1:
        raise ValueError(f"dimension count must be >= 1, got {c}")
    return 4 + math.floor(3 * log(c)) + 4


def learning_rates(d: int, log=math.log) -> tuple[float, float]:
    if d < 1:
        raise ValueError(f"dimension count must be >= 1, got {d}")
    eta = (log(d) + 3) / (5 * math.sqrt(d))
    return eta, eta


def utilities(lam: int) -> np.ndarray:
    """Rank-based fitness shaping, best rank first; sums to zero."""
    ranks = np.arange(1, lam + 1)
    u = np.maximum(0.0, math.log(lam / 2 + 1) - np.log(ranks))
    return u / u.sum() - 1.0 / lam


def rank_utilities(fitnesses, maximize=True) -> np.ndarray:
    """Utility of each candidate; tied fitnesses share their mean utility."""
    f = np.asarray(fitnesses, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("non-finite fitness")
    key = -f if maximize else f
    order = np.argsort(key, kind="stable")
    u_sorted = utilities(f.size)
    out = np.empty(f.size)
    sorted_key = key[order]
    start = 0
    while start < f.size:
        stop = start + 1
        while stop < f.size and sorted_key[stop] == sorted_key[start]:
            stop += 1
        # a tie across the whole population carries no ranking signal
        out[order[start:stop]] = 0.0 if stop - start == f.size else u_sorted[start:stop].mean()
        start = stop
    return out


@dataclass
class SearchDistribution:
    mu: np.ndarray
    sigma: np.ndarray
    eta_mu: float
    eta_sigma: float
    popsize: int
    rng: np.random.Generator = field(repr=False, compare=False)
    seed: int = 0

    @property
    def dim(self) -> int:
        return self.mu.size


def make_distribution(mu, sigma=1.0, seed: int = 0, popsize=None, eta=None, log=math.log):
    mu = np.array(mu, dtype=float).ravel()
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), mu.shape).copy()
    if np.any(sigma < 0):
        raise ValueError("sigma must be non-negative")
    lam = population_size(mu.size, log) if popsize is None else int(popsize)
    if lam < 4:
        raise ValueError(f"population size must be >= 4, got {lam}")
    eta_mu, eta_sigma = learning_rates(mu.size, log) if eta is None else eta
    return SearchDistribution(mu, sigma, eta_mu, eta_sigma, lam, np.random.default_rng(seed), seed)


def ask(dist: SearchDistribution):
    """Sample a population. Returns ``(candidates, z)``, both (lambda, d)."""
    z = dist.rng.standard_normal((dist.popsize, dist.dim))
    return dist.mu + dist.sigma * z, z


def tell(dist: SearchDistribution, z, fitnesses, maximize=True) -> SearchDistribution:
    u = rank_utilities(fitnesses, maximize)
    z = np.asarray(z, dtype=float)
    if z.shape != (u.size, dist.dim):
        raise ValueError(f"expected draws of shape {(u.size, dist.dim)}, got {z.shape}")
    grad_mu = u @ z
    grad_sigma = u @ (z * z - 1.0)
    mu = dist.mu + dist.eta_mu * dist.sigma * grad_mu
    sigma = dist.sigma * np.exp(0.5 * dist.eta_sigma * grad_sigma)
    return replace(dist, mu=mu, sigma=sigma)


def resized(dist: SearchDistribution, mu, sigma, log=math.log) -> SearchDistribution:
    """Same generator, new mean/std; population size and rates follow d."""
    mu = np.asarray(mu, dtype=float)
    eta = learning_rates(mu.size, log)
    return replace(
        dist, mu=mu, sigma=np.asarray(sigma, dtype=float), popsize=population_size(mu.size, log),
        eta_mu=eta[0], eta_sigma=eta[1],
    )


def minimize(f, mu0, sigma0=1.0, seed=0, max_evals=10_000, target=None):
    """Small driver for benchmark functions. Returns (best_x, best_f, evals)."""
    dist = make_distribution(mu0, sigma0, seed)
    best_x, best_f, evals = None, math.inf, 0
    while evals < max_evals:
        x, z = ask(dist)
        fx = np.array([f(xi) for xi in x])
        evals += len(fx)
        j = int(np.argmin(fx))
        if fx[j] < best_f:
            best_x, best_f = x[j].copy(), float(fx[j])
        if target is not None and best_f < target:
            break
        dist = tell(dist, z, fx, maximize=False)
    return best_x, best_f, evals
