"""Rate estimates for the exponential return/hitting model."""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import eigh

from ..errors import ConfigError


def fit_rate(samples) -> float:
    """Maximum-likelihood exponential rate, 1 / mean."""
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0 or arr.mean() <= 0:
        raise ConfigError("need at least one positive sample")
    return float(1.0 / arr.mean())


def fit_return_rate(node_states) -> float:
    """Pooled return rate from per-node tail counts (sum of tails is the sum of gaps)."""
    count = sum(ns.sample_count for ns in node_states)
    total = sum(int(ns.tail.sum()) for ns in node_states)
    if count == 0 or total == 0:
        raise ConfigError("no return samples recorded")
    return count / total


def fit_hitting_rate(trace) -> float:
    if trace.hitting_count == 0 or trace.hitting_sum == 0:
        raise ConfigError("no hitting samples recorded")
    return trace.hitting_count / trace.hitting_sum


def spectral_return_rates(graph) -> np.ndarray:
    """Per-node decay rate of the return-gap tail.

    A walk leaving node i survives (has not come back) with probability
    decaying like rho_i^t, where rho_i is the largest eigenvalue of the
    transition matrix with row and column i removed; the rate is -ln(rho_i).
    """
    deg = graph.degrees.astype(float)
    n = graph.n
    adj = np.zeros((n, n))
    for i, nbrs in enumerate(graph.adjacency):
        adj[i, list(nbrs)] = 1.0
    inv = 1.0 / np.sqrt(deg)
    sym = adj * inv[:, None] * inv[None, :]
    rates = np.empty(n)
    for i in range(n):
        keep = np.r_[0:i, i + 1:n]
        sub = sym[np.ix_(keep, keep)]
        rho = eigh(sub, eigvals_only=True, subset_by_index=[n - 2, n - 2])[0]
        rates[i] = -math.log(rho) if rho > 0 else math.inf
    return rates


def sample_hitting_times(graph, count: int, rng: np.random.Generator) -> np.ndarray:
    """First-passage times from a uniform start to a different uniform target."""
    adj = graph.adjacency
    n = graph.n
    out = np.empty(count, dtype=np.int64)
    for k in range(count):
        src = int(rng.integers(n))
        dst = int(rng.integers(n - 1))
        dst += dst >= src
        pos, steps = src, 0
        while pos != dst:
            nbrs = adj[pos]
            pos = nbrs[int(rng.integers(len(nbrs)))]
            steps += 1
        out[k] = steps
    return out
