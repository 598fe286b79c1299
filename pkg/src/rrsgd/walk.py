"""Weighted partial sums of a zero-sum vector set visited without replacement.

For a set ``X = {x_1..x_N}`` with ``sum x_i = 0``, shuffled uniformly and
read in order, the closed forms

    f(n; X, b) = E || sum_{j<=n} b^{n-j} x_sigma(j) ||^2
               = [N sum_{i<n} b^{2i} - (sum_{i<n} b^i)^2] / (N - 1) * Var(X)

    F(n; X, B) = E [sum_j B^{n-j} x_sigma(j)] [...]^T
               = [N sum_{i<n} B^i R_x B^i - (sum_{i<n} B^i) R_x (sum_{i<n} B^i)] / (N - 1)

are checked against exhaustive enumeration of all N! orders (N <= 8) or a
Monte Carlo estimate for larger N.
"""
import itertools
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .sampling import permutation_batch

EXHAUSTIVE_MAX_N = 8


@dataclass(frozen=True, eq=False)
class WalkSet:
    """Zero-sum collection of N vectors in R^d."""

    vectors: np.ndarray

    def __post_init__(self):
        x = np.array(self.vectors, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[0] < 2:
            raise ValueError("need an N x d array with N >= 2")
        scale = max(1.0, float(np.max(np.abs(x))))
        if np.max(np.abs(x.sum(axis=0))) > 1e-12 * scale * x.shape[0]:
            raise ValueError("vectors must sum to zero")
        x.setflags(write=False)
        object.__setattr__(self, "vectors", x)

    @classmethod
    def centered(cls, vectors):
        """Subtract the sample mean so the set sums to zero."""
        x = np.array(vectors, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        return cls(x - x.mean(axis=0))

    @property
    def N(self):
        return self.vectors.shape[0]

    @property
    def d(self):
        return self.vectors.shape[1]

    @property
    def R_x(self):
        x = self.vectors
        return x.T @ x / self.N

    @property
    def var_x(self):
        return float(np.sum(self.vectors ** 2) / self.N)


def _check_n(n, N):
    if not 1 <= n <= N:
        raise ValueError(f"n={n} outside 1..{N}")


def f_coefficient(n, N, beta):
    """``f(n; X, beta) / Var(X)``, which depends only on ``(n, N, beta)``."""
    _check_n(n, N)
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    s1 = s2 = 0.0
    p = 1.0
    for _ in range(n):
        s1 += p
        s2 += p * p
        p *= beta
    return (s2 * N - s1 * s1) / (N - 1)


def f_formula(n, X, beta):
    return f_coefficient(n, X.N, beta) * X.var_x


def F_formula(n, X, B):
    """Matrix second moment of the B-weighted partial sum after n draws."""
    _check_n(n, X.N)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if B.shape != (X.d, X.d):
        raise ValueError(f"B must be {X.d} x {X.d}")
    if np.max(np.abs(B - B.T)) > 1e-12:
        raise ValueError("B must be symmetric")
    R = X.R_x
    P = np.eye(X.d)
    S1 = np.zeros_like(R)
    S2 = np.zeros_like(R)
    for _ in range(n):
        S1 += P
        S2 += P @ R @ P
        P = P @ B
    N = X.N
    return (N * S2 - S1 @ R @ S1) / (N - 1)


def _weights(n, beta):
    return beta ** np.arange(n - 1, -1, -1, dtype=float) if n else np.zeros(0)


def _all_permutations(N):
    if N > EXHAUSTIVE_MAX_N:
        raise ValueError(f"exhaustive enumeration limited to N <= {EXHAUSTIVE_MAX_N}, got {N}")
    return np.array(list(itertools.permutations(range(N))), dtype=np.int64)


def _partial_sums(n, X, perms, B):
    """Rows ``sum_{j<=n} B^{n-j} x_perm(j)`` evaluated by Horner accumulation."""
    acc = np.zeros((perms.shape[0], X.d))
    for j in range(n):
        acc = acc @ B.T + X.vectors[perms[:, j]]
    return acc


def f_bruteforce(n, X, beta):
    """Exact ``f`` by averaging over all N! orders."""
    _check_n(n, X.N)
    perms = _all_permutations(X.N)
    w = _weights(n, beta)
    sums = np.einsum("j,pjd->pd", w, X.vectors[perms[:, :n]])
    return float(np.mean(np.sum(sums ** 2, axis=1)))


def F_bruteforce(n, X, B):
    """Exact ``F`` by averaging outer products over all N! orders."""
    _check_n(n, X.N)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    perms = _all_permutations(X.N)
    sums = _partial_sums(n, X, perms, B)
    return sums.T @ sums / perms.shape[0]


def f_montecarlo(n, X, beta, samples=100_000, seed=0, batch=10_000):
    """Monte Carlo estimate of ``f`` and its standard error."""
    _check_n(n, X.N)
    w = _weights(n, beta)
    vals = []
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        seeds = _rng.stream_key(int(seed), np.arange(done, done + m))
        perms = permutation_batch(seeds, 1, X.N)
        sums = np.einsum("j,pjd->pd", w, X.vectors[perms[:, :n]])
        vals.append(np.sum(sums ** 2, axis=1))
        done += m
    v = np.concatenate(vals)
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size))


def F_montecarlo(n, X, B, samples=100_000, seed=0):
    """Monte Carlo estimate of ``F`` and the entrywise standard error."""
    _check_n(n, X.N)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    seeds = _rng.stream_key(int(seed), np.arange(samples))
    perms = permutation_batch(seeds, 1, X.N)
    sums = _partial_sums(n, X, perms, B)
    outer = sums[:, :, None] * sums[:, None, :]
    return outer.mean(axis=0), outer.std(axis=0, ddof=1) / np.sqrt(samples)


def bell_profile(N, beta):
    """``f(n; X, beta)`` for ``n = 1..N`` with ``Var(X) = 1``."""
    if N < 2:
        raise ValueError("need N >= 2")
    return np.array([f_coefficient(n, N, beta) for n in range(1, N + 1)])
