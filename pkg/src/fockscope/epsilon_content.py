"""Packing counts (epsilon-content) and the covering-number bounds."""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np


class PointCloud:
    """Finite point set in C^d with a sup or Euclidean norm."""

    def __init__(self, points, norm="sup"):
        self.points = np.atleast_2d(np.asarray(points))
        if norm not in ("sup", "euclidean"):
            raise ValueError("norm must be 'sup' or 'euclidean'")
        self.norm = norm

    def __len__(self):
        return self.points.shape[0]

    def distance_matrix(self):
        diff = self.points[:, None, :] - self.points[None, :, :]
        if self.norm == "sup":
            return np.max(np.abs(diff), axis=2)
        return np.linalg.norm(diff, axis=2)


EXACT_SEARCH_CAP = 24


def eps_content_bruteforce(cloud, eps):
    """Maximal subset size with pairwise distances strictly above eps.

    Exact branch and bound (max clique in the distance > eps graph) up to
    24 points; larger clouds fall back to a flagged greedy lower bound.
    Returns (content, exact_flag).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = len(cloud)
    if n == 0:
        return 0, True
    dist = cloud.distance_matrix()
    adj = dist > eps
    np.fill_diagonal(adj, False)

    if n > EXACT_SEARCH_CAP:
        return _greedy_packing(adj), False

    # order candidates by degree in the conflict graph (deterministic)
    order = sorted(range(n), key=lambda i: (-int(adj[i].sum()), i))
    best = [0]

    def expand(chosen, candidates):
        if len(chosen) + len(candidates) <= best[0]:
            return
        if not candidates:
            best[0] = max(best[0], len(chosen))
            return
        head, rest = candidates[0], candidates[1:]
        # include head
        new_cands = [c for c in rest if adj[head, c]]
        expand(chosen + [head], new_cands)
        # exclude head
        expand(chosen, rest)

    expand([], order)
    return best[0], True


def _greedy_packing(adj):
    chosen = []
    for i in range(adj.shape[0]):
        if all(adj[i, j] for j in chosen):
            chosen.append(i)
    return len(chosen)


def eps_content_exhaustive(cloud, eps):
    """2^n subset enumeration oracle (n <= 16)."""
    n = len(cloud)
    if n > 16:
        raise ValueError("exhaustive oracle capped at 16 points")
    dist = cloud.distance_matrix()
    best = 0
    for size in range(n, best, -1):
        for combo in combinations(range(n), size):
            ok = all(dist[a, b] > eps
                     for a, b in combinations(combo, 2))
            if ok:
                return size
    return max(best, 1 if n else 0)


def log_key_key_bound(N, norm2, eps):
    """log of (4 e N)^{2^7 pi norm2^2 / eps^2} (finite for all inputs)."""
    if N < 1 or eps <= 0:
        raise ValueError("need N >= 1 and eps > 0")
    exponent = 2.0 ** 7 * math.pi * norm2 ** 2 / eps ** 2
    return exponent * math.log(4.0 * math.e * N)


def key_key_bound(N, norm2, eps):
    """(4 e N)^{2^7 pi norm2^2 / eps^2}; returns (value, overflow_flag).

    On overflow the value is +inf with the flag set, per contract; use
    :func:`log_key_key_bound` for comparisons in that regime.
    """
    log_val = log_key_key_bound(N, norm2, eps)
    if log_val > 700.0:
        return float("inf"), True
    return math.exp(log_val), False


def lattice_ball_count(dim, M):
    """#{n in Z^dim : sum n_i^2 <= M} by exhaustive enumeration."""
    count = 0

    def rec(axis, rem):
        nonlocal count
        if axis == dim:
            count += 1
            return
        r = int(math.isqrt(rem))
        for v in range(-r, r + 1):
            rec(axis + 1, rem - v * v)

    rec(0, M)
    return count


def ball_volume(dim, radius):
    """Volume of the dim-ball of the given radius."""
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0) \
        * radius ** dim


def lattice_count_bound(N, M):
    """Right side of the lattice counting inequality:
    C(2N, M) 2^M V_M(2 sqrt(M))."""
    return math.comb(2 * N, M) * 2.0 ** M * ball_volume(M, 2.0 * math.sqrt(M))


def product_compose_bound(contents, eps_splits, eps):
    """prod_n N(eps_n)_n for a sum of compact maps, requiring
    sum eps_n <= eps / 4.

    ``contents`` are callables eps -> per-term content.
    """
    if len(contents) != len(eps_splits):
        raise ValueError("one split per term required")
    if sum(eps_splits) > eps / 4.0 + 1e-15:
        raise ValueError("splits must satisfy sum eps_n <= eps / 4")
    out = 1.0
    for f, e in zip(contents, eps_splits):
        out *= f(e)
    return out


def rank_one_content(norm, eps):
    """Content of a rank-one map of the given norm: 1 once the range
    diameter 2 norm drops to eps (two-point criterion)."""
    return 1 if 2.0 * norm <= eps else None
