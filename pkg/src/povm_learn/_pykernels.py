"""Pure-Python/numpy reference implementations of the hot kernels.

Semantics here are normative; ``_ckernels.pyx`` must return identical results.
"""

import numpy as np


def sample_outcomes(probs, u):
    """Inverse-CDF draw per row; zero-probability outcomes are never returned."""
    probs = np.ascontiguousarray(probs, dtype=np.float64)
    u = np.ascontiguousarray(u, dtype=np.float64)
    n, k = probs.shape
    cum = np.cumsum(probs, axis=1)
    out = (u[:, None] >= cum).sum(axis=1)
    # u beyond the (rounded) total mass: fall back to the last positive outcome
    over = out >= k
    if np.any(over):
        pos = probs[over] > 0.0
        out[over] = k - 1 - np.argmax(pos[:, ::-1], axis=1)
    return out.astype(np.int64)


def channel_error_counts(table, z, y, u):
    """Misclassification counts per member.

    ``table[i, z]`` is member i's probability of answering 1 after root outcome
    z; member i answers 1 on sample j iff ``u[i, j] < table[i, z[j]]``.
    """
    table = np.asarray(table, dtype=np.float64)
    z = np.asarray(z, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    answers = np.asarray(u) < table[:, z]
    return (answers != y.astype(bool)).sum(axis=1).astype(np.int64)


def shatter_search(F, grid, gamma, tol):
    """Depth-first witness search for fat-shattering of all columns of ``F``.

    ``F[i, p]`` is member i's value on point p. Witnesses are tried in ``grid``
    order, point by point. Returns ``(found, witness_index, realizers)`` where
    ``realizers[b]`` is the lowest member index realizing bit pattern ``b``
    (bit p set means "above" at point p).
    """
    F = np.asarray(F, dtype=np.float64)
    grid = np.asarray(grid, dtype=np.float64)
    m, k = F.shape
    choice = np.full(k, -1, dtype=np.int64)

    def rec(depth, valid, pattern):
        if depth == k:
            return valid, pattern
        col = F[:, depth]
        need = 1 << (depth + 1)
        for g, r in enumerate(grid):
            above = col >= r + gamma - tol
            below = col <= r - gamma + tol
            nvalid = valid & (above | below)
            if nvalid.sum() < need:
                continue
            npattern = pattern | (above.astype(np.int64) << depth)
            if np.count_nonzero(np.bincount(npattern[nvalid], minlength=need)) < need:
                continue
            choice[depth] = g
            res = rec(depth + 1, nvalid, npattern)
            if res is not None:
                return res
        choice[depth] = -1
        return None

    res = rec(0, np.ones(m, dtype=bool), np.zeros(m, dtype=np.int64))
    realizers = np.full(1 << k, -1, dtype=np.int64)
    if res is None:
        return False, choice, realizers
    valid, pattern = res
    for i in np.flatnonzero(valid)[::-1]:
        realizers[pattern[i]] = i
    return True, choice, realizers
