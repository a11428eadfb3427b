"""Pure numpy fallback for the symmetric-form contraction kernels.

Same storage contract as the compiled module: sorted index tuples, one
codomain vector per tuple and a ``1/prod(mult!)`` weight.  Permanents are
evaluated with Ryser's formula, vectorized over all stored tuples.
"""

from itertools import combinations

import numpy as np


def _subset_masks(b: int):
    for size in range(1, b + 1):
        sign = -1.0 if (b - size) % 2 else 1.0
        for cols in combinations(range(b), size):
            yield sign, list(cols)


def _permanents(blocks: np.ndarray) -> np.ndarray:
    """Permanents of a stack of square matrices, shape (ntuples, b, b)."""
    nt, b, _ = blocks.shape
    if b == 0:
        return np.ones(nt)
    total = np.zeros(nt)
    for sign, cols in _subset_masks(b):
        total += sign * np.prod(blocks[:, :, cols].sum(axis=2), axis=1)
    return total


def contract(idx, coeffs, scale, V):
    idx = np.asarray(idx)
    V = np.asarray(V, dtype=float)
    b = idx.shape[1]
    if V.shape[0] != b:
        raise ValueError("argument count does not match tensor order")
    if idx.shape[0] == 0:
        return np.zeros(coeffs.shape[1])
    # blocks[t, r, l] = V[r, idx[t, l]]
    blocks = np.transpose(V[:, idx], (1, 0, 2))
    w = scale * _permanents(blocks)
    return w @ coeffs


def contract_free(idx, coeffs, scale, V, n):
    idx = np.asarray(idx)
    V = np.asarray(V, dtype=float)
    nt, b = idx.shape
    if V.shape[0] != b - 1:
        raise ValueError("argument count does not match tensor order")
    weights = np.zeros((nt, n))
    rows = np.arange(nt)
    for l in range(b):
        keep = [j for j in range(b) if j != l]
        blocks = np.transpose(V[:, idx[:, keep]], (1, 0, 2))
        np.add.at(weights, (rows, idx[:, l]), scale * _permanents(blocks))
    return coeffs.T @ weights
