"""Block operators of the linear structure of the Taylor coefficients.

For fixed lower coefficients z_1..z_p, the coefficient T^q is affine in every
z_mu with mu > p (such a z_mu can enter a partition of q at most once).  The
linear parts assemble into the upper triangular operator Delta^k and the
W-rows; the constant parts are the inhomogeneities I^k and R.

Stacked vectors always run from the highest index down, e.g. (z_2k, ..., z_k+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .schemes import build_schemes, diag_entries
from .tensor_jet import (
    DerivativeTensorSet,
    Jet,
    _check_jet,
    chain_term,
    partition_sum,
    weighted_partitions,
)


def relative_residual(a, b) -> float:
    """max |a - b| scaled by max(1, max|a|, max|b|)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(1.0, float(np.abs(a).max(initial=0.0)), float(np.abs(b).max(initial=0.0)))
    return float(np.abs(a - b).max(initial=0.0)) / scale


@dataclass(frozen=True)
class BlockMatrix:
    """Dense matrix partitioned into blocks; block indices are 0-based."""

    entries: np.ndarray
    row_dims: tuple[int, ...]
    col_dims: tuple[int, ...]

    def __post_init__(self):
        if self.entries.shape != (sum(self.row_dims), sum(self.col_dims)):
            raise ValueError("block dimensions do not add up to the matrix size")

    @property
    def rows(self) -> int:
        return len(self.row_dims)

    @property
    def cols(self) -> int:
        return len(self.col_dims)

    def _slice(self, dims, i):
        start = sum(dims[:i])
        return slice(start, start + dims[i])

    def block(self, i: int, j: int) -> np.ndarray:
        return self.entries[self._slice(self.row_dims, i), self._slice(self.col_dims, j)]

    @classmethod
    def from_blocks(cls, blocks: list[list[np.ndarray]]) -> BlockMatrix:
        row_dims = tuple(row[0].shape[0] for row in blocks)
        col_dims = tuple(b.shape[1] for b in blocks[0])
        return cls(np.block(blocks), row_dims, col_dims)

    @classmethod
    def uniform(cls, entries: np.ndarray, rows: int, cols: int, rdim: int, cdim: int) -> BlockMatrix:
        return cls(np.asarray(entries, dtype=float), (rdim,) * rows, (cdim,) * cols)


@dataclass(frozen=True)
class WOperator:
    """The row [W^q_mu] for mu running downwards, one m x n block per mu."""

    order: int
    mus: tuple[int, ...]
    blocks: tuple[np.ndarray, ...]

    @property
    def matrix(self) -> np.ndarray:
        return np.hstack(self.blocks)

    def __getitem__(self, mu: int) -> np.ndarray:
        return self.blocks[self.mus.index(mu)]


def linear_block(tensors: DerivativeTensorSet, jet: Jet, q: int, mu: int, max_part: int) -> np.ndarray:
    """Coefficient matrix of z_mu in T^q, the remaining parts drawn from z_1..z_max_part.

    (1/mu!) sum_beta G^beta sum q!/prod(n!) prod (z_tau/tau!)^n_tau (., z_mu) with
    the partition constraint sum n = beta - 1, sum tau*n_tau = q - mu.
    """
    if mu == q:
        return np.array(tensors.jacobian)
    rest = q - mu
    out = np.zeros((tensors.dim_codomain, tensors.dim_domain))
    if rest < 0:
        return out
    scale = math.factorial(q) / math.factorial(mu)
    for count in range(1, rest + 1):
        for parts in weighted_partitions(rest, count, max_part):
            w = scale / math.prod(math.factorial(x) for x in parts)
            out += w * chain_term(tensors, jet, parts, free=True)
    return out


def build_delta(tensors: DerivativeTensorSet, jet: Jet, k: int) -> BlockMatrix:
    """Delta^k: rows T^2k..T^k+1, columns z_2k..z_k+1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_jet(tensors, jet, k)
    m, n = tensors.dim_codomain, tensors.dim_domain
    blocks = [[np.zeros((m, n)) for _ in range(k)] for _ in range(k)]
    for r in range(k):
        q = 2 * k - r
        for c in range(r, k):
            mu = 2 * k - c
            blocks[r][c] = linear_block(tensors, jet, q, mu, k)
    return BlockMatrix.from_blocks(blocks)


def build_inhomogeneity(tensors: DerivativeTensorSet, jet: Jet, k: int) -> list[np.ndarray]:
    """I^k as the list (I for T^2k, ..., I for T^k+1)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_jet(tensors, jet, k)
    return [partition_sum(tensors, jet, q, k, math.factorial(q)) for q in range(2 * k, k, -1)]


def build_w_odd(tensors: DerivativeTensorSet, jet: Jet, k: int) -> WOperator:
    """W^{2k+1}_mu(z_k..z_0), mu = 2k+1..k+1."""
    _check_jet(tensors, jet, k)
    q = 2 * k + 1
    mus = tuple(range(q, k, -1))
    return WOperator(q, mus, tuple(linear_block(tensors, jet, q, mu, k) for mu in mus))


def build_w_even(tensors: DerivativeTensorSet, jet: Jet, k: int) -> WOperator:
    """W^{2k}_mu(z_{k-1}..z_0), mu = 2k..k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_jet(tensors, jet, k - 1)
    q = 2 * k
    mus = tuple(range(q, k - 1, -1))
    return WOperator(q, mus, tuple(linear_block(tensors, jet, q, mu, k - 1) for mu in mus))


def build_r(tensors: DerivativeTensorSet, jet: Jet, order: int) -> np.ndarray:
    """R^{2k+1}(z_k..z_0) for odd ``order``, R^{2k}(z_{k-1}..z_0) for even ``order``."""
    if order < 2:
        raise ValueError("order must be >= 2")
    max_part = order // 2 if order % 2 else order // 2 - 1
    _check_jet(tensors, jet, max_part)
    return partition_sum(tensors, jet, order, max_part, math.factorial(order))


def even_square_term(tensors: DerivativeTensorSet, jet: Jet, k: int) -> np.ndarray:
    """(2k)!/(2 (k!)^2) G^2(z_k, z_k)."""
    w = math.factorial(2 * k) / (2 * math.factorial(k) ** 2)
    return w * tensors.form(2)(jet[k], jet[k])


def check_scaling_identities(tensors: DerivativeTensorSet, jet: Jet, m: int, tables=None) -> dict:
    """Residuals of the three W rescaling identities linking orders 2m-1, 2m and 2m+1."""
    tables = tables or build_schemes(2 * m + 1)
    w_odd = build_w_odd(tensors, jet, m)
    w_even = build_w_even(tensors, jet, m)
    d_even = [float(x) for x in diag_entries(tables, "D", 2 * m)]
    d_odd = [float(x) for x in diag_entries(tables, "D", 2 * m - 1)]

    lhs = np.hstack([w_odd[mu] for mu in range(2 * m + 1, m + 1, -1)])
    rhs = np.hstack([w_even[mu] * d_even[i] for i, mu in enumerate(range(2 * m, m, -1))])
    odd_vs_even = relative_residual(lhs, rhs)

    coupling = math.factorial(2 * m) / math.factorial(m) ** 2
    g2z = tensors.form(2).partial(jet[m])
    lhs = w_odd[m + 1]
    rhs = (w_even[m] + coupling * g2z) * float(tables.d[2 * m, m + 1])
    last_block = relative_residual(lhs, rhs)

    if m >= 2:
        w_prev = build_w_odd(tensors, jet, m - 1)
        lhs = np.hstack([w_even[mu] for mu in range(2 * m, m, -1)])
        rhs = np.hstack([w_prev[mu] * d_odd[i] for i, mu in enumerate(range(2 * m - 1, m - 1, -1))])
        even_vs_odd = relative_residual(lhs, rhs)
    else:
        even_vs_odd = 0.0
    return {
        "m": m,
        "odd_vs_even": odd_vs_even,
        "last_block": last_block,
        "even_vs_odd": even_vs_odd,
    }
