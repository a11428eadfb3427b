"""Power-series composition G[z(eps)] for polynomial maps.

Independent of the derivative tensors: the curve is a polynomial in eps and
G is expanded monomial by monomial with truncated convolutions.  Used as the
oracle for the Taylor coefficients and as the exact evaluator of the scaled
remainder.
"""

import math

import numpy as np


def jet_to_series(jet_coeffs) -> np.ndarray:
    """Derivative jet rows (z_0, z_1, ...) -> power coefficients (n, L), column mu = z_mu / mu!."""
    arr = np.asarray(jet_coeffs)
    fact = np.array([math.factorial(mu) for mu in range(arr.shape[0])], dtype=float)
    return (arr / fact[:, None]).T


def _mul(a, b, order):
    out = np.convolve(a, b)
    return out if order is None else out[: order + 1]


def compose(problem, series, order=None) -> np.ndarray:
    """Power coefficients of G[z(eps)], shape (m, order + 1).

    ``series`` is (n, L) with z_i(eps) = sum_j series[i, j] eps^j; complex input
    is supported.  With ``order=None`` the full (untruncated) product is kept.
    """
    series = np.asarray(series)
    n, L = series.shape
    if n != problem.dim_domain:
        raise ValueError(f"series has {n} rows, expected {problem.dim_domain}")
    full = (L - 1) * problem.max_degree
    size = full + 1 if order is None else order + 1
    dtype = np.result_type(series.dtype, float)
    pw = [[np.ones(1, dtype=dtype)] for _ in range(n)]
    out = np.zeros((problem.dim_codomain, size), dtype=dtype)
    for ci, comp in enumerate(problem.components):
        for coef, exps in comp:
            if coef == 0:
                continue
            term = np.ones(1, dtype=dtype)
            for i, e in enumerate(exps):
                if not e:
                    continue
                while len(pw[i]) <= e:
                    pw[i].append(_mul(pw[i][-1], series[i], order))
                term = _mul(term, pw[i][e], order)
            seg = term[:size]
            out[ci, : seg.shape[0]] += float(coef) * seg
    return out


def taylor_coefficients_by_series(problem, jet_coeffs, order: int) -> np.ndarray:
    """k! times the eps^k coefficient of G[z(eps)], k = 0..order; shape (order + 1, m)."""
    coeffs = compose(problem, jet_to_series(jet_coeffs), order)
    fact = np.array([math.factorial(k) for k in range(order + 1)], dtype=float)
    return (coeffs * fact).T
