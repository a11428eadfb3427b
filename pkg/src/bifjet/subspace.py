"""Kernel/range splittings with complements, projectors and restricted inverses.

Each iteration level splits its domain N_{i-1} = N_i^c (+) N_i and its codomain
R_{i-1}^c = R_i (+) R_i^c.  Complements are orthogonal by default; passing a
random generator picks oblique complements instead, which the test-suite uses
to check that accept/reject decisions do not depend on the choice.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import subspace_angles


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal columns spanning a subspace of R^ambient_dim."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2:
            raise ValueError("basis must be a 2-d array")
        object.__setattr__(self, "basis", b)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def full(cls, n: int) -> SubspaceBasis:
        return cls(np.eye(n))

    @classmethod
    def zero(cls, n: int) -> SubspaceBasis:
        return cls(np.zeros((n, 0)))

    @classmethod
    def span(cls, cols, tol: float = 1e-10) -> SubspaceBasis:
        return cls(orthonormalize(cols, tol))

    def orth_projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def contains(self, v, tol: float = 1e-8) -> bool:
        v = np.asarray(v, dtype=float)
        r = v - self.basis @ (self.basis.T @ v)
        return float(np.linalg.norm(r)) <= tol * max(1.0, float(np.linalg.norm(v)))


def orthonormalize(cols, tol: float = 1e-10) -> np.ndarray:
    cols = np.asarray(cols, dtype=float)
    if cols.shape[1] == 0:
        return cols.copy()
    U, s, _ = np.linalg.svd(cols, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((cols.shape[0], 0))
    r = int(np.sum(s > tol * s[0]))
    return U[:, :r]


def principal_angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Principal angles (radians) between column spans; empty if either is {0}."""
    if a.shape[1] == 0 or b.shape[1] == 0:
        return np.zeros(0)
    return subspace_angles(a, b)


def same_subspace(a: np.ndarray, b: np.ndarray, tol: float = 1e-8) -> tuple[bool, float]:
    """Equal dimension and all principal angles <= tol; returns (equal, max angle)."""
    if a.shape[1] != b.shape[1]:
        return False, float("inf")
    ang = principal_angles(a, b)
    worst = float(ang.max()) if ang.size else 0.0
    return worst <= tol, worst


def numerical_rank(s: np.ndarray, tol: float, atol: float = 0.0) -> tuple[int, float, bool]:
    """Rank from singular values with threshold max(tol*s_max, atol); flags values within 10x of it."""
    if s.size == 0:
        return 0, atol, False
    thr = max(tol * float(s[0]), atol)
    rank = int(np.sum(s >= thr)) if thr > 0 else int(np.sum(s > 0))
    ambiguous = bool(np.any((s > thr / 10) & (s < thr * 10))) if thr > 0 else False
    return rank, thr, ambiguous


@dataclass(frozen=True)
class Decomposition:
    level: int
    kernel: SubspaceBasis
    kernel_complement: SubspaceBasis
    range: SubspaceBasis
    range_complement: SubspaceBasis
    proj_range: np.ndarray
    proj_range_complement: np.ndarray
    restricted_inverse: np.ndarray
    operator: np.ndarray
    singular_values: np.ndarray
    rank: int
    ambiguous: bool


def _oblique(main: np.ndarray, other: np.ndarray, rng: np.random.Generator | None) -> np.ndarray:
    """Tilt the columns of ``main`` by random multiples of ``other`` (same span class modulo other)."""
    if rng is None or main.shape[1] == 0 or other.shape[1] == 0:
        return main
    return main + other @ rng.normal(size=(other.shape[1], main.shape[1]))


def decompose(
    S: np.ndarray,
    domain: SubspaceBasis,
    codomain: SubspaceBasis,
    tol: float = 1e-8,
    *,
    atol: float = 0.0,
    codomain_projector: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
    level: int = 0,
) -> Decomposition:
    """Split ``domain`` and ``codomain`` along the kernel and range of S.

    S is an ambient m x n matrix assumed to map span(domain) into
    span(codomain).  ``codomain_projector`` is the projection of R^m onto the
    codomain along the ranges split off at earlier levels (orthogonal
    projector if omitted); the range projectors are composed with it, so the
    two of them sum to it.  The restricted inverse X satisfies X y in N^c and
    S X y = P_R y.
    """
    S = np.asarray(S, dtype=float)
    m, n = S.shape
    if domain.ambient_dim != n or codomain.ambient_dim != m:
        raise ValueError(f"operator of shape {S.shape} does not match subspaces in R^{n} -> R^{m}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    Q_dom, Q_cod = domain.basis, codomain.basis
    coords = Q_cod.T @ (S @ Q_dom)
    U, s, Vt = np.linalg.svd(coords, full_matrices=True)
    rank, _, ambiguous = numerical_rank(s, tol, atol)
    if ambiguous:
        warnings.warn(f"level {level}: numerically ambiguous rank (singular values {s})", RuntimeWarning)
    V = Vt.T
    ker_c, comp_c = V[:, rank:], V[:, :rank]
    comp_c = _oblique(comp_c, ker_c, rng)
    rng_c, rcomp_c = U[:, :rank], U[:, rank:]
    rcomp_c = _oblique(rcomp_c, rng_c, rng)

    kernel = SubspaceBasis(Q_dom @ ker_c)
    kernel_complement = SubspaceBasis(orthonormalize(Q_dom @ comp_c))
    range_ = SubspaceBasis(Q_cod @ rng_c)
    range_complement = SubspaceBasis(orthonormalize(Q_cod @ rcomp_c))

    P_cod = Q_cod @ Q_cod.T if codomain_projector is None else np.asarray(codomain_projector, dtype=float)
    frame = np.hstack([range_.basis, range_complement.basis])
    coord_map = np.linalg.pinv(frame) @ P_cod
    proj_range = range_.basis @ coord_map[:rank]
    proj_range_c = range_complement.basis @ coord_map[rank:]

    if rank:
        K = coord_map[:rank] @ (S @ kernel_complement.basis)
        X = kernel_complement.basis @ np.linalg.solve(K, coord_map[:rank])
    else:
        X = np.zeros((n, m))
    return Decomposition(
        level,
        kernel,
        kernel_complement,
        range_,
        range_complement,
        proj_range,
        proj_range_c,
        X,
        S,
        s,
        rank,
        ambiguous,
    )


def apply_projector(dec: Decomposition, v, which: str = "range") -> np.ndarray:
    P = {"range": dec.proj_range, "complement": dec.proj_range_complement}[which]
    v = np.asarray(v, dtype=float)
    if v.shape[0] != P.shape[1]:
        raise ValueError("dimension mismatch")
    return P @ v


def lift_through_inverse(dec: Decomposition, y) -> np.ndarray:
    """The unique x in N^c with S x = P_R y."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] != dec.restricted_inverse.shape[1]:
        raise ValueError("dimension mismatch")
    return dec.restricted_inverse @ y
