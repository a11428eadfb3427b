"""Polynomial maps, their derivative tensors, and Faa di Bruno Taylor coefficients.

A curve z(eps) is described by its jet (z_0, z_1, ..., z_m) of derivatives at
eps = 0.  The k-th Taylor coefficient of G[z(eps)] (k! times the eps^k series
coefficient) is assembled from the symmetric derivative tensors of G at z_0
summed over integer partitions of k.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cache

import numpy as np

from . import kernels

Monomial = tuple[Fraction, tuple[int, ...]]


@dataclass(frozen=True)
class ProblemSpec:
    """Polynomial map G: R^n -> R^m, one list of (coefficient, exponents) per component."""

    dim_domain: int
    dim_codomain: int
    components: tuple[tuple[Monomial, ...], ...]
    name: str = ""

    def __post_init__(self):
        if self.dim_domain < 1 or self.dim_codomain < 1:
            raise ValueError("dimensions must be positive")
        comps = tuple(
            tuple((Fraction(c), tuple(int(e) for e in exps)) for c, exps in comp) for comp in self.components
        )
        if len(comps) != self.dim_codomain:
            raise ValueError(f"expected {self.dim_codomain} components, got {len(comps)}")
        for ci, comp in enumerate(comps):
            for mi, (_, exps) in enumerate(comp):
                if len(exps) != self.dim_domain:
                    raise ValueError(
                        f"components[{ci}][{mi}]: exponent length {len(exps)} != dim_domain {self.dim_domain}"
                    )
                if any(e < 0 for e in exps):
                    raise ValueError(f"components[{ci}][{mi}]: negative exponent")
        object.__setattr__(self, "components", comps)

    @property
    def max_degree(self) -> int:
        return max((sum(e) for comp in self.components for c, e in comp if c != 0), default=0)

    def evaluate(self, z) -> np.ndarray:
        """G[z] in floating point (complex input is passed through)."""
        z = np.asarray(z)
        if z.shape != (self.dim_domain,):
            raise ValueError(f"point has shape {z.shape}, expected ({self.dim_domain},)")
        dtype = np.result_type(z.dtype, float)
        out = np.zeros(self.dim_codomain, dtype=dtype)
        for ci, comp in enumerate(self.components):
            acc = 0.0
            for c, exps in comp:
                term = float(c)
                for zi, e in zip(z, exps):
                    if e:
                        term = term * zi**e
                acc = acc + term
            out[ci] = acc
        return out


@dataclass(frozen=True)
class Jet:
    """Derivatives (z_0, ..., z_m) of a curve at eps = 0, one row per order."""

    coefficients: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coefficients, dtype=float)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise ValueError("jet needs a non-empty list of equally sized vectors")
        arr.setflags(write=False)
        object.__setattr__(self, "coefficients", arr)

    @property
    def order(self) -> int:
        return self.coefficients.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.coefficients.shape[1]

    def __getitem__(self, i: int) -> np.ndarray:
        return self.coefficients[i]

    def __len__(self) -> int:
        return self.coefficients.shape[0]

    def padded(self, order: int) -> Jet:
        """Copy extended with zero vectors up to ``order``."""
        if order <= self.order:
            return self
        pad = np.zeros((order - self.order, self.dim))
        return Jet(np.vstack([self.coefficients, pad]))

    def truncated(self, order: int) -> Jet:
        return Jet(self.coefficients[: order + 1])

    def with_entries(self, entries: dict[int, np.ndarray]) -> Jet:
        top = max([self.order, *entries])
        arr = np.array(self.padded(top).coefficients)
        for i, v in entries.items():
            arr[i] = v
        return Jet(arr)


@dataclass(frozen=True)
class SymmetricForm:
    """One symmetric beta-linear map R^n x ... x R^n -> R^m in sorted-index storage."""

    order: int
    dim_domain: int
    dim_codomain: int
    idx: np.ndarray  # (ntuples, order) sorted domain indices
    coeffs: np.ndarray  # (ntuples, m) partial derivative values
    scale: np.ndarray  # (ntuples,) 1 / prod(multiplicity!)
    exact: dict = field(default_factory=dict, repr=False, compare=False)

    def __call__(self, *args) -> np.ndarray:
        if len(args) != self.order:
            raise ValueError(f"{self.order}-linear form called with {len(args)} arguments")
        if self.idx.shape[0] == 0:
            return np.zeros(self.dim_codomain)
        V = _stack_args(args, self.dim_domain, self.order)
        return kernels.contract(self.idx, self.coeffs, self.scale, V)

    def partial(self, *args) -> np.ndarray:
        """The m x n matrix h -> form(args..., h)."""
        if len(args) != self.order - 1:
            raise ValueError(f"partial of a {self.order}-linear form needs {self.order - 1} arguments")
        if self.idx.shape[0] == 0:
            return np.zeros((self.dim_codomain, self.dim_domain))
        V = _stack_args(args, self.dim_domain, self.order - 1)
        return kernels.contract_free(self.idx, self.coeffs, self.scale, V, self.dim_domain)

    def dense(self) -> np.ndarray:
        """Full (m, n, ..., n) array; only meant for tests and small orders."""
        shape = (self.dim_codomain,) + (self.dim_domain,) * self.order
        out = np.zeros(shape)
        for t, tup in enumerate(self.idx):
            for perm in set(itertools.permutations(tuple(tup))):
                out[(slice(None),) + perm] = self.coeffs[t]
        return out


def _stack_args(args, n: int, rows: int) -> np.ndarray:
    V = np.zeros((rows, n))
    for r, a in enumerate(args):
        a = np.asarray(a, dtype=float)
        if a.shape != (n,):
            raise ValueError(f"argument has shape {a.shape}, expected ({n},)")
        V[r] = a
    return V


@dataclass(frozen=True)
class DerivativeTensorSet:
    """G(z0) and the symmetric derivatives G^beta(z0), beta = 1..order."""

    base_point: np.ndarray
    order: int
    value: np.ndarray
    forms: tuple[SymmetricForm, ...]

    @property
    def dim_domain(self) -> int:
        return self.base_point.shape[0]

    @property
    def dim_codomain(self) -> int:
        return self.value.shape[0]

    def form(self, beta: int) -> SymmetricForm:
        if beta < 1:
            raise ValueError("derivative order must be >= 1")
        if beta > self.order:
            return _zero_form(beta, self.dim_domain, self.dim_codomain)
        return self.forms[beta - 1]

    @property
    def jacobian(self) -> np.ndarray:
        return self._jacobian

    def __post_init__(self):
        J = self.form(1).partial() if self.order >= 1 else np.zeros((self.dim_codomain, self.dim_domain))
        J.setflags(write=False)
        object.__setattr__(self, "_jacobian", J)


def _zero_form(beta: int, n: int, m: int) -> SymmetricForm:
    return SymmetricForm(beta, n, m, np.zeros((0, beta), dtype=np.int64), np.zeros((0, m)), np.zeros(0))


def _falling(e: int, a: int) -> int:
    out = 1
    for j in range(a):
        out *= e - j
    return out


def derive_tensors(problem: ProblemSpec, base, order: int) -> DerivativeTensorSet:
    """Exact derivative tensors of a polynomial map at ``base``.

    Entries are accumulated in rational arithmetic (floats convert exactly) and
    rounded once.  Orders above the polynomial degree are stored as zero forms.
    """
    base = np.asarray(base, dtype=float)
    n, m = problem.dim_domain, problem.dim_codomain
    if base.shape != (n,):
        raise ValueError(f"base point has shape {base.shape}, expected ({n},)")
    if order < 0:
        raise ValueError("order must be non-negative")
    zq = [Fraction(float(x)) for x in base]
    maxdeg = problem.max_degree
    powers = [[Fraction(1)] for _ in range(n)]
    for i in range(n):
        for _ in range(maxdeg):
            powers[i].append(powers[i][-1] * zq[i])

    value = [Fraction(0)] * m
    acc: list[dict[tuple[int, ...], list[Fraction]]] = [{} for _ in range(order + 1)]
    for ci, comp in enumerate(problem.components):
        for coef, exps in comp:
            if coef == 0:
                continue
            ranges = [range(e + 1) for e in exps]
            for alpha in itertools.product(*ranges):
                beta = sum(alpha)
                if beta > order:
                    continue
                term = coef
                for i, (e, a) in enumerate(zip(exps, alpha)):
                    if a:
                        term *= _falling(e, a)
                    if e - a:
                        term *= powers[i][e - a]
                if term == 0:
                    continue
                if beta == 0:
                    value[ci] += term
                    continue
                key = tuple(i for i, a in enumerate(alpha) for _ in range(a))
                slot = acc[beta].setdefault(key, [Fraction(0)] * m)
                slot[ci] += term

    forms = []
    for beta in range(1, order + 1):
        items = sorted((k, v) for k, v in acc[beta].items() if any(v))
        if not items:
            forms.append(_zero_form(beta, n, m))
            continue
        idx = np.array([k for k, _ in items], dtype=np.int64).reshape(len(items), beta)
        coeffs = np.array([[float(x) for x in v] for _, v in items])
        scale = np.array(
            [1.0 / math.prod(math.factorial(c) for c in _multiplicities(k)) for k, _ in items]
        )
        exact = {k: tuple(v) for k, v in items}
        forms.append(SymmetricForm(beta, n, m, np.ascontiguousarray(idx), np.ascontiguousarray(coeffs), scale, exact))
    base = base.copy()
    base.setflags(write=False)
    val = np.array([float(x) for x in value])
    return DerivativeTensorSet(base, order, val, tuple(forms))


def _multiplicities(tup: Sequence[int]) -> list[int]:
    counts: dict[int, int] = {}
    for i in tup:
        counts[i] = counts.get(i, 0) + 1
    return list(counts.values())


@cache
def weighted_partitions(total: int, count: int, max_part: int) -> tuple[tuple[int, ...], ...]:
    """All (n_1..n_max_part) >= 0 with sum n_tau = count and sum tau*n_tau = total."""
    if max_part < 1:
        return ((),) if total == 0 and count == 0 else ()
    out = []

    def rec(tau: int, rem_total: int, rem_count: int, prefix: list[int]):
        if tau == 0:
            if rem_total == 0 and rem_count == 0:
                out.append(tuple(reversed(prefix)))
            return
        # parts of size < tau can absorb at most (tau - 1) * rem_count
        for n_tau in range(min(rem_count, rem_total // tau), -1, -1):
            rt, rc = rem_total - tau * n_tau, rem_count - n_tau
            if rt < rc or rt > (tau - 1) * rc:
                continue
            prefix.append(n_tau)
            rec(tau - 1, rt, rc, prefix)
            prefix.pop()

    rec(max_part, total, count, [])
    return tuple(sorted(out))


def enumerate_partitions(k: int, beta: int) -> list[tuple[int, ...]]:
    """Multi-indices (n_1..n_k) with n_1+...+n_k = beta and 1*n_1+...+k*n_k = k."""
    if k < 1 or beta < 1:
        return []
    return list(weighted_partitions(k, beta, k))


def _check_jet(tensors: DerivativeTensorSet, jet: Jet, need: int):
    if jet.dim != tensors.dim_domain:
        raise ValueError(f"jet dimension {jet.dim} != domain dimension {tensors.dim_domain}")
    if jet.order < need:
        raise ValueError(f"jet of order {jet.order} is too short, need order {need}")


def chain_term(tensors: DerivativeTensorSet, jet: Jet, parts: Sequence[int], free: bool = False):
    """G^beta applied to z_tau repeated parts[tau-1] times (plus one free slot)."""
    args = []
    for tau, n_tau in enumerate(parts, start=1):
        if n_tau:
            v = jet[tau] / math.factorial(tau)
            args.extend([v] * n_tau)
    beta = len(args) + (1 if free else 0)
    form = tensors.form(beta)
    return form.partial(*args) if free else form(*args)


def partition_sum(tensors: DerivativeTensorSet, jet: Jet, total: int, max_part: int, factor: int) -> np.ndarray:
    """sum_beta G^beta sum_{parts of ``total`` using sizes <= max_part} factor/prod(n!) prod (z/tau!)^n."""
    out = np.zeros(tensors.dim_codomain)
    for beta in range(1, total + 1):
        for parts in weighted_partitions(total, beta, max_part):
            w = factor / math.prod(math.factorial(x) for x in parts)
            out += w * chain_term(tensors, jet, parts)
    return out


def taylor_coefficient(tensors: DerivativeTensorSet, jet: Jet, k: int) -> np.ndarray:
    """T^k(z_k, ..., z_0): k! times the eps^k coefficient of G[z(eps)].

    T^0 is G[z_0]; the jet's z_0 must be the tensors' base point.
    """
    _check_jet(tensors, jet, k)
    if not np.allclose(jet[0], tensors.base_point, rtol=0, atol=1e-12 * max(1.0, np.abs(jet[0]).max())):
        raise ValueError("jet z_0 differs from the tensor base point")
    if k == 0:
        return tensors.value.copy()
    return partition_sum(tensors, jet, k, k, math.factorial(k))


def jet_residuals(tensors: DerivativeTensorSet, jet: Jet, m: int) -> list[np.ndarray]:
    """[T^0, ..., T^m] along the jet."""
    return [taylor_coefficient(tensors, jet, k) for k in range(m + 1)]
