"""Random problem generators: unstructured polynomials and planted-curve instances."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .tensor_jet import ProblemSpec


def random_exponents(rng: np.random.Generator, n: int, degree: int) -> tuple[int, ...]:
    total = int(rng.integers(0, degree + 1))
    exps = [0] * n
    for _ in range(total):
        exps[int(rng.integers(n))] += 1
    return tuple(exps)


def random_problem(
    rng: np.random.Generator, n: int, m: int, degree: int, terms: int = 8, integer: bool = False
) -> ProblemSpec:
    """Dense-ish random polynomial map with ``terms`` monomials per component."""
    comps = []
    for _ in range(m):
        mons = []
        for _ in range(terms):
            if integer:
                c = Fraction(int(rng.integers(-3, 4)))
            else:
                c = Fraction(float(rng.normal()))
            mons.append((c, random_exponents(rng, n, degree)))
        comps.append(mons)
    return ProblemSpec(n, m, comps, name="random")


Poly = dict  # exponent tuple -> Fraction


def _padd(a: Poly, b: Poly, scale=1) -> Poly:
    out = dict(a)
    for e, c in b.items():
        v = out.get(e, 0) + scale * c
        if v:
            out[e] = v
        else:
            out.pop(e, None)
    return out


def _pmul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            v = out.get(e, 0) + ca * cb
            if v:
                out[e] = v
            else:
                out.pop(e, None)
    return out


def _ppow(a: Poly, p: int, n: int) -> Poly:
    out: Poly = {(0,) * n: Fraction(1)}
    for _ in range(p):
        out = _pmul(out, a)
    return out


def _linear(coeffs, const, n: int) -> Poly:
    out: Poly = {}
    if const:
        out[(0,) * n] = Fraction(const)
    for j, c in enumerate(coeffs):
        if c:
            e = [0] * n
            e[j] = 1
            out[tuple(e)] = Fraction(c)
    return out


def _compose_univariate(coeffs, arg: Poly, n: int) -> Poly:
    """sum_d coeffs[d] * arg**d."""
    out: Poly = {}
    power: Poly = {(0,) * n: Fraction(1)}
    for d, c in enumerate(coeffs):
        if d:
            power = _pmul(power, arg)
        if c:
            out = _padd(out, power, c)
    return out


@dataclass(frozen=True)
class PlantedInstance:
    """Polynomial map vanishing on a known curve z(t) = p + L^-1 (t, phi_2(t), ..., phi_n(t))."""

    problem: ProblemSpec
    base: np.ndarray
    curve: np.ndarray  # (n, degree+1) power coefficients of z(t)
    rank: int
    seed: int | None = None

    def jet(self, order: int) -> np.ndarray:
        """Derivatives z^{(i)}(0), i = 0..order, as an (order+1, n) array."""
        n, L = self.curve.shape
        out = np.zeros((order + 1, n))
        for i in range(min(order + 1, L)):
            out[i] = math.factorial(i) * self.curve[:, i]
        return out


def planted_instance(
    rng: np.random.Generator,
    n: int,
    m: int,
    *,
    curve_degree: int = 3,
    rank: int | None = None,
    multiplier_degree: int = 1,
    seed: int | None = None,
) -> PlantedInstance:
    """Random G: R^n -> R^m with G = 0 along a planted polynomial curve through an integer base point.

    In coordinates y = L(z - p) the curve reads y = (t, phi_2(t), ..., phi_n(t)); with
    h_j = y_j - phi_j(y_1) the map is G = A h + sum_j q_j h_j where A has rank ``rank``
    (low rank makes G'(p) singular) and the q_j are polynomials without constant term.
    Curve coefficients are a/d! with small integers a, so the jet entries are small integers.
    """
    if n < 2:
        raise ValueError("a planted curve needs n >= 2")
    r = int(rng.integers(0, min(m, n - 1) + 1)) if rank is None else rank
    # unimodular L = upper unit triangular with a row permutation; inverse stays integral
    U = np.eye(n, dtype=np.int64) + np.triu(rng.integers(-1, 2, size=(n, n)), 1)
    perm = rng.permutation(n)
    L = U[perm]
    Linv = np.rint(np.linalg.inv(L)).astype(np.int64)
    p = rng.integers(-1, 2, size=n)

    phi = np.zeros((n, curve_degree + 1), dtype=object)
    for j in range(1, n):
        for d in range(1, curve_degree + 1):
            phi[j, d] = Fraction(int(rng.integers(-2, 3)), math.factorial(d))
    # y as polynomials in z
    y = [_linear([int(L[i, j]) for j in range(n)], -int(L[i] @ p), n) for i in range(n)]
    h = [_padd(y[j], _compose_univariate(list(phi[j]), y[0], n), -1) for j in range(1, n)]

    left = rng.integers(-2, 3, size=(m, r))
    right = rng.integers(-2, 3, size=(r, n - 1))
    A = left @ right
    comps = []
    for i in range(m):
        g: Poly = {}
        for j in range(n - 1):
            if A[i, j]:
                g = _padd(g, h[j], int(A[i, j]))
            q = {}
            for _ in range(2):
                e = [0] * n
                for _ in range(int(rng.integers(1, multiplier_degree + 1))):
                    e[int(rng.integers(n))] += 1
                c = int(rng.integers(-2, 3))
                if c:
                    q = _padd(q, {tuple(e): Fraction(c)})
            # shift q to vanish at p: use q(z - p)
            shifted = {}
            for e, c in q.items():
                term = {(0,) * n: Fraction(c)}
                for v, ev in enumerate(e):
                    unit = [0] * n
                    unit[v] = 1
                    term = _pmul(term, _ppow({tuple(unit): Fraction(1), (0,) * n: Fraction(-int(p[v]))}, ev, n))
                shifted = _padd(shifted, term)
            g = _padd(g, _pmul(shifted, h[j]))
        comps.append([(c, e) for e, c in sorted(g.items())])
    if not any(comps):
        comps[0] = [(Fraction(0), (0,) * n)]
    comps = [c if c else [(Fraction(0), (0,) * n)] for c in comps]

    curve = np.zeros((n, curve_degree + 1))
    ycoef = np.zeros((n, curve_degree + 1))
    ycoef[0, 1] = 1.0
    for j in range(1, n):
        ycoef[j] = [float(x) for x in phi[j]]
    curve = Linv.astype(float) @ ycoef
    curve[:, 0] += p
    return PlantedInstance(ProblemSpec(n, m, comps, name="planted"), p.astype(float), curve, r, seed)
