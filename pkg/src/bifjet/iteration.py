"""Iterative construction of the linear mappings S_1, S_2, ... and the surjectivity tests.

Level k of the iteration consumes the jet (z_0, ..., z_k) and holds
S_bar_1..S_bar_{k+1} with their kernel/range splittings, the block triangular
E^{k+1}, the scheme-conjugated transforms of orders 2k-1, 2k, 2k+1 and the
matrix M^{2k+1}.  Level 0 only holds S_1 = G'(z_0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from .operators import BlockMatrix, build_delta, build_w_even, build_w_odd
from .schemes import SchemeTables, build_schemes, diag_entries
from .subspace import Decomposition, SubspaceBasis, decompose, numerical_rank
from .tensor_jet import DerivativeTensorSet, Jet

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class BlockTransform:
    """(C^q)^-1 E C^q split as ((a, a_bar), (A, A_bar)) with a single first block row/last block column."""

    order: int
    full: np.ndarray
    n: int

    @property
    def nblocks(self) -> int:
        return self.full.shape[0] // self.n

    @property
    def a(self) -> np.ndarray:
        return self.full[: self.n, : -self.n]

    @property
    def a_bar(self) -> np.ndarray:
        return self.full[: self.n, -self.n :]

    @property
    def A(self) -> np.ndarray:
        return self.full[self.n :, : -self.n]

    @property
    def A_bar(self) -> np.ndarray:
        return self.full[self.n :, -self.n :]


@dataclass(frozen=True)
class IterationState:
    tensors: DerivativeTensorSet
    jet: Jet
    level: int
    s_bar: tuple[np.ndarray, ...]
    s_tilde: tuple[np.ndarray, ...]
    s: tuple[np.ndarray, ...]
    decompositions: tuple[Decomposition, ...]
    schemes: SchemeTables
    tol: float = DEFAULT_TOL
    E: BlockMatrix | None = None
    E_prev: BlockMatrix | None = None
    transforms: dict = field(default_factory=dict)
    M: dict = field(default_factory=dict)
    rng: np.random.Generator | None = field(default=None, compare=False, repr=False)

    @property
    def n(self) -> int:
        return self.tensors.dim_domain

    @property
    def m(self) -> int:
        return self.tensors.dim_codomain

    def kernels(self) -> list[SubspaceBasis]:
        """N_0, N_1, ..., N_{level+1}."""
        return [SubspaceBasis.full(self.n)] + [d.kernel for d in self.decompositions]

    def M_matrix(self) -> np.ndarray:
        return self.M[2 * self.level + 1]


def _conjugate(E: np.ndarray, cvals, n: int) -> np.ndarray:
    c = np.repeat(np.array([float(x) for x in cvals]), n)
    return E * (c[None, :] / c[:, None])


def _transform(E: BlockMatrix, tables: SchemeTables, order: int, n: int) -> BlockTransform:
    size = E.rows
    return BlockTransform(order, _conjugate(E.entries, diag_entries(tables, "C", order, size), n), n)


def _decompose_level(state_decs, S_bar: np.ndarray, level: int, tol: float, rng) -> tuple[np.ndarray, np.ndarray, Decomposition]:
    m, n = S_bar.shape
    if state_decs:
        prev = state_decs[-1]
        domain, codomain = prev.kernel, prev.range_complement
        P_c = prev.proj_range_complement
    else:
        domain, codomain = SubspaceBasis.full(n), SubspaceBasis.full(m)
        P_c = np.eye(m)
    S = P_c @ S_bar
    atol = tol * max(1.0, float(np.linalg.norm(S_bar, 2)) if S_bar.size else 0.0)
    dec = decompose(S, domain, codomain, tol, atol=atol, codomain_projector=P_c, rng=rng, level=level)
    return S_bar @ domain.basis, S, dec


def init_level_1(tensors: DerivativeTensorSet, *, tol: float = DEFAULT_TOL, rng=None, max_row: int = 41) -> IterationState:
    """S_bar_1 = S_tilde_1 = S_1 = G'(z_0) with its splitting of R^n and R^m."""
    G1 = np.array(tensors.jacobian)
    s_tilde, s, dec = _decompose_level((), G1, 1, tol, rng)
    return IterationState(
        tensors=tensors,
        jet=Jet([tensors.base_point]),
        level=0,
        s_bar=(G1,),
        s_tilde=(s_tilde,),
        s=(s,),
        decompositions=(dec,),
        schemes=build_schemes(max_row),
        tol=tol,
        rng=rng,
    )


def _build_E(s_bar, decs, prev: BlockMatrix | None, n: int) -> BlockMatrix:
    """Append the last block column of E^{k+1} to E^k by back substitution."""
    kp1 = len(s_bar)
    col = [None] * kp1
    col[kp1 - 1] = np.eye(n)
    for i in range(kp1 - 1, 0, -1):  # 1-based row i = kp1-1 .. 1
        acc = sum(s_bar[v - 1] @ col[v - 1] for v in range(i + 1, kp1 + 1))
        col[i - 1] = -decs[i - 1].restricted_inverse @ acc
    E = np.zeros((kp1 * n, kp1 * n))
    E[: (kp1 - 1) * n, : (kp1 - 1) * n] = np.eye((kp1 - 1) * n) if prev is None else prev.entries
    for i in range(kp1):
        E[i * n : (i + 1) * n, (kp1 - 1) * n :] = col[i]
    return BlockMatrix.uniform(E, kp1, kp1, n, n)


def build_E(state: IterationState) -> BlockMatrix:
    """E^{level+1} from the stored S_bar and restricted inverses (recursive form)."""
    if state.level < 1:
        raise ValueError("E needs S_bar_2; advance the iteration first")
    E = None
    for j in range(2, state.level + 2):
        E = _build_E(state.s_bar[:j], state.decompositions, E, state.n)
    return E


def explicit_E_column(state: IterationState) -> list[np.ndarray]:
    """Last block column of E^{k+1} from the alternating-product formula."""
    k, n = state.level, state.n
    if k < 1:
        raise ValueError("E needs S_bar_2")
    X = [d.restricted_inverse for d in state.decompositions]  # X[i-1] = S_i^-1 P_{R_i}
    S_bar = state.s_bar
    col = [None] * (k + 1)
    col[k] = np.eye(n)
    col[k - 1] = -X[k - 1] @ S_bar[k]
    for i in range(k - 1, 0, -1):
        inner = np.eye(state.m)
        for v in range(1, k - i + 1):
            for chain in combinations(range(i + 1, k + 1), v):
                prod = np.eye(state.m)
                for nt in chain:
                    prod = prod @ (S_bar[nt - 1] @ X[nt - 1])
                inner = inner + (-1) ** v * prod
        col[i - 1] = -X[i - 1] @ inner @ S_bar[k]
    return col


def _build_M(tr_even: BlockTransform, tr_prev_odd: BlockTransform, M_prev: np.ndarray, n: int) -> np.ndarray:
    """Stack ((a a_bar); a_prev (A A_bar); M_prev A_prev (A A_bar)) and drop the last block row."""
    lower = tr_even.full[n:, :]  # (A^2k A_bar^2k)
    top = tr_even.full[:n, :]
    mid = tr_prev_odd.a @ lower
    bottom = M_prev @ tr_prev_odd.A @ lower
    stacked = np.vstack([top, mid, bottom])
    return stacked[:-n, :]


def build_M(state: IterationState) -> np.ndarray:
    return state.M_matrix()


def build_s2(state: IterationState, z1) -> IterationState:
    """Level 1: S_bar_2 = 2 G''(z_0) z_1, its splitting, E^2, the order-3 transform and M^3 = I."""
    if state.level != 0:
        raise ValueError("build_s2 expects a level-0 state")
    z1 = np.asarray(z1, dtype=float)
    n = state.n
    S2 = 2.0 * state.tensors.form(2).partial(z1)
    s_tilde, s, dec = _decompose_level(state.decompositions, S2, 2, state.tol, state.rng)
    s_bar = state.s_bar + (S2,)
    decs = state.decompositions + (dec,)
    E2 = _build_E(s_bar, decs, None, n)
    transforms = {3: _transform(E2, state.schemes, 3, n)}
    return replace(
        state,
        jet=Jet([state.jet[0], z1]),
        level=1,
        s_bar=s_bar,
        s_tilde=state.s_tilde + (s_tilde,),
        s=state.s + (s,),
        decompositions=decs,
        E=E2,
        E_prev=None,
        transforms=transforms,
        M={3: np.eye(n)},
    )


def s_bar_next(state: IterationState, zk) -> tuple[np.ndarray, np.ndarray]:
    """S_bar_{k+1} for k = level + 1 >= 2, plus the norm used as its rank reference."""
    k = state.level + 1
    tensors = state.tensors
    tr = state.transforms[2 * k - 1]
    w_even = build_w_even(tensors, state.jet, k)
    W = np.hstack([w_even[mu] for mu in range(2 * k - 1, k - 1, -1)])
    lift = np.vstack([tr.a_bar, state.M[2 * k - 1] @ tr.A_bar])
    coupling = math.factorial(2 * k) / math.factorial(k) ** 2
    return W @ lift + coupling * tensors.form(2).partial(np.asarray(zk, dtype=float))


def build_s_next(state: IterationState, zk) -> IterationState:
    """Advance from level k-1 to level k >= 2 with the new jet entry z_k."""
    if state.level < 1:
        raise ValueError("levels >= 2 need the level-1 construction first")
    k = state.level + 1
    n = state.n
    zk = np.asarray(zk, dtype=float)
    jet = Jet(np.vstack([state.jet.coefficients, zk[None, :]]))
    E_k = state.E
    tr_prev_odd = state.transforms[2 * k - 1]
    tr_even = _transform(E_k, state.schemes, 2 * k, n)
    # S_bar_{k+1} uses W^{2k}(z_{k-1}..z_0) only; the old jet suffices.
    S_next = s_bar_next(state, zk)
    s_tilde, s, dec = _decompose_level(state.decompositions, S_next, k + 1, state.tol, state.rng)
    s_bar = state.s_bar + (S_next,)
    decs = state.decompositions + (dec,)
    E_next = _build_E(s_bar, decs, E_k, n)
    transforms = dict(state.transforms)
    transforms[2 * k] = tr_even
    transforms[2 * k + 1] = _transform(E_next, state.schemes, 2 * k + 1, n)
    M = dict(state.M)
    M[2 * k + 1] = _build_M(tr_even, tr_prev_odd, state.M[2 * k - 1], n)
    return replace(
        state,
        jet=jet,
        level=k,
        s_bar=s_bar,
        s_tilde=state.s_tilde + (s_tilde,),
        s=state.s + (s,),
        decompositions=decs,
        E=E_next,
        E_prev=E_k,
        transforms=transforms,
        M=M,
    )


def build_state(tensors: DerivativeTensorSet, jet: Jet, k: int, *, tol: float = DEFAULT_TOL, rng=None) -> IterationState:
    """Run the iteration up to level k on the jet entries z_1..z_k."""
    if jet.order < k:
        raise ValueError(f"jet of order {jet.order} cannot drive level {k}")
    state = init_level_1(tensors, tol=tol, rng=rng, max_row=max(41, 2 * k + 3))
    if k >= 1:
        state = build_s2(state, jet[1])
    for j in range(2, k + 1):
        state = build_s_next(state, jet[j])
    return state


@dataclass(frozen=True)
class SurjectivityResult:
    accepted: bool
    rank_defect: int
    sum_rank: int
    w_accepted: bool
    w_rank: int
    kernel_delta_dim: int
    ambiguous: bool

    @property
    def consistent(self) -> bool:
        return self.accepted == self.w_accepted


def sum_operator(state: IterationState) -> np.ndarray:
    """[S_tilde_1, ..., S_tilde_{k+1}] in coordinates of N_0 x ... x N_k."""
    return np.hstack(state.s_tilde)


def _rank(A: np.ndarray, tol: float) -> tuple[int, bool]:
    if A.size == 0:
        return 0, False
    s = np.linalg.svd(A, compute_uv=False)
    r, _, amb = numerical_rank(s, tol, tol * max(1.0, float(s[0])))
    return r, amb


def delta_kernel(tensors: DerivativeTensorSet, jet: Jet, k: int, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of N[Delta^k] in R^{nk}."""
    D = build_delta(tensors, jet, k).entries
    _, s, Vt = np.linalg.svd(D)
    r, _, _ = numerical_rank(s, tol, tol * max(1.0, float(s[0]) if s.size else 0.0))
    return Vt[r:].T


def w_form_operator(tensors: DerivativeTensorSet, jet: Jet, k: int, tol: float = DEFAULT_TOL):
    """W^{2k+1} restricted to B x N[Delta^k], with the basis used for the restriction."""
    n = tensors.dim_domain
    W = build_w_odd(tensors, jet, k).matrix
    K = delta_kernel(tensors, jet, k, tol)
    basis = np.zeros((n * (k + 1), n + K.shape[1]))
    basis[:n, :n] = np.eye(n)
    basis[n:, n:] = K
    return W @ basis, basis


def surjectivity_check(state: IterationState) -> SurjectivityResult:
    """Rank test of the sum operator, cross-checked with the W-form on B x N[Delta^k]."""
    m, k, tol = state.m, state.level, state.tol
    r, amb = _rank(sum_operator(state), tol)
    if k >= 1:
        WB, basis = w_form_operator(state.tensors, state.jet, k, tol)
        wr, wamb = _rank(WB, tol)
        kdim = basis.shape[1] - state.n
    else:
        wr, wamb = _rank(state.tensors.jacobian, tol)
        kdim = 0
    return SurjectivityResult(r == m, m - r, r, wr == m, wr, kdim, amb or wamb)


@dataclass
class IterationReport:
    outcome: str  # "accepted", "stalled", "exhausted"
    accepted_level: int | None
    levels: list[dict]
    state: IterationState


def iterate(tensors: DerivativeTensorSet, jet: Jet, k_max: int = 5, *, tol: float = DEFAULT_TOL, rng=None) -> IterationReport:
    """Advance level by level until the sum operator is surjective or no progress is possible."""
    top = min(k_max, jet.order)
    state = init_level_1(tensors, tol=tol, rng=rng, max_row=max(41, 2 * top + 3))
    levels = []
    for k in range(top + 1):
        if k == 1:
            state = build_s2(state, jet[1])
        elif k >= 2:
            state = build_s_next(state, jet[k])
        res = surjectivity_check(state)
        levels.append(
            {
                "level": k,
                "kernel_dims": [d.kernel.dim for d in state.decompositions],
                "range_dims": [d.range.dim for d in state.decompositions],
                "rank_defect": res.rank_defect,
                "accepted": res.accepted,
                "w_form_accepted": res.w_accepted,
                "ambiguous": res.ambiguous,
            }
        )
        if res.accepted:
            return IterationReport("accepted", k, levels, state)
        if state.decompositions[-1].kernel.dim == 0:
            return IterationReport("stalled", None, levels, state)
    return IterationReport("exhausted", None, levels, state)
