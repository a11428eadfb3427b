"""From an accepted jet to a sampled solution curve via Newton continuation of the scaled remainder."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .iteration import DEFAULT_TOL, build_state, delta_kernel, surjectivity_check
from .operators import build_delta, build_inhomogeneity, build_w_odd
from .series import compose, jet_to_series
from .subspace import numerical_rank
from .tensor_jet import (
    Jet,
    ProblemSpec,
    derive_tensors,
    jet_residuals,
    taylor_coefficient,
)


class StageFailure(Exception):
    """A mathematical rejection at a named stage, with the offending residual."""

    def __init__(self, stage: str, residual: float, message: str = ""):
        super().__init__(message or f"stage {stage} failed (residual {residual:.3g})")
        self.stage = stage
        self.residual = residual


@dataclass(frozen=True)
class ExtendedJet:
    """(z_0..z_k) plus the completed entries z_{k+1}..z_{2k} and z_{2k+1}."""

    base: Jet
    upper: np.ndarray  # rows z_{k+1}, ..., z_{2k}
    top: np.ndarray

    @property
    def k(self) -> int:
        return self.base.order

    def full(self) -> Jet:
        rows = [self.base.coefficients, self.upper.reshape(-1, self.base.dim), self.top[None, :]]
        return Jet(np.vstack(rows))


def _range_residual(D: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, float]:
    sol, *_ = np.linalg.lstsq(D, rhs, rcond=None)
    return sol, float(np.linalg.norm(D @ sol - rhs))


def check_conditions(tensors, base: Jet, tol: float = 1e-9) -> dict:
    """Vanishing of T^0..T^k along the base jet and solvability of Delta^k z = -I^k."""
    k = base.order
    T = jet_residuals(tensors, base, k)
    t_res = max(float(np.linalg.norm(t)) / math.factorial(j) for j, t in enumerate(T))
    scale = max(1.0, float(np.abs(base.coefficients).max()))
    padded = base.padded(2 * k)
    D = build_delta(tensors, padded, k).entries
    I = np.concatenate(build_inhomogeneity(tensors, padded, k))
    sol, r_res = _range_residual(D, -I)
    return {
        "taylor_residual": t_res,
        "range_residual": r_res,
        "passed": t_res <= tol * scale and r_res <= tol * max(1.0, float(np.linalg.norm(I))),
        "particular": sol,
    }


def _delta_kernel_for(tensors, base: Jet, tol: float) -> np.ndarray:
    return delta_kernel(tensors, base.padded(2 * base.order), base.order, tol)


def extend_jet(tensors, base: Jet, *, tol: float = DEFAULT_TOL, cond_tol: float = 1e-9) -> ExtendedJet:
    """Complete (z_0..z_k) to a jet of order 2k+1 with T^0..T^{2k+1} = 0.

    The block (z_{2k}..z_{k+1}) starts as the minimal-norm solution of Delta z = -I; then a
    minimal-norm correction in B x N[Delta] makes T^{2k+1} vanish, its first component giving
    z_{2k+1} and the rest shifting the middle block within the solution family.
    """
    k, n = base.order, base.dim
    if k < 1:
        raise ValueError("jet extension needs k >= 1")
    cond = check_conditions(tensors, base, cond_tol)
    if not cond["passed"]:
        raise StageFailure("condition-ii", max(cond["taylor_residual"], cond["range_residual"]))
    middle = cond["particular"]  # highest index first
    K = _delta_kernel_for(tensors, base, tol)
    jet = Jet(np.vstack([base.coefficients, middle.reshape(k, n)[::-1], np.zeros((1, n))]))
    W = build_w_odd(tensors, jet, k).matrix
    frame = np.zeros((n * (k + 1), n + K.shape[1]))
    frame[:n, :n] = np.eye(n)
    frame[n:, n:] = K
    rhs = -taylor_coefficient(tensors, jet, 2 * k + 1)
    c, res = _range_residual(W @ frame, rhs)
    if res > cond_tol * max(1.0, float(np.linalg.norm(rhs))):
        raise StageFailure("extension", res)
    shift = frame @ c
    middle = middle + shift[n:]
    return ExtendedJet(base, middle.reshape(k, n)[::-1].copy(), shift[:n].copy())


@dataclass(frozen=True)
class RemainderSystem:
    """Unknown b in N^c (coordinates c in R^dim) embedded into the stacked corrections."""

    problem: ProblemSpec
    extended: ExtendedJet
    embed: np.ndarray  # (n*(k+1), dim): c -> (b_{2k+1}, b_{2k}, ..., b_{k+1})

    @property
    def k(self) -> int:
        return self.extended.k

    def series(self, c) -> np.ndarray:
        """Power coefficients of z(eps; b) as an (n, 2k+2) array (complex if c is)."""
        k, n = self.k, self.extended.base.dim
        b = self.embed @ np.asarray(c)
        jet = self.extended.full().coefficients.astype(b.dtype).copy()
        for idx, mu in enumerate(range(2 * k + 1, k, -1)):
            jet[mu] = jet[mu] + b[idx * n : (idx + 1) * n]
        return jet_to_series(jet)

    def power_coefficients(self, c) -> np.ndarray:
        return compose(self.problem, self.series(c))

    def scaled(self, c, eps: float) -> np.ndarray:
        """(2k+1)! eps^-(2k+1) G[z(eps; b)], with the vanishing low-order coefficients dropped."""
        g = self.power_coefficients(c)[:, 2 * self.k + 1 :]
        val = npoly.polyval(eps, g.T)
        return math.factorial(2 * self.k + 1) * val

    def point(self, c, eps: float) -> np.ndarray:
        return npoly.polyval(eps, self.series(c).T)

    def jacobian(self, c, eps: float) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        h = 1e-30
        J = np.empty((self.problem.dim_codomain, c.size))
        for j in range(c.size):
            cc = c.astype(complex)
            cc[j] += 1j * h
            J[:, j] = self.scaled(cc, eps).imag / h
        return J


def remainder_system(problem: ProblemSpec, tensors, extended: ExtendedJet, *, tol: float = DEFAULT_TOL, rng=None) -> RemainderSystem:
    """Choose N^c inside B x N[Delta^k] complementary to the kernel of W^{2k+1} there."""
    k, n = extended.k, extended.base.dim
    K = _delta_kernel_for(tensors, extended.base, tol)
    frame = np.zeros((n * (k + 1), n + K.shape[1]))
    frame[:n, :n] = np.eye(n)
    frame[n:, n:] = K
    W = build_w_odd(tensors, extended.full(), k).matrix @ frame
    _, s, Vt = np.linalg.svd(W)
    r, _, _ = numerical_rank(s, tol, tol * max(1.0, float(s[0]) if s.size else 0.0))
    comp = Vt[:r].T
    if rng is not None and r < Vt.shape[0]:
        kern = Vt[r:].T
        comp = comp + kern @ rng.normal(size=(kern.shape[1], r))
    return RemainderSystem(problem, extended, frame @ comp)


def remainder_residual(problem, tensors, extended: ExtendedJet, c, eps: float, system: RemainderSystem | None = None) -> np.ndarray:
    system = system or remainder_system(problem, tensors, extended)
    return system.scaled(c, eps)


@dataclass
class SolutionCurve:
    eps: np.ndarray
    points: np.ndarray  # (len(eps), n)
    residuals: np.ndarray  # max |G[z(eps)]|
    corrections: np.ndarray  # c(eps) in N^c coordinates
    complete: bool = True
    reached: tuple[float, float] = (0.0, 0.0)
    info: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max()) if self.residuals.size else 0.0

    def derivatives(self, order: int) -> np.ndarray:
        """z^{(i)}(0), i = 0..order, from a centred polynomial fit through the samples nearest 0."""
        half = order // 2 + 2
        idx = np.argsort(np.abs(self.eps))[: 2 * half + 1]
        e = self.eps[idx]
        coef = npoly.polyfit(e, self.points[idx], 2 * half)
        fact = np.array([math.factorial(i) for i in range(order + 1)], dtype=float)
        return coef[: order + 1] * fact[:, None]

    def at(self, eps: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self.eps - eps)))
        return self.points[i]


def _newton(system: RemainderSystem, c0: np.ndarray, eps: float, tol: float, max_iter: int):
    c = c0.copy()
    F = system.scaled(c, eps)
    norm = float(np.abs(F).max())
    for it in range(max_iter):
        if norm <= tol:
            return c, norm, it, True
        J = system.jacobian(c, eps)
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        lam = 1.0
        while True:
            trial = c + lam * step
            Ft = system.scaled(trial, eps)
            nt = float(np.abs(Ft).max())
            if nt < norm or lam < 1e-6:
                break
            lam *= 0.5
        if nt >= norm and lam < 1e-6:
            return c, norm, it, norm <= tol
        c, F, norm = trial, Ft, nt
    return c, norm, max_iter, norm <= tol


def trace_curve(
    system: RemainderSystem,
    eps_max: float = 0.2,
    steps: int = 40,
    newton_tol: float = 1e-11,
    newton_max_iters: int = 50,
) -> SolutionCurve:
    """Newton continuation of the scaled remainder equation on a symmetric eps grid."""
    if steps < 1 or eps_max <= 0:
        raise ValueError("need steps >= 1 and eps_max > 0")
    dim = system.embed.shape[1]
    grid = np.linspace(0.0, eps_max, steps + 1)
    c0, r0, _, ok0 = _newton(system, np.zeros(dim), 0.0, newton_tol, newton_max_iters)
    samples = {0.0: c0} if ok0 else {}
    complete = ok0
    reached = [0.0, 0.0]
    if ok0:
        for sign, slot in ((1.0, 1), (-1.0, 0)):
            c = c0
            for e in grid[1:] * sign:
                c, _r, _, ok = _newton(system, c, float(e), newton_tol, newton_max_iters)
                if not ok:
                    complete = False
                    break
                samples[float(e)] = c
                reached[slot] = float(e)
    eps = np.array(sorted(samples))
    C = np.array([samples[e] for e in eps]).reshape(len(eps), dim)
    pts = np.array([system.point(c, e) for c, e in zip(C, eps)]).reshape(len(eps), -1)
    res = np.array([float(np.abs(system.problem.evaluate(p)).max()) for p in pts])
    return SolutionCurve(eps, pts, res, C, complete, (reached[0], reached[1]), {"b0_residual": r0})


def is_regular(tensors, tol: float = DEFAULT_TOL) -> bool:
    """G'(z_0) surjective: the curve comes straight from the implicit function theorem."""
    s = np.linalg.svd(np.array(tensors.jacobian), compute_uv=False)
    r, _, _ = numerical_rank(s, tol, tol * max(1.0, float(s[0]) if s.size else 0.0))
    return r == tensors.dim_codomain


@dataclass
class PipelineReport:
    stages: list
    accepted: bool
    failed_stage: str | None = None
    residual: float | None = None
    regular: bool = False
    levels: list = field(default_factory=list)
    extended: ExtendedJet | None = None
    curve: SolutionCurve | None = None
    derivatives: np.ndarray | None = None

    def as_dict(self) -> dict:
        out = {
            "accepted": self.accepted,
            "failed_stage": self.failed_stage,
            "residual": self.residual,
            "regular": self.regular,
            "stages": self.stages,
            "levels": self.levels,
        }
        if self.extended is not None:
            out["extended_jet"] = self.extended.full().coefficients.tolist()
        if self.curve is not None:
            out["curve"] = {
                "samples": int(self.curve.eps.size),
                "complete": self.curve.complete,
                "eps_range": list(self.curve.reached),
                "max_residual": self.curve.max_residual,
            }
        if self.derivatives is not None:
            out["recovered_derivatives"] = self.derivatives.tolist()
        return out


def theorem_pipeline(
    problem: ProblemSpec,
    base: Jet,
    k: int | None = None,
    *,
    tol: float = DEFAULT_TOL,
    trace: bool = True,
    eps_max: float = 0.2,
    steps: int = 40,
    newton_tol: float = 1e-11,
    rng=None,
) -> PipelineReport:
    """Run the existence test stage by stage and, when it passes, trace the curve."""
    k = base.order if k is None else k
    if k < 1:
        raise ValueError("k must be at least 1")
    if base.order < k:
        raise ValueError(f"jet of order {base.order} is too short for k = {k}")
    base = base.truncated(k)
    stages = [{"stage": "finite-dimensional", "passed": True}]
    report = PipelineReport(stages, False)
    tensors = derive_tensors(problem, base[0], 2 * k + 1)
    report.regular = is_regular(tensors, tol)

    def fail(stage, residual):
        stages.append({"stage": stage, "passed": False, "residual": residual})
        report.failed_stage, report.residual = stage, residual
        return report

    cond = check_conditions(tensors, base)
    if not cond["passed"]:
        return fail("condition-ii", max(cond["taylor_residual"], cond["range_residual"]))
    stages.append({"stage": "condition-ii", "passed": True, "residual": max(cond["taylor_residual"], cond["range_residual"])})

    state = build_state(tensors, base, k, tol=tol, rng=rng)
    report.levels = [
        {"level": i, "kernel_dim": d.kernel.dim, "range_dim": d.range.dim, "rank_defect": problem.dim_codomain - sum(x.rank for x in state.decompositions[: i + 1])}
        for i, d in enumerate(state.decompositions)
    ]
    surj = surjectivity_check(state)
    stages.append({"stage": "surjectivity", "passed": surj.accepted, "rank_defect": surj.rank_defect, "w_form_agrees": surj.consistent})
    if not surj.accepted:
        report.failed_stage, report.residual = "surjectivity", float(surj.rank_defect)
        return report
    try:
        ext = extend_jet(tensors, base, tol=tol)
    except StageFailure as exc:
        return fail(exc.stage, exc.residual)
    report.extended = ext
    stages.append({"stage": "extension", "passed": True})
    report.accepted = True
    if not trace:
        return report
    system = remainder_system(problem, tensors, ext, tol=tol)
    curve = trace_curve(system, eps_max, steps, newton_tol)
    report.curve = curve
    ok = curve.complete and curve.max_residual <= max(newton_tol, 1e-10)
    stages.append({"stage": "trace", "passed": ok, "max_residual": curve.max_residual, "eps_range": list(curve.reached)})
    if curve.eps.size >= 2 * (k // 2 + 2) + 1:
        report.derivatives = curve.derivatives(k)
    if not ok:
        report.accepted = False
        report.failed_stage, report.residual = "trace", curve.max_residual
    return report
