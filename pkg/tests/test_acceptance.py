"""Acceptance criteria 1-10, one printed PASS/FAIL line each.

Run ``python tests/test_acceptance.py`` for the lines alone; under pytest they
are also collected into the terminal summary.
"""

import functools
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from bifjet.cli import main as cli_main
from bifjet.instances import random_problem
from bifjet.iteration import build_state, surjectivity_check
from bifjet.lemma import (
    check_instance,
    check_m_structure,
    check_structural,
    planted_case,
)
from bifjet.operators import relative_residual
from bifjet.problem_io import builtin
from bifjet.schemes import build_schemes, check_ratio_identities
from bifjet.series import taylor_coefficients_by_series
from bifjet.tensor_jet import Jet, derive_tensors, taylor_coefficient
from bifjet.tracer import theorem_pipeline

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []


def _report(num: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def criterion_1():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(200):
        n, m, deg = int(rng.integers(1, 7)), int(rng.integers(1, 5)), int(rng.integers(1, 6))
        p = random_problem(rng, n, m, deg)
        jet = Jet(rng.normal(size=(9, n)))
        t = derive_tensors(p, jet[0], 8)
        oracle = taylor_coefficients_by_series(p, jet.coefficients, 8)
        for k in range(9):
            worst = max(worst, relative_residual(taylor_coefficient(t, jet, k), oracle[k]))
    elapsed = time.perf_counter() - t0
    return worst <= 1e-10 and elapsed <= 60, f"max relative error {worst:.2e} (tol 1e-10), {elapsed:.1f}s (limit 60s)"


def criterion_2():
    worst: dict[str, float] = {}
    for k in (1, 2, 3):
        for seed in range(100):
            rng = np.random.default_rng([seed, k, 2])
            n, m = int(rng.integers(1, 5)), int(rng.integers(1, 4))
            p = random_problem(rng, n, m, int(rng.integers(2, 6)))
            jet = Jet(rng.normal(size=(2 * k + 2, n)))
            rep = check_structural(derive_tensors(p, jet[0], 2 * k + 1), jet, k)
            for key, val in rep["residuals"].items():
                worst[key] = max(worst.get(key, 0.0), val)
    top = max(worst.values())
    return top <= 1e-10, "worst " + ", ".join(f"{k}={v:.1e}" for k, v in sorted(worst.items()))


def criterion_3():
    from fractions import Fraction

    tables = build_schemes(40)
    rep = check_ratio_identities(tables)
    spots = tables.d[2, 2] == Fraction(3, 2) and tables.d[4, 3] == Fraction(5, 3) and tables.c[4, 2] == 2
    return rep["passed"] and spots, f"{rep['checked']} exact rational checks to row 40, spot values {'ok' if spots else 'wrong'}"


@functools.lru_cache(maxsize=1)
def _lemma_runs():
    t0 = time.perf_counter()
    runs = []
    for k, count in ((1, 100), (2, 100), (3, 100), (4, 20)):
        for seed in range(count):
            tensors, jet, _ = planted_case(seed, k)
            rep = check_instance(tensors, jet, k, name=f"{k}-{seed}")
            state = build_state(tensors, jet, k)
            mstruct = check_m_structure(state, np.random.default_rng(seed))
            oblique = [
                surjectivity_check(build_state(tensors, jet, k, rng=np.random.default_rng([seed, k, r]))) for r in range(2)
            ]
            runs.append((k, rep, mstruct, oblique))
    return runs, time.perf_counter() - t0


def criterion_4():
    runs, elapsed = _lemma_runs()
    fails = [rep.instance for _, rep, _, _ in runs if not all(e["passed"] for e in rep.entries if e["identity"] in ("i", "ii", "iii", "iv"))]
    anchors = all(
        e.get("anchor_M3_identity", e.get("anchor_exact", True)) for k, rep, _, _ in runs if k == 1 for e in rep.entries
    )
    worst = {}
    for _, rep, _, _ in runs:
        for e in rep.entries:
            if e["identity"] in ("i", "ii", "iii", "iv"):
                worst[e["identity"]] = max(worst.get(e["identity"], 0.0), e["value"])
    ok = not fails and anchors and elapsed <= 300
    detail = f"{len(runs)} instances, {len(fails)} failures, k=1 anchors {'exact' if anchors else 'broken'}, worst " + ", ".join(
        f"({k})={v:.1e}" for k, v in sorted(worst.items())
    )
    return ok, detail + f", {elapsed:.0f}s (limit 300s)"


def criterion_5():
    runs, _ = _lemma_runs()
    tri = all(m["triangular"] for _, _, m, _ in runs)
    worst = max(m["solve_residual"] for _, _, m, _ in runs)
    return tri and worst <= 1e-10, f"unit block triangular on all {len(runs)}: {tri}, worst solve residual {worst:.1e} (tol 1e-10)"


def criterion_6():
    runs, _ = _lemma_runs()
    disagree = sum(rep.surjective != rep.w_form_surjective for _, rep, _, _ in runs)
    flips = sum(any(o.accepted != rep.surjective or o.w_accepted != rep.surjective for o in obl) for _, rep, _, obl in runs)
    accepted = sum(bool(rep.surjective) for _, rep, _, _ in runs)
    return disagree == 0 and flips == 0, f"{accepted}/{len(runs)} accepted, {disagree} form disagreements, {flips} flips under oblique complements"


def criterion_7():
    p = builtin("pitchfork")
    rep = theorem_pipeline(p, Jet([[0.0, 0.0], [1.0, 0.0]]), 1)
    curve = rep.curve
    d = curve.derivatives(2)
    err = max(np.abs(d[1] - [1, 0]).max(), np.abs(d[2] - [0, 2]).max())
    bad = theorem_pipeline(p, Jet([[0.0, 0.0], [1.0, 1.0]]), 1)
    ok = (
        rep.accepted
        and curve.complete
        and curve.reached == (-0.2, 0.2)
        and curve.max_residual <= 1e-10
        and err <= 1e-5
        and not bad.accepted
        and bad.failed_stage == "condition-ii"
        and abs(bad.residual - 2.0) <= 1e-12
    )
    return ok, (
        f"accepted={rep.accepted}, residual {curve.max_residual:.1e} on |eps|<=0.2, derivative error {err:.1e}; "
        f"jet (1,1) rejected at {bad.failed_stage} with residual {bad.residual:g}"
    )


def criterion_8():
    p = builtin("tangential")
    ratios, ok = [], True
    for lam2 in (2.0, 4.0):
        rep = theorem_pipeline(p, Jet([[0.0, 0.0], [1.0, 0.0], [0.0, lam2]]), 2)
        ok = ok and rep.accepted and rep.curve.complete
        x, lam = rep.curve.at(0.05)
        ratios.append(lam / x**2)
    ok = ok and abs(ratios[0] - 1.0) <= 1e-4 and abs(ratios[1] - 2.0) <= 1e-4
    return ok, f"lambda/x^2 at eps=0.05: {ratios[0]:.10f}, {ratios[1]:.10f}"


def criterion_9():
    rep = theorem_pipeline(builtin("cusp"), Jet([[0.0, 0.0], [0.0, 0.0], [0.0, 2.0], [6.0, 0.0]]), 3)
    c = rep.curve
    dev = float(np.abs(c.points - np.column_stack([c.eps**3, c.eps**2])).max())
    ok = rep.accepted and c.complete and dev <= 1e-8 and c.max_residual <= 1e-8
    return ok, f"accepted at k=3, max |z(eps) - (eps^3, eps^2)| = {dev:.1e}, residual {c.max_residual:.1e}"


def criterion_10(tmp: Path):
    t0 = time.perf_counter()
    codes = [cli_main(["suite", "--report", str(tmp / f"suite{i}.json")]) for i in range(2)]
    elapsed = (time.perf_counter() - t0) / 2
    same = (tmp / "suite0.json").read_bytes() == (tmp / "suite1.json").read_bytes()
    return codes == [0, 0] and same and elapsed <= 600, f"exit codes {codes}, byte-identical reports: {same}, {elapsed:.1f}s per run (limit 600s)"


CRITERIA = [
    (1, "Taylor coefficients vs series oracle", criterion_1),
    (2, "structural identities", criterion_2),
    (3, "scheme exactness", criterion_3),
    (4, "lemma identities on planted instances", criterion_4),
    (5, "M-matrix structure", criterion_5),
    (6, "theorem equivalence", criterion_6),
    (7, "pitchfork end to end", criterion_7),
    (8, "tangential branches", criterion_8),
    (9, "cusp", criterion_9),
]


@pytest.mark.parametrize("num, title, fn", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(num, title, fn):
    ok, detail = fn()
    _report(num, title, ok, detail)
    assert ok, detail


def test_criterion_10(tmp_path):
    ok, detail = criterion_10(tmp_path)
    _report(10, "CLI suite", ok, detail)
    assert ok, detail


if __name__ == "__main__":
    import tempfile

    results = []
    for num, title, fn in CRITERIA:
        ok, detail = fn()
        _report(num, title, ok, detail)
        results.append(ok)
    with tempfile.TemporaryDirectory() as d:
        ok, detail = criterion_10(Path(d))
        _report(10, "CLI suite", ok, detail)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
