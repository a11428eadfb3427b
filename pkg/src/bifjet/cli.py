"""Command line entry point: verify-jet, iterate, check-lemma, trace, suite.

Exit codes: 0 accepted / all checks pass, 1 mathematical rejection, 2 input error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import BACKEND
from .iteration import DEFAULT_TOL, iterate
from .lemma import check_instance, check_structural, run_suite
from .problem_io import (
    BUILTINS,
    ProblemFormatError,
    builtin,
    dumps_report,
    format_jet,
    parse_jet,
    parse_problem,
    write_curve_csv,
)
from .schemes import build_schemes, check_ratio_identities
from .tensor_jet import Jet, derive_tensors
from .tracer import StageFailure, extend_jet, theorem_pipeline

EXIT_OK, EXIT_REJECT, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _positive(kind):
    def conv(text):
        val = kind(text)
        if val <= 0:
            raise argparse.ArgumentTypeError(f"expected a positive value, got {text}")
        return val

    return conv


def _add_problem_args(p: argparse.ArgumentParser, jet: bool = True) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--builtin", help=f"built-in problem ({', '.join(BUILTINS)})")
    src.add_argument("--problem", type=Path, help="problem JSON file")
    if jet:
        p.add_argument("--jet", help='jet vectors z_0; z_1; ..., e.g. "0 0; 1 0" (default: the builtin\'s first jet)')
        p.add_argument("--k", type=_positive(int), help="iteration level (default: jet order)")
    p.add_argument("--tol", type=_positive(float), default=DEFAULT_TOL, help="relative rank tolerance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oblique", action="store_true", help="random oblique complements drawn from --seed")
    p.add_argument("--report", type=Path, help="write the JSON report here instead of stdout")


def _load(args):
    if args.problem is not None:
        problem = parse_problem(args.problem)
        default = None
    elif args.builtin is not None:
        problem = builtin(args.builtin)
        default = BUILTINS[args.builtin].jets[0]
    else:
        raise InputError("give --builtin or --problem")
    if getattr(args, "jet", None):
        jet = parse_jet(args.jet, problem.dim_domain)
        k = args.k or max(jet.order, 1)
    elif default is not None:
        jet = Jet(np.array(default[1], dtype=float))
        k = args.k or default[2]
    else:
        raise InputError("--jet is required with --problem")
    if jet.order < k:
        raise InputError(f"jet of order {jet.order} is too short for k = {k}")
    return problem, jet, k


def _rng(args):
    return np.random.default_rng(args.seed) if args.oblique else None


def _emit(args, report: dict) -> None:
    text = dumps_report(report) + "\n"
    if args.report is not None:
        args.report.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _pipeline_report(problem, jet, k, rep) -> dict:
    out = rep.as_dict()
    out.update({"problem": problem.name, "k": k, "jet": format_jet(jet.truncated(k))})
    return out


def cmd_verify_jet(args) -> int:
    problem, jet, k = _load(args)
    rep = theorem_pipeline(problem, jet, k, tol=args.tol, trace=False, rng=_rng(args))
    _emit(args, _pipeline_report(problem, jet, k, rep))
    return EXIT_OK if rep.accepted else EXIT_REJECT


def cmd_trace(args) -> int:
    problem, jet, k = _load(args)
    rep = theorem_pipeline(
        problem, jet, k, tol=args.tol, eps_max=args.eps_max, steps=args.steps, newton_tol=args.newton_tol, rng=_rng(args)
    )
    if rep.curve is not None and args.csv is not None:
        write_curve_csv(rep.curve, args.csv)
    _emit(args, _pipeline_report(problem, jet, k, rep))
    return EXIT_OK if rep.accepted else EXIT_REJECT


def cmd_iterate(args) -> int:
    problem, jet, _k = _load(args)
    tensors = derive_tensors(problem, jet[0], 2 * jet.order + 1)
    res = iterate(tensors, jet, args.k_max, tol=args.tol, rng=_rng(args))
    _emit(args, {"problem": problem.name, "outcome": res.outcome, "accepted_level": res.accepted_level, "levels": res.levels})
    return EXIT_OK if res.outcome == "accepted" else EXIT_REJECT


def cmd_check_lemma(args) -> int:
    if args.builtin is None and args.problem is None:
        out = run_suite(range(args.seed, args.seed + args.instances), tuple(args.levels), oblique=args.oblique)
        _emit(args, out)
        return EXIT_OK if out["passed"] else EXIT_REJECT
    problem, jet, k = _load(args)
    tensors = derive_tensors(problem, jet[0], 2 * k + 1)
    if jet.order < 2 * k + 1:
        try:
            jet = extend_jet(tensors, jet.truncated(k), tol=args.tol).full()
        except StageFailure as exc:
            _emit(args, {"problem": problem.name, "k": k, "passed": False, "failed_stage": exc.stage, "residual": exc.residual})
            return EXIT_REJECT
    rep = check_instance(tensors, jet, k, name=problem.name, tol=args.tol, rng=_rng(args))
    out = rep.as_dict()
    out["structural"] = check_structural(tensors, jet, k)
    _emit(args, out)
    return EXIT_OK if rep.passed and out["structural"]["passed"] else EXIT_REJECT


def run_benchmarks(tol: float = DEFAULT_TOL) -> list[dict]:
    rows = []
    for name in sorted(BUILTINS):
        bench = BUILTINS[name]
        for label, jet_rows, k in bench.jets:
            jet = Jet(np.array(jet_rows, dtype=float))
            rep = theorem_pipeline(bench.problem, jet, k, tol=tol)
            rows.append({"name": f"{name}/{label}", "expect": "accept", **_pipeline_report(bench.problem, jet, k, rep)})
    bad = Jet(np.array([[0.0, 0.0], [1.0, 1.0]]))
    rep = theorem_pipeline(BUILTINS["pitchfork"].problem, bad, 1, tol=tol)
    rows.append({"name": "pitchfork/infeasible", "expect": "reject", **_pipeline_report(BUILTINS["pitchfork"].problem, bad, 1, rep)})
    for row in rows:
        row["as_expected"] = row["accepted"] == (row["expect"] == "accept")
    return rows


def cmd_suite(args) -> int:
    seeds = range(args.seed, args.seed + args.instances)
    deep = range(args.seed, args.seed + args.deep_instances)
    bench = run_benchmarks(args.tol)
    lemma = run_suite(seeds, (1, 2, 3))
    lemma_deep = run_suite(deep, (4,))
    oblique = run_suite(seeds, (1, 2, 3), oblique=True)
    plain = {(r["instance"]): r["surjective"] for r in lemma["instances"]}
    flips = sorted(r["instance"] for r in oblique["instances"] if plain.get(r["instance"]) != r["surjective"])
    schemes = check_ratio_identities(build_schemes(40))
    summary = {
        "benchmarks_as_expected": all(r["as_expected"] for r in bench),
        "lemma_passed": lemma["passed"] and lemma_deep["passed"],
        "oblique_passed": oblique["passed"],
        "decision_flips_under_oblique_complements": flips,
        "schemes_passed": schemes["passed"],
    }
    summary["passed"] = all(v for k, v in summary.items() if k != "decision_flips_under_oblique_complements") and not flips
    report = {
        "summary": summary,
        "benchmarks": bench,
        "lemma": {
            "instances": len(lemma["instances"]) + len(lemma_deep["instances"]),
            "failures": [r for r in lemma["instances"] + lemma_deep["instances"] if not r["passed"]],
            "accepted": sum(bool(r["surjective"]) for r in lemma["instances"] + lemma_deep["instances"]),
            "worst": _worst(lemma["instances"] + lemma_deep["instances"]),
        },
        "schemes": {"checked": schemes["checked"], "passed": schemes["passed"]},
    }
    _emit(args, report)
    return EXIT_OK if summary["passed"] else EXIT_REJECT


def _worst(instances) -> dict:
    worst: dict[str, float] = {}
    for inst in instances:
        for e in inst["entries"]:
            key = e["identity"]
            val = e.get("solve_residual", e.get("value", 0.0))
            worst[key] = max(worst.get(key, 0.0), float(val))
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bifjet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s 0.1.0 ({BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-jet", help="check the existence conditions for a jet without tracing")
    _add_problem_args(p)
    p.set_defaults(func=cmd_verify_jet)

    p = sub.add_parser("iterate", help="run the S-iteration and report the level at which it becomes surjective")
    _add_problem_args(p)
    p.add_argument("--k-max", type=_positive(int), default=5)
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("check-lemma", help="verify the structural identities on a jet or on planted instances")
    _add_problem_args(p)
    p.add_argument("--instances", type=_positive(int), default=20, help="planted instances per level")
    p.add_argument("--levels", type=_positive(int), nargs="+", default=[1, 2, 3])
    p.set_defaults(func=cmd_check_lemma)

    p = sub.add_parser("trace", help="extend an accepted jet and trace the solution curve")
    _add_problem_args(p)
    p.add_argument("--eps-max", type=_positive(float), default=0.2)
    p.add_argument("--steps", type=_positive(int), default=40)
    p.add_argument("--newton-tol", type=_positive(float), default=1e-11)
    p.add_argument("--csv", type=Path, help="write the sampled curve here")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("suite", help="benchmarks plus the identity checks on planted instances")
    p.add_argument("--instances", type=_positive(int), default=100, help="planted instances per level k = 1, 2, 3")
    p.add_argument("--deep-instances", type=_positive(int), default=20, help="planted instances at k = 4")
    p.add_argument("--tol", type=_positive(float), default=DEFAULT_TOL)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", type=Path)
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (InputError, ProblemFormatError) as exc:
        print(f"bifjet: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
