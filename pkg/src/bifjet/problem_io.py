"""Problem files, built-in benchmark maps, jet strings and report/CSV writers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .tensor_jet import Jet, ProblemSpec


class ProblemFormatError(ValueError):
    """Malformed problem or jet input; the message names the offending field."""


def _coefficient(raw, where: str) -> Fraction:
    if isinstance(raw, bool):
        raise ProblemFormatError(f"{where}: coefficient must be a number or decimal string, got {raw!r}")
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, str):
        try:
            return Fraction(raw.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ProblemFormatError(f"{where}: cannot parse coefficient {raw!r}") from exc
    raise ProblemFormatError(f"{where}: coefficient must be a number or decimal string, got {type(raw).__name__}")


def problem_from_dict(data, name: str = "") -> ProblemSpec:
    if not isinstance(data, dict):
        raise ProblemFormatError("top level: expected an object")
    for key in ("dim_domain", "dim_codomain", "components"):
        if key not in data:
            raise ProblemFormatError(f"missing field {key!r}")
    n, m = data["dim_domain"], data["dim_codomain"]
    for key, val in (("dim_domain", n), ("dim_codomain", m)):
        if not isinstance(val, int) or isinstance(val, bool) or val < 1:
            raise ProblemFormatError(f"{key}: expected a positive integer, got {val!r}")
    comps = data["components"]
    if not isinstance(comps, list) or not comps:
        raise ProblemFormatError("components: expected a non-empty list")
    if len(comps) != m:
        raise ProblemFormatError(f"components: expected {m} entries (dim_codomain), got {len(comps)}")
    parsed = []
    for ci, comp in enumerate(comps):
        if not isinstance(comp, list):
            raise ProblemFormatError(f"components[{ci}]: expected a list of monomials")
        mons = []
        for mi, mon in enumerate(comp):
            where = f"components[{ci}][{mi}]"
            if not (isinstance(mon, list) and len(mon) == 2):
                raise ProblemFormatError(f"{where}: expected [coefficient, [exponents]]")
            coef = _coefficient(mon[0], where)
            exps = mon[1]
            if not isinstance(exps, list) or len(exps) != n:
                got = len(exps) if isinstance(exps, list) else type(exps).__name__
                raise ProblemFormatError(f"{where}: exponent list must have length {n}, got {got}")
            if any(not isinstance(e, int) or isinstance(e, bool) or e < 0 for e in exps):
                raise ProblemFormatError(f"{where}: exponents must be non-negative integers")
            mons.append((coef, tuple(exps)))
        if not mons:
            mons.append((Fraction(0), (0,) * n))
        parsed.append(mons)
    return ProblemSpec(n, m, parsed, name=str(data.get("name", name)))


def parse_problem_text(text: str, name: str = "") -> ProblemSpec:
    try:
        data = json.loads(text, parse_float=str)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return problem_from_dict(data, name)


def parse_problem(path) -> ProblemSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProblemFormatError(f"{path}: {exc.strerror}") from exc
    try:
        return parse_problem_text(text, name=path.stem)
    except ProblemFormatError as exc:
        raise ProblemFormatError(f"{path}: {exc}") from exc


def format_coefficient(c: Fraction) -> str:
    """Exact decimal string when the denominator allows it, otherwise p/q."""
    c = Fraction(c)
    if c.denominator == 1:
        return str(c.numerator)
    d, powers = c.denominator, []
    for p in (2, 5):
        e = 0
        while d % p == 0:
            d //= p
            e += 1
        powers.append(e)
    if d != 1:
        return f"{c.numerator}/{c.denominator}"
    places = max(powers)
    scaled = c.numerator * 10**places // c.denominator  # exact: denominator divides 10^places
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}".rstrip("0").rstrip(".")


def problem_to_dict(problem: ProblemSpec) -> dict:
    return {
        "name": problem.name,
        "dim_domain": problem.dim_domain,
        "dim_codomain": problem.dim_codomain,
        "components": [[[format_coefficient(c), list(e)] for c, e in comp] for comp in problem.components],
    }


def emit_problem(problem: ProblemSpec) -> str:
    """Problem file text, one monomial per line."""
    d = problem_to_dict(problem)
    comps = []
    for comp in d["components"]:
        mons = ",\n".join(f"      {json.dumps(mon)}" for mon in comp)
        comps.append("    [\n" + mons + "\n    ]")
    return (
        "{\n"
        f'  "name": {json.dumps(d["name"])},\n'
        f'  "dim_domain": {d["dim_domain"]},\n'
        f'  "dim_codomain": {d["dim_codomain"]},\n'
        '  "components": [\n' + ",\n".join(comps) + "\n  ]\n}\n"
    )


def _poly(*terms) -> list:
    return [(Fraction(c), e) for c, e in terms]


@dataclass(frozen=True)
class Benchmark:
    problem: ProblemSpec
    jets: tuple  # (label, jet rows, k)
    note: str


# variables are ordered (x, lambda)
BUILTINS: dict[str, Benchmark] = {
    "pitchfork": Benchmark(
        ProblemSpec(2, 1, [_poly((1, (1, 1)), (-1, (3, 0)))], "pitchfork"),
        (("branch", [[0, 0], [1, 0]], 1), ("trivial", [[0, 0], [0, 1]], 1)),
        "lambda*x - x^3",
    ),
    "transcritical": Benchmark(
        ProblemSpec(2, 1, [_poly((1, (1, 1)), (-1, (2, 0)))], "transcritical"),
        (("trivial", [[0, 0], [0, 1]], 1), ("branch", [[0, 0], [1, 1]], 1)),
        "lambda*x - x^2",
    ),
    "tangential": Benchmark(
        ProblemSpec(2, 1, [_poly((1, (0, 2)), (-3, (2, 1)), (2, (4, 0)))], "tangential"),
        (("curvature-2", [[0, 0], [1, 0], [0, 2]], 2), ("curvature-4", [[0, 0], [1, 0], [0, 4]], 2)),
        "lambda^2 - 3*lambda*x^2 + 2*x^4 = (lambda - x^2)(lambda - 2x^2)",
    ),
    "cusp": Benchmark(
        ProblemSpec(2, 1, [_poly((1, (2, 0)), (-1, (0, 3)))], "cusp"),
        (("cusp", [[0, 0], [0, 0], [0, 2], [6, 0]], 3),),
        "x^2 - lambda^3",
    ),
    "regular": Benchmark(
        ProblemSpec(2, 1, [_poly((1, (1, 0)), (-1, (0, 1)))], "regular"),
        (("line", [[0, 0], [1, 1]], 1),),
        "x - lambda",
    ),
}


def builtin(name: str) -> ProblemSpec:
    try:
        return BUILTINS[name].problem
    except KeyError:
        raise ProblemFormatError(f"unknown builtin {name!r}; choose from {', '.join(sorted(BUILTINS))}") from None


def parse_jet(text: str, n: int | None = None) -> Jet:
    """'z0; z1; ...' with whitespace-separated components, lowest order first."""
    rows = [r for r in (part.split() for part in text.split(";")) if r]
    if not rows:
        raise ProblemFormatError("jet: no coefficient vectors given")
    try:
        arr = np.array([[float(Fraction(x)) for x in r] for r in rows])
    except (ValueError, ZeroDivisionError) as exc:
        raise ProblemFormatError(f"jet: {exc}") from exc
    except Exception as exc:  # ragged rows
        raise ProblemFormatError("jet: rows have different lengths") from exc
    if arr.ndim != 2:
        raise ProblemFormatError("jet: rows have different lengths")
    if n is not None and arr.shape[1] != n:
        raise ProblemFormatError(f"jet: vectors have {arr.shape[1]} entries, problem has dim_domain {n}")
    return Jet(arr)


def format_jet(jet) -> str:
    arr = jet.coefficients if isinstance(jet, Jet) else np.asarray(jet)
    return "; ".join(" ".join(format(float(x), ".17g") for x in row) for row in arr)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return "null"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isfinite(x):
            return format(x, ".17g") if x != int(x) or abs(x) >= 1e17 else format(x, ".1f")
        return json.dumps(str(x))
    if isinstance(x, (str, Fraction)):
        return json.dumps(str(x))
    raise TypeError(f"cannot serialise {type(x).__name__}")


def dumps_report(obj, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON: sorted keys, floats with 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps_report(v, indent, _level + 1)}" for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_fmt(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps_report(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    return _fmt(obj)


def write_curve_csv(curve, path) -> None:
    n = curve.points.shape[1]
    lines = [", ".join(["eps"] + [f"z_{i + 1}" for i in range(n)] + ["residual"])]
    for e, p, r in zip(curve.eps, curve.points, curve.residuals):
        lines.append(", ".join(format(float(v), ".17g") for v in (e, *p, r)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
