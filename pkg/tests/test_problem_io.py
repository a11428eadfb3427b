import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bifjet.instances import random_problem
from bifjet.problem_io import (
    BUILTINS,
    ProblemFormatError,
    builtin,
    dumps_report,
    emit_problem,
    format_coefficient,
    format_jet,
    parse_jet,
    parse_problem,
    parse_problem_text,
    write_curve_csv,
)
from bifjet.tracer import SolutionCurve


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtin_round_trip(name, tmp_path):
    path = tmp_path / f"{name}.json"
    path.write_text(emit_problem(builtin(name)))
    assert parse_problem(path) == builtin(name)


def test_tangential_expansion():
    # (lambda - x^2)(lambda - 2 x^2) at a few points
    p = builtin("tangential")
    for x, lam in [(0.3, 0.7), (-1.2, 2.0), (2.0, -0.5)]:
        assert p.evaluate(np.array([x, lam]))[0] == pytest.approx((lam - x**2) * (lam - 2 * x**2))


def test_regular_has_surjective_jacobian():
    from bifjet.tensor_jet import derive_tensors

    assert np.linalg.matrix_rank(derive_tensors(builtin("regular"), [0, 0], 1).jacobian) == 1


def test_unknown_builtin():
    with pytest.raises(ProblemFormatError, match="unknown builtin"):
        builtin("saddle")


@pytest.mark.parametrize(
    "text, fragment",
    [
        ('{"dim_domain": 1, "dim_codomain": 1, "components": []}', "non-empty"),
        ('{"dim_domain": 2, "dim_codomain": 1, "components": [[["1", [1]]]]}', "components[0][0]: exponent list must have length 2"),
        ('{"dim_domain": 1, "dim_codomain": 1, "components": [[["x", [1]]]]}', "cannot parse coefficient"),
        ('{"dim_domain": 1, "dim_codomain": 2, "components": [[["1", [1]]]]}', "expected 2 entries"),
        ('{"dim_domain": 1, "components": []}', "missing field 'dim_codomain'"),
        ('{"dim_domain": 1,\n "dim_codomain": 1,\n "components": [[["1", [1]]]', "line 3"),
        ('{"dim_domain": 1, "dim_codomain": 1, "components": [[["1", [-1]]]]}', "non-negative"),
    ],
)
def test_malformed_problems(text, fragment):
    with pytest.raises(ProblemFormatError) as err:
        parse_problem_text(text)
    assert fragment in str(err.value)


def test_decimal_strings_are_exact():
    p = parse_problem_text('{"dim_domain": 1, "dim_codomain": 1, "components": [[["0.1", [1]], [0.25, [2]], ["1/3", [0]]]]}')
    assert [c for c, _ in p.components[0]] == [Fraction(1, 10), Fraction(1, 4), Fraction(1, 3)]


@given(st.fractions(max_denominator=10**6))
def test_coefficient_format_round_trip(c):
    assert Fraction(format_coefficient(c)) == c


def test_random_problem_round_trip(rng):
    p = random_problem(rng, 3, 2, 4)
    assert parse_problem_text(emit_problem(p)) == p


def test_jet_parsing():
    jet = parse_jet("0 0; 1 0", 2)
    np.testing.assert_array_equal(jet.coefficients, [[0, 0], [1, 0]])
    assert format_jet(jet) == "0 0; 1 0"
    with pytest.raises(ProblemFormatError):
        parse_jet("0 0; 1", 2)
    with pytest.raises(ProblemFormatError):
        parse_jet("0 0 0", 2)
    with pytest.raises(ProblemFormatError):
        parse_jet(" ; ")


def test_report_is_deterministic_and_valid_json():
    obj = {"b": [0.1, 1.0, 2], "a": {"x": None, "y": True}, "c": np.array([1 / 3])}
    text = dumps_report(obj)
    assert text == dumps_report(obj)
    back = json.loads(text)
    assert back["b"][0] == 0.1 and list(back) == ["a", "b", "c"]
    assert "0.33333333333333331" in text


def test_curve_csv(tmp_path):
    curve = SolutionCurve(np.array([-0.1, 0.0, 0.1]), np.zeros((3, 2)), np.zeros(3), np.zeros((3, 1)))
    path = tmp_path / "c.csv"
    write_curve_csv(curve, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "eps, z_1, z_2, residual" and len(lines) == 4
