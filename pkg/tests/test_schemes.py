from fractions import Fraction

import numpy as np
import pytest

from bifjet.schemes import (
    build_schemes,
    check_ratio_identities,
    diag_entries,
    diag_matrix,
    scheme_size,
)


@pytest.fixture(scope="module")
def tables():
    return build_schemes(40)


def test_spot_values(tables):
    assert tables.d[2, 2] == Fraction(3, 2)
    assert tables.d[4, 3] == Fraction(5, 3)
    assert tables.c[4, 2] == 2
    assert tables.c[3, 2] == Fraction(3, 2)
    assert tables.c[6, 2] == 3


def test_rows(tables):
    assert diag_entries(tables, "C", 3) == [1, Fraction(3, 2)]
    assert diag_entries(tables, "D", 4) == [1, Fraction(5, 4)]
    np.testing.assert_array_equal(diag_matrix(tables, "D", 4), np.diag([1.0, 1.25]))


def test_sizes():
    assert [scheme_size(m) for m in range(1, 8)] == [1, 1, 2, 2, 3, 3, 4]


def test_identities_exact_to_row_40(tables):
    rep = check_ratio_identities(tables)
    assert rep["passed"] and rep["checked"] > 500


def test_closed_form(tables):
    for m in range(1, 41):
        for l in range(1, scheme_size(m) + 1):
            if (m, l) in tables.d:
                assert tables.d[m, l] == Fraction(m + 1, m + 2 - l)


def test_out_of_table(tables):
    with pytest.raises(ValueError):
        diag_entries(tables, "C", 45)
