"""The triangular rational schemes d_{m,l}, c_{m,l} and their diagonal matrices.

Column l starts at row 2l - 2 with d = (2l - 1)/l and c = 1; further rows follow
the odd/even recurrences, and c accumulates the products of d down a column.
Everything here is exact (``fractions.Fraction``).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


@dataclass(frozen=True)
class SchemeTables:
    max_row: int
    d: dict[tuple[int, int], Fraction]
    c: dict[tuple[int, int], Fraction]

    def rows(self):
        """(row, column, d, c) for every stored entry, row-major."""
        for (m, l) in sorted(self.d):
            yield m, l, self.d[m, l], self.c[m, l]


def build_schemes(M: int) -> SchemeTables:
    if M < 1:
        raise ValueError("need at least one row")
    d: dict[tuple[int, int], Fraction] = {}
    c: dict[tuple[int, int], Fraction] = {}
    l = 1
    while 2 * l - 2 <= M:
        start = 2 * l - 2
        d[start, l] = Fraction(2 * l - 1, l)
        c[start, l] = Fraction(1)
        for row in range(start + 1, M + 1):
            if row % 2:
                nn = (row + 1) // 2
                d[row, l] = Fraction(2 * nn, 2 * nn + 1 - l)
            else:
                nn = row // 2
                d[row, l] = Fraction(2 * nn + 1, 2 * nn + 2 - l)
            c[row, l] = c[row - 1, l] * d[row - 1, l]
        l += 1
    return SchemeTables(M, d, c)


def scheme_size(m: int) -> int:
    """Number of diagonal entries of D^m and C^m: n for m = 2n - 1 or m = 2n."""
    return (m + 1) // 2


def diag_entries(tables: SchemeTables, kind: str, m: int, size: int | None = None) -> list[Fraction]:
    q = scheme_size(m) if size is None else size
    table = {"D": tables.d, "C": tables.c}[kind.upper()]
    try:
        return [table[m, l] for l in range(1, q + 1)]
    except KeyError as exc:
        raise ValueError(f"{kind}^{m} of size {q} not covered by a table with {tables.max_row} rows") from exc


def diag_matrix(tables: SchemeTables, kind: str, m: int, size: int | None = None) -> np.ndarray:
    """Diag[x_{m,1}, ..., x_{m,q}] as a float array (scalars, one per B-block)."""
    return np.diag([float(x) for x in diag_entries(tables, kind, m, size)])


def check_ratio_identities(tables: SchemeTables, M: int | None = None) -> dict:
    """Exact check of d_{m,1} = c_{m,1} = 1 and the two ratio telescoping identities."""
    M = tables.max_row if M is None else M
    failures = []
    count = 0
    for m in range(M + 1):
        count += 1
        if tables.d[m, 1] != 1 or tables.c[m, 1] != 1:
            failures.append(("unit-column", m, 1))
    for m in range(1, M // 2 + 1):
        for j in range(m):
            if 2 * m <= M:
                count += 1
                if tables.d[2 * m, 2 + j] / tables.d[2 * m - 1, 1 + j] != tables.d[2 * m, 2]:
                    failures.append(("even-ratio", m, j))
            if 2 * m + 1 <= M:
                count += 1
                if tables.d[2 * m + 1, 2 + j] / tables.d[2 * m, 1 + j] != tables.d[2 * m + 1, 2]:
                    failures.append(("odd-ratio", m, j))
        if m >= 2 and 2 * m + 1 <= M:
            for j in range(m - 1):
                count += 1
                lhs = tables.d[2 * m + 1, 3 + j] / tables.d[2 * m - 1, 1 + j]
                if lhs != tables.d[2 * m, 2] * tables.d[2 * m + 1, 2]:
                    failures.append(("double-step", m, j))
    return {"checked": count, "failures": failures, "passed": not failures}
