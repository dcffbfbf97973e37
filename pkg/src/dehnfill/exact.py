"""Exact integer linear algebra (fraction-free elimination)."""

from __future__ import annotations

from math import gcd

__all__ = ["rank", "independent_rows", "in_row_span", "matmul", "column_sums"]


def _primitive(row: list[int]) -> list[int]:
    g = 0
    for x in row:
        g = gcd(g, x)
    if g > 1:
        row = [x // g for x in row]
    return row


class _Echelon:
    """Incrementally maintained echelon basis of integer row vectors."""

    def __init__(self, width: int):
        self.width = width
        self.rows: list[tuple[int, list[int]]] = []  # (pivot column, row)

    def reduce(self, row) -> list[int]:
        r = list(row)
        for col, piv in self.rows:
            if r[col]:
                a, b = piv[col], r[col]
                r = [a * x - b * y for x, y in zip(r, piv)]
                r = _primitive(r)
        return r

    def add(self, row) -> bool:
        r = self.reduce(row)
        for col, x in enumerate(r):
            if x:
                self.rows.append((col, r))
                return True
        return False


def rank(M) -> int:
    M = [list(map(int, r)) for r in M]
    if not M:
        return 0
    ech = _Echelon(len(M[0]))
    return sum(ech.add(r) for r in M)


def independent_rows(M) -> list[int]:
    """Greedy scan in row order: the lexicographically smallest row basis."""
    M = [list(map(int, r)) for r in M]
    if not M:
        return []
    ech = _Echelon(len(M[0]))
    return [i for i, r in enumerate(M) if ech.add(r)]


def in_row_span(M, row) -> bool:
    M = [list(map(int, r)) for r in M]
    ech = _Echelon(len(row))
    for r in M:
        ech.add(r)
    return not any(ech.reduce(list(map(int, row))))


def matmul(A, B) -> list[list[int]]:
    cols = list(zip(*B)) if B else []
    return [[sum(int(a) * int(b) for a, b in zip(r, c)) for c in cols] for r in A]


def column_sums(M) -> list[int]:
    return [sum(int(x) for x in c) for c in zip(*M)]
