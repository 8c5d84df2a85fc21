"""Exact rational linear algebra: fraction-free determinants and solves.

The exact backend works on Python ints / Fractions; the float backend is
numpy. Matrices are small (edge-indexed), so dense O(n^3) is fine.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

import numpy as np


def bareiss_determinant(rows) -> Fraction:
    """Determinant by fraction-free (Bareiss) elimination.

    Accepts a square matrix of ints or Fractions; rows are scaled to
    integers first, so all intermediate arithmetic is integer-exact.
    """
    n = len(rows)
    if n == 0:
        return Fraction(1)
    scale = Fraction(1)
    m: list[list[int]] = []
    for row in rows:
        if len(row) != n:
            raise ValueError("matrix is not square")
        den = 1
        for x in row:
            if isinstance(x, Fraction):
                den = den * x.denominator // gcd(den, x.denominator)
        scale *= den
        m.append([int(x * den) if isinstance(x, Fraction) else int(x) * den
                  for x in row])

    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return Fraction(0)
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return Fraction(sign * m[n - 1][n - 1]) / scale


def float_determinant(rows) -> float:
    a = np.asarray(rows, dtype=float)
    if a.size == 0:
        return 1.0
    return float(np.linalg.det(a))


def solve_rational(a_rows, b_cols) -> list[list[Fraction]]:
    """Solve A X = B exactly; B is given as a list of column vectors.

    Returns the solution columns. Raises ValueError if A is singular.
    """
    n = len(a_rows)
    k = len(b_cols)
    aug = [[Fraction(a_rows[i][j]) for j in range(n)]
           + [Fraction(b_cols[c][i]) for c in range(k)]
           for i in range(n)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if aug[r][col] != 0:
                piv = r
                break
        if piv is None:
            raise ValueError("singular system")
        if piv != col:
            aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                arow, prow = aug[r], aug[col]
                aug[r] = [arow[j] - f * prow[j] for j in range(n + k)]
    return [[aug[i][n + c] for i in range(n)] for c in range(k)]


def integer_determinant(rows) -> int:
    """Bareiss determinant of an integer matrix, returned as an int."""
    d = bareiss_determinant(rows)
    if d.denominator != 1:
        raise ValueError("matrix was not integral")
    return d.numerator
