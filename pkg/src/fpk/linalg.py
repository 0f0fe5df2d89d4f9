"""Small dense linear algebra, symbolic and numeric.

Symbolic routines work over ScalarField entries (cofactor expansion, so they
stay exact and division appears only through the determinant).  Numeric
routines are plain-Python LU with partial pivoting; matrices here never exceed
a dozen rows, so no external solver is warranted.
"""

from __future__ import annotations

__all__ = ["sym_det", "sym_inverse", "lu_det", "lu_solve"]


def _is_zero(field):
    return getattr(field, "is_zero", False)


def sym_det(rows):
    """Determinant of a square matrix of ScalarFields (or a mix with numbers)."""
    n = len(rows)
    if n == 0:
        raise ValueError("empty matrix")
    cols0 = tuple(range(n))
    cache = {}

    def minor(r, cols):
        if len(cols) == 1:
            return rows[r][cols[0]]
        key = (r, cols)
        got = cache.get(key)
        if got is not None:
            return got
        acc = None
        for k, c in enumerate(cols):
            entry = rows[r][c]
            if _is_zero(entry):
                continue
            rest = cols[:k] + cols[k + 1 :]
            term = entry * minor(r + 1, rest)
            if k % 2 == 1:
                term = -term
            acc = term if acc is None else acc + term
        if acc is None:
            acc = rows[r][cols[0]] * 0
        cache[key] = acc
        return acc

    return minor(0, cols0)


def sym_inverse(rows):
    """Adjugate inverse; returns (inverse_rows, determinant).

    Division by the determinant is evaluation-guarded like any other field
    division, so degeneracy surfaces as a DomainError at the offending point.
    """
    n = len(rows)
    det = sym_det(rows)
    if n == 1:
        one = rows[0][0] * 0 + 1.0
        return [[one / det]], det
    inv = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            sub = [
                [rows[r][c] for c in range(n) if c != j]
                for r in range(n)
                if r != i
            ]
            cof = sym_det(sub)
            if (i + j) % 2 == 1:
                cof = -cof
            inv[j][i] = cof / det
    return inv, det


def lu_det(matrix):
    """Determinant of a square float matrix via LU with partial pivoting."""
    n = len(matrix)
    a = [list(map(float, row)) for row in matrix]
    det = 1.0
    for k in range(n):
        piv = max(range(k, n), key=lambda r: abs(a[r][k]))
        if a[piv][k] == 0.0:
            return 0.0
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            det = -det
        det *= a[k][k]
        for r in range(k + 1, n):
            f = a[r][k] / a[k][k]
            a[r][k] = f
            for c in range(k + 1, n):
                a[r][c] -= f * a[k][c]
    return det


def lu_solve(matrix, rhs):
    """Solve a square float system; raises ZeroDivisionError when singular."""
    n = len(matrix)
    a = [list(map(float, row)) for row in matrix]
    b = list(map(float, rhs))
    for k in range(n):
        piv = max(range(k, n), key=lambda r: abs(a[r][k]))
        if a[piv][k] == 0.0:
            raise ZeroDivisionError("singular matrix")
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            b[k], b[piv] = b[piv], b[k]
        for r in range(k + 1, n):
            f = a[r][k] / a[k][k]
            for c in range(k + 1, n):
                a[r][c] -= f * a[k][c]
            b[r] -= f * b[k]
    x = [0.0] * n
    for k in range(n - 1, -1, -1):
        s = b[k] - sum(a[k][c] * x[c] for c in range(k + 1, n))
        x[k] = s / a[k][k]
    return x
