"""Exact integer and rational linear algebra used by the lattice code.

Everything here works on plain Python ints and :class:`fractions.Fraction`;
no floating point is involved anywhere.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, isqrt
from typing import Sequence

IntMatrix = Sequence[Sequence[int]]


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(x, y, g)`` with ``x*a + y*b == g == gcd(a, b) >= 0``."""
    x, next_x = 1, 0
    y, next_y = 0, 1
    g, next_g = a, b
    while next_g:
        q = g // next_g
        x, next_x = next_x, x - q * next_x
        y, next_y = next_y, y - q * next_y
        g, next_g = next_g, g - q * next_g
    if g < 0:
        x, y, g = -x, -y, -g
    return x, y, g


def gcd_all(values: Sequence[int]) -> int:
    g = 0
    for v in values:
        g = gcd(g, v)
    return g


def floor_sqrt(r: Fraction) -> int:
    """Largest integer ``a`` with ``a*a <= r``, for rational ``r >= 0``."""
    if r < 0:
        raise ValueError("negative radicand")
    return isqrt(r.numerator // r.denominator)


def row_hermite_1xn(w: Sequence[int]) -> tuple[int, list[list[int]]]:
    """Column-reduce the row vector ``w`` to ``(g, 0, ..., 0)``.

    Returns ``(g, U)`` where ``U`` is unimodular (``det U = +-1``), ``w @ U``
    equals ``(g, 0, ..., 0)`` and ``g = gcd(w) >= 0``. Column 0 of ``U`` is a
    particular solution of ``w . x = g`` and the remaining columns form a
    basis of the integer kernel of ``w``.
    """
    n = len(w)
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    row = list(w)
    for i in range(1, n):
        a, b = row[0], row[i]
        if b == 0:
            continue
        x, y, g = xgcd(a, b)
        ag, bg = a // g, b // g
        for r in range(n):
            c0, ci = U[r][0], U[r][i]
            U[r][0] = x * c0 + y * ci
            U[r][i] = -bg * c0 + ag * ci
        row[0], row[i] = g, 0
    if row[0] < 0:
        row[0] = -row[0]
        for r in range(n):
            U[r][0] = -U[r][0]
    return row[0], U


def mat_vec(A: IntMatrix, v: Sequence[int]) -> list[int]:
    return [sum(a * b for a, b in zip(row, v)) for row in A]


def dot(u: Sequence, v: Sequence):
    return sum(a * b for a, b in zip(u, v))


def transpose(A: IntMatrix) -> list[list]:
    return [list(col) for col in zip(*A)]


def mat_mul(A: IntMatrix, B: IntMatrix) -> list[list]:
    Bt = transpose(B)
    return [[dot(row, col) for col in Bt] for row in A]


def ldl(Q: IntMatrix) -> tuple[list[list[Fraction]], list[Fraction]]:
    """Rational ``Q = L diag(d) L^T`` without pivoting.

    ``L`` is unit lower triangular. Raises ``ZeroDivisionError`` when a zero
    pivot shows up; callers that need robustness use :func:`congruence_diagonal`.
    """
    n = len(Q)
    L = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    d: list[Fraction] = [Fraction(0)] * n
    for j in range(n):
        s = Fraction(Q[j][j]) - sum(L[j][k] * L[j][k] * d[k] for k in range(j))
        d[j] = s
        if j + 1 < n and s == 0:
            raise ZeroDivisionError(f"zero pivot at position {j}")
        for i in range(j + 1, n):
            t = Fraction(Q[i][j]) - sum(L[i][k] * L[j][k] * d[k] for k in range(j))
            L[i][j] = t / s
    return L, d


def congruence_diagonal(Q: IntMatrix) -> list[Fraction]:
    """Diagonal of a rational congruence ``P^T Q P = diag(...)``.

    Symmetric pivoting: pick a nonzero diagonal entry when there is one;
    otherwise, if an off-diagonal ``q_ij`` is nonzero, replace basis vector
    ``e_i`` by ``e_i + e_j`` which creates the diagonal entry ``2 q_ij``.
    Zero pivots are emitted for the radical. By Sylvester's law of inertia the
    sign pattern of the output is the inertia of ``Q``.
    """
    A = [[Fraction(x) for x in row] for row in Q]
    n = len(A)
    out: list[Fraction] = []
    while n:
        p = next((i for i in range(n) if A[i][i] != 0), None)
        if p is None:
            pair = next(
                ((i, j) for i in range(n) for j in range(i + 1, n) if A[i][j] != 0),
                None,
            )
            if pair is None:
                out.extend([Fraction(0)] * n)
                break
            i, j = pair
            for k in range(n):
                A[i][k] += A[j][k]
            for k in range(n):
                A[k][i] += A[k][j]
            p = i
        A[0], A[p] = A[p], A[0]
        for row in A:
            row[0], row[p] = row[p], row[0]
        piv = A[0][0]
        out.append(piv)
        A = [
            [A[i][j] - A[i][0] * A[0][j] / piv for j in range(1, n)]
            for i in range(1, n)
        ]
        n -= 1
    return out


def inertia(Q: IntMatrix) -> tuple[int, int, int]:
    """``(positive, negative, zero)`` counts of the symmetric matrix ``Q``."""
    diag = congruence_diagonal(Q)
    pos = sum(1 for x in diag if x > 0)
    neg = sum(1 for x in diag if x < 0)
    return pos, neg, len(diag) - pos - neg


def determinant(A: IntMatrix) -> int:
    """Exact determinant via fraction-free Bareiss elimination."""
    M = [list(map(int, row)) for row in A]
    n = len(M)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if M[i][k] != 0), None)
            if swap is None:
                return 0
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def solve_rational(A: IntMatrix, b: Sequence) -> list[Fraction]:
    """Solve the square system ``A x = b`` exactly; raises on singular ``A``."""
    n = len(A)
    M = [[Fraction(x) for x in row] + [Fraction(y)] for row, y in zip(A, b)]
    for c in range(n):
        p = next((r for r in range(c, n) if M[r][c] != 0), None)
        if p is None:
            raise ZeroDivisionError("singular system")
        M[c], M[p] = M[p], M[c]
        piv = M[c][c]
        M[c] = [x / piv for x in M[c]]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    return [M[r][n] for r in range(n)]
