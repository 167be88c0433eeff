"""Small exact-rational linear algebra helpers.

Matrices are tuples of row tuples of ``Fraction``.  Everything here is
dimension <= 12, so plain Python loops are fast enough.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Integral, Rational
from typing import Sequence

import numpy as np

from .errors import InvalidInput

Matrix = tuple[tuple[Fraction, ...], ...]


def is_exact_scalar(x) -> bool:
    return isinstance(x, (Integral, Rational)) and not isinstance(x, bool)


def is_exact(values) -> bool:
    """True if every entry (recursively) is an int or Fraction."""
    if isinstance(values, np.ndarray):
        if values.dtype == object:
            return all(is_exact(v) for v in values.ravel())
        return False
    if isinstance(values, (list, tuple)):
        return all(is_exact(v) for v in values)
    return is_exact_scalar(values)


def parse_rational(value) -> Fraction:
    """Parse ``"p/q"`` strings, ints and Fractions.  Floats are rejected."""
    if isinstance(value, bool):
        raise InvalidInput(f"not a rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInput(f"not a rational: {value!r}") from exc
    raise InvalidInput(f"not a rational: {value!r}")


def to_fractions(x: Sequence) -> tuple[Fraction, ...]:
    return tuple(Fraction(v) for v in x)


def matrix(rows) -> Matrix:
    return tuple(tuple(Fraction(v) for v in row) for row in rows)


def identity(n: int) -> Matrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def zeros(n: int, m: int | None = None) -> Matrix:
    m = n if m is None else m
    return tuple(tuple(Fraction(0) for _ in range(m)) for _ in range(n))


def transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a))


def matmul(a: Matrix, b: Matrix) -> Matrix:
    bt = transpose(b)
    return tuple(tuple(sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in bt) for row in a)


def matvec(a, x):
    return tuple(sum((aij * xj for aij, xj in zip(row, x)), 0 * x[0] if x else 0) for row in a)


def dot(x, y):
    return sum((a * b for a, b in zip(x, y)), 0 * x[0] if x else 0)


def bilinear(q: Matrix, x, y):
    return dot(x, matvec(q, y))


def det(a: Matrix) -> Fraction:
    m = [list(row) for row in a]
    n = len(m)
    sign = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if m[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            m[c], m[p] = m[p], m[c]
            sign = -sign
        for r in range(c + 1, n):
            f = m[r][c] / m[c][c]
            if f:
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    out = sign
    for i in range(n):
        out *= m[i][i]
    return out


def inverse(a: Matrix) -> Matrix:
    """Gauss-Jordan inverse; raises ``ZeroDivisionError`` when singular."""
    n = len(a)
    m = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for c in range(n):
        p = next((r for r in range(c, n) if m[r][c] != 0), None)
        if p is None:
            raise ZeroDivisionError("singular matrix")
        m[c], m[p] = m[p], m[c]
        piv = m[c][c]
        m[c] = [x / piv for x in m[c]]
        for r in range(n):
            if r != c and m[r][c] != 0:
                f = m[r][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return tuple(tuple(row[n:]) for row in m)


def solve(a: Matrix, b) -> tuple[Fraction, ...]:
    return matvec(inverse(a), to_fractions(b))


def max_abs(entries) -> Fraction:
    """Max absolute value over a (nested) iterable of exact scalars."""
    best = Fraction(0)
    stack = [entries]
    while stack:
        item = stack.pop()
        if isinstance(item, (list, tuple)):
            stack.extend(item)
        else:
            best = max(best, abs(Fraction(item)))
    return best


def rank(vectors) -> int:
    """Rank of a list of exact vectors."""
    m = [list(map(Fraction, v)) for v in vectors]
    if not m:
        return 0
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c] / m[r][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        r += 1
    return r


def as_float(a) -> np.ndarray:
    return np.array(a, dtype=float)


def fmt(value) -> str:
    """Render a scalar for reports: ``p/q`` for rationals, repr for floats."""
    if is_exact_scalar(value):
        f = Fraction(value)
        return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"
    return repr(float(value))
