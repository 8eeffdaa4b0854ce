"""Exact rational arithmetic helpers shared by the geometric kernel.

Everything geometric in this package runs on exact rationals. gmpy2.mpq is
used when available (much faster than fractions.Fraction); the stdlib
Fraction is a drop-in fallback. All helpers accept ints, Fractions, mpq,
numeric strings like "3/5", and floats (converted exactly, a float is a
dyadic rational).
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

try:
    from gmpy2 import is_square as _is_square
    from gmpy2 import isqrt as _isqrt
    from gmpy2 import mpq as _mpq
    from gmpy2 import mpz as _mpz

    def Q(a, b=None):
        if b is not None:
            return _mpq(a, b)
        if isinstance(a, float):
            n, d = a.as_integer_ratio()
            return _mpq(n, d)
        num = getattr(a, "numerator", None)
        if num is not None and not isinstance(a, (int, _mpz)):
            # gmpy2 rejects Fractions holding mpz internals; split them
            return _mpq(int(num), int(a.denominator))
        return _mpq(a)

    HAVE_GMPY = True
except ImportError:  # pragma: no cover - exercised only without gmpy2
    _mpz = int

    def _isqrt(n):
        return math.isqrt(n)

    def _is_square(n):
        r = math.isqrt(n)
        return r * r == n

    def Q(a, b=None):
        if b is None:
            return Fraction(a)
        return Fraction(a, b)

    HAVE_GMPY = False

QZERO = Q(0)
QONE = Q(1)

Vector = tuple
Rational = type(QZERO)


def to_q(x):
    """Coerce a scalar (int, str, float, Fraction, mpq) to an exact rational."""
    if type(x) is Rational:
        return x
    return Q(x)


def qvec(xs: Iterable) -> tuple:
    return tuple(to_q(x) for x in xs)


def format_q(x) -> str:
    """Render a rational as "p" or "p/q" for JSON payloads."""
    x = to_q(x)
    n, d = x.numerator, x.denominator
    if d == 1:
        return str(int(n))
    return f"{int(n)}/{int(d)}"


def dot(u: Sequence, v: Sequence):
    acc = QZERO
    for a, b in zip(u, v):
        acc += a * b
    return acc


def vadd(u: Sequence, v: Sequence) -> tuple:
    return tuple(a + b for a, b in zip(u, v))


def vsub(u: Sequence, v: Sequence) -> tuple:
    return tuple(a - b for a, b in zip(u, v))


def vscale(c, u: Sequence) -> tuple:
    c = to_q(c)
    return tuple(c * a for a in u)


def norm_sq(u: Sequence):
    return dot(u, u)


def solve_linear(rows: Sequence[Sequence], rhs: Sequence):
    """Solve a square rational system exactly.

    Returns the solution tuple, or None when the matrix is singular.
    """
    n = len(rows)
    aug = [list(r) + [rhs[i]] for i, r in enumerate(rows)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if aug[r][col] != 0:
                piv = r
                break
        if piv is None:
            return None
        if piv != col:
            aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [inv * x for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                row = aug[r]
                prow = aug[col]
                aug[r] = [row[j] - f * prow[j] for j in range(n + 1)]
    return tuple(aug[i][n] for i in range(n))


def det(rows: Sequence[Sequence]):
    """Exact determinant by fraction Gaussian elimination."""
    n = len(rows)
    m = [list(map(to_q, r)) for r in rows]
    sign = 1
    result = QONE
    for col in range(n):
        piv = None
        for r in range(col, n):
            if m[r][col] != 0:
                piv = r
                break
        if piv is None:
            return QZERO
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            sign = -sign
        pivot = m[col][col]
        result *= pivot
        inv = 1 / pivot
        for r in range(col + 1, n):
            if m[r][col] != 0:
                f = m[r][col] * inv
                mr = m[r]
                mc = m[col]
                for j in range(col + 1, n):
                    mr[j] -= f * mc[j]
    return sign * result


def det_int(rows: Sequence[Sequence[int]]) -> int:
    """Bareiss fraction-free determinant for integer matrices."""
    n = len(rows)
    m = [[_mpz(x) for x in r] for r in rows]
    sign = 1
    prev = _mpz(1)
    for col in range(n - 1):
        if m[col][col] == 0:
            piv = None
            for r in range(col + 1, n):
                if m[r][col] != 0:
                    piv = r
                    break
            if piv is None:
                return 0
            m[col], m[piv] = m[piv], m[col]
            sign = -sign
        for r in range(col + 1, n):
            for j in range(col + 1, n):
                m[r][j] = (m[r][j] * m[col][col] - m[r][col] * m[col][j]) // prev
            m[r][col] = _mpz(0)
        prev = m[col][col]
    return int(sign * m[n - 1][n - 1])


def matrix_inverse(rows: Sequence[Sequence]):
    """Exact inverse of a square rational matrix, or None if singular."""
    n = len(rows)
    aug = [list(map(to_q, rows[i])) + [QONE if j == i else QZERO for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if aug[r][col] != 0:
                piv = r
                break
        if piv is None:
            return None
        if piv != col:
            aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [inv * x for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [aug[r][j] - f * aug[col][j] for j in range(2 * n)]
    return [tuple(aug[i][n:]) for i in range(n)]


def matrix_rank(rows: Sequence[Sequence]) -> int:
    if not rows:
        return 0
    m = [list(map(to_q, r)) for r in rows]
    nrows, ncols = len(m), len(m[0])
    rank = 0
    row = 0
    for col in range(ncols):
        piv = None
        for r in range(row, nrows):
            if m[r][col] != 0:
                piv = r
                break
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        inv = 1 / m[row][col]
        m[row] = [inv * x for x in m[row]]
        for r in range(nrows):
            if r != row and m[r][col] != 0:
                f = m[r][col]
                m[r] = [m[r][j] - f * m[row][j] for j in range(ncols)]
        rank += 1
        row += 1
        if row == nrows:
            break
    return rank


def rational_sqrt(x):
    """Exact square root of a nonnegative rational, or None when irrational."""
    x = to_q(x)
    if x < 0:
        raise ValueError("negative radicand")
    n, d = x.numerator, x.denominator
    if not (_is_square(n) and _is_square(d)):
        return None
    return Q(int(_isqrt(n)), int(_isqrt(d)))


def rationalize(x: float, max_denominator: int = 1 << 40):
    """Nearest rational with bounded denominator (continued fractions)."""
    return Q(Fraction(x).limit_denominator(max_denominator))


def primitive_normal(normal: Sequence) -> tuple:
    """Scale a rational vector to coprime integers, preserving direction.

    Used as a canonical key when deduplicating parallel constraint rows.
    """
    dens = [to_q(x).denominator for x in normal]
    lcm = 1
    for d in dens:
        lcm = lcm * d // math.gcd(lcm, int(d))
    ints = [int(to_q(x).numerator) * (lcm // int(to_q(x).denominator)) for x in normal]
    g = 0
    for v in ints:
        g = math.gcd(g, abs(v))
    if g == 0:
        return tuple(0 for _ in ints)
    return tuple(v // g for v in ints)


def gram_matrix(vectors: Sequence[Sequence]):
    return [tuple(dot(u, v) for v in vectors) for u in vectors]


def project_out(vector: Sequence, basis: Sequence[Sequence]) -> tuple:
    """Orthogonal projection of `vector` onto the complement of span(basis).

    The basis need not be orthonormal; an exact Gram solve is used.
    """
    if not basis:
        return tuple(vector)
    g = gram_matrix(basis)
    rhs = [dot(b, vector) for b in basis]
    coeffs = solve_linear(g, rhs)
    if coeffs is None:
        raise ValueError("basis is linearly dependent")
    out = list(vector)
    for c, b in zip(coeffs, basis):
        for i in range(len(out)):
            out[i] -= c * b[i]
    return tuple(out)
