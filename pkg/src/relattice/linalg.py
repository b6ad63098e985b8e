"""Dense linear algebra over big floats (gmpy2 ``mpfr``) and over the integers.

``BigMatrix`` stores its entries rounded to an explicit working precision and
performs every operation in a gmpy2 context at that precision.  Inverses use
LU with partial pivoting followed by residual refinement; a matrix whose
inverse cannot be refined below the requested residual raises
``PrecisionExhausted`` so that callers can retry at a higher precision.

Integer matrices are plain ``list[list[int]]``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import gmpy2
from gmpy2 import mpfr

IntMatrix = list[list[int]]


class SingularMatrixError(ArithmeticError):
    pass


class PrecisionExhausted(ArithmeticError):
    """Working precision too low to reach the requested residual."""


def decimal_digits(prec: int) -> int:
    return int(math.ceil(prec * math.log10(2))) + 1


def mpfr_str(x: mpfr, prec: int | None = None) -> str:
    """Decimal string carrying the full binary precision of ``x``."""
    p = prec or x.precision
    return "{0:.{1}g}".format(x, decimal_digits(p))


def to_fraction(x: mpfr) -> Fraction:
    return Fraction(*x.as_integer_ratio())


class BigMatrix:
    __slots__ = ("rows", "prec")

    def __init__(self, rows: Iterable[Iterable], prec: int):
        if prec < 53:
            raise ValueError("precision must be at least 53 bits")
        with gmpy2.context(precision=prec):
            data = tuple(tuple(_as_mpfr(v, prec) for v in row) for row in rows)
        if data and any(len(r) != len(data[0]) for r in data):
            raise ValueError("ragged rows")
        self.rows = data
        self.prec = prec

    @classmethod
    def identity(cls, n: int, prec: int) -> "BigMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], prec)

    @classmethod
    def from_int(cls, m: Sequence[Sequence[int]], prec: int) -> "BigMatrix":
        return cls(m, prec)

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    @property
    def is_square(self) -> bool:
        r, c = self.shape
        return r == c

    def __getitem__(self, ij: tuple[int, int]) -> mpfr:
        i, j = ij
        return self.rows[i][j]

    def __repr__(self) -> str:
        r, c = self.shape
        return f"BigMatrix({r}x{c}, prec={self.prec})"

    def column(self, j: int) -> list[mpfr]:
        return [row[j] for row in self.rows]

    def transpose(self) -> "BigMatrix":
        return BigMatrix(zip(*self.rows), self.prec)

    def block(self, r0: int, r1: int, c0: int, c1: int) -> "BigMatrix":
        return BigMatrix([row[c0:c1] for row in self.rows[r0:r1]], self.prec)

    def permute_rows(self, order: Sequence[int]) -> "BigMatrix":
        return BigMatrix([self.rows[i] for i in order], self.prec)

    def with_precision(self, prec: int) -> "BigMatrix":
        return BigMatrix(self.rows, prec)

    def scaled(self, c) -> "BigMatrix":
        with gmpy2.context(precision=self.prec):
            cv = _as_mpfr(c, self.prec)
            return BigMatrix([[cv * a for a in row] for row in self.rows], self.prec)

    def __matmul__(self, other: "BigMatrix") -> "BigMatrix":
        if self.shape[1] != other.shape[0]:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        prec = max(self.prec, other.prec)
        cols = list(zip(*other.rows))
        with gmpy2.context(precision=prec):
            out = [[gmpy2.fsum([a * b for a, b in zip(row, col)]) for col in cols] for row in self.rows]
        return BigMatrix(out, prec)

    def matmul_int(self, m: IntMatrix) -> "BigMatrix":
        """self @ m for a (typically sparse) integer matrix m."""
        if self.shape[1] != len(m):
            raise ValueError("shape mismatch")
        ncols = len(m[0]) if m else 0
        support = [[(i, m[i][j]) for i in range(len(m)) if m[i][j]] for j in range(ncols)]
        with gmpy2.context(precision=self.prec):
            out = [
                [gmpy2.fsum([row[i] * c for i, c in sup]) if sup else mpfr(0) for sup in support]
                for row in self.rows
            ]
        return BigMatrix(out, self.prec)

    def apply(self, vec: Sequence) -> list[mpfr]:
        if len(vec) != self.shape[1]:
            raise ValueError(f"vector of length {len(vec)} for a {self.shape} matrix")
        with gmpy2.context(precision=self.prec):
            v = [_as_mpfr(x, self.prec) for x in vec]
            return [gmpy2.fsum([a * b for a, b in zip(row, v)]) for row in self.rows]

    def frobenius(self) -> mpfr:
        with gmpy2.context(precision=self.prec):
            return gmpy2.sqrt(gmpy2.fsum([a * a for row in self.rows for a in row]))

    def max_abs(self) -> mpfr:
        with gmpy2.context(precision=self.prec):
            return max((abs(a) for row in self.rows for a in row), default=mpfr(0))

    def max_abs_diff(self, other: "BigMatrix") -> mpfr:
        with gmpy2.context(precision=max(self.prec, other.prec)):
            return max(
                (abs(a - b) for ra, rb in zip(self.rows, other.rows) for a, b in zip(ra, rb)),
                default=mpfr(0),
            )

    def to_strings(self) -> list[list[str]]:
        return [[mpfr_str(a, self.prec) for a in row] for row in self.rows]

    def inverse(self, residual_exponent: Callable[[int], int] | None = None) -> "BigMatrix":
        """Inverse via LU with partial pivoting plus residual refinement.

        Refinement stops once ||M X - I||_F <= 2^e with e = -prec/2 unless
        ``residual_exponent`` maps prec to another exponent.
        """
        if not self.is_square:
            raise ValueError("inverse of a non-square matrix")
        target_exp = residual_exponent(self.prec) if residual_exponent else -(self.prec // 2)
        return BigMatrix(_refined_inverse(self.rows, self.prec, target_exp), self.prec)


def _as_mpfr(v, prec: int) -> mpfr:
    if isinstance(v, Fraction):
        return mpfr(gmpy2.mpq(v.numerator, v.denominator), prec)
    if isinstance(v, mpfr) and v.precision == prec:
        return v
    return mpfr(v, prec)


def _lu(rows, prec):
    n = len(rows)
    a = [list(r) for r in rows]
    perm = list(range(n))
    for k in range(n):
        p = max(range(k, n), key=lambda i: abs(a[i][k]))
        if a[p][k] == 0:
            raise SingularMatrixError(f"zero pivot in column {k} at {prec} bits")
        if p != k:
            a[k], a[p] = a[p], a[k]
            perm[k], perm[p] = perm[p], perm[k]
        rk = a[k]
        piv = rk[k]
        tail = rk[k + 1 :]
        for i in range(k + 1, n):
            ri = a[i]
            f = ri[k] / piv
            ri[k] = f
            if f:
                ri[k + 1 :] = [x - f * y for x, y in zip(ri[k + 1 :], tail)]
    return a, perm


def _lu_inverse(rows, prec):
    n = len(rows)
    lu, perm = _lu(rows, prec)
    zero, one = mpfr(0), mpfr(1)
    # rhs rows: P applied to the identity
    x = [[one if j == perm[i] else zero for j in range(n)] for i in range(n)]
    for k in range(n):
        xk = x[k]
        for i in range(k + 1, n):
            f = lu[i][k]
            if f:
                x[i] = [a - f * b for a, b in zip(x[i], xk)]
    for k in range(n - 1, -1, -1):
        piv = lu[k][k]
        xk = [a / piv for a in x[k]]
        x[k] = xk
        for i in range(k):
            f = lu[i][k]
            if f:
                x[i] = [a - f * b for a, b in zip(x[i], xk)]
    return x


def _residual(m_rows, x_rows):
    n = len(m_rows)
    cols = list(zip(*x_rows))
    return [
        [(1 if i == j else 0) - gmpy2.fsum([a * b for a, b in zip(m_rows[i], cols[j])]) for j in range(n)]
        for i in range(n)
    ]


def _refined_inverse(rows, prec, target_exp, max_steps=4):
    with gmpy2.context(precision=prec):
        x = _lu_inverse(rows, prec)
        tol = mpfr(2) ** target_exp
        for _ in range(max_steps + 1):
            e = _residual(rows, x)
            err = gmpy2.sqrt(gmpy2.fsum([v * v for r in e for v in r]))
            if err <= tol:
                return x
            # X <- X + X E
            ecols = list(zip(*e))
            x = [[xi + gmpy2.fsum([a * b for a, b in zip(xrow, col)]) for xi, col in zip(xrow, ecols)] for xrow in x]
        raise PrecisionExhausted(
            f"inverse residual {float(err):.3e} above 2^{target_exp} at {prec} bits"
        )


# --- exact integer matrices ------------------------------------------------


def int_identity(n: int) -> IntMatrix:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def int_matmul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    cols = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col) if x) for col in cols] for row in a]


def int_frob2(a: IntMatrix) -> int:
    """Squared Frobenius norm, exactly."""
    return sum(v * v for row in a for v in row)


def is_unit_upper_triangular(a: IntMatrix) -> bool:
    n = len(a)
    return all(a[i][i] == 1 for i in range(n)) and all(a[i][j] == 0 for i in range(n) for j in range(i))


def unit_upper_inverse(a: IntMatrix) -> IntMatrix:
    """Exact inverse of a unit upper-triangular integer matrix (back substitution)."""
    if not is_unit_upper_triangular(a):
        raise ValueError("matrix is not unit upper triangular")
    n = len(a)
    inv = int_identity(n)
    for i in range(n - 1, -1, -1):
        row = inv[i]
        for j in range(i + 1, n):
            c = a[i][j]
            if c:
                rj = inv[j]
                for t in range(j, n):
                    if rj[t]:
                        row[t] -= c * rj[t]
    return inv


def bareiss_det(m: Sequence[Sequence[int]]) -> int:
    """Determinant by fraction-free (Bareiss) elimination."""
    a = [list(map(int, row)) for row in m]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        akk = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            ri = a[i]
            rk = a[k]
            for j in range(k + 1, n):
                ri[j] = (ri[j] * akk - aik * rk[j]) // prev
            ri[k] = 0
        prev = akk
    return sign * a[n - 1][n - 1]
