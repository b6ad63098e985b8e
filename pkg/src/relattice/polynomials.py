"""Exact integer polynomials and the rescaled Chebyshev family.

``u_poly(i)`` returns ``u_i(x) = 2 t_i(x/2)`` where ``t_i`` is the Chebyshev
polynomial of the first kind, so that ``u_i(2 cos(theta)) = 2 cos(i theta)``.
The family has integer coefficients, is monic for ``i >= 1`` and satisfies

    u_{i+j} + u_{|i-j|} = u_i u_j,        u_j(u_l(x)) = u_{jl}(x).

Note that ``u_2 = x^2 - 2`` (some sources misprint it as ``x^2 - 1``).

Besides the exact ``IntPoly`` value type, this module carries the small amount
of F_q[x] arithmetic (remainders, gcd, modular powers of x) needed by the
attack audit.
"""

from __future__ import annotations

import threading
from fractions import Fraction
from typing import Iterable, Sequence

import gmpy2
from gmpy2 import mpfr


def _trim(coeffs: Iterable[int]) -> tuple[int, ...]:
    c = [int(a) for a in coeffs]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


class IntPoly:
    """Dense polynomial over Z; ``coeffs[i]`` is the coefficient of x^i.

    Values are immutable and kept in canonical form (no trailing zeros, the
    zero polynomial has no coefficients).
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs: Iterable[int] = ()):
        object.__setattr__(self, "_c", _trim(coeffs))

    def __setattr__(self, name, value):
        raise AttributeError("IntPoly is immutable")

    @classmethod
    def x(cls) -> "IntPoly":
        return cls((0, 1))

    @classmethod
    def const(cls, c: int) -> "IntPoly":
        return cls((c,))

    @classmethod
    def monomial(cls, k: int, c: int = 1) -> "IntPoly":
        return cls((0,) * k + (c,))

    @property
    def coeffs(self) -> tuple[int, ...]:
        return self._c

    @property
    def degree(self) -> int:
        """Degree, with -1 for the zero polynomial."""
        return len(self._c) - 1

    @property
    def lead(self) -> int:
        return self._c[-1] if self._c else 0

    def is_zero(self) -> bool:
        return not self._c

    def is_monic(self) -> bool:
        return self.lead == 1

    def __getitem__(self, i: int) -> int:
        return self._c[i] if 0 <= i < len(self._c) else 0

    def __len__(self) -> int:
        return len(self._c)

    def __iter__(self):
        return iter(self._c)

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = IntPoly.const(other)
        return isinstance(other, IntPoly) and self._c == other._c

    def __hash__(self) -> int:
        return hash(self._c)

    def __repr__(self) -> str:
        return f"IntPoly({list(self._c)})"

    def __str__(self) -> str:
        if not self._c:
            return "0"
        terms = []
        for k in range(len(self._c) - 1, -1, -1):
            a = self._c[k]
            if a == 0:
                continue
            mag = abs(a)
            if k == 0:
                body = str(mag)
            else:
                base = "x" if k == 1 else f"x^{k}"
                body = base if mag == 1 else f"{mag}*{base}"
            sign = "-" if a < 0 else "+"
            terms.append((sign, body))
        first_sign, first = terms[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in terms[1:]:
            out += f" {sign} {body}"
        return out

    # ring operations

    def __add__(self, other) -> "IntPoly":
        other = _lift(other)
        a, b = self._c, other._c
        if len(a) < len(b):
            a, b = b, a
        return IntPoly([a[i] + (b[i] if i < len(b) else 0) for i in range(len(a))])

    __radd__ = __add__

    def __neg__(self) -> "IntPoly":
        return IntPoly([-a for a in self._c])

    def __sub__(self, other) -> "IntPoly":
        return self + (-_lift(other))

    def __rsub__(self, other) -> "IntPoly":
        return _lift(other) - self

    def __mul__(self, other) -> "IntPoly":
        if isinstance(other, int):
            return IntPoly([other * a for a in self._c])
        a, b = self._c, other._c
        if not a or not b:
            return IntPoly()
        out = [0] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    out[i + j] += ai * bj
        return IntPoly(out)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "IntPoly":
        if e < 0:
            raise ValueError("negative exponent")
        result, base = IntPoly.const(1), self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def divmod(self, divisor: "IntPoly") -> tuple["IntPoly", "IntPoly"]:
        """Euclidean division over Z; the divisor's leading coefficient must
        divide every intermediate leading term (always true for monic divisors).
        """
        if divisor.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        rem = list(self._c)
        d = divisor._c
        dl = d[-1]
        nd = len(d) - 1
        if len(rem) - 1 < nd:
            return IntPoly(), self
        quot = [0] * (len(rem) - nd)
        for k in range(len(rem) - 1, nd - 1, -1):
            c = rem[k]
            if c == 0:
                continue
            qk, r = divmod(c, dl)
            if r:
                raise ArithmeticError("division not exact over the integers")
            quot[k - nd] = qk
            for j in range(nd + 1):
                rem[k - nd + j] -= qk * d[j]
        return IntPoly(quot), IntPoly(rem[:nd])

    def __mod__(self, divisor: "IntPoly") -> "IntPoly":
        return self.divmod(divisor)[1]

    def exact_div(self, divisor: "IntPoly") -> "IntPoly":
        q, r = self.divmod(divisor)
        if not r.is_zero():
            raise ArithmeticError(f"{divisor} does not divide {self}")
        return q

    def derivative(self) -> "IntPoly":
        return IntPoly([k * a for k, a in enumerate(self._c)][1:])

    def is_even(self) -> bool:
        return all(a == 0 for a in self._c[1::2])

    def is_odd(self) -> bool:
        return all(a == 0 for a in self._c[0::2])


def _lift(p) -> IntPoly:
    if isinstance(p, IntPoly):
        return p
    if isinstance(p, int):
        return IntPoly.const(p)
    raise TypeError(f"cannot treat {type(p).__name__} as IntPoly")


ZERO = IntPoly()
ONE = IntPoly.const(1)
X = IntPoly.x()

# u_poly memo: populated under a lock, read lock-free afterwards.
_U_CACHE: list[IntPoly] = [IntPoly.const(2), X]
_U_LOCK = threading.Lock()


def u_poly(i: int) -> IntPoly:
    """Return u_i(x) = 2 t_i(x/2) via u_i = x u_{i-1} - u_{i-2}."""
    if i < 0:
        raise ValueError("index must be non-negative")
    if i < len(_U_CACHE):
        return _U_CACHE[i]
    with _U_LOCK:
        while len(_U_CACHE) <= i:
            _U_CACHE.append(X * _U_CACHE[-1] - _U_CACHE[-2])
    return _U_CACHE[i]


def compose(outer: IntPoly, inner: IntPoly) -> IntPoly:
    """outer(inner(x)), exactly (Horner in the polynomial ring)."""
    result = ZERO
    for a in reversed(outer.coeffs):
        result = result * inner + a
    return result


def eval_int(p: IntPoly, x: int) -> int:
    acc = 0
    for a in reversed(p.coeffs):
        acc = acc * x + a
    return acc


def eval_mod(p: IntPoly, x: int, q: int) -> int:
    """p(x) mod q with a reduction after every Horner step."""
    if q < 2:
        raise ValueError("modulus must be at least 2")
    x %= q
    acc = 0
    for a in reversed(p.coeffs):
        acc = (acc * x + a) % q
    return acc


def eval_frac(p: IntPoly, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for a in reversed(p.coeffs):
        acc = acc * x + a
    return acc


def to_mpfr(x, prec: int) -> mpfr:
    """Round ``x`` (int, Fraction, str, float or mpfr) to ``prec`` bits."""
    if isinstance(x, Fraction):
        with gmpy2.context(precision=prec):
            return mpfr(gmpy2.mpq(x.numerator, x.denominator))
    return mpfr(x, prec)


def eval_real(p: IntPoly, x, prec: int = 256) -> mpfr:
    """Horner evaluation at ``prec`` bits of working precision."""
    if prec < 53:
        raise ValueError("precision must be at least 53 bits")
    with gmpy2.context(precision=prec):
        xv = to_mpfr(x, prec)
        acc = mpfr(0)
        for a in reversed(p.coeffs):
            acc = acc * xv + a
        return acc


def from_u_basis(coeffs: Sequence[int]) -> IntPoly:
    """sum_i coeffs[i] * u_i(x)."""
    out = ZERO
    for i, c in enumerate(coeffs):
        if c:
            out = out + c * u_poly(i)
    return out


def to_u_basis(p: IntPoly) -> list[int]:
    """Coordinates of ``p`` in the basis u_0, ..., u_deg.

    Raises ArithmeticError when the constant coordinate is not an integer
    (the basis element u_0 = 2 is not monic).
    """
    rem = p
    out = [0] * max(p.degree + 1, 0)
    for k in range(p.degree, 0, -1):
        c = rem[k]
        if c:
            out[k] = c
            rem = rem - c * u_poly(k)
    c0 = rem[0]
    if c0 % 2:
        raise ArithmeticError("u_0 coordinate is not integral")
    if out:
        out[0] = c0 // 2
    return out


# --- F_q[x] helpers on plain coefficient lists (low degree first) ----------


def _fq_trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def fq_reduce(p: IntPoly | Sequence[int], q: int) -> list[int]:
    coeffs = p.coeffs if isinstance(p, IntPoly) else p
    return _fq_trim([c % q for c in coeffs])


def fq_mul(a: Sequence[int], b: Sequence[int], q: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return _fq_trim([c % q for c in out])


def fq_divmod(a: Sequence[int], b: Sequence[int], q: int) -> tuple[list[int], list[int]]:
    b = _fq_trim([c % q for c in b])
    if not b:
        raise ZeroDivisionError("division by zero polynomial mod q")
    rem = [c % q for c in a]
    inv = pow(b[-1], -1, q)
    nb = len(b) - 1
    quot = [0] * max(len(rem) - nb, 0)
    for k in range(len(rem) - 1, nb - 1, -1):
        c = rem[k] % q
        if c == 0:
            continue
        t = c * inv % q
        quot[k - nb] = t
        for j in range(nb + 1):
            rem[k - nb + j] = (rem[k - nb + j] - t * b[j]) % q
    return _fq_trim(quot), _fq_trim(rem[:nb])


def fq_mod(a: Sequence[int], b: Sequence[int], q: int) -> list[int]:
    return fq_divmod(a, b, q)[1]


def fq_gcd(a: Sequence[int], b: Sequence[int], q: int) -> list[int]:
    """Monic gcd over F_q (empty list for gcd(0, 0))."""
    a = _fq_trim([c % q for c in a])
    b = _fq_trim([c % q for c in b])
    while b:
        a, b = b, fq_mod(a, b, q)
    if not a:
        return a
    inv = pow(a[-1], -1, q)
    return [c * inv % q for c in a]


def fq_powmod_x(e: int, f: Sequence[int], q: int) -> list[int]:
    """x^e mod (f, q) by square-and-multiply."""
    result = [1]
    base = fq_mod([0, 1], f, q)
    while e:
        if e & 1:
            result = fq_mod(fq_mul(result, base, q), f, q)
        base = fq_mod(fq_mul(base, base, q), f, q)
        e >>= 1
    return result


def eval_u_real(i: int, x, prec: int = 256) -> mpfr:
    """u_i(x) by the three-term recurrence (stable on [-2, 2], unlike Horner)."""
    if i < 0:
        raise ValueError("index must be non-negative")
    with gmpy2.context(precision=prec):
        xv = to_mpfr(x, prec)
        prev, cur = mpfr(2), xv
        if i == 0:
            return prev
        for _ in range(i - 1):
            prev, cur = cur, xv * cur - prev
        return cur
