"""Cyclotomic and real cyclotomic polynomials, and the field description K+_n.

The supported conductors are n = 2^r k with r >= 2 and k in {1, p, pq} for
distinct odd primes p < q.  For those, ``FieldSpec`` records the sizes used by
the quasi-Vandermonde construction: N = n/4 nodes, of which m = phi(n)/2 are
Galois conjugates of psi_1 = 2 cos(2 pi / n).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from math import gcd

from sympy import factorint

from .polynomials import IntPoly, compose, eval_int, u_poly


class InvalidConductor(ValueError):
    """n is not of the form 2^r k with r >= 2 and k in {1, p, pq}."""


class Case(str, enum.Enum):
    POW2 = "POW2"
    POW2_P = "POW2_P"
    POW2_PQ = "POW2_PQ"


@dataclass(frozen=True)
class FieldSpec:
    n: int
    r: int
    k: int
    p: int | None
    q: int | None

    def __post_init__(self):
        if self.r < 2 or self.n != (1 << self.r) * self.k:
            raise InvalidConductor(f"inconsistent field data for n={self.n}")

    @classmethod
    def from_n(cls, n: int) -> "FieldSpec":
        if n < 4 or n % 4:
            raise InvalidConductor(
                f"n={n} is not divisible by 4; supported conductors are 2^r, 2^r*p, 2^r*p*q with r>=2"
            )
        r = (n & -n).bit_length() - 1
        k = n >> r
        primes = factorint(k) if k > 1 else {}
        if any(e > 1 for e in primes.values()) or len(primes) > 2:
            raise InvalidConductor(
                f"n={n} has odd part {k}; only k = 1, p or p*q (distinct odd primes) are supported"
            )
        ps = sorted(primes)
        p = ps[0] if ps else None
        q = ps[1] if len(ps) > 1 else None
        return cls(n=n, r=r, k=k, p=p, q=q)

    @property
    def case(self) -> Case:
        if self.p is None:
            return Case.POW2
        return Case.POW2_P if self.q is None else Case.POW2_PQ

    @property
    def h(self) -> int:
        """2^(r-2), the block size every construction is built from."""
        return 1 << (self.r - 2)

    @property
    def N(self) -> int:
        return self.n // 4

    @property
    def m(self) -> int:
        phi_k = 1
        for prime in (self.p, self.q):
            if prime is not None:
                phi_k *= prime - 1
        return self.h * phi_k

    @property
    def s1(self) -> int:
        return self.m

    @property
    def s2(self) -> int:
        return 0

    def is_good_index(self, j: int) -> bool:
        return gcd(j, self.k) == 1

    def __str__(self) -> str:
        parts = [f"2^{self.r}"] + [str(x) for x in (self.p, self.q) if x is not None]
        return f"n={self.n} ({'*'.join(parts)}, {self.case.value}, N={self.N}, m={self.m})"


@lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> IntPoly:
    """Phi_n by exact division of x^n - 1 by Phi_d for the proper divisors d."""
    if n < 1:
        raise ValueError("n must be positive")
    poly = IntPoly.monomial(n) - 1
    for d in range(1, n):
        if n % d == 0:
            poly = poly.exact_div(cyclotomic_poly(d))
    return poly


def euler_phi(n: int) -> int:
    out = n
    for prime in factorint(n):
        out = out // prime * (prime - 1)
    return out


@lru_cache(maxsize=None)
def folded_real_cyclotomic(n: int) -> IntPoly:
    """Phi_n^+ for n >= 3, by folding the palindromic Phi_n.

    Writing Phi_n(x) / x^d = c_d + sum_j c_{d+j} (x^j + x^-j) with d = phi(n)/2
    and using x^j + x^-j = u_j(x + 1/x) gives Phi_n^+ in the u-basis.
    """
    if n < 3:
        raise ValueError("Phi_n^+ is defined here for n >= 3")
    c = cyclotomic_poly(n).coeffs
    d = (len(c) - 1) // 2
    out = IntPoly.const(c[d])
    for j in range(1, d + 1):
        out = out + c[d + j] * u_poly(j)
    return out


@lru_cache(maxsize=None)
def _real_cyclotomic_pow2k(r: int, k: int) -> IntPoly:
    if k == 1:
        return u_poly(1 << (r - 2))
    base = folded_real_cyclotomic(k)
    num = compose(base, u_poly(1 << r))
    den = compose(base, u_poly(1 << (r - 1)))
    quot, rem = num.divmod(den)
    if not rem.is_zero():
        raise ArithmeticError(
            f"internal inconsistency: Phi_{k}^+(u_{{2^{r-1}}}) does not divide Phi_{k}^+(u_{{2^{r}}})"
        )
    return quot


def real_cyclotomic_poly(spec: FieldSpec) -> IntPoly:
    """Minimal polynomial of psi_1 = 2cos(2pi/n), degree m.

    Uses Phi_{2^r}^+ = u_{2^(r-2)} and, for k > 1,
    Phi_{2^r k}^+(x) = Phi_k^+(u_{2^r}(x)) / Phi_k^+(u_{2^(r-1)}(x)).
    """
    return _real_cyclotomic_pow2k(spec.r, spec.k)


def real_cyclotomic_any(n: int) -> IntPoly:
    """Phi_n^+ for any n divisible by 4 (composition formula) or n >= 3."""
    if n % 4 == 0:
        r = (n & -n).bit_length() - 1
        return _real_cyclotomic_pow2k(r, n >> r)
    return folded_real_cyclotomic(n)


def verify_plus_minus_relation(n: int) -> bool:
    """Check Phi_n^+(x + 1/x) * x^(phi(n)/2) == Phi_n(x) as polynomials."""
    if n % 4:
        raise ValueError("n must be divisible by 4")
    plus = real_cyclotomic_any(n)
    d = plus.degree
    # sum_i c_i (x^2 + 1)^i x^(d - i)
    x2p1 = IntPoly((1, 0, 1))
    expanded = IntPoly()
    power = IntPoly.const(1)
    for i, c in enumerate(plus.coeffs):
        if c:
            expanded = expanded + c * power * IntPoly.monomial(d - i)
        power = power * x2p1
    return expanded == cyclotomic_poly(n)


@dataclass(frozen=True)
class SpecialValues:
    at1: int
    at_minus1: int
    at2: int
    at_minus2: int

    def as_dict(self) -> dict[str, int]:
        return {"at1": self.at1, "at_minus1": self.at_minus1, "at2": self.at2, "at_minus2": self.at_minus2}


def special_values(spec: FieldSpec | IntPoly) -> SpecialValues:
    f = real_cyclotomic_poly(spec) if isinstance(spec, FieldSpec) else spec
    return SpecialValues(
        at1=eval_int(f, 1), at_minus1=eval_int(f, -1), at2=eval_int(f, 2), at_minus2=eval_int(f, -2)
    )


def expected_special_values(spec: FieldSpec) -> tuple[int, int]:
    """(Phi^+(1), Phi^+(2)) as predicted in closed form for the family.

    The prediction at 1 fails for k = 3: Phi_3^+(-1) = 0 makes the quotient
    formula 0/0 there and the true value is -2.  Use ``special_values`` for
    the actual values.
    """
    if spec.k == 1:
        return (1 if spec.r == 2 else -1), 2
    return 1, 1
