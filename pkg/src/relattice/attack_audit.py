"""Audit of the root-based PLWE attack conditions for a polynomial f and a prime q.

Checked predicates: total splitting of q, f(1) = 0 mod q, roots of small
multiplicative order, roots of small residue (min(alpha, q - alpha)), q > deg^2,
and the noise inequality (alpha^(2n) - 1)/(alpha - 1) <= q^2 / (64 sigma^2).

The order scan needs no factorization of q - 1: for every d <= max_order
dividing q - 1 it finds an element y of order exactly d as a power
x^((q-1)/d) and enumerates y^j for j prime to d.  Orders of roots found by
the residue scan do need the factorization of q - 1 (trial division up to
10^6, hints, and a primality test on the cofactor); when that fails the
order is reported as unknown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import gmpy2
import sympy

from .cyclotomic import FieldSpec, expected_special_values, real_cyclotomic_poly
from .polynomials import IntPoly, eval_mod, fq_gcd, fq_mod, fq_powmod_x, fq_reduce

TRIAL_DIVISION_LIMIT = 10**6
_GENERATOR_TRIES = 256


def require_odd_prime(q: int) -> None:
    if q < 3 or q % 2 == 0 or not gmpy2.is_prime(q, 50):
        raise ValueError(f"q={q} is not an odd prime")


def factor_q_minus_1(q: int, hints: Iterable[int] = ()) -> dict[int, int] | None:
    """Factorization of q - 1, or None when a composite cofactor remains."""
    rest = q - 1
    out: dict[int, int] = {}
    for h in hints:
        h = int(h)
        if h > 1 and gmpy2.is_prime(h):
            while rest % h == 0:
                rest //= h
                out[h] = out.get(h, 0) + 1
    small = sympy.factorint(rest, limit=TRIAL_DIVISION_LIMIT, use_rho=False, use_pm1=False, use_ecm=False)
    for p, e in small.items():
        if p > TRIAL_DIVISION_LIMIT and not gmpy2.is_prime(p):
            return None
        out[int(p)] = out.get(int(p), 0) + e
    return dict(sorted(out.items()))


def multiplicative_order(alpha: int, q: int, factors: dict[int, int] | None) -> int | None:
    alpha %= q
    if alpha == 0:
        return None
    if factors is None:
        return None
    order = q - 1
    for p, e in factors.items():
        for _ in range(e):
            if pow(alpha, order // p, q) == 1:
                order //= p
            else:
                break
    return order


def _has_exact_order(y: int, d: int, q: int) -> bool:
    if pow(y, d, q) != 1:
        return False
    return all(pow(y, d // r, q) != 1 for r in sympy.primefactors(d))


def elements_of_order(d: int, q: int) -> list[int] | None:
    """All elements of F_q^* of order exactly d (d | q - 1), or None if no generator was found."""
    if (q - 1) % d:
        return []
    if d == 1:
        return [1]
    e = (q - 1) // d
    for x in range(2, 2 + _GENERATOR_TRIES):
        y = pow(x, e, q)
        if _has_exact_order(y, d, q):
            return sorted(pow(y, j, q) for j in range(1, d + 1) if math.gcd(j, d) == 1)
    return None


@dataclass(frozen=True)
class RootRecord:
    alpha: int
    order: int | None
    order_status: str  # "exact", "zero" (alpha = 0) or "unknown"
    residue_magnitude: int
    found_by: str  # "residue", "order" or "exhaustive"


@dataclass
class AttackReport:
    poly_id: str
    f: IntPoly
    q: int
    max_order: int
    max_residue: int
    roots_found: list[RootRecord] = field(default_factory=list)
    conditions: dict[str, bool] = field(default_factory=dict)
    order_scan_skipped: list[int] = field(default_factory=list)
    q_minus_1_factored: bool = True
    elos_inequality: "ElosResult | None" = None

    @property
    def attack_conditions_met(self) -> bool:
        c = self.conditions
        return c.get("totally_split", False) and (
            c.get("f1_zero", False) or c.get("small_order", False) or c.get("small_residue", False)
        )


def _record(f: IntPoly, alpha: int, q: int, factors, found_by: str, order: int | None = None) -> RootRecord:
    if eval_mod(f, alpha, q) != 0:
        raise AssertionError(f"{alpha} is not a root mod {q}")
    if alpha == 0:
        return RootRecord(0, None, "zero", 0, found_by)
    if order is None:
        order = multiplicative_order(alpha, q, factors)
    status = "unknown" if order is None else "exact"
    return RootRecord(alpha, order, status, min(alpha, q - alpha), found_by)


def root_scan(
    f: IntPoly,
    q: int,
    max_order: int = 16,
    max_residue: int = 4,
    factor_hints: Sequence[int] = (),
    exhaustive: bool = False,
    poly_id: str | None = None,
) -> AttackReport:
    """Roots of f mod q of small residue or small multiplicative order.

    With ``exhaustive`` every element of F_q is tested (small q only).
    """
    require_odd_prime(q)
    if max_order < 0 or max_residue < 0:
        raise ValueError("thresholds must be non-negative")
    factors = factor_q_minus_1(q, factor_hints)
    rep = AttackReport(poly_id or str(f), f, q, max_order, max_residue, q_minus_1_factored=factors is not None)
    found: dict[int, RootRecord] = {}

    cands = {a % q for k in range(max_residue + 1) for a in (k, -k)}
    for a in sorted(cands):
        if eval_mod(f, a, q) == 0:
            found[a] = _record(f, a, q, factors, "residue")

    for d in range(1, max_order + 1):
        if (q - 1) % d:
            continue
        elems = elements_of_order(d, q)
        if elems is None:
            rep.order_scan_skipped.append(d)
            continue
        for a in elems:
            if a not in found and eval_mod(f, a, q) == 0:
                found[a] = _record(f, a, q, factors, "order", order=d)

    if exhaustive:
        if q > 10**6:
            raise ValueError("exhaustive scan limited to q <= 10^6")
        for a in range(q):
            if a not in found and eval_mod(f, a, q) == 0:
                found[a] = _record(f, a, q, factors, "exhaustive")

    rep.roots_found = [found[a] for a in sorted(found)]
    rep.conditions = {
        "totally_split": bool(total_split_check(f, q)) if f.degree <= 4096 else False,
        "f1_zero": eval_mod(f, 1, q) == 0,
        "small_order": any(r.order is not None and r.order <= max_order for r in rep.roots_found),
        "small_residue": any(r.residue_magnitude <= max_residue for r in rep.roots_found),
        "q_gt_deg_squared": q > f.degree**2,
    }
    return rep


# --- the noise inequality --------------------------------------------------


@dataclass(frozen=True)
class ElosResult:
    alpha: int
    n_degree: int
    q: int
    sigma: Fraction
    lhs: int
    rhs: Fraction
    satisfied: bool

    @property
    def log2_ratio(self) -> float:
        """log2(lhs / rhs); non-positive exactly when satisfied."""
        return math.log2(self.lhs) - (math.log2(self.rhs.numerator) - math.log2(self.rhs.denominator))


def as_fraction(x) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float (via its repr)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(str(x).strip())


def elos_inequality(alpha: int, n_degree: int, q: int, sigma) -> ElosResult:
    """Exact test of (alpha^(2n) - 1)/(alpha - 1) <= q^2 / (64 sigma^2)."""
    if alpha < 2:
        raise ValueError("alpha must be at least 2")
    if n_degree < 1:
        raise ValueError("degree must be positive")
    s = as_fraction(sigma)
    if s <= 0:
        raise ValueError("sigma must be positive")
    lhs = (alpha ** (2 * n_degree) - 1) // (alpha - 1)
    rhs = Fraction(q * q) / (64 * s * s)
    return ElosResult(alpha, n_degree, q, s, lhs, rhs, lhs <= rhs)


# --- immunity of the real cyclotomic family --------------------------------

SPECIAL_POINTS = (1, -1, 2, -2)


@dataclass(frozen=True)
class ImmunityRow:
    q: int
    values: dict[int, int]  # f(a) mod q for a in SPECIAL_POINTS
    roots: tuple[int, ...]
    predicted_immune: bool | None  # from the closed-form special values

    @property
    def immune(self) -> bool:
        return not self.roots

    @property
    def consistent(self) -> bool:
        return self.predicted_immune is None or self.predicted_immune == self.immune


@dataclass
class ImmunityReport:
    poly_id: str
    f: IntPoly
    rows: list[ImmunityRow]

    @property
    def immune(self) -> bool:
        return all(r.immune for r in self.rows)

    @property
    def consistent(self) -> bool:
        return all(r.consistent for r in self.rows)

    @property
    def failures(self) -> list[int]:
        return [r.q for r in self.rows if not r.immune]


def immunity_report(target: FieldSpec | IntPoly, q_list: Iterable[int], poly_id: str | None = None) -> ImmunityReport:
    """Roots of f in {+-1, +-2} mod each q; f is Phi_n^+ for a FieldSpec target.

    For the real cyclotomic family the prediction uses the closed-form values
    f(+-1) and f(+-2) (the polynomial is even), none of which vanishes mod an odd q.
    """
    if isinstance(target, FieldSpec):
        f = real_cyclotomic_poly(target)
        at1, at2 = expected_special_values(target)
        closed = {1: at1, -1: at1, 2: at2, -2: at2}
        name = poly_id or f"Phi+_{target.n}"
    else:
        f, closed = target, None
        name = poly_id or str(f)
    rows = []
    for q in q_list:
        if q < 3 or q % 2 == 0:
            raise ValueError(f"q={q} must be odd")
        values = {a: eval_mod(f, a, q) for a in SPECIAL_POINTS}
        roots = tuple(a for a in SPECIAL_POINTS if values[a] == 0)
        predicted = None if closed is None else all(closed[a] % q for a in SPECIAL_POINTS)
        rows.append(ImmunityRow(q, values, roots, predicted))
    return ImmunityReport(name, f, rows)


# --- total splitting --------------------------------------------------------


@dataclass(frozen=True)
class SplitResult:
    q: int
    degree: int
    distinct_roots: int
    squarefree: bool

    @property
    def split(self) -> bool:
        return self.squarefree and self.distinct_roots == self.degree

    @property
    def ramified(self) -> bool:
        return not self.squarefree

    def __bool__(self) -> bool:
        return self.split


def total_split_check(f: IntPoly, q: int) -> SplitResult:
    """Does f mod q factor into deg f distinct linear factors?  Via gcd(x^q - x, f)."""
    require_odd_prime(q)
    fq = fq_reduce(f, q)
    if len(fq) - 1 != f.degree or f.degree < 1:
        raise ValueError("leading coefficient of f vanishes mod q (or f is constant)")
    deriv = fq_reduce([i * c for i, c in enumerate(fq)][1:], q)
    squarefree = bool(deriv) and len(fq_gcd(fq, deriv, q)) == 1
    xq = fq_powmod_x(q, fq, q)
    xq_minus_x = fq_mod(_sub(xq, [0, 1], q), fq, q)
    g = fq_gcd(xq_minus_x, fq, q) if xq_minus_x else fq_gcd(fq, [], q)
    return SplitResult(q, f.degree, len(g) - 1, squarefree)


def _sub(a: Sequence[int], b: Sequence[int], q: int) -> list[int]:
    n = max(len(a), len(b))
    out = [((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)) % q for i in range(n)]
    while out and out[-1] == 0:
        out.pop()
    return out
