"""Frobenius condition numbers and certification of the conditioning bounds.

Numeric condition numbers are computed at a working precision and recomputed
at doubled precision until two successive values agree to a relative
2^-32.  Cond(A) of the integer column-operation matrix is also known
exactly: ||A||^2 and ||A^-1||^2 are integers.

Bound checks against closed-form bounds compare an outward-rounded (upper)
estimate of the condition number with the exact squared bound, so rounding
can only make a check fail, never pass.  Checks between two numeric
condition numbers allow the same relative slack on the right-hand side
since equality occurs (R_m = V_N when n = 2^r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import gmpy2
import sympy
from gmpy2 import mpfr

from .config import DEFAULT_PREC, MAX_PREC, TOLERANCES, Tolerances
from .cyclotomic import Case, FieldSpec, InvalidConductor
from .embeddings import build_VN, build_vandermonde, nodes
from .equivalence import column_ops, extract_block, transformed
from .linalg import (
    BigMatrix,
    IntMatrix,
    PrecisionExhausted,
    SingularMatrixError,
    int_frob2,
    mpfr_str,
    to_fraction,
    unit_upper_inverse,
)

# numeric-vs-numeric comparisons tolerate this relative slack
COMPARE_SLACK_BITS = 30


@dataclass(frozen=True)
class CondResult:
    """||M||, ||M^-1|| and their product at the precision that certified them."""

    dim: int
    frob_norm: mpfr
    frob_norm_inv: mpfr
    cond: mpfr
    prec_used: int
    exact_sq: Fraction | None = None  # Cond^2, when known exactly

    def __post_init__(self):
        if self.cond < 1:
            raise ArithmeticError(f"condition number {self.cond} below 1")


@dataclass(frozen=True)
class BoundCheck:
    name: str
    lhs: str  # which quantity is bounded
    value: mpfr
    bound: mpfr  # for display; comparisons use bound_sq when exact
    satisfied: bool
    strict: bool
    bound_sq: Fraction | None = None
    formula: str = ""

    @property
    def ratio(self) -> float:
        return float(self.value / self.bound) if self.bound else math.inf


@dataclass
class CondReport:
    spec: FieldSpec
    prec: int
    conds: dict[str, CondResult] = field(default_factory=dict)
    bounds: dict[str, BoundCheck] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def case(self) -> Case:
        return self.spec.case

    @property
    def m(self) -> int:
        return self.spec.m

    @property
    def N(self) -> int:
        return self.spec.N

    @property
    def prec_used(self) -> int:
        return max((c.prec_used for c in self.conds.values()), default=self.prec)

    @property
    def passed(self) -> bool:
        return all(b.satisfied for b in self.bounds.values())

    @property
    def failures(self) -> list[str]:
        return [name for name, b in self.bounds.items() if not b.satisfied]


def frobenius_norm(M: BigMatrix) -> mpfr:
    return M.frobenius()


def _cond_at(M: BigMatrix, tol: Tolerances) -> CondResult:
    inv = M.inverse(lambda pr: tol.exponent("identity_residual", pr))
    with gmpy2.context(precision=M.prec):
        a, b = M.frobenius(), inv.frobenius()
        return CondResult(M.shape[0], a, b, a * b, M.prec)


def condition_number(
    M: BigMatrix | Callable[[int], BigMatrix],
    prec: int | None = None,
    max_prec: int = MAX_PREC,
    tol: Tolerances = TOLERANCES,
) -> CondResult:
    """Frobenius condition number with precision escalation.

    ``M`` is either a matrix (re-rounded at each precision) or a builder
    ``prec -> BigMatrix`` that recomputes the entries at each precision.
    """
    if isinstance(M, BigMatrix):
        if not M.is_square:
            raise ValueError("condition number of a non-square matrix")
        base = M
        prec = prec or M.prec
        build = base.with_precision
    else:
        build = M
        prec = prec or DEFAULT_PREC
    target = mpfr(2) ** -tol.cond_agreement_bits
    prev = None
    p = prec
    while p <= max_prec:
        try:
            cur = _cond_at(build(p), tol)
        except (PrecisionExhausted, SingularMatrixError):
            prev = None
            p *= 2
            continue
        if prev is not None:
            with gmpy2.context(precision=p):
                if abs(cur.cond - prev.cond) <= target * cur.cond:
                    return cur
        prev = cur
        p *= 2
    raise SingularMatrixError(f"condition number not certified up to {max_prec} bits")


def exact_int_cond(A: IntMatrix, prec: int = DEFAULT_PREC) -> CondResult:
    """Cond of a unit upper-triangular integer matrix, from exact norms."""
    inv = unit_upper_inverse(A)
    fa, fi = int_frob2(A), int_frob2(inv)
    with gmpy2.context(precision=prec):
        a, b = gmpy2.sqrt(mpfr(fa)), gmpy2.sqrt(mpfr(fi))
        return CondResult(len(A), a, b, a * b, prec, exact_sq=Fraction(fa * fi))


# --- bounds ----------------------------------------------------------------


def vn_bound_sq(spec: FieldSpec) -> Fraction:
    N = spec.N
    return Fraction(N * (N + 1)) ** 2


def a_bound_sq(spec: FieldSpec) -> Fraction | None:
    m = spec.m
    if spec.case is Case.POW2_P:
        return Fraction(3 * m * (5 * m * m + 2 * m))
    if spec.case is Case.POW2_PQ:
        return Fraction((5 * m * m + 2 * m) * (4 * m**4 + m * m + 2 * m))
    return None


def vna_bound_sq(spec: FieldSpec) -> Fraction:
    m = spec.m
    if spec.case is Case.POW2:
        return Fraction(m * (m + 1)) ** 2
    return Fraction(2 * m * (2 * m + 1)) ** 2 * a_bound_sq(spec)


_FORMULAS = {
    "VN": "N(N+1)",
    "A": {Case.POW2_P: "sqrt(3m(5m^2+2m))", Case.POW2_PQ: "sqrt((5m^2+2m)(4m^4+m^2+2m))"},
    "VNA": {
        Case.POW2: "m(m+1)",
        Case.POW2_P: "2m(2m+1)sqrt(3m(5m^2+2m))",
        Case.POW2_PQ: "2m(2m+1)sqrt((5m^2+2m)(4m^4+m^2+2m))",
    },
}


def _upper(x: mpfr) -> Fraction:
    """Exact rational upper estimate of a value known to relative 2^-slack."""
    return to_fraction(x) * (1 + Fraction(1, 1 << COMPARE_SLACK_BITS))


def check_exact_bound(
    name: str, lhs: str, res: CondResult, bound_sq: Fraction, strict: bool, formula: str = ""
) -> BoundCheck:
    if res.exact_sq is not None:
        v_sq = res.exact_sq
    else:
        v_sq = _upper(res.cond) ** 2
    ok = v_sq < bound_sq if strict else v_sq <= bound_sq
    with gmpy2.context(precision=res.prec_used):
        bound = gmpy2.sqrt(mpfr(gmpy2.mpq(bound_sq.numerator, bound_sq.denominator)))
    return BoundCheck(name, lhs, res.cond, bound, ok, strict, bound_sq, formula)


def check_numeric_bound(name: str, lhs: str, value: mpfr, bound: mpfr, formula: str = "") -> BoundCheck:
    ok = to_fraction(value) <= _upper(bound)
    return BoundCheck(name, lhs, value, bound, ok, False, None, formula)


# module-level hook so tests can inject a corrupted bound
BOUND_FUNCTIONS = {"VN": vn_bound_sq, "A": a_bound_sq, "VNA": vna_bound_sq}


def verify_bounds(spec: FieldSpec, prec: int = DEFAULT_PREC, tol: Tolerances = TOLERANCES) -> CondReport:
    """Compute Cond(V_N), Cond(A), Cond(V_N A), Cond(R_m) and check every bound."""
    rep = CondReport(spec, prec)
    ops = column_ops(spec)

    vn = condition_number(lambda pr: build_VN(spec, pr), prec, tol=tol)
    if spec.case is Case.POW2:
        vna = vn
        rm = vn
    else:
        vna = condition_number(lambda pr: transformed(spec, pr, ops, tol), prec, tol=tol)
        rm = condition_number(lambda pr: extract_block(transformed(spec, pr, ops, tol), spec), prec, tol=tol)
    a = exact_int_cond(ops.matrix(), max(prec, vn.prec_used))
    rep.conds.update(VN=vn, A=a, VNA=vna, Rm=rm)

    rep.bounds["VN"] = check_exact_bound("VN", "Cond(V_N)", vn, BOUND_FUNCTIONS["VN"](spec), False, _FORMULAS["VN"])
    a_sq = BOUND_FUNCTIONS["A"](spec)
    if a_sq is not None:
        rep.bounds["A"] = check_exact_bound("A", "Cond(A)", a, a_sq, True, _FORMULAS["A"][spec.case])
    rep.bounds["VNA"] = check_exact_bound(
        "VNA", "Cond(V_N A)", vna, BOUND_FUNCTIONS["VNA"](spec), False, _FORMULAS["VNA"][spec.case]
    )
    rep.bounds["Rm_le_VNA"] = check_numeric_bound("Rm_le_VNA", "Cond(R_m)", rm.cond, vna.cond, "Cond(V_N A)")
    with gmpy2.context(precision=prec):
        prod = vn.cond * a.cond
    rep.bounds["submult"] = check_numeric_bound("submult", "Cond(V_N A)", vna.cond, prod, "Cond(V_N) Cond(A)")

    # Cond(A^-1) numerically from the exact inverse, against the exact Cond(A)
    a_inv = condition_number(BigMatrix(unit_upper_inverse(ops.matrix()), prec), tol=tol)
    with gmpy2.context(precision=a_inv.prec_used):
        gap = abs(a_inv.cond - a.cond) / a.cond
        same = gap <= mpfr(2) ** -COMPARE_SLACK_BITS
    rep.conds["A_inv"] = a_inv
    rep.bounds["A_inv_symmetry"] = BoundCheck(
        "A_inv_symmetry", "Cond(A^-1)", a_inv.cond, a.cond, bool(same), False, None, "Cond(A)"
    )
    return rep


# --- grids -----------------------------------------------------------------


def _odd_primes(lo: int, hi: int) -> list[int]:
    return [p for p in sympy.primerange(max(lo, 3), hi + 1)]


def expand_grid(
    r_range: tuple[int, int],
    p_range: tuple[int, int] | None = None,
    q_range: tuple[int, int] | None = None,
    include_pow2: bool = True,
) -> list[FieldSpec]:
    """Valid fields over a box of parameters, deduplicated and sorted by (case, n).

    With only ``p_range`` the grid holds 2^r and 2^r p; with ``q_range`` as
    well it holds 2^r p q for primes p < q drawn from the two ranges.
    """
    lo, hi = r_range
    if lo < 2 or hi < lo:
        raise InvalidConductor("r range must satisfy 2 <= lo <= hi")
    ns: set[int] = set()
    for r in range(lo, hi + 1):
        if include_pow2:
            ns.add(1 << r)
        if p_range is None:
            continue
        ps = _odd_primes(*p_range)
        if q_range is None:
            ns.update((1 << r) * p for p in ps)
        else:
            ns.update((1 << r) * p * q for p in ps for q in _odd_primes(*q_range) if p < q)
    specs = [FieldSpec.from_n(n) for n in ns]
    order = {Case.POW2: 0, Case.POW2_P: 1, Case.POW2_PQ: 2}
    return sorted(specs, key=lambda s: (order[s.case], s.r, s.n))


ACCEPTANCE_PAIRS = ((3, 5), (3, 7), (3, 11), (5, 7), (5, 11))


def acceptance_grid() -> list[FieldSpec]:
    ns = [1 << r for r in range(2, 10)]
    ns += [(1 << r) * p for r in range(2, 6) for p in (3, 5, 7, 11, 13)]
    ns += [(1 << r) * p * q for r in (2, 3) for p, q in ACCEPTANCE_PAIRS]
    return [FieldSpec.from_n(n) for n in ns]


def parse_grid(text: str) -> list[FieldSpec]:
    """Parse ``r=2..4,p=3..7[,q=5..11]`` or an explicit ``n=12,20,60`` list."""
    text = text.strip()
    if text.startswith("n="):
        return [FieldSpec.from_n(int(tok)) for tok in text[2:].replace(",", " ").split()]
    ranges: dict[str, tuple[int, int]] = {}
    for part in text.split(","):
        key, sep, val = part.partition("=")
        key = key.strip()
        if not sep or key not in ("r", "p", "q") or key in ranges:
            raise ValueError(f"bad grid term {part!r}; expected r=a..b, p=a..b, q=a..b")
        lo, dots, hi = val.partition("..")
        try:
            ranges[key] = (int(lo), int(hi)) if dots else (int(lo), int(lo))
        except ValueError:
            raise ValueError(f"bad range {val!r}") from None
    if "r" not in ranges:
        raise ValueError("grid needs an r range")
    if "q" in ranges and "p" not in ranges:
        raise ValueError("a q range needs a p range")
    return expand_grid(ranges["r"], ranges.get("p"), ranges.get("q"))


def verify_grid(
    specs: Iterable[FieldSpec], prec: int = DEFAULT_PREC, jobs: int = 1, tol: Tolerances = TOLERANCES
) -> list[CondReport]:
    """``verify_bounds`` over many fields; ``jobs > 1`` fans out over worker processes."""
    specs = list(specs)
    if jobs <= 1 or len(specs) < 2:
        return [verify_bounds(s, prec, tol) for s in specs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_verify_one, [(s.n, prec, tol) for s in specs]))


def _verify_one(args) -> CondReport:
    n, prec, tol = args
    return verify_bounds(FieldSpec.from_n(n), prec, tol)


# --- reports ---------------------------------------------------------------

CSV_COLUMNS = [
    "n",
    "case",
    "N",
    "m",
    "prec_used",
    "cond_VN",
    "cond_A",
    "cond_VNA",
    "cond_Rm",
    "bound_VN",
    "bound_A",
    "bound_VNA",
    "ok_VN",
    "ok_A",
    "ok_VNA",
    "ok_Rm_le_VNA",
    "ok_submult",
    "ok_A_inv_symmetry",
    "pass",
]


def _s(x: mpfr | None) -> str:
    return "" if x is None else mpfr_str(x, 100)


def report_row(rep: CondReport) -> dict[str, str]:
    b = rep.bounds
    row = {
        "n": str(rep.n),
        "case": rep.case.value,
        "N": str(rep.N),
        "m": str(rep.m),
        "prec_used": str(rep.prec_used),
        "cond_VN": _s(rep.conds["VN"].cond),
        "cond_A": _s(rep.conds["A"].cond),
        "cond_VNA": _s(rep.conds["VNA"].cond),
        "cond_Rm": _s(rep.conds["Rm"].cond),
        "bound_VN": _s(b["VN"].bound),
        "bound_A": _s(b["A"].bound) if "A" in b else "",
        "bound_VNA": _s(b["VNA"].bound),
    }
    for name in ("VN", "A", "VNA", "Rm_le_VNA", "submult", "A_inv_symmetry"):
        row[f"ok_{name}"] = "" if name not in b else str(b[name].satisfied).lower()
    row["pass"] = str(rep.passed).lower()
    return row


def report_dict(rep: CondReport) -> dict:
    return {
        "n": rep.n,
        "case": rep.case.value,
        "N": rep.N,
        "m": rep.m,
        "prec": rep.prec,
        "prec_used": rep.prec_used,
        "conds": {
            k: {
                "frob_norm": _s(c.frob_norm),
                "frob_norm_inv": _s(c.frob_norm_inv),
                "cond": _s(c.cond),
                "prec_used": c.prec_used,
                "exact_cond_squared": None if c.exact_sq is None else str(c.exact_sq),
            }
            for k, c in rep.conds.items()
        },
        "bounds": {
            k: {
                "quantity": b.lhs,
                "formula": b.formula,
                "value": _s(b.value),
                "bound": _s(b.bound),
                "bound_squared": None if b.bound_sq is None else str(b.bound_sq),
                "strict": b.strict,
                "satisfied": b.satisfied,
            }
            for k, b in rep.bounds.items()
        },
        "pass": rep.passed,
    }


# --- classical Vandermonde comparison --------------------------------------


def classical_vandermonde_cond(spec: FieldSpec, prec: int = DEFAULT_PREC) -> CondResult:
    """Cond of the monomial Vandermonde matrix on the roots of Phi_n^+."""
    return condition_number(lambda pr: build_vandermonde(nodes(spec, pr).good_values, pr), prec)


def vandermonde_blowup(ps: Sequence[int] = (3, 5, 7, 11, 13), prec: int = DEFAULT_PREC) -> list[tuple[int, mpfr]]:
    """Cond(V_{Phi^+ roots}) / Cond(V_N A) along n = 4p."""
    out = []
    for p in ps:
        spec = FieldSpec.from_n(4 * p)
        classical = classical_vandermonde_cond(spec, prec)
        vna = condition_number(lambda pr: transformed(spec, pr), prec)
        with gmpy2.context(precision=prec):
            out.append((spec.n, classical.cond / vna.cond))
    return out
