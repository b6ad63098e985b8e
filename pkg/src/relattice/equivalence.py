"""Column operations on V_N and the lattice maps between O and sigma(O_{K+}).

Right-multiplying the row-permuted V_N by the unit upper-triangular integer
matrix ``A = (I  K; O  L_m)`` clears the upper-right (N-m) x m block:

    V_N A = ( V_{N-m}  O  )
            (   C     R_m )

Kept column l (0 <= l < m) of V_N A is the polynomial p_l evaluated at the
nodes, where p_0 = a and p_l = a u_l with a vanishing on every bad node.
For n = 2^r the matrix A is the identity and p_l = u_l.

The forward map is u -> R_m u; the backward map is v -> R_m^{-1}(lambda v)
where lambda = |det P| and P holds the power-basis coordinates of
p_0(psi_1), ..., p_{m-1}(psi_1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import gmpy2
from gmpy2 import mpfr

from .config import TOLERANCES, Tolerances
from .cyclotomic import Case, FieldSpec, real_cyclotomic_poly
from .embeddings import build_VN
from .linalg import BigMatrix, IntMatrix, bareiss_det, int_identity, mpfr_str
from .polynomials import IntPoly, eval_u_real, from_u_basis, to_u_basis, u_poly


class ConstructionError(ArithmeticError):
    """A structural claim of the construction failed on a concrete instance."""


@dataclass(frozen=True)
class ColumnOps:
    spec: FieldSpec
    A: tuple[tuple[int, ...], ...]

    @property
    def case(self) -> Case:
        return self.spec.case

    @property
    def split(self) -> int:
        return self.spec.N - self.spec.m

    @property
    def K(self) -> IntMatrix:
        s = self.split
        return [list(row[s:]) for row in self.A[:s]]

    @property
    def L(self) -> IntMatrix:
        s = self.split
        return [list(row[s:]) for row in self.A[s:]]

    def matrix(self) -> IntMatrix:
        return [list(row) for row in self.A]


def _freeze(m: IntMatrix) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(row) for row in m)


def column_recipe(spec: FieldSpec, l: int) -> dict[int, int]:
    """Original-column coefficients of kept column l, as the literal sum of
    column replacements (coinciding indices merged)."""
    m = spec.m
    if not 0 <= l < m:
        raise ValueError(f"kept column index {l} outside 0..{m - 1}")
    out: dict[int, int] = {}

    def add(idx: int, c: int) -> None:
        out[idx] = out.get(idx, 0) + c

    h = spec.h
    if spec.case is Case.POW2:
        add(l, 1)
    elif spec.case is Case.POW2_P:
        add(h + l, 1)
        if l >= 1:
            add(abs(h - l), 1)
    else:
        p, q = spec.p, spec.q
        tail = (-1) ** ((p + 3) // 2)
        for j in range(1, (p - 1) // 2 + 1):
            s = (-1) ** (j + 1)
            hi = h * (q + p - (2 * j - 1))
            lo = h * (q - p + (2 * j - 1))
            if l == 0:
                add(hi, s)
                add(lo, s)
            else:
                add(hi + l, s)
                add(abs(lo - l), s)
                add(lo + l, s)
                add(abs(hi - l), s)
        if l == 0:
            add(h * q, tail)
        else:
            add(h * q + l, tail)
            add(abs(h * q - l), tail)
    return {k: v for k, v in out.items() if v}


def simulate_column_ops(spec: FieldSpec) -> IntMatrix:
    """Build A by literally applying the column-sum recipes."""
    N, s = spec.N, spec.N - spec.m
    A = int_identity(N)
    for l in range(spec.m):
        col = s + l
        for i in range(N):
            A[i][col] = 0
        for idx, c in column_recipe(spec, l).items():
            if idx >= N:
                raise ConstructionError(f"recipe for column {l} references C_{idx} beyond N={N}")
            A[idx][col] += c
    return A


def lemma_L_diagonals(spec: FieldSpec) -> list[int]:
    """Closed-form k-diagonal values of L_m, k = 0..m-1."""
    m, t = spec.m, 2 * spec.h
    diag = [0] * m
    if spec.case is Case.POW2:
        diag[0] = 1
    elif spec.case is Case.POW2_P:
        diag[0] = 1
        if t < m:
            diag[t] = 1
    else:
        p, q = spec.p, spec.q
        for j in range(p):
            if j * t < m:
                diag[j * t] = (-1) ** j
        for j in range(q, q + p):
            if j * t < m:
                diag[j * t] = (-1) ** (j + 1)
    return diag


def toeplitz_upper(diag: Sequence[int]) -> IntMatrix:
    m = len(diag)
    return [[diag[j - i] if j >= i else 0 for j in range(m)] for i in range(m)]


def a_poly(spec: FieldSpec) -> IntPoly:
    """The common factor a(x) of the kept columns; vanishes on every bad node.

    For n = 2^r p this is u_{2^(r-2)}; for n = 2^r p q it is
    (-1)^((p+1)/2) u_{2^(r-2) q} (sum_{i=1}^{(p-1)/2} (-1)^(i+1) u_{2^(r-1) i} - 1).
    """
    if spec.case is Case.POW2:
        raise ValueError("a(x) is only defined when n has an odd prime factor")
    h = spec.h
    if spec.case is Case.POW2_P:
        return u_poly(h)
    p, q = spec.p, spec.q
    bracket = IntPoly.const(-1)
    for i in range(1, (p - 1) // 2 + 1):
        bracket = bracket + (-1) ** (i + 1) * u_poly(2 * h * i)
    a = (-1) ** ((p + 1) // 2) * (u_poly(h * q) * bracket)
    if a.degree != spec.N - spec.m:
        raise ConstructionError(f"deg a = {a.degree} differs from N - m = {spec.N - spec.m}")
    return a


def closed_form_column_ops(spec: FieldSpec) -> IntMatrix:
    """A from the L_m diagonal pattern together with K read off the u-basis
    expansion of p_0 = a, p_l = a u_l (computed by polynomial products)."""
    N, m = spec.N, spec.m
    s = N - m
    if spec.case is Case.POW2:
        return int_identity(N)
    A = int_identity(N)
    L = toeplitz_upper(lemma_L_diagonals(spec))
    a = a_poly(spec)
    for l in range(m):
        poly = a if l == 0 else a * u_poly(l)
        coords = to_u_basis(poly)
        coords += [0] * (N - len(coords))
        if len(coords) > N:
            raise ConstructionError(f"p_{l} has degree {poly.degree} >= N")
        col = s + l
        for i in range(s):
            A[i][col] = coords[i]
        for i in range(m):
            A[s + i][col] = L[i][l]
    return A


@lru_cache(maxsize=None)
def column_ops(spec: FieldSpec) -> ColumnOps:
    """The column-operation matrix A, built in closed form."""
    return ColumnOps(spec, _freeze(closed_form_column_ops(spec)))


def kept_polynomials(spec: FieldSpec, ops: ColumnOps | None = None) -> list[IntPoly]:
    """p_l = sum_i A[i, N-m+l] u_i for l = 0..m-1."""
    ops = ops or column_ops(spec)
    s = ops.split
    A = ops.A
    return [from_u_basis([A[i][s + l] for i in range(spec.N)]) for l in range(spec.m)]


def change_of_basis(spec: FieldSpec, ops: ColumnOps | None = None) -> IntMatrix:
    """P with row l = power-basis coordinates of p_l(psi_1) (reduction mod Phi_n^+)."""
    f = real_cyclotomic_poly(spec)
    m = spec.m
    return [[red[j] for j in range(m)] for red in (p % f for p in kept_polynomials(spec, ops))]


def zero_block_residual(VA: BigMatrix, spec: FieldSpec) -> tuple[mpfr, tuple[int, int]]:
    """Largest |entry| of the upper-right (N-m) x m block and its position."""
    s = spec.N - spec.m
    worst, where = mpfr(0, VA.prec), (-1, -1)
    with gmpy2.context(precision=VA.prec):
        for i in range(s):
            row = VA.rows[i]
            for j in range(s, spec.N):
                v = abs(row[j])
                if v > worst:
                    worst, where = v, (i, j)
    return worst, where


def transformed(
    spec: FieldSpec, prec: int = 256, ops: ColumnOps | None = None, tol: Tolerances = TOLERANCES
) -> BigMatrix:
    """V_N A, after checking that its upper-right block vanishes."""
    ops = ops or column_ops(spec)
    VN = build_VN(spec, prec)
    VA = VN if spec.case is Case.POW2 else VN.matmul_int(ops.matrix())
    worst, (i, j) = zero_block_residual(VA, spec)
    with gmpy2.context(precision=prec):
        bound = VN.frobenius() * mpfr(2) ** tol.exponent("zero_block", prec)
    if worst > bound:
        raise ConstructionError(
            f"{spec}: zero-block entry ({i}, {j}) = {mpfr_str(VA[i, j], 64)} exceeds {mpfr_str(bound, 64)}"
        )
    return VA


def extract_block(VA: BigMatrix, spec: FieldSpec) -> BigMatrix:
    s = spec.N - spec.m
    return VA.block(s, spec.N, s, spec.N)


def zerosum_check(spec: FieldSpec, j: int, prec: int = 256) -> mpfr:
    """sum_{k=1}^{(p-1)/2} (-1)^(k+1) u_{2^(r-1) k}(psi_{jq}) - 1, for p not dividing j."""
    if spec.case is not Case.POW2_PQ:
        raise ValueError("the zero-sum identity concerns n = 2^r p q")
    p, q, h = spec.p, spec.q, spec.h
    if j % 2 == 0 or j % p == 0:
        raise ValueError(f"j={j} must be odd and prime to p={p}")
    wp = prec + 32
    with gmpy2.context(precision=wp):
        node = 2 * gmpy2.cos(2 * gmpy2.const_pi() * j * q / spec.n)
        total = gmpy2.fsum(
            [(-1) ** (k + 1) * eval_u_real(2 * h * k, node, wp) for k in range(1, (p - 1) // 2 + 1)]
        )
        return mpfr(total - 1, prec)


@dataclass(frozen=True)
class EquivalenceMap:
    spec: FieldSpec
    prec: int
    Rm: BigMatrix
    Rm_inv: BigMatrix
    lam: int
    P: tuple[tuple[int, ...], ...]
    ops: ColumnOps

    @property
    def case(self) -> Case:
        return self.spec.case

    @property
    def m(self) -> int:
        return self.spec.m


def extract_Rm(spec: FieldSpec, prec: int = 256, tol: Tolerances = TOLERANCES) -> EquivalenceMap:
    ops = column_ops(spec)
    VA = transformed(spec, prec, ops, tol)
    Rm = extract_block(VA, spec)
    P = change_of_basis(spec, ops)
    det = bareiss_det(P)
    if det == 0:
        raise ConstructionError(f"{spec}: P is singular")
    Rm_inv = Rm.inverse(lambda pr: tol.exponent("identity_residual", pr))
    return EquivalenceMap(spec, prec, Rm, Rm_inv, abs(det), _freeze(P), ops)


def forward_map(emap: EquivalenceMap, coords: Sequence[int]) -> list[mpfr]:
    """u -> R_m u."""
    if len(coords) != emap.m:
        raise ValueError(f"expected {emap.m} coordinates, got {len(coords)}")
    return emap.Rm.apply(coords)


def backward_map(emap: EquivalenceMap, v: Sequence) -> list[mpfr]:
    """v -> R_m^{-1} (lambda v)."""
    if len(v) != emap.m:
        raise ValueError(f"expected a vector of length {emap.m}, got {len(v)}")
    with gmpy2.context(precision=emap.prec):
        lam = mpfr(emap.lam)
        scaled = [lam * (x if isinstance(x, mpfr) else mpfr(x)) for x in v]
    return emap.Rm_inv.apply(scaled)


def round_trip_error(emap: EquivalenceMap, coords: Sequence[int]) -> mpfr:
    """||backward(forward(c)) - lambda c|| / (lambda ||c||)  (0 for c = 0)."""
    back = backward_map(emap, forward_map(emap, coords))
    with gmpy2.context(precision=emap.prec):
        diff = gmpy2.sqrt(gmpy2.fsum([(b - emap.lam * c) ** 2 for b, c in zip(back, coords)]))
        norm = gmpy2.sqrt(mpfr(sum(c * c for c in coords)))
        if norm == 0:
            return diff
        return diff / (emap.lam * norm)


def toeplitz_inverse_diagonals(spec: FieldSpec, count: int | None = None) -> list[int]:
    """Coefficients b_0..b_{count-1} of s(x) = 1 / r(x), r built from L_m's diagonals."""
    if spec.case is Case.POW2:
        raise ValueError("L_m is only non-trivial when n has an odd prime factor")
    m = spec.m
    count = m if count is None else count
    if not 0 <= count <= m:
        raise ValueError(f"count must lie in 0..{m}")
    r = column_ops(spec).L[0]
    b: list[int] = []
    for k in range(count):
        acc = 1 if k == 0 else 0
        for j in range(1, k + 1):
            if r[j]:
                acc -= r[j] * b[k - j]
        b.append(acc)
    return b


def numeric_toeplitz_inverse(spec: FieldSpec, prec: int = 256) -> list[mpfr]:
    """First row of L_m^{-1} by numeric LU inversion."""
    L = BigMatrix(column_ops(spec).L, prec)
    return list(L.inverse().rows[0])
