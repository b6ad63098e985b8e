"""Nodes psi_j = 2cos(2 pi j / n), the quasi-Vandermonde matrix V_N and the
two embeddings of O_{K+} = Z[psi_1].

Rows of V_N are indexed by the odd node indices j = 2k - 1 (1 <= k <= N) and
columns by the u-polynomials u_0, ..., u_{N-1}.  Rows are permuted so that the
nodes which are not Galois conjugates of psi_1 ("bad" nodes, gcd(j, k) > 1)
come first: p-multiples ascending, then the remaining q-multiples ascending,
then the good nodes ascending.  The good-node order is also the coordinate
order of the canonical embedding.

Entries use u_i(2cos(t)) = 2cos(i t) with the angle reduced exactly modulo
2 pi through its integer numerator, so every entry is a table lookup.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import gmpy2
from gmpy2 import mpfr

from .cyclotomic import FieldSpec, real_cyclotomic_poly
from .linalg import BigMatrix
from .polynomials import IntPoly

_GUARD_BITS = 32


class NodeClass(str, enum.Enum):
    GOOD = "GOOD"
    BAD_P = "BAD_P"
    BAD_Q = "BAD_Q"


@lru_cache(maxsize=64)
def cos_table(n: int, prec: int) -> tuple[mpfr, ...]:
    """(2cos(2 pi t / n) for t in 0..n-1) rounded to ``prec`` bits, n divisible by 4.

    Only angles in [0, pi/2] are evaluated; the rest follows from exact
    symmetries, so entries that are mathematically opposite are exactly opposite.
    """
    if n % 4:
        raise ValueError("cos_table expects n divisible by 4")
    wp = prec + _GUARD_BITS
    with gmpy2.context(precision=wp):
        two_pi = 2 * gmpy2.const_pi()
        quadrant = [mpfr(2)] + [2 * gmpy2.cos(two_pi * t / n) for t in range(1, n // 4)] + [mpfr(0)]
    with gmpy2.context(precision=prec):
        vals = []
        for t in range(n):
            s = min(t, n - t)
            v = mpfr(quadrant[s] if 4 * s <= n else quadrant[n // 2 - s], prec)
            vals.append(v if 4 * s <= n else -v)
    return tuple(vals)


@dataclass(frozen=True)
class NodeSet:
    """The N nodes psi_{2k-1} of a field, with GOOD/BAD labels and row order."""

    spec: FieldSpec
    prec: int
    indices: tuple[int, ...]  # odd indices 1, 3, ..., 2N-1
    values: tuple[mpfr, ...]
    labels: tuple[NodeClass, ...]
    order: tuple[int, ...]  # positions into ``indices``: bad nodes first

    @property
    def permuted_indices(self) -> list[int]:
        return [self.indices[i] for i in self.order]

    @property
    def good_indices(self) -> list[int]:
        return [j for j, c in zip(self.indices, self.labels) if c is NodeClass.GOOD]

    @property
    def bad_indices(self) -> list[int]:
        bad = self.spec.N - self.spec.m
        return self.permuted_indices[:bad]

    @property
    def good_values(self) -> list[mpfr]:
        return [v for v, c in zip(self.values, self.labels) if c is NodeClass.GOOD]

    def count(self, cls: NodeClass) -> int:
        return sum(1 for c in self.labels if c is cls)


def classify(spec: FieldSpec, j: int) -> NodeClass:
    if spec.p is not None and j % spec.p == 0:
        return NodeClass.BAD_P
    if spec.q is not None and j % spec.q == 0:
        return NodeClass.BAD_Q
    return NodeClass.GOOD


def node_order(spec: FieldSpec) -> list[int]:
    """Odd node indices in row order (bad p-group, bad q-group, good)."""
    idx = list(range(1, 2 * spec.N, 2))
    groups = {c: [j for j in idx if classify(spec, j) is c] for c in NodeClass}
    return groups[NodeClass.BAD_P] + groups[NodeClass.BAD_Q] + groups[NodeClass.GOOD]


def nodes(spec: FieldSpec, prec: int = 256) -> NodeSet:
    if prec < 53:
        raise ValueError("precision must be at least 53 bits")
    table = cos_table(spec.n, prec)
    idx = tuple(range(1, 2 * spec.N, 2))
    pos = {j: i for i, j in enumerate(idx)}
    return NodeSet(
        spec=spec,
        prec=prec,
        indices=idx,
        values=tuple(table[j % spec.n] for j in idx),
        labels=tuple(classify(spec, j) for j in idx),
        order=tuple(pos[j] for j in node_order(spec)),
    )


def u_values(spec: FieldSpec, j: int, count: int, prec: int) -> list[mpfr]:
    """u_0(psi_j), ..., u_{count-1}(psi_j)."""
    table = cos_table(spec.n, prec)
    n = spec.n
    return [table[(i * j) % n] for i in range(count)]


def build_VN(spec: FieldSpec, prec: int = 256) -> BigMatrix:
    """N x N matrix (u_i(psi_j)) with rows in the bad-first order."""
    N = spec.N
    return BigMatrix([u_values(spec, j, N, prec) for j in node_order(spec)], prec)


def build_vandermonde(roots: Sequence, prec: int = 256) -> BigMatrix:
    """Rows (1, t, t^2, ..., t^(d-1)) for each root t."""
    d = len(roots)
    with gmpy2.context(precision=prec):
        vals = [r if isinstance(r, mpfr) else mpfr(r, prec) for r in roots]
        if len(set(vals)) != d:
            raise ValueError("Vandermonde nodes must be pairwise distinct")
        rows = []
        for t in vals:
            row = [mpfr(1)]
            for _ in range(d - 1):
                row.append(row[-1] * t)
            rows.append(row)
    return BigMatrix(rows, prec)


def coordinate_embedding(spec: FieldSpec, element: IntPoly | Sequence[int]) -> list[int]:
    """Power-basis coordinates (a_0, ..., a_{m-1}) of an element of Z[psi_1].

    ``element`` is a polynomial in psi_1 (reduced modulo Phi_n^+ here) or an
    already reduced coordinate vector.
    """
    m = spec.m
    if not isinstance(element, IntPoly):
        if len(element) != m:
            raise ValueError(f"expected {m} coordinates, got {len(element)}")
        return [int(c) for c in element]
    red = element % real_cyclotomic_poly(spec)
    return [red[i] for i in range(m)]


def canonical_embedding(spec: FieldSpec, coords: Sequence[int], prec: int = 256) -> list[mpfr]:
    """(sigma_l(x))_l over the good nodes, for x = sum_j coords[j] psi_1^j."""
    if len(coords) != spec.m:
        raise ValueError(f"expected {spec.m} coordinates, got {len(coords)}")
    ns = nodes(spec, prec)
    return build_vandermonde(ns.good_values, prec).apply(coords)
