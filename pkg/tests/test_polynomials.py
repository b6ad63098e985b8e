from fractions import Fraction

import gmpy2
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from relattice.polynomials import (
    ONE,
    X,
    ZERO,
    IntPoly,
    compose,
    eval_frac,
    eval_int,
    eval_mod,
    eval_real,
    eval_u_real,
    fq_gcd,
    fq_mul,
    fq_powmod_x,
    from_u_basis,
    to_u_basis,
    u_poly,
)

_x = sp.symbols("x")


def sympy_u(i: int) -> IntPoly:
    """Independent oracle: u_i(x) = 2 T_i(x/2) expanded by sympy."""
    expr = sp.expand(2 * sp.chebyshevt(i, _x / 2))
    return IntPoly([int(c) for c in reversed(sp.Poly(expr, _x).all_coeffs())])


polys = st.lists(st.integers(-50, 50), max_size=8).map(IntPoly)
monic = st.lists(st.integers(-50, 50), max_size=6).map(lambda c: IntPoly(c + [1]))


class TestIntPoly:
    def test_canonical_form_drops_trailing_zeros(self):
        assert IntPoly([1, 2, 0, 0]).coeffs == (1, 2)
        assert IntPoly([0, 0]).coeffs == () and ZERO.degree == -1

    def test_immutable(self):
        with pytest.raises(AttributeError):
            X._c = (5,)

    @given(polys, polys, polys)
    def test_ring_axioms(self, a, b, c):
        assert a + b == b + a
        assert a * b == b * a
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a - a == ZERO

    @given(polys, monic)
    def test_divmod_by_monic(self, a, b):
        q, r = a.divmod(b)
        assert q * b + r == a
        assert r.degree < b.degree

    @given(polys, polys.filter(lambda p: not p.is_zero()))
    def test_exact_division(self, a, b):
        assert (a * b).exact_div(b) == a

    def test_inexact_division_raises(self):
        with pytest.raises(ArithmeticError):
            IntPoly([1, 0, 1]).exact_div(IntPoly([0, 2]))


class TestUPoly:
    def test_small_values(self):
        assert u_poly(0) == IntPoly.const(2)
        assert u_poly(1) == X
        # 2 t_2(x/2) = 2(2(x/2)^2 - 1)
        assert u_poly(2) == IntPoly([-2, 0, 1])

    @pytest.mark.parametrize("i", [0, 1, 2, 3, 6, 11, 25, 40])
    def test_matches_chebyshev_oracle(self, i):
        assert u_poly(i) == sympy_u(i)

    def test_u4_at_one(self):
        assert eval_int(u_poly(4), 1) == -1

    def test_degree_and_monic(self):
        for i in range(1, 70):
            p = u_poly(i)
            assert p.degree == i and p.is_monic()

    def test_memoized(self):
        assert u_poly(50) is u_poly(50)

    def test_negative_index(self):
        with pytest.raises(ValueError):
            u_poly(-1)

    def test_product_identity_exhaustive(self):
        for i in range(65):
            for j in range(65):
                assert u_poly(i + j) + u_poly(abs(i - j)) == u_poly(i) * u_poly(j)

    def test_semiconjugacy_exhaustive(self):
        for j in range(1, 13):
            for l in range(1, 13):
                assert compose(u_poly(j), u_poly(l)) == u_poly(j * l)

    def test_values_at_two_and_one(self):
        assert all(eval_int(u_poly(i), 2) == 2 for i in range(1, 65))
        assert all(eval_int(u_poly(1 << s), 1) == -1 for s in range(1, 11))

    def test_parity(self):
        for i in range(40):
            assert (u_poly(i).is_even() if i % 2 == 0 else u_poly(i).is_odd())


class TestCompose:
    def test_examples(self):
        assert compose(u_poly(2), u_poly(2)) == u_poly(4)
        assert compose(u_poly(3), u_poly(5)) == u_poly(15)

    @given(polys)
    def test_identity_inner(self, p):
        assert compose(p, X) == p

    @given(polys, polys, st.integers(-5, 5))
    def test_evaluation_commutes(self, p, r, v):
        assert eval_int(compose(p, r), v) == eval_int(p, eval_int(r, v))


class TestEvaluation:
    def test_eval_int(self):
        assert eval_int(u_poly(7), 2) == 2
        assert eval_int(ZERO, 10**100) == 0
        assert eval_int(u_poly(6), 1) == eval_int(u_poly(2), eval_int(u_poly(3), 1)) == 2

    @given(polys, st.integers(-10**6, 10**6), st.integers(2, 10**9))
    def test_eval_mod_matches_exact(self, p, x, q):
        assert eval_mod(p, x, q) == eval_int(p, x) % q

    def test_eval_mod_examples(self):
        assert eval_mod(u_poly(9), 2, 5) == 2
        assert eval_mod(IntPoly([7, 1, 1]), 0, 5) == 2
        with pytest.raises(ValueError):
            eval_mod(X, 1, 1)

    @given(polys, st.fractions(max_denominator=50))
    def test_eval_frac(self, p, x):
        expected = sum(Fraction(c) * x**i for i, c in enumerate(p.coeffs))
        assert eval_frac(p, x) == expected

    def test_eval_real_sqrt3(self):
        with gmpy2.context(precision=256):
            r3 = gmpy2.sqrt(gmpy2.mpfr(3))
            assert abs(eval_real(u_poly(2), r3, 256) - 1) <= gmpy2.mpfr(2) ** -250

    def test_eval_real_constant(self):
        assert eval_real(IntPoly([5, 0, 3]), 0, 128) == 5

    def test_eval_real_precision_floor(self):
        with pytest.raises(ValueError):
            eval_real(X, 1, 20)

    @pytest.mark.parametrize("N", [4, 16, 33])
    def test_eval_real_matches_cos_form(self, N):
        prec = 256
        with gmpy2.context(precision=prec):
            psi = 2 * gmpy2.cos(2 * gmpy2.const_pi() / (4 * N))
            cos_form = 2 * gmpy2.cos(N * gmpy2.acos(psi / 2))
            tol = gmpy2.mpfr(2) ** -(prec // 2)
            assert abs(eval_real(u_poly(N), psi, prec) - cos_form) <= tol
            assert abs(eval_u_real(N, psi, prec) - cos_form) <= tol


class TestUBasis:
    @given(st.lists(st.integers(-20, 20), max_size=10))
    def test_round_trip(self, coeffs):
        c = list(coeffs)
        while c and c[-1] == 0:
            c.pop()
        assert to_u_basis(from_u_basis(c)) == c

    @given(polys)
    def test_expansion_inverts_when_it_exists(self, p):
        try:
            coords = to_u_basis(p)
        except ArithmeticError:
            return
        assert from_u_basis(coords) == p

    def test_odd_constant_has_no_integer_u_expansion(self):
        with pytest.raises(ArithmeticError):
            to_u_basis(ONE)


class TestFq:
    def test_gcd_monic(self):
        # (x - 1)(x - 2) and (x - 1)(x - 3) over F_7
        a = fq_mul([-1, 1], [-2, 1], 7)
        b = fq_mul([-1, 1], [-3, 1], 7)
        assert fq_gcd(a, b, 7) == [6, 1]

    def test_powmod(self):
        f = [5, 0, 1]  # x^2 - 2 over F_7
        assert fq_powmod_x(2, f, 7) == [2]
        # x^7 = x (x^2)^3 = 8 x = x
        assert fq_powmod_x(7, f, 7) == [0, 1]
