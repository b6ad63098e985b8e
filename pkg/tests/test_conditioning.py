import math
import random
from fractions import Fraction

import gmpy2
import pytest
from gmpy2 import mpfr
from hypothesis import given, settings
from hypothesis import strategies as st

from relattice.conditioning import (
    CondResult,
    acceptance_grid,
    a_bound_sq,
    condition_number,
    exact_int_cond,
    expand_grid,
    frobenius_norm,
    parse_grid,
    report_dict,
    report_row,
    CSV_COLUMNS,
    vandermonde_blowup,
    verify_bounds,
    verify_grid,
    vna_bound_sq,
    vn_bound_sq,
)
from relattice.cyclotomic import Case, FieldSpec, InvalidConductor
from relattice.embeddings import build_VN
from relattice.equivalence import column_ops, transformed
from relattice.linalg import BigMatrix, SingularMatrixError

REL = mpfr(2) ** -30


def rel_close(a, b):
    with gmpy2.context(precision=256):
        return abs(a - b) <= REL * abs(b)


class TestNorms:
    def test_identity(self):
        with gmpy2.context(precision=128):
            assert frobenius_norm(BigMatrix.identity(3, 128)) == gmpy2.sqrt(mpfr(3))

    def test_all_ones(self):
        assert frobenius_norm(BigMatrix([[1, 1], [1, 1]], 64)) == 2

    def test_vn16_stable_across_precisions(self):
        spec = FieldSpec.from_n(16)
        a, b = frobenius_norm(build_VN(spec, 128)), frobenius_norm(build_VN(spec, 256))
        with gmpy2.context(precision=256):
            assert abs(a - b) <= mpfr(2) ** -64


class TestConditionNumber:
    @pytest.mark.parametrize("d", [1, 2, 5, 9])
    def test_scaled_identity(self, d):
        M = BigMatrix.identity(d, 128).scaled(7)
        assert rel_close(condition_number(M).cond, mpfr(d))

    @pytest.mark.parametrize("d", [2, 4, 7])
    def test_permutation(self, d):
        perm = list(range(d))
        random.Random(d).shuffle(perm)
        M = BigMatrix.from_int([[int(perm[i] == j) for j in range(d)] for i in range(d)], 128)
        assert rel_close(condition_number(M).cond, mpfr(d))

    def test_at_least_one_and_product(self):
        res = condition_number(build_VN(FieldSpec.from_n(40), 256))
        assert res.cond >= 1
        with gmpy2.context(precision=res.prec_used):
            assert res.cond == res.frob_norm * res.frob_norm_inv

    def test_cond_below_one_rejected(self):
        with pytest.raises(ArithmeticError):
            CondResult(1, mpfr(1), mpfr("0.5"), mpfr("0.5"), 53)

    def test_builder_escalation_is_stable(self):
        spec = FieldSpec.from_n(96)
        res = condition_number(lambda p: build_VN(spec, p), 128)
        hi = condition_number(build_VN(spec, 1024), 1024)
        with gmpy2.context(precision=1024):
            assert abs(res.cond - hi.cond) <= mpfr(2) ** -32 * hi.cond

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            condition_number(BigMatrix([[1, 2], [2, 4]], 64), max_prec=256)

    def test_non_square(self):
        with pytest.raises(ValueError):
            condition_number(BigMatrix([[1, 2, 3], [4, 5, 6]], 64))

    @settings(max_examples=25)
    @given(
        st.lists(st.lists(st.integers(-9, 9), min_size=4, max_size=4), min_size=4, max_size=4),
        st.sampled_from([Fraction(2), Fraction(1, 3), Fraction(-5)]),
    )
    def test_scalar_and_inverse_invariance(self, rows, lam):
        M = BigMatrix(rows, 256)
        try:
            base = condition_number(M, max_prec=1024)
        except SingularMatrixError:
            return
        with gmpy2.context(precision=256):
            scaled = M.scaled(gmpy2.mpq(lam.numerator, lam.denominator))
        assert rel_close(condition_number(scaled).cond, base.cond)
        assert rel_close(condition_number(M.inverse()).cond, base.cond)

    def test_exact_int_cond(self):
        res = exact_int_cond([[1, 0, 1], [0, 1, 0], [0, 0, 1]])
        assert res.exact_sq == 16
        assert res.cond == 4


class TestBounds:
    def test_formula_values(self):
        assert vn_bound_sq(FieldSpec.from_n(16)) == 400
        assert a_bound_sq(FieldSpec.from_n(12)) == 144
        assert a_bound_sq(FieldSpec.from_n(60)) == (5 * 64 + 16) * (4 * 4096 + 64 + 16)
        assert a_bound_sq(FieldSpec.from_n(32)) is None
        assert vna_bound_sq(FieldSpec.from_n(12)) == 20**2 * 144
        assert vna_bound_sq(FieldSpec.from_n(16)) == 400

    def test_n12(self):
        rep = verify_bounds(FieldSpec.from_n(12))
        assert rep.passed and rep.failures == []
        assert rep.conds["A"].cond < 12
        assert rep.conds["VNA"].cond <= 2 * 2 * 5 * 12

    @pytest.mark.parametrize("n", [4, 8, 64, 512])
    def test_pow2(self, n):
        rep = verify_bounds(FieldSpec.from_n(n))
        N = n // 4
        assert rep.conds["VN"].cond <= N * (N + 1)
        assert "A" not in rep.bounds and rep.passed

    @pytest.mark.parametrize("n", [20, 60, 88, 168])
    def test_mixed_cases(self, n):
        spec = FieldSpec.from_n(n)
        rep = verify_bounds(spec)
        assert rep.passed, rep.failures
        assert set(rep.bounds) == {"VN", "A", "VNA", "Rm_le_VNA", "submult", "A_inv_symmetry"}
        assert rep.conds["Rm"].cond <= rep.conds["VNA"].cond
        assert rep.conds["A"].exact_sq is not None

    def test_submultiplicative_on_grid(self):
        for spec in acceptance_grid()[:20]:
            vn = condition_number(lambda p: build_VN(spec, p), 256).cond
            vna = condition_number(lambda p: transformed(spec, p), 256).cond
            a = exact_int_cond(column_ops(spec).matrix()).cond
            with gmpy2.context(precision=256):
                assert vna <= vn * a * (1 + REL)

    def test_violation_is_flagged(self, monkeypatch):
        from relattice import conditioning

        monkeypatch.setitem(conditioning.BOUND_FUNCTIONS, "VN", lambda spec: Fraction(1))
        rep = verify_bounds(FieldSpec.from_n(20))
        assert not rep.passed and rep.failures == ["VN"]


class TestGrids:
    def test_acceptance_grid(self):
        g = acceptance_grid()
        assert len(g) == 8 + 20 + 10
        assert g[0].n == 4 and g[7].n == 512
        assert {s.n for s in g if s.case is Case.POW2_PQ} == {60, 84, 132, 140, 220, 120, 168, 264, 280, 440}

    def test_parse_ranges(self):
        specs = parse_grid("r=2..3,p=3..7")
        assert [s.n for s in specs] == [4, 8, 12, 20, 28, 24, 40, 56]
        pq = parse_grid("r=2..2,p=3..5,q=5..7")
        assert sorted(s.n for s in pq if s.case is Case.POW2_PQ) == [60, 84, 140]
        assert [s.n for s in parse_grid("n=12, 60")] == [12, 60]

    @pytest.mark.parametrize("bad", ["p=3..5", "r=1..3", "r=2..3,x=1", "r=a..b", "r=2..3,q=5..7", "n=18"])
    def test_parse_errors(self, bad):
        with pytest.raises(ValueError):
            parse_grid(bad)

    @settings(max_examples=30)
    @given(st.integers(2, 5), st.integers(0, 3), st.integers(3, 20), st.integers(0, 15))
    def test_grid_only_valid_specs(self, r0, dr, p0, dp):
        for s in expand_grid((r0, r0 + dr), (p0, p0 + dp), (p0, p0 + dp + 4)):
            assert s.r >= 2
            if s.q is not None:
                assert s.p < s.q and s.p % 2 and s.q % 2

    def test_bad_r_range(self):
        with pytest.raises(InvalidConductor):
            expand_grid((3, 2))

    def test_parallel_matches_serial(self):
        specs = parse_grid("n=12,20,60")
        a = [report_row(r) for r in verify_grid(specs, 256, jobs=1)]
        b = [report_row(r) for r in verify_grid(specs, 256, jobs=2)]
        assert a == b


class TestReports:
    def test_row_and_dict(self):
        rep = verify_bounds(FieldSpec.from_n(20))
        row = report_row(rep)
        assert list(row) == CSV_COLUMNS
        assert row["pass"] == "true" and row["case"] == "POW2_P"
        d = report_dict(rep)
        assert d["pass"] is True
        assert mpfr(d["conds"]["VNA"]["cond"], 256) == mpfr(row["cond_VNA"], 256)
        assert Fraction(d["bounds"]["A"]["bound_squared"]) == a_bound_sq(rep.spec)

    def test_pow2_row_has_empty_A_bound(self):
        row = report_row(verify_bounds(FieldSpec.from_n(16)))
        assert row["bound_A"] == "" and row["ok_A"] == ""


def test_classical_vandermonde_blowup_increases():
    ratios = [float(r) for _, r in vandermonde_blowup()]
    assert all(a < b for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] > 100 and math.isfinite(ratios[-1])
