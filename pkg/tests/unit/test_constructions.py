"""
Unit tests for the Liouville and Diophantine child constructions
"""

import math
from fractions import Fraction
from math import gcd

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from slitforge.core.errors import DomainError
from slitforge.models.enums import LambdaMode, MinAreaCase, Verdict
from slitforge.models.spec import parse_lambda_spec
from slitforge.models.vectors import HolVec
from slitforge.services.cf_core import convergents
from slitforge.services.constructions import (
    check_liouville_convergent,
    check_min_area,
    companions,
    delta_children,
    is_good,
    is_normal,
    lambda_children,
    liouville_convergent,
    normal_children,
    normality_heights,
)
from tests.fixtures.specs import GOLDEN, LARGE_GAP

W = HolVec.slit(0, 2)
W100 = HolVec.slit(0, 100)
RATE = Fraction(3, 2)
DEPTH = {GOLDEN: 60, LARGE_GAP: 15}


def _lambda_of(spec, k):
    last = convergents(spec, k)[-1]
    return Fraction(last.p, last.q)


def _delta_by_hand(lam, w, alpha, beta):
    """Primitive v with β|w| <= |v| <= 2β|w| and 1/β < |w×v| < 1/α, from exact rationals."""
    x = lam + w.m
    found = []
    for q in range(math.ceil(beta * w.n), math.floor(2 * beta * w.n) + 1):
        center = math.floor(x * q / w.n)
        for p in range(center - 3, center + 4):
            if gcd(p, q) == 1 and 1 / beta < abs(x * q - w.n * p) < 1 / alpha:
                found.append(HolVec.loop(p, q))
    return found


def _heights_by_hand(theta, stop):
    """Distinct convergent denominators of θ up to the first one >= stop."""
    heights, q_prev, q = [1], 0, 1
    rest = theta - math.floor(theta)
    while rest and q < stop:
        x = 1 / rest
        a = math.floor(x)
        rest = x - a
        q_prev, q = q, a * q + q_prev
        if q != heights[-1]:
            heights.append(q)
    return heights


def _normal_on_grid(heights, n, alpha, r, rho, steps=4000):
    """Some height lies in [αρ^t n, n^(1+(r-1)t)] at every grid point t of [1, T]."""
    r = float(r)
    top = math.log(n ** (r - 1) / alpha) / math.log(rho)
    for i in range(steps + 1):
        t = 1 + (top - 1) * i / steps
        lo, hi = alpha * rho**t * n, n ** (1 + (r - 1) * t)
        if not any(lo <= q <= hi for q in heights):
            return False
    return True


class TestLiouvilleConvergent:
    """u with d·u = (p_k + m q_k, n q_k)"""

    def test_record(self, large_gap):
        """q_2 = 5 and λ + 0 gives d·u = (2, 10)"""
        record = liouville_convergent(W, 2, large_gap)
        assert record.d == 2
        assert record.u == (1, 5)
        assert record.companions == ((0, 1), (1, 4))

    def test_precondition(self, large_gap):
        """|w| must stay below q_{k+1}/(2q_k)"""
        with pytest.raises(DomainError) as exc:
            liouville_convergent(W, 1, large_gap)
        assert exc.value.code == "constructions.liouville_precondition"

    def test_loop_rejected(self, large_gap):
        """Only slits have Liouville convergents"""
        with pytest.raises(DomainError):
            liouville_convergent(HolVec.loop(1, 2), 2, large_gap)

    def test_check(self, large_gap):
        """u is a convergent of λ/2 and its successor is far above q_3/2"""
        record = liouville_convergent(W, 2, large_gap)
        result = check_liouville_convergent(record, large_gap)
        assert result["is_convergent"] == Verdict.TRUE
        assert result["next_exceeds_half"] is True


class TestCompanions:
    """Unimodular companions of a primitive vector"""

    def test_values(self):
        """(2, 5) has companions (1, 2) and (1, 3)"""
        assert companions((2, 5)) == ((1, 2), (1, 3))

    def test_not_primitive(self):
        """(2, 4) is not primitive"""
        with pytest.raises(DomainError):
            companions((2, 4))

    @given(st.integers(min_value=-500, max_value=500), st.integers(min_value=1, max_value=500))
    def test_unimodular(self, ux, uy):
        """Each companion has cross product ±1 and height in (0, |u|]"""
        assume(gcd(ux, uy) == 1)
        found = companions((ux, uy))
        assert len(found) == 2
        for c, e in found:
            assert ux * e - c * uy in (1, -1)
            assert 0 < e <= uy


class TestLambdaChildren:
    """Children w + 2v from the Liouville convergent"""

    def test_range_mode(self, large_gap):
        """Three multiples per companion"""
        result = lambda_children(W, 2, large_gap, mode=LambdaMode.RANGE, a_range=(1, 3))
        assert result.count == 6
        assert result.guarantee_active is False
        for rec in result.children:
            assert rec.child == W + 2 * rec.v
            assert rec.v.is_loop
            assert "not-a-basis" not in rec.flags
        heights = [rec.v.y for rec in result.children]
        assert heights == sorted(heights)

    def test_window_needs_r(self, large_gap):
        """WINDOW mode without r"""
        with pytest.raises(DomainError):
            lambda_children(W, 2, large_gap)

    def test_range_needs_bounds(self, large_gap):
        """RANGE mode without a_range"""
        with pytest.raises(DomainError):
            lambda_children(W, 2, large_gap, mode=LambdaMode.RANGE)


class TestMinArea:
    """Case split for Dehn-related slit pairs"""

    def test_liouville_case(self, large_gap):
        """v = u lands in case (ii)"""
        verdict = check_min_area(W, HolVec.slit(2, 12), HolVec.loop(1, 5), 2, large_gap)
        assert verdict.case == MinAreaCase.LIOUVILLE_CONVERGENT
        assert verdict.checked_vectors == ()

    def test_large_area_case(self, large_gap):
        """|w×v| = λ > 1/10"""
        verdict = check_min_area(W, HolVec.slit(0, 4), HolVec.loop(0, 1), 2, large_gap)
        assert verdict.case == MinAreaCase.LARGE_AREA
        assert verdict.threshold.denominator == 10

    def test_not_related(self, large_gap):
        """|w×v| + |w'×v| >= 1"""
        with pytest.raises(DomainError):
            check_min_area(W, HolVec.slit(2, 4), HolVec.loop(1, 1), 2, large_gap)


class TestGoodness:
    """(α, β)-goodness and Δ children"""

    def test_good(self, large_gap):
        """λ/2 has the convergent height 4 in [4, 6]"""
        witness = is_good(W, 2, 3, large_gap)
        assert witness is not None
        assert witness.q == 4

    def test_not_good(self, large_gap):
        """No convergent height in [6, 8]"""
        assert is_good(W, 3, 4, large_gap) is None

    def test_empty_window(self, large_gap):
        """α >= β leaves nothing to enumerate"""
        result = delta_children(W, 3, 2, large_gap)
        assert result.count == 0
        assert "empty-window" in result.flags
        assert result.guarantee_active is False

    def test_unknown_method(self, large_gap):
        """Only strip and height enumeration exist"""
        with pytest.raises(DomainError):
            delta_children(W, 2, 3, large_gap, method="grid")

    def test_hand_counted_children(self, large_gap):
        """|λq − 2p| in (1/3, 1/2) for q in [6, 12] at v = (1, 6), (2, 9), (2, 11)"""
        result = delta_children(W, 2, 3, large_gap)
        assert [rec.v for rec in result.children] == [HolVec.loop(1, 6), HolVec.loop(2, 9), HolVec.loop(2, 11)]
        assert [rec.child for rec in result.children][0] == W + 2 * HolVec.loop(1, 6)
        assert result.diagnostics["heights"] == [6, 12]

    @pytest.mark.parametrize(
        "text, w, alpha, beta",
        [
            (LARGE_GAP, HolVec.slit(0, 2), Fraction(2), Fraction(3)),
            (LARGE_GAP, HolVec.slit(1, 3), Fraction(3, 2), Fraction(5)),
            (GOLDEN, HolVec.slit(0, 2), Fraction(2), Fraction(4)),
            (GOLDEN, HolVec.slit(1, 3), Fraction(2), Fraction(4)),
        ],
    )
    def test_strip_matches_height_scan(self, text, w, alpha, beta):
        """Strip and per-height enumeration find the same children"""
        spec = parse_lambda_spec(text)
        strip = delta_children(w, alpha, beta, spec)
        scan = delta_children(w, alpha, beta, spec, method="height")
        assert strip.count > 0
        assert [rec.v for rec in strip.children] == [rec.v for rec in scan.children]
        assert [rec.child for rec in strip.children] == [rec.child for rec in scan.children]
        lam = _lambda_of(spec, DEPTH[text])
        assert [rec.v for rec in strip.children] == _delta_by_hand(lam, w, alpha, beta)


class TestNormality:
    """α-normality and normal children"""

    def test_alpha_too_small(self, large_gap):
        """α must exceed 1"""
        with pytest.raises(DomainError):
            is_normal(W, 1, "3/2", large_gap)

    def test_empty_range(self, large_gap):
        """αρ > |w|^(r-1) leaves T < 1"""
        with pytest.raises(DomainError):
            is_normal(W, 2, "3/2", large_gap, rho="2")

    def test_heights(self, golden):
        """λ/100 has convergent heights 1, 161, 162, 809, 9061"""
        assert normality_heights(W100, RATE, golden) == ([1, 161, 162, 809, 9061], False)

    @pytest.mark.parametrize(
        "text, alpha, expected",
        [
            (GOLDEN, 2, Verdict.TRUE),
            (GOLDEN, 3, Verdict.FALSE),
            (LARGE_GAP, 2, Verdict.FALSE),
        ],
    )
    def test_matches_t_grid(self, text, alpha, expected):
        """Verdict agrees with a scan of t over [1, T]"""
        spec = parse_lambda_spec(text)
        witness = is_normal(W100, alpha, RATE, spec, rho=Fraction(2))
        assert witness.verdict == expected
        theta = _lambda_of(spec, DEPTH[text]) / W100.n
        heights = _heights_by_hand(theta, 1000)
        assert witness.heights == heights
        on_grid = _normal_on_grid(heights, W100.n, alpha, RATE, 2)
        assert (witness.verdict == Verdict.TRUE) == on_grid
        if expected == Verdict.FALSE:
            assert any(window["nonempty"] == "true" for window in witness.windows)

    def test_normal_children(self, golden, pack):
        """Kept children are exactly the 3-normal members of Δ(w, 2, 10)"""
        result = normal_children(W100, 2, pack, golden, window=(5000, 10**12))
        assert result.diagnostics["hypotheses"] == {
            "parent α-normal": "true",
            "|w|^N >= q_{k+1}": "true",
            "(5|w|^r)^r < q_{k'}": "true",
            "240α²ρ^(3N'+3) <= c0|w|^((r-1)²)": "false",
        }
        assert "hypotheses-failed" in result.flags
        assert result.guarantee_active is False

        base = delta_children(W100, 2, 10, golden, pack=pack)
        assert HolVec.loop(7, 1132) in [rec.v for rec in base.children]
        assert result.diagnostics["candidates"] == base.count
        assert result.count + result.diagnostics["rejected"] == base.count
        expected = [
            rec.v
            for rec in base.children
            if is_normal(rec.child, 3, RATE, golden, rho=Fraction(2)).verdict == Verdict.TRUE
        ]
        assert [rec.v for rec in result.children] == expected
        assert set(result.diagnostics["rejected_reasons"]) <= {"false", "uncertain", "unchecked"}
