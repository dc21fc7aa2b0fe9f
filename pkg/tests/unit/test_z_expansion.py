"""
Unit tests for Z-expansions, covers and certificate checks
"""

from collections import Counter
from fractions import Fraction
from math import gcd

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from slitforge.core.errors import DomainError
from slitforge.core.numeric import Enclosure
from slitforge.models.enums import CertificateStatus, VecKind, ZKind
from slitforge.models.records import NonergodicCertificate, ZSetDescriptor
from slitforge.models.spec import parse_lambda_spec
from slitforge.models.vectors import HolVec
from slitforge.services.cf_core import convergents
from slitforge.services.z_expansion import (
    _coprime_count,
    check_angle_bounds,
    check_certificate,
    classify_relative,
    cover_E_r,
    z_convergents,
)

V0 = ZSetDescriptor(ZKind.V0)


class TestZConvergents:
    """Best approximations from a holonomy set"""

    def test_golden_loops(self, golden):
        """Loop convergents of λ have Fibonacci heights"""
        expansion = z_convergents(golden, V0, 13, golden)
        assert expansion.heights == [1, 2, 3, 5, 8, 13]
        assert [rec.vector for rec in expansion][-1] == HolVec.loop(8, 13)
        assert all(rec.kind == VecKind.LOOP for rec in expansion)
        assert not expansion.terminated

    def test_rational_direction_terminates(self, golden):
        """θ = 2/5 ends at the loop (2, 5)"""
        expansion = z_convergents(Fraction(2, 5), V0, 10, golden)
        assert expansion.heights == [1, 2, 5]
        assert expansion.terminated
        assert expansion[-1].terminal
        assert expansion[-1].hor.lo == "0"

    def test_slits_only_even_heights(self, golden):
        """V2 members have even heights"""
        expansion = z_convergents(golden, ZSetDescriptor(ZKind.V2), 20, golden)
        assert expansion.heights
        assert all(h % 2 == 0 for h in expansion.heights)
        assert all(rec.vector.is_separating for rec in expansion)

    def test_height_bound(self, golden):
        """Height bound must be positive"""
        with pytest.raises(DomainError):
            z_convergents(golden, V0, 0, golden)

    def test_angle_bounds(self, golden):
        """Consecutive convergents satisfy both angle bounds"""
        expansion = z_convergents(golden, V0, 13, golden)
        report = check_angle_bounds(expansion, golden)
        assert report["monotone"] is True
        assert report["passed"] is True
        assert len(report["steps"]) == 5


class TestClassification:
    """Depth-limited Liouville witnesses"""

    def test_diophantine_so_far(self):
        """No height exceeds the square of its predecessor"""
        result = classify_relative([2, 3, 5, 8], 2)
        assert result["witnesses"] == []
        assert result["verdict"] == "diophantine-so-far(2)"
        assert result["depth_limited"] is True

    def test_liouville_witness(self):
        """100 > 3^2"""
        result = classify_relative([2, 3, 100], 2)
        assert result["witnesses"] == [1]
        assert result["verdict"] == "liouville-witness"

    def test_too_short(self):
        """A single height gives no verdict"""
        assert classify_relative([5], 2)["verdict"] is None


class TestCover:
    """Covers of E'_r by direction intervals"""

    def test_coprime_count(self):
        """Four residues below 12 are prime to 12"""
        assert _coprime_count(12, 1, 12) == 4
        assert _coprime_count(7, 5, 4) == 0

    @given(st.integers(min_value=1, max_value=2000))
    def test_coprime_count_is_totient(self, q):
        """Counting over [1, q] gives φ(q)"""
        assert _coprime_count(q, 1, q) == sympy.totient(q)

    def test_loop_counts(self, golden):
        """Loops over [0, 1] per dyadic band"""
        table = cover_E_r(V0, 2, 0, (0, 3), "7/10", golden)
        assert [band.count for band in table.bands] == [2, 3, 14, 54]
        assert table.summable is True
        assert sorted(table.tail_sums) == [0, 1, 2, 3]
        assert table.bands[0].ratio is None

    def test_interval_rows(self, golden):
        """One I(v) of length 2/q^3 around each loop slope p/q"""
        table = cover_E_r(V0, 2, 0, (0, 3), "7/10", golden)
        assert len(table.intervals) == sum(band.count for band in table.bands) == 73
        assert not table.intervals_truncated
        assert [row.vector for row in table.intervals[:2]] == [HolVec.loop(0, 1), HolVec.loop(1, 1)]
        for row in table.intervals:
            q = row.vector.height
            slope = Fraction(row.vector.x.s, q)
            assert gcd(row.vector.x.s, q) == 1
            assert row.slope == Enclosure.exact(slope)
            assert row.length.contains(Fraction(2, q**3))
            assert row.interval.contains(slope - Fraction(1, q**3))
            assert row.interval.contains(slope + Fraction(1, q**3))
        assert table.to_dict()["intervals"] == 73

    def test_slit_interval_rows(self, golden):
        """Slit rows sit at (λ+m)/n for even n and agree with the band counts"""
        last = convergents(golden, 60)[-1]
        lam = Fraction(last.p, last.q)
        table = cover_E_r(ZSetDescriptor(ZKind.V2), 2, 0, (1, 5), "7/10", golden)
        assert table.intervals
        per_band = Counter(row.band for row in table.intervals)
        assert per_band == {band.band: band.count for band in table.bands if band.count}
        for row in table.intervals:
            v = row.vector
            assert v.is_slit and v.height % 2 == 0 and v.x.s % 2 == 0
            slope = (lam + v.x.s) / v.height
            assert 0 <= slope <= 1
            assert row.slope.contains(slope)
            assert row.interval.contains(slope)
        row = table.intervals[0]
        assert row.to_row()["kind"] == "slit"
        assert row.to_row()["height"] == 2

    def test_interval_rows_truncated(self, golden):
        """Band counts are unaffected by the row cap"""
        table = cover_E_r(V0, 2, 0, (0, 3), "7/10", golden, max_intervals=5)
        assert len(table.intervals) == 5
        assert table.intervals_truncated
        assert [band.count for band in table.bands] == [2, 3, 14, 54]

    def test_band_sums_decay(self, golden):
        """Band ratios track 2^(2-(1+r)s) for s = 7/10, r = 2"""
        table = cover_E_r(V0, 2, 0, (4, 9), "7/10", golden, max_intervals=0)
        predicted = float(table.predicted_ratio.hi)
        assert predicted < 1
        assert all(band.min_length is not None for band in table.bands)
        ratios = [band.ratio for band in table.bands[1:]]
        assert len(ratios) == 5
        for ratio in ratios:
            assert float(ratio.hi) <= predicted * 1.1
            assert float(ratio.lo) >= predicted * 0.8

    def test_not_summable(self, golden):
        """s <= 2/(1+r) does not sum"""
        assert cover_E_r(V0, 2, 0, (0, 1), "1/2", golden).summable is False

    def test_bad_exponent(self, golden):
        """r must exceed 1"""
        with pytest.raises(DomainError):
            cover_E_r(V0, 1, 0, (0, 1), "7/10", golden)


class TestCertificate:
    """Summable cross-product certificates"""

    def test_accepted(self, golden):
        """One even twist with |w×v| = 2 − 3λ < 1/2"""
        cert = NonergodicCertificate(slits=[HolVec.slit(0, 2), HolVec.slit(2, 8)], loops=[HolVec.loop(1, 3)])
        report = check_certificate(cert, 0, golden)
        assert report.status == CertificateStatus.ACCEPTED
        assert 0.1458 < report.partial_sums[0].mid < 0.1459
        assert 0.2917 < report.h_bounds[0].mid < 0.2918
        assert 0.32725 < report.theta.mid < 0.32726
        assert len(cert.cross_terms) == 1

    def test_rejected_step(self, golden):
        """(λ+1, 5) is not separating"""
        cert = NonergodicCertificate(slits=[HolVec.slit(0, 2), HolVec.slit(1, 5)], loops=[HolVec.loop(1, 3)])
        report = check_certificate(cert, 0, golden)
        assert report.status == CertificateStatus.REJECTED
        assert report.failed_step == 0

    def test_too_short(self, golden):
        """A single slit is not a certificate"""
        report = check_certificate(NonergodicCertificate(slits=[HolVec.slit(0, 2)], loops=[]), 0, golden)
        assert report.status == CertificateStatus.REJECTED
        assert report.failed_step is None

    def test_negative_tail(self, golden):
        """Tail bounds are nonnegative"""
        cert = NonergodicCertificate(slits=[HolVec.slit(0, 2), HolVec.slit(2, 8)], loops=[HolVec.loop(1, 3)])
        with pytest.raises(DomainError):
            check_certificate(cert, Fraction(-1, 10), golden)


def _z_scan(theta: Fraction, lam: Fraction, members: ZSetDescriptor, height: int):
    """Exhaustive Z-convergents: (s, t, y) of each member beating all shorter ones."""
    best = lam if members.has_slits else Fraction(1)
    found = []
    for q in range(1, height + 1):
        candidates = []
        if members.has_loops:
            centre = round(q * theta)
            for p in range(centre - 8, centre + 9):
                if gcd(p, q) == 1:
                    candidates.append((abs(q * theta - p), 0, (p, 0, q)))
        if members.has_slits and q % 2 == 0:
            centre = round(q * theta - lam)
            for m in range(centre - 5, centre + 6):
                if m % 2 == 0:
                    candidates.append((abs(q * theta - lam - m), 1, (m, 1, q)))
        if not candidates:
            continue
        dist, _, vector = min(candidates)
        if dist < best:
            best = dist
            found.append(vector)
    return found


class TestZScanOracle:
    """Z-convergents against an exhaustive scan"""

    @pytest.mark.parametrize("kind", [ZKind.V0, ZKind.V2, ZKind.V0_V2])
    @pytest.mark.parametrize("direction", ["periodic:[0;(1,2)]", "periodic:[0;(2,5,1)]"])
    def test_scan_matches(self, golden, kind, direction):
        """Same vectors up to height 60, heights increasing"""
        theta_spec = parse_lambda_spec(direction)
        theta = convergents(theta_spec, 30)[-1].value
        lam = convergents(golden, 40)[-1].value
        members = ZSetDescriptor(kind)
        expansion = z_convergents(theta_spec, members, 60, golden)
        observed = [(rec.vector.x.s, rec.vector.x.t, rec.vector.y) for rec in expansion]
        assert observed == _z_scan(theta, lam, members, 60)
        assert expansion.heights == sorted(set(expansion.heights))
