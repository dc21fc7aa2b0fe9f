"""
Unit tests for the continued-fraction engine
"""

from fractions import Fraction

import pytest

from slitforge.core.errors import DomainError, TruncationError
from slitforge.models.enums import Exactness, Verdict
from slitforge.models.spec import parse_lambda_spec
from slitforge.services.cf_core import (
    as_stream,
    check_cf1,
    convergents,
    exceeds_power,
    gap_indices,
    homographic_cf,
    homographic_stream,
    is_convergent,
    perez_marco_partial_sum,
    quotients,
)


class TestConvergents:
    """Quotient streams and convergents"""

    def test_golden_fibonacci(self, golden):
        """q_k of the golden mean are Fibonacci numbers"""
        qs = [c.q for c in convergents(golden, 10)]
        assert qs == [1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89]
        assert convergents(golden, 10)[-1].p == 55

    def test_large_gap(self, large_gap):
        """The large partial quotient shows up in q_3"""
        stream = as_stream(large_gap)
        assert [stream.pq(k)[1] for k in range(4)] == [1, 2, 5, 500002]
        assert stream.pq(2) == (2, 5)
        assert quotients(large_gap, 3) == [0, 2, 2, 100000]

    def test_explicit_list_truncates(self):
        """cf: lists end with a TruncationError carrying the largest index"""
        spec = parse_lambda_spec("cf:[0;2,3]")
        with pytest.raises(TruncationError) as exc:
            convergents(spec, 5)
        assert exc.value.max_index == 2

    def test_rational_is_terminal(self):
        """rational: streams end with the exact value"""
        stream = as_stream(parse_lambda_spec("rational:3/7"))
        assert not stream.ensure(5)
        assert stream.terminal
        assert stream.value() == Fraction(3, 7)

    def test_brackets_contain_value(self, golden):
        """Each bracket contains the golden mean"""
        phi = Fraction(6180339887498948482, 10 ** 19)
        for lo, hi, is_open in as_stream(golden).brackets(start=4):
            assert lo < phi < hi
            assert is_open
            if hi - lo < Fraction(1, 10 ** 12):
                break


class TestKhinchinChecks:
    """Best-approximation inequalities and convergent membership"""

    def test_check_cf1(self, golden):
        """1/(q_k(q_k+q_{k+1})) < |θ − p_k/q_k| < 1/(q_k q_{k+1})"""
        assert check_cf1(golden, 3) is True
        assert check_cf1(golden, 8) is True

    def test_is_convergent(self, golden):
        """3/5 is a convergent, 2/5 is not"""
        assert is_convergent(golden, 3, 5) == Verdict.TRUE
        assert is_convergent(golden, 2, 5) == Verdict.FALSE

    def test_is_convergent_needs_positive_q(self, golden):
        """q must be positive"""
        with pytest.raises(DomainError):
            is_convergent(golden, 1, 0)


class TestHomographic:
    """Homographic transforms of quotient streams"""

    def test_rational_source(self):
        """(x + 1)/1 of x = 1/3 is 4/3"""
        spec = homographic_stream(parse_lambda_spec("rational:1/3"), 1, 1, 0, 1)
        stream = as_stream(spec)
        assert stream.ensure(5) is False
        assert stream.value() == Fraction(4, 3)

    def test_inverse_slope_of_slit(self, golden):
        """(λ + 2)/8 has the convergents of 0.327..."""
        spec = homographic_cf(golden, 2, 8)
        values = [c.value for c in convergents(spec, 6)]
        target = Fraction(32725424859373685, 10 ** 17)
        errors = [abs(v - target) for v in values]
        assert errors == sorted(errors, reverse=True)
        assert errors[-1] < Fraction(1, 100)

    def test_identity_slit(self, golden):
        """(λ + 0)/1 is λ itself"""
        assert homographic_cf(golden, 0, 1) is golden

    def test_singular_transform(self, golden):
        """ad − bc = 0 is refused"""
        with pytest.raises(DomainError):
            homographic_stream(golden, 1, 2, 2, 4)


class TestPerezMarco:
    """Partial sums of log log q_{k+1} / q_k"""

    def test_golden_partial_sum(self, golden):
        """q_1 = 1 and q_2 = 2 terms are skipped"""
        pm = perez_marco_partial_sum(golden, 20)
        assert pm.skipped == 2
        assert len(pm.terms) == 18
        assert pm.exactness == Exactness.EXACT
        assert 0 < pm.total.mid < 1

    def test_empty_sum(self, golden):
        """K = 0 gives an exact zero"""
        assert perez_marco_partial_sum(golden, 0).total.lo == "0"

    def test_sum_stops_below_K(self, large_gap):
        """K = 3 adds k = 1, 2 up to log log q_3 / q_2 and skips q_1 = 2"""
        pm = perez_marco_partial_sum(large_gap, 3)
        assert sorted(pm.terms) == [1, 2]
        assert pm.skipped == 1
        assert 0.2379 < pm.terms[1].mid < 0.2380
        assert 0.5148 < pm.terms[2].mid < 0.5149
        assert 0.7527 < pm.total.mid < 0.7529


class TestGapIndices:
    """ℓ_N = {k : q_{k+1} > q_k^N}"""

    def test_golden_has_no_late_gaps(self, golden):
        """Only k = 1 (q_1 = 1, q_2 = 2) qualifies for N = 2"""
        gaps = gap_indices(golden, 2, 20)
        assert gaps.indices == [1]
        assert gaps.exponents[0] is None

    def test_large_gap(self, large_gap):
        """k = 2 carries the large quotient"""
        gaps = gap_indices(large_gap, 2, 10)
        assert gaps.indices == [0, 1, 2]
        assert gaps.exponents[2].mid > 8

    def test_exceeds_power(self):
        """Exact q_{k+1} > q_k^N"""
        assert exceeds_power(26, 5, Fraction(2)) is True
        assert exceeds_power(25, 5, Fraction(2)) is False
        assert exceeds_power(2, 1, Fraction(5)) is True

    def test_gap_family_exact_prefix(self, exp_gaps):
        """q_2 = floor-construction from 2^(e^2)"""
        stream = as_stream(exp_gaps)
        assert stream.convergent(1).q == 2
        assert stream.convergent(2).q == 167
        gaps = gap_indices(exp_gaps, 2, 1)
        assert gaps.indices == [0, 1]
        assert gaps.exactness == Exactness.EXACT

    def test_gap_family_log_domain(self, exp_gaps):
        """q_3 is past the digit budget and handled in the log domain"""
        gaps = gap_indices(exp_gaps, 2, 2)
        assert gaps.indices == [0, 1, 2]
        assert gaps.exactness == Exactness.LOG_DOMAIN
        log_q3 = as_stream(exp_gaps).log_q(3)
        assert log_q3 is not None
        assert log_q3 > 10 ** 70


def _best_approximation_heights(x: Fraction, q_max: int):
    """Heights q where min_p |qx − p| beats every smaller height."""
    best, heights = None, []
    for q in range(1, q_max + 1):
        p = round(q * x)
        dist = abs(q * x - p)
        if best is None or dist < best:
            best = dist
            heights.append(q)
    return heights


class TestBestApproximationOracle:
    """Convergent heights against an exhaustive scan"""

    @pytest.mark.parametrize(
        "text, k_ref",
        [
            ("periodic:[0;(1)]", 30),
            ("periodic:[0;(1,2)]", 30),
            ("periodic:[0;(3,1,4)]", 30),
            ("cf:[0;2,2,100000," + ",".join(["2"] * 17) + "]", 20),
        ],
    )
    def test_heights_match(self, text, k_ref):
        """Distinct q_k up to 10^3 are exactly the best-approximation heights"""
        spec = parse_lambda_spec(text)
        x = convergents(spec, k_ref)[-1].value
        expected = sorted({c.q for c in convergents(spec, k_ref) if c.q <= 1000})
        assert _best_approximation_heights(x, 1000) == expected
