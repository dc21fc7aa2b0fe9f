"""
Unit tests for interval nesting, local dimensions, Σδ_j and J_k counting
"""

import math
from fractions import Fraction

import pytest

from slitforge.core.errors import DomainError
from slitforge.models.records import NonergodicCertificate
from slitforge.models.vectors import HolVec
from slitforge.services.cantor_dim import (
    d_j_closed_form,
    dim0_counting,
    dir_interval,
    falconer_bound,
    group_bounds,
    nested,
    sibling_gaps,
    sum_delta,
)
from slitforge.services.tree_builder import schedule

W0 = HolVec.slit(6, 30)
CHILD = HolVec.slit(96, 452)


class TestIntervals:
    """I(w) and the Cantor structure"""

    def test_dir_interval(self, golden):
        """I((λ+2, 8)) at r = 2 has length 4/8³"""
        interval = dir_interval(HolVec.slit(2, 8), 2, golden)
        assert 0.32725 < interval.center.mid < 0.32726
        assert abs(interval.length.mid - 1 / 128) < 1e-15

    def test_loop_rejected(self, golden):
        """Intervals are defined for slits"""
        with pytest.raises(DomainError):
            dir_interval(HolVec.loop(1, 3), 2, golden)

    def test_nested(self, large_gap):
        """w₀ + 2(45, 211) sits inside I(w₀)"""
        r = Fraction(3, 2)
        assert nested(CHILD, W0, r, large_gap) is True
        assert nested(W0, CHILD, r, large_gap) is False

    def test_single_child_has_no_gaps(self, large_gap):
        """Gaps need two siblings"""
        assert sibling_gaps(W0, [CHILD], Fraction(3, 2), large_gap) == []

    def test_sibling_gap_row(self, large_gap):
        """One gap between two siblings"""
        rows = sibling_gaps(W0, [CHILD, HolVec.slit(108, 508)], Fraction(3, 2), large_gap)
        assert len(rows) == 1
        assert set(rows[0]) >= {"left", "right", "gap", "required", "ok"}


class TestLocalDimension:
    """d_j by the closed form and by the defining quotient"""

    def test_closed_form(self, pack):
        """ρ_jδ_j = 1 leaves 1/(1 + r + 2r log 5/((r-1) log|w₀|))"""
        estimate = d_j_closed_form(0, pack, w0_height=10 ** 6, rho_delta=[1, 1])
        assert 0.312 < estimate.d_closed.mid < 0.313
        assert 0.312 < estimate.d_direct.mid < 0.313
        assert estimate.agree is True
        assert estimate.num_term.mid == 0

    def test_needs_height(self, pack):
        """|w₀| >= 2"""
        with pytest.raises(DomainError):
            d_j_closed_form(0, pack, w0_height=1, rho_delta=[1, 1])

    def test_missing_rho_delta(self, pack):
        """ρ_{j+1}δ_{j+1} must be supplied"""
        with pytest.raises(DomainError):
            d_j_closed_form(0, pack, w0_height=100, rho_delta=[1])


class TestFalconer:
    """Falconer quotients and the liminf proxy"""

    M = [2] * 22
    EPS = [Fraction(1, 4 ** (j + 1)) for j in range(22)]

    def test_terms(self):
        """log 2^(j+1) / log 2^(2j+3)"""
        estimate = falconer_bound(self.M, self.EPS)
        assert abs(estimate.terms[20].mid - 21 / 43) < 1e-12
        assert 0.47 < estimate.proxy.mid < 0.5
        assert abs(estimate.proxy.mid - 11 / 23) < 1e-12
        assert abs(estimate.d_terms[0].mid - 0.5) < 1e-12
        assert estimate.eps_decreasing is True
        assert estimate.products_to_zero is True

    def test_m_below_two(self):
        """Every m_j must be at least 2"""
        with pytest.raises(DomainError):
            falconer_bound([2, 1, 2], self.EPS[:3])


class TestDeltaSums:
    """Σδ_j against the per-group bounds"""

    def test_empty_prefix(self, pack, large_gap):
        """K = 0 sums nothing"""
        result = sum_delta(schedule(pack, large_gap, 3), K=0)
        assert result["rows"] == []
        assert result["totals"]["liouville"] == {"lo": "0", "hi": "0"}
        assert result["verdict"] == "bounded (trend only)"

    def test_toy_groups(self, pack, large_gap):
        """Level 0 is Liouville, levels 1..3 Diophantine"""
        result = sum_delta(schedule(pack, large_gap, 3))
        assert result["K"] == 4
        groups = {row["group"]: row["levels"] for row in result["rows"]}
        assert groups == {"liouville": [0], "diophantine": [1, 2, 3]}
        assert result["provenance"] == "relaxed"

    def test_group_bounds_log_domain(self, exp_gaps, pack):
        """n_k = e^q pushes q_3 into the log domain"""
        result = group_bounds(exp_gaps, pack, 2)
        assert result["exactness"] == "log_domain"
        assert [row["k"] for row in result["rows"]] == [0, 1, 2]
        assert result["trend"] == "decaying"
        liouville = {row["k"]: float(row["liouville"]["lo"]) for row in result["rows"]}
        assert 8.0 < liouville[1] < 8.1
        assert 9.9 < liouville[2] < 10.0


class TestDimZeroCounting:
    """J_k tables of a certificate"""

    def test_empty_certificate(self, golden):
        """Nothing to count"""
        result = dim0_counting(NonergodicCertificate(slits=[], loops=[]), golden, 2)
        assert result["table"] == []
        assert result["totals"]["observed"] == "0"
        assert result["totals"]["contradiction"] is False

    def test_short_certificate(self, golden):
        """Two slits leave every J_k empty"""
        cert = NonergodicCertificate(slits=[HolVec.slit(0, 2), HolVec.slit(2, 8)], loops=[HolVec.loop(1, 3)])
        result = dim0_counting(cert, golden, 2)
        assert [row["k"] for row in result["table"]] == [1]
        row = result["table"][0]
        assert row["J_k"] == []
        assert row["conditional"] is True
        assert result["totals"]["contradiction"] is False

    def test_short_crosses_witness_contradiction(self, exp_gaps):
        """Σ 1/(2q_k) over J_1 exceeds Σ|w_j×v_j| when v_j = (1, 2|w_j|)"""
        heights = [2, 4, 8, 16, 32]
        cert = NonergodicCertificate(
            slits=[HolVec.slit(0, h) for h in heights],
            loops=[HolVec.loop(1, 2 * h) for h in heights[:-1]],
        )
        result = dim0_counting(cert, exp_gaps, 2, K=2)
        rows = {row["k"]: row for row in result["table"]}
        assert [row["j"] for row in rows[1]["J_k"]] == [0, 1, 2]
        assert rows[2]["J_k"] == []
        assert result["totals"]["observed"] == "3/4"
        # |w_j×v_j| = |w_j|·|2λ − 1| with |2λ − 1| < 1/160
        assert 0.17 < float(result["totals"]["cross_sum"]["lo"])
        assert float(result["totals"]["cross_sum"]["hi"]) < 0.19
        assert result["totals"]["contradiction"] is True

    def test_bad_exponent(self, golden):
        """N must exceed 1"""
        with pytest.raises(DomainError):
            dim0_counting(NonergodicCertificate(slits=[], loops=[]), golden, 1)

    def test_doubling_chain(self, exp_gaps):
        """|w_{j+1}| = |w_j|² fills J_1 and J_2 over q_1 = 2, q_2 = 167"""
        slits = [HolVec.slit(0, 2 ** (2**j)) for j in range(8)]
        cert = NonergodicCertificate(slits=slits, loops=[HolVec.loop(1, 3)] * 7)
        result = dim0_counting(cert, exp_gaps, 2, K=2)
        rows = {row["k"]: row for row in result["table"]}
        assert [row["j"] for row in rows[1]["J_k"]] == [0]
        assert [row["j"] for row in rows[2]["J_k"]] == [3, 4, 5]
        assert rows[1]["count"] == 1 and rows[2]["count"] == 3
        assert all(row["case"] == "unchecked" for k in (1, 2) for row in rows[k]["J_k"])
        assert rows.get(0, {"count": 0})["count"] == 0
        assert rows[2]["count_bound"] is not None
        assert rows[2]["conditional"] is True

        # exponents 8, 16, 32 of the J_2 heights: one member per doubling
        first, last = (rows[2]["J_k"][i]["height"].bit_length() - 1 for i in (0, -1))
        assert (first, last) == (8, 32)
        assert rows[2]["count"] == math.floor(math.log2(last / first)) + 1

        observed = sum(Fraction(row["count"], 2 * row["q_k"]) for row in result["table"])
        assert result["totals"]["observed"] == str(observed) == "173/668"
        assert float(result["totals"]["cross_sum"]["lo"]) > float(observed)
        assert result["totals"]["contradiction"] is False
