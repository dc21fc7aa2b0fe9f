"""
Unit tests for the level schedule and slit tree construction
"""

from fractions import Fraction

import pytest

from slitforge.core.errors import DomainError
from slitforge.models.enums import Region
from slitforge.models.params import derive_params
from slitforge.models.vectors import HolVec
from slitforge.services.tree_builder import (
    LevelSchedule,
    _index_search,
    build_level,
    choose_k0,
    compare_factors,
    initial_slit,
    new_tree,
    schedule,
    verify_tree,
)


class TestHelpers:
    """Height comparisons and index searches"""

    def test_compare_factors(self):
        """Products of powers compared exactly"""
        assert compare_factors([(2, Fraction(1))], [(3, Fraction(1))]) == -1
        assert compare_factors([(4, Fraction(1, 2))], [(2, Fraction(1))]) == 0
        assert compare_factors([(5, Fraction(1)), (30, Fraction(3, 2))], [(800, Fraction(1))]) == 1

    def test_index_search(self):
        """min/max over 0..limit with open-ended markers"""
        assert _index_search(lambda j: j >= 2, 5, "min") == 2
        assert _index_search(lambda j: j > 9, 5, "min") is None
        assert _index_search(lambda j: j <= 1, 5, "max") == 1
        assert _index_search(lambda j: True, 5, "max") is None
        assert _index_search(lambda j: False, 5, "max") == -1


class TestStartingIndex:
    """k₀ and the initial slit"""

    def test_pack_k0(self, pack, large_gap):
        """The toy pack fixes k₀ = 2"""
        assert choose_k0(pack, large_gap, [0, 1, 2]) == 2

    def test_k0_not_a_gap(self, pack, large_gap):
        """k₀ must belong to ℓ_N"""
        with pytest.raises(DomainError) as exc:
            choose_k0(pack, large_gap, [0, 1])
        assert exc.value.code == "tree_builder.k0"

    def test_no_gaps(self, pack, large_gap):
        """Empty ℓ_N"""
        with pytest.raises(DomainError) as exc:
            choose_k0(pack, large_gap, [])
        assert exc.value.code == "tree_builder.no_gaps"

    def test_strict_infeasible(self, large_gap):
        """q_0..q_2 = 1, 2, 5 are far below the strict bounds"""
        with pytest.raises(DomainError) as exc:
            choose_k0(derive_params("1/10"), large_gap, [0, 1, 2])
        assert exc.value.code == "tree_builder.k0_infeasible"

    def test_initial_slit(self, pack, large_gap):
        """Smallest Λ1 child of (λ, 2) above q_2^M' = 25"""
        w0 = initial_slit(HolVec.slit(0, 2), pack, large_gap, 2)
        assert w0 == HolVec.slit(6, 30)

    def test_seed_must_separate(self, pack, large_gap):
        """(λ+1, 2) is not in V2+"""
        with pytest.raises(DomainError):
            initial_slit(HolVec.slit(1, 2), pack, large_gap, 2)


class TestSchedule:
    """Regions per level"""

    def test_toy_schedule(self, pack, large_gap):
        """One gap index: Liouville at level 0, Diophantine afterwards"""
        sched = schedule(pack, large_gap, 3)
        assert sched.gaps == [2]
        assert sched.w0_height == 30
        assert sched.indices[2]["C"] == 0
        assert sched.indices[2]["D"] == 1
        assert len(sched.plans) == 4
        first = sched.plans[0]
        assert first.region == Region.LIOUVILLE
        assert first.delta == Fraction(4, 5)
        assert first.rho == Fraction(1, 4)
        assert all(plan.region == Region.DIOPHANTINE for plan in sched.plans[1:])
        assert sched.to_dict()["provenance"] == "relaxed"

    def test_missing_plan(self, pack, large_gap):
        """Levels past level_max have no plan"""
        sched = schedule(pack, large_gap, 1)
        with pytest.raises(DomainError):
            sched.plan(5)

    def test_length_window(self, pack):
        """H_1 = [100^(3/2), 5·100^(3/2)]"""
        sched = LevelSchedule(pack=pack, w0_height=100, k0=None, gaps=[], q={}, indices={}, plans=[], level_max=1)
        assert sched.in_window(1, 1000)
        assert sched.in_window(1, 5000)
        assert not sched.in_window(1, 999)
        assert not sched.in_window(1, 5001)


class TestTree:
    """Level construction and verification"""

    def test_new_tree(self, pack, large_gap):
        """Root only"""
        tree = new_tree(large_gap, pack, 2)
        assert tree.depth == 0
        root = tree.levels[0][0]
        assert root.slit == HolVec.slit(6, 30)
        assert root.region == Region.INITIAL
        assert root.parent is None

    def test_build_level_out_of_order(self, pack, large_gap):
        """Level 1 needs level 0 as the last built level"""
        tree = new_tree(large_gap, pack, 2)
        with pytest.raises(DomainError):
            build_level(tree, 1)

    @pytest.mark.slow
    def test_liouville_level(self, pack, large_gap):
        """Children of w₀ are w₀ + 2v"""
        tree = build_level(new_tree(large_gap, pack, 2), 0)
        assert tree.depth == 1
        children = tree.levels[1]
        assert children
        for node in children:
            assert node.region == Region.LIOUVILLE
            assert node.parent == 0
            assert node.slit == tree.levels[0][0].slit + 2 * node.twist.v
        assert tree.reports[0].parents == 1
        assert tree.reports[0].children == len(children)

    @pytest.mark.slow
    def test_max_nodes(self, pack, large_gap):
        """Capped levels record the capped parent"""
        tree = build_level(new_tree(large_gap, pack, 2), 0, max_nodes=1)
        assert len(tree.levels[1]) == 1
        assert tree.reports[0].capped == [0]
        assert "level-capped" in tree.reports[0].flags

    def test_verify_root(self, pack, large_gap):
        """δ_0 = 4/5 is not below 1/16 under the toy pack"""
        report = verify_tree(new_tree(large_gap, pack, 2))
        assert report["depth"] == 0
        assert report["provenance"] == "relaxed"
        assert report["levels"][0]["length_window"] is True
        assert report["levels"][0]["delta_below_1/16"] is False
        assert report["all_pass"] is False

