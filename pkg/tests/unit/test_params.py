"""
Unit tests for parameter derivation and run configuration
"""

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from pydantic import ValidationError

from slitforge.core.errors import DomainError
from slitforge.models.enums import Mode, SpecKind
from slitforge.models.params import RunConfig, derive_params, parse_overrides, to_fraction


class TestDeriveParams:
    """ε → (r, δ, M, M', N, N', ρ)"""

    def test_strict_pack(self):
        """ε = 1/10 with the default fractions 4/5 and 9/10"""
        pack = derive_params("1/10")
        assert pack.r == Fraction(7, 5)
        assert pack.delta == Fraction(1, 50)
        assert pack.M == Fraction(5, 2)
        assert pack.M_prime == 175
        assert pack.N == Fraction(117649, 125)
        assert pack.N_prime == Fraction(412209, 125)
        assert pack.rho == Fraction(19, 10)
        assert pack.k0 is None
        assert pack.provenance == "strict"
        assert pack.violations() == []

    @given(st.fractions(min_value=Fraction(1, 1000), max_value=Fraction(499, 1000), max_denominator=1000))
    def test_strict_relations_hold(self, eps):
        """Every strict pack satisfies its defining relations"""
        pack = derive_params(eps)
        assert 1 < pack.r < 2
        assert pack.delta > 0
        assert pack.violations() == []

    @pytest.mark.parametrize("eps", ["0", "1/2", "-1/10", "3/4"])
    def test_eps_out_of_range(self, eps):
        """ε must lie in (0, 1/2)"""
        with pytest.raises(DomainError):
            derive_params(eps)

    def test_strict_rejects_overrides(self):
        """Overrides need relaxed mode"""
        with pytest.raises(DomainError):
            derive_params("1/10", Mode.STRICT, {"r": "3/2"})

    def test_relaxed_recomputes_dependents(self):
        """Overriding r alone recomputes M, M', N, N' and ρ"""
        pack = derive_params("1/10", Mode.RELAXED, {"r": "3/2"})
        assert pack.M == 2
        assert pack.rho == 2
        assert pack.N == pack.M_prime * Fraction(3, 2) ** 5
        assert pack.provenance == "relaxed"
        assert "1/(1+r) > 1/2 - ε" in pack.violations()

    def test_relaxed_bad_r(self):
        """r = 1 is rejected even in relaxed mode"""
        with pytest.raises(DomainError):
            derive_params("1/10", Mode.RELAXED, {"r": "1"})

    def test_toy_pack(self, pack):
        """All toy overrides land in the pack"""
        assert pack.r == Fraction(3, 2)
        assert pack.N_prime == 4
        assert pack.k0 == 2
        assert str(pack.c0) == "1"
        assert pack.to_dict()["provenance"] == "relaxed"

    def test_k0_failures(self, pack):
        """Toy bounds: 25, 7680, about 182.7 and 2048"""
        assert pack.k0_failures(10 ** 4) == []
        assert pack.k0_failures(100) == ["60/c0·ρ^(N'+3)", "2ρ^N'(log_r M'+4)", "2^7·ρ^N'"]
        assert 7679 < pack.k0_bound().mid < 7681

    def test_alpha_k(self, pack):
        """α_k = q_k/(2ρ^N') = q_k/32"""
        assert pack.alpha_k(64) == 2


class TestOverrides:
    """key=value parsing"""

    def test_parse(self):
        """Values are kept as text"""
        assert parse_overrides(["r=3/2", " N = 2 "]) == {"r": "3/2", "N": "2"}
        assert parse_overrides(None) == {}

    @pytest.mark.parametrize("item", ["r", "r=", "gamma=2"])
    def test_rejects(self, item):
        """Missing value or unknown key"""
        with pytest.raises(DomainError) as exc:
            parse_overrides([item])
        assert exc.value.code == "params.override"

    def test_to_fraction(self):
        """Floats go through their decimal text"""
        assert to_fraction(0.1) == Fraction(1, 10)
        assert to_fraction("7/5") == Fraction(7, 5)
        with pytest.raises(ValueError):
            to_fraction("seven")


class TestRunConfig:
    """Per-run configuration validation"""

    def test_defaults(self):
        """Strict ε = 1/10 with seed (0, 2)"""
        config = RunConfig(lambda_spec="periodic:[0;(1)]")
        assert config.seed == (0, 2)
        assert config.params().r == Fraction(7, 5)
        assert config.spec().kind == SpecKind.PERIODIC

    @pytest.mark.parametrize("seed", [(1, 2), (0, 3), (0, 0), (2, -2)])
    def test_bad_seed(self, seed):
        """Seeds are positive separating slits"""
        with pytest.raises(ValidationError):
            RunConfig(lambda_spec="periodic:[0;(1)]", seed=seed)

    def test_strict_overrides(self):
        """Strict mode forbids overrides"""
        with pytest.raises(ValidationError):
            RunConfig(lambda_spec="periodic:[0;(1)]", overrides={"r": "3/2"})

    def test_negative_depth(self):
        """Depth is nonnegative"""
        with pytest.raises(ValidationError):
            RunConfig(lambda_spec="periodic:[0;(1)]", depth=-1)
