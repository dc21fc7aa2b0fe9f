"""
Unit tests for the λ-spec grammar
"""

import pytest

from slitforge.core.errors import SpecParseError
from slitforge.models.enums import SpecKind
from slitforge.models.spec import PartialQuotientSpec, parse_lambda_spec


class TestParse:
    """Accepted spec forms"""

    def test_periodic(self):
        """Preperiod and period are split"""
        spec = parse_lambda_spec("periodic:[0;3,(1,2)]")
        assert spec.kind == SpecKind.PERIODIC
        assert spec.prefix == [3]
        assert spec.period == [1, 2]
        assert [spec.base_quotient(k) for k in range(1, 6)] == [3, 1, 2, 1, 2]

    def test_explicit_list(self):
        """cf: specs are finite and non-terminal"""
        spec = parse_lambda_spec("cf:[0;2,2,100000]")
        assert spec.prefix == [2, 2, 100000]
        assert not spec.terminal
        assert spec.k_max == 3
        assert spec.base_quotient(4) is None

    def test_rational_fraction(self):
        """rational:p/q expands into its quotients and is terminal"""
        spec = parse_lambda_spec("rational:3/7")
        assert spec.prefix == [2, 3]
        assert spec.terminal

    def test_rational_list(self):
        """rational:[0;...] keeps the list"""
        assert parse_lambda_spec("rational:[0;2]").prefix == [2]

    def test_gap_family(self):
        """gaps: carries base period and n_k expression"""
        spec = parse_lambda_spec("gaps:{base:[0;(2)], n_k:exp(q)}")
        assert spec.kind == SpecKind.GAPS
        assert spec.period == [2]
        assert spec.n_expr == "exp(q)"

    def test_homographic(self):
        """hom: wraps a source spec"""
        spec = parse_lambda_spec("hom:(1,2,0,4):periodic:[0;(1)]")
        assert spec.kind == SpecKind.HOMOGRAPHIC
        assert spec.coefficients == [1, 2, 0, 4]
        assert spec.source.kind == SpecKind.PERIODIC

    def test_to_text_reparses(self):
        """Rendered text parses back to the same spec"""
        for text in (
            "periodic:[0;3,(1,2)]",
            "cf:[0;2,2,5]",
            "gaps:{base:[0;(2)], n_k:2*k + 3}",
            "hom:(1,2,0,4):periodic:[0;(1)]",
        ):
            spec = parse_lambda_spec(text)
            assert parse_lambda_spec(spec.to_text()) == spec

    def test_json_dump(self):
        """The JSON dump of a spec is accepted"""
        spec = parse_lambda_spec("periodic:[0;(1)]")
        assert parse_lambda_spec(spec.model_dump_json()) == spec


class TestParseErrors:
    """Grammar and validation failures"""

    @pytest.mark.parametrize(
        "text",
        [
            "bogus:[0;1]",
            "cf:[1;2]",
            "cf:[0;2,(1)]",
            "cf:[0;0,2]",
            "periodic:[0;1,2]",
            "rational:3/2",
            "rational:[0;1]",
            "gaps:{base:[0;(2)], n_k:x + 1}",
            "gaps:{base:[0;2], n_k:2}",
            "hom:(1,2,2,4):periodic:[0;(1)]",
            "cf:[0;a,b]",
        ],
    )
    def test_rejected(self, text):
        """Malformed specs raise SpecParseError"""
        with pytest.raises(SpecParseError) as exc:
            parse_lambda_spec(text)
        assert exc.value.code == "cf_core.spec_parse"

    def test_model_validation(self):
        """Direct construction enforces the same rules"""
        with pytest.raises(ValueError):
            PartialQuotientSpec(kind=SpecKind.PERIODIC, prefix=[1])
