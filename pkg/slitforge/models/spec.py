"""
λ-spec model and grammar parser
"""

import json
import re
from fractions import Fraction
from typing import List, Optional

import sympy
from pydantic import BaseModel, Field, field_validator, model_validator

from slitforge.core.config import settings
from slitforge.core.errors import SpecParseError
from slitforge.models.enums import SpecKind

K_SYMBOL = sympy.Symbol("k", integer=True, nonnegative=True)
Q_SYMBOL = sympy.Symbol("q", integer=True, positive=True)

_QUOTIENTS = re.compile(r"^\[\s*0\s*(?:;\s*(?P<body>.*))?\]$")
_GAPS = re.compile(r"^\{\s*base\s*:\s*(?P<base>\[.*?\])\s*,\s*n_k\s*:\s*(?P<expr>.+?)\s*\}$")
_HOM = re.compile(r"^\((?P<coeffs>[-\d\s,]+)\)\s*:\s*(?P<source>.+)$")


class PartialQuotientSpec(BaseModel):
    """Deterministic description of the partial quotients a_1, a_2, ... of λ (a_0 = 0)"""

    kind: SpecKind = Field(..., description="Spec kind tag")
    prefix: List[int] = Field(default_factory=list, description="Explicit quotients a_1.. (preperiod for periodic)")
    period: List[int] = Field(default_factory=list, description="Repeating block (periodic and gap bases)")
    n_expr: Optional[str] = Field(None, description="Gap exponent n_k as an expression in k and q")
    terminal: bool = Field(False, description="True when λ is the rational number given by the prefix")
    coefficients: Optional[List[int]] = Field(None, description="Homographic (a, b, c, d) applied to the source")
    source: Optional["PartialQuotientSpec"] = Field(None, description="Source spec of a homographic transform")

    @field_validator("prefix", "period")
    @classmethod
    def _positive(cls, value: List[int]) -> List[int]:
        if any(a < 1 for a in value):
            raise ValueError("partial quotients a_k (k >= 1) must be positive")
        return value

    @model_validator(mode="after")
    def _check_kind(self) -> "PartialQuotientSpec":
        if self.kind in (SpecKind.CF, SpecKind.RATIONAL):
            if self.period or self.n_expr:
                raise ValueError(f"{self.kind.value} spec takes an explicit list only")
            if not self.prefix:
                raise ValueError("explicit quotient list must be nonempty")
            if self.kind == SpecKind.RATIONAL and self.prefix == [1]:
                raise ValueError("rational λ must lie in (0, 1)")
        if self.kind == SpecKind.HOMOGRAPHIC:
            if self.source is None or not self.coefficients or len(self.coefficients) != 4:
                raise ValueError("homographic spec needs a source and four coefficients")
            a, b, c, d = self.coefficients
            if a * d - b * c == 0:
                raise ValueError("homographic transform must be invertible")
            return self
        elif self.source is not None or self.coefficients is not None:
            raise ValueError("only homographic specs carry a source")
        if self.kind == SpecKind.PERIODIC and not self.period:
            raise ValueError("periodic spec needs a nonempty period")
        if self.kind == SpecKind.GAPS:
            if not self.n_expr:
                raise ValueError("gap family needs an n_k expression")
            if not self.period:
                raise ValueError("gap family needs a periodic base, e.g. [0;(2)]")
            gap_expression(self.n_expr)
        return self

    @property
    def k_max(self) -> int:
        """Largest index that can be materialized."""
        if self.kind in (SpecKind.CF, SpecKind.RATIONAL):
            return len(self.prefix)
        return settings.max_cf_depth

    def base_quotient(self, k: int) -> Optional[int]:
        """Quotient a_k from the explicit prefix/period, None past a finite list."""
        if k < 1:
            raise ValueError("base quotients start at k = 1")
        if k <= len(self.prefix):
            return self.prefix[k - 1]
        if not self.period:
            return None
        return self.period[(k - 1 - len(self.prefix)) % len(self.period)]

    def to_text(self) -> str:
        """Render back to the λ-spec grammar."""
        body = _render_quotients(self.prefix, self.period)
        if self.kind == SpecKind.HOMOGRAPHIC:
            coeffs = ",".join(str(c) for c in self.coefficients)
            return f"hom:({coeffs}):{self.source.to_text()}"
        if self.kind == SpecKind.GAPS:
            return f"gaps:{{base:{body}, n_k:{self.n_expr}}}"
        return f"{self.kind.value}:{body}"


def _render_quotients(prefix: List[int], period: List[int]) -> str:
    parts = [str(a) for a in prefix]
    if period:
        parts.append("(" + ",".join(str(a) for a in period) + ")")
    if not parts:
        return "[0]"
    return "[0;" + ",".join(parts) + "]"


def gap_expression(text: str) -> sympy.Expr:
    """Parse an n_k expression; only k and q may appear free."""
    try:
        expr = sympy.sympify(text, locals={"k": K_SYMBOL, "q": Q_SYMBOL, "e": sympy.E})
    except (sympy.SympifyError, SyntaxError, TypeError) as e:
        raise SpecParseError(f"cannot parse n_k expression {text!r}: {e}", "cf_core.spec_parse")
    extra = expr.free_symbols - {K_SYMBOL, Q_SYMBOL}
    if extra:
        raise SpecParseError(f"n_k may depend on k and q only, found {sorted(map(str, extra))}", "cf_core.spec_parse")
    return expr


def _parse_quotients(text: str):
    match = _QUOTIENTS.match(text.strip())
    if not match:
        raise SpecParseError(f"expected [0;a1,a2,...], got {text!r}", "cf_core.spec_parse")
    body = (match.group("body") or "").strip()
    prefix: List[int] = []
    period: List[int] = []
    if not body:
        return prefix, period
    paren = body.find("(")
    head = body if paren < 0 else body[:paren]
    tail = "" if paren < 0 else body[paren:]
    try:
        prefix = [int(a) for a in head.replace(" ", "").split(",") if a]
        if tail:
            if not (tail.startswith("(") and tail.rstrip().endswith(")")):
                raise ValueError("period must close the list")
            period = [int(a) for a in tail.strip()[1:-1].replace(" ", "").split(",") if a]
    except ValueError as e:
        raise SpecParseError(f"bad quotient list {text!r}: {e}", "cf_core.spec_parse")
    return prefix, period


def _rational_quotients(value: Fraction) -> List[int]:
    if not 0 < value < 1:
        raise SpecParseError(f"rational λ must lie in (0, 1), got {value}", "cf_core.spec_parse")
    quotients = []
    p, q = value.numerator, value.denominator
    p, q = q, p
    while q:
        a, rem = divmod(p, q)
        quotients.append(a)
        p, q = q, rem
    return quotients


def parse_lambda_spec(text: str) -> PartialQuotientSpec:
    """
    Parse the λ-spec grammar.

    Accepted forms: cf:[0;a1,...], periodic:[0;b1,...,(a1,...)],
    gaps:{base:[0;...], n_k:<expr in k,q>}, rational:p/q, rational:[0;...],
    or the JSON dump of a PartialQuotientSpec.

    Raises:
        SpecParseError: on any grammar or validation failure
    """
    text = text.strip()
    try:
        if text.startswith("{"):
            return PartialQuotientSpec.model_validate(json.loads(text))
        kind_text, _, rest = text.partition(":")
        kind = SpecKind(kind_text.strip())
        rest = rest.strip()
        if kind == SpecKind.GAPS:
            match = _GAPS.match(rest)
            if not match:
                raise SpecParseError(f"expected gaps:{{base:[0;...], n_k:...}}, got {rest!r}", "cf_core.spec_parse")
            prefix, period = _parse_quotients(match.group("base"))
            return PartialQuotientSpec(kind=kind, prefix=prefix, period=period, n_expr=match.group("expr"))
        if kind == SpecKind.HOMOGRAPHIC:
            match = _HOM.match(rest)
            if not match:
                raise SpecParseError(f"expected hom:(a,b,c,d):<spec>, got {rest!r}", "cf_core.spec_parse")
            coefficients = [int(c) for c in match.group("coeffs").replace(" ", "").split(",")]
            source = parse_lambda_spec(match.group("source"))
            return PartialQuotientSpec(kind=kind, coefficients=coefficients, source=source)
        if kind == SpecKind.RATIONAL:
            if rest.startswith("["):
                prefix, period = _parse_quotients(rest)
                if period:
                    raise SpecParseError("rational spec cannot be periodic", "cf_core.spec_parse")
            else:
                prefix = _rational_quotients(Fraction(rest))
            return PartialQuotientSpec(kind=kind, prefix=prefix, terminal=True)
        prefix, period = _parse_quotients(rest)
        if kind == SpecKind.CF and period:
            raise SpecParseError("use periodic: for repeating blocks", "cf_core.spec_parse")
        return PartialQuotientSpec(kind=kind, prefix=prefix, period=period)
    except SpecParseError:
        raise
    except (ValueError, ZeroDivisionError) as e:
        raise SpecParseError(f"invalid λ-spec {text!r}: {e}", "cf_core.spec_parse")


PartialQuotientSpec.model_rebuild()
