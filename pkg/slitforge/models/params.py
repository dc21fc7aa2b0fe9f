"""
Parameter pack and per-run configuration models
"""

import logging
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import sympy
from mpmath import iv
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from slitforge.core.config import settings
from slitforge.core.errors import DomainError
from slitforge.core.numeric import Enclosure, compare_reals, enclose, iv_hull, real_iv
from slitforge.models.enums import Mode
from slitforge.models.spec import PartialQuotientSpec, parse_lambda_spec

# Configure logging
logger = logging.getLogger(__name__)

RELAXED_KEYS = ("r", "delta", "M_prime", "N", "N_prime", "c0", "k0", "rho")
_FRACTION_FIELDS = ("eps", "r", "delta", "M", "M_prime", "N", "N_prime", "rho")


def to_fraction(value: Any) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float (via its decimal text)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(str(value))
    if isinstance(value, sympy.Rational):
        return Fraction(int(value.p), int(value.q))
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"not a rational number: {value!r}") from e


def default_c0() -> sympy.Expr:
    """c_0 = c'_0 / divisor from the configured constants."""
    return sympy.sympify(settings.c0_prime) / settings.c0_divisor


def parse_overrides(items: Optional[List[str]]) -> Dict[str, str]:
    """Parse CLI `key=value` override items."""
    overrides: Dict[str, str] = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or not value.strip():
            raise DomainError(f"override {item!r} must look like key=value", "params.override")
        if key not in RELAXED_KEYS:
            raise DomainError(
                f"unknown override {key!r}; expected one of {', '.join(RELAXED_KEYS)}",
                "params.override",
            )
        overrides[key] = value.strip()
    return overrides


class ParamPack(BaseModel):
    """Global construction parameters derived from ε"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    eps: Fraction = Field(..., description="Target dimension defect ε")
    r: Fraction = Field(..., description="Growth exponent 1 < r < 2")
    delta: Fraction = Field(..., description="Local-dimension slack δ")
    M: Fraction = Field(..., description="1/(r-1)")
    M_prime: Fraction = Field(..., description="max(3M², Mr/δ)")
    N: Fraction = Field(..., description="Gap exponent M' r^5")
    N_prime: Fraction = Field(..., description="(N+1) r/(r-1)")
    rho: Fraction = Field(..., description="r + 1/2")
    c0: sympy.Expr = Field(default_factory=default_c0, description="Lattice-count constant c_0")
    k0: Optional[int] = Field(None, description="Starting gap index (chosen from λ when unset)")
    mode: Mode = Field(Mode.STRICT, description="Parameter provenance")
    overrides: Dict[str, str] = Field(default_factory=dict, description="Relaxed-mode overrides as given")

    @field_validator(*_FRACTION_FIELDS, mode="before")
    @classmethod
    def _coerce_fraction(cls, value: Any) -> Fraction:
        return to_fraction(value)

    @field_validator("c0", mode="before")
    @classmethod
    def _coerce_c0(cls, value: Any) -> sympy.Expr:
        if isinstance(value, Fraction):
            return sympy.Rational(value.numerator, value.denominator)
        return sympy.sympify(value)

    @model_validator(mode="after")
    def _check_ranges(self) -> "ParamPack":
        if not 1 < self.r:
            raise ValueError(f"r must exceed 1, got {self.r}")
        if self.delta <= 0:
            raise ValueError(f"δ must be positive, got {self.delta}")
        if self.rho <= 1:
            raise ValueError(f"ρ must exceed 1, got {self.rho}")
        c0 = sympy.N(self.c0, 30)
        if not c0.is_positive:
            raise ValueError(f"c_0 must be positive, got {self.c0}")
        if self.mode == Mode.STRICT and self.overrides:
            raise ValueError("strict mode does not accept overrides")
        return self

    @field_serializer(*_FRACTION_FIELDS)
    def _serialize_fraction(self, value: Fraction) -> str:
        return str(value)

    @field_serializer("c0")
    def _serialize_c0(self, value: sympy.Expr) -> str:
        return str(value)

    @field_serializer("mode")
    def _serialize_mode(self, value: Mode) -> str:
        return value.value

    @property
    def provenance(self) -> str:
        return self.mode.value

    @property
    def rho_pow(self) -> sympy.Expr:
        """ρ^{N'} as an exact expression."""
        return _rational(self.rho) ** _rational(self.N_prime)

    def alpha_k(self, q_k: int) -> sympy.Expr:
        """α_k = q_k / (2ρ^{N'})."""
        return sympy.Integer(q_k) / (2 * self.rho_pow)

    def k0_terms(self) -> Dict[str, sympy.Expr]:
        """The four lower bounds q_{k₀} must exceed."""
        r, rho, Np = _rational(self.r), _rational(self.rho), _rational(self.N_prime)
        return {
            "5^M": sympy.Integer(5) ** _rational(self.M),
            "60/c0·ρ^(N'+3)": 60 / self.c0 * rho ** (Np + 3),
            "2ρ^N'(log_r M'+4)": 2 * rho ** Np * (sympy.log(_rational(self.M_prime)) / sympy.log(r) + 4),
            "2^7·ρ^N'": 2 ** 7 * rho ** Np,
        }

    def k0_bound(self) -> Enclosure:
        """Enclosure of the largest k₀ lower bound (the fourth term read as 2⁷ρ^{N'})."""
        with iv.workprec(settings.precision_bits):
            values = [real_iv(term) for term in self.k0_terms().values()]
            low = max(values, key=lambda x: x.a).a
            high = max(values, key=lambda x: x.b).b
            return enclose(iv_hull(low, high))

    def k0_failures(self, q_k0: int) -> List[str]:
        """Names of the k₀ bounds that q_{k₀} does not exceed."""
        return [name for name, term in self.k0_terms().items() if compare_reals(q_k0, term) <= 0]

    def violations(self) -> List[str]:
        """Defining relations that do not hold for this pack (relaxed overrides may break them)."""
        problems: List[str] = []
        half = Fraction(1, 2) - self.eps
        if not Fraction(1) / (1 + self.r) > half:
            problems.append("1/(1+r) > 1/2 - ε")
        if not (1 - self.delta) / (1 + self.r + 2 * self.delta) > half:
            problems.append("(1-δ)/(1+r+2δ) > 1/2 - ε")
        if not self.r < 2:
            problems.append("r < 2")
        if self.M_prime != max(3 * self.M ** 2, self.M * self.r / self.delta):
            problems.append("M' = max(3M², Mr/δ)")
        if self.N != self.M_prime * self.r ** 5:
            problems.append("N = M' r^5")
        if self.N_prime != (self.N + 1) * self.r / (self.r - 1):
            problems.append("N' = (N+1) r/(r-1)")
        if self.rho != self.r + Fraction(1, 2):
            problems.append("ρ = r + 1/2")
        return problems

    def to_dict(self) -> Dict:
        data = self.model_dump()
        data["provenance"] = self.provenance
        data["violations"] = self.violations()
        return data


def _rational(value: Fraction) -> sympy.Rational:
    return sympy.Rational(value.numerator, value.denominator)


def admissible_r_sup(eps: Fraction) -> Fraction:
    """Supremum of r in (1, 2) with 1/(1+r) > 1/2 - ε."""
    half = Fraction(1, 2) - eps
    return min(Fraction(2), (1 - half) / half)


def admissible_delta_sup(eps: Fraction, r: Fraction) -> Fraction:
    """Supremum of δ with (1-δ)/(1+r+2δ) > 1/2 - ε."""
    half = Fraction(1, 2) - eps
    return (1 - half * (1 + r)) / (1 + 2 * half)


def derive_params(
    eps: Any,
    mode: Mode = Mode.STRICT,
    overrides: Optional[Dict[str, str]] = None,
) -> ParamPack:
    """
    Derive the parameter pack from ε.

    r sits at the configured fraction of its admissible range (1, r_sup) and
    δ at the configured fraction of its admissible supremum. In relaxed mode
    any of RELAXED_KEYS may be overridden; dependent values are recomputed
    from the overridden ones unless overridden themselves.

    Raises:
        DomainError: ε outside (0, 1/2), overrides in strict mode, or no admissible δ
    """
    eps = to_fraction(eps)
    overrides = dict(overrides or {})
    if not 0 < eps < Fraction(1, 2):
        raise DomainError(f"ε must lie in (0, 1/2), got {eps}", "tree_builder.derive_params")
    if mode == Mode.STRICT and overrides:
        raise DomainError("strict mode does not accept overrides", "tree_builder.derive_params")
    unknown = set(overrides) - set(RELAXED_KEYS)
    if unknown:
        raise DomainError(f"unknown overrides {sorted(unknown)}", "tree_builder.derive_params")

    def pick(key: str, derived):
        return to_fraction(overrides[key]) if key in overrides else derived()

    r_sup = admissible_r_sup(eps)
    r = pick("r", lambda: 1 + Fraction(settings.r_fraction) * (r_sup - 1))
    if r <= 1:
        raise DomainError(f"r must exceed 1, got {r}", "tree_builder.derive_params")

    def derived_delta() -> Fraction:
        sup = admissible_delta_sup(eps, r)
        if sup <= 0:
            raise DomainError(f"no admissible δ for ε={eps}, r={r}", "tree_builder.derive_params")
        return Fraction(settings.delta_fraction) * sup

    delta = pick("delta", derived_delta)
    M = 1 / (r - 1)
    M_prime = pick("M_prime", lambda: max(3 * M ** 2, M * r / delta))
    N = pick("N", lambda: M_prime * r ** 5)
    N_prime = pick("N_prime", lambda: (N + 1) * r / (r - 1))
    rho = pick("rho", lambda: r + Fraction(1, 2))
    values: Dict[str, Any] = {
        "eps": eps,
        "r": r,
        "delta": delta,
        "M": M,
        "M_prime": M_prime,
        "N": N,
        "N_prime": N_prime,
        "rho": rho,
        "mode": mode,
        "overrides": overrides,
    }
    if "c0" in overrides:
        values["c0"] = overrides["c0"]
    if "k0" in overrides:
        values["k0"] = int(overrides["k0"])
    try:
        pack = ParamPack(**values)
    except ValueError as e:
        raise DomainError(f"invalid parameter pack: {e}", "tree_builder.derive_params")
    if mode == Mode.RELAXED:
        logger.warning(f"Relaxed parameter pack with overrides {overrides}; guarantees use these constants")
    logger.info(f"Derived parameters for ε={eps}: r={r}, δ={delta}, M'={M_prime}, N={N}, N'={N_prime}")
    return pack


class RunConfig(BaseModel):
    """Per-run settings gathered from the command line"""

    lambda_spec: str = Field(..., description="λ-spec text")
    eps: str = Field("1/10", description="Target dimension defect ε")
    mode: Mode = Field(Mode.STRICT, description="strict or relaxed")
    overrides: Dict[str, str] = Field(default_factory=dict, description="Relaxed-mode parameter overrides")
    depth: int = Field(4, description="Tree depth / level limit")
    out: Optional[str] = Field(None, description="Output directory")
    seed: Tuple[int, int] = Field((0, 2), description="Seed slit (m, n) in V2+")

    @field_validator("depth")
    @classmethod
    def _check_depth(cls, value: int) -> int:
        if value < 0:
            raise ValueError("depth must be nonnegative")
        return value

    @field_validator("seed")
    @classmethod
    def _check_seed(cls, value: Tuple[int, int]) -> Tuple[int, int]:
        m, n = value
        if m % 2 or n % 2 or n <= 0:
            raise ValueError(f"seed ({m}, {n}) must be a slit in V2+ of positive height")
        return value

    @model_validator(mode="after")
    def _check_mode(self) -> "RunConfig":
        if self.mode == Mode.STRICT and self.overrides:
            raise ValueError("strict mode forbids parameter overrides")
        return self

    def spec(self) -> PartialQuotientSpec:
        return parse_lambda_spec(self.lambda_spec)

    def params(self) -> ParamPack:
        return derive_params(self.eps, self.mode, self.overrides)
