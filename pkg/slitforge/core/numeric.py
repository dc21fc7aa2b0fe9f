"""
Certified real arithmetic helpers on top of mpmath interval arithmetic
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Callable, Dict, Optional, Sequence, Tuple, TypeVar, Union

import sympy
from mpmath import iv, libmp, mp

from slitforge.core.config import settings
from slitforge.core.errors import BudgetExceededError, DomainError, PrecisionExhaustedError, SpecParseError

# Configure logging
logger = logging.getLogger(__name__)

T = TypeVar("T")

Real = Union[int, Fraction, sympy.Expr]


def to_iv(x):
    """
    Convert an exact or interval value to an outward-rounded interval.

    Must be called inside the working precision of the caller.
    """
    if hasattr(x, "_mpi_"):
        return x
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return iv.mpf(x.numerator)
        return iv.mpf(x.numerator) / iv.mpf(x.denominator)
    return iv.mpf(x)


def iv_hull(lo, hi):
    """Interval hull of two values."""
    a = to_iv(lo)._mpi_
    b = to_iv(hi)._mpi_
    low = a[0] if libmp.mpf_le(a[0], b[0]) else b[0]
    high = a[1] if libmp.mpf_ge(a[1], b[1]) else b[1]
    return iv.make_mpf((low, high))


def iv_log(x):
    """Natural log of a positive value as an interval."""
    return iv.log(to_iv(x))


def iv_pow(base, exponent):
    """base ** exponent for positive base, via exp(exponent * log(base))."""
    return iv.exp(to_iv(exponent) * iv_log(base))


def iv_pi():
    return +iv.pi


def decide(
    predicate: Callable[[], Optional[T]],
    what: str = "comparison",
    code: str = "numeric.precision_exhausted",
    bits: Optional[int] = None,
    max_bits: Optional[int] = None,
) -> T:
    """
    Evaluate a tri-state predicate with increasing working precision.

    The predicate is re-run under iv.workprec with doubled precision while
    it returns None.

    Args:
        predicate: Callable returning a value, or None when undecided
        what: Description used in logs and errors
        code: Module-qualified error code
        bits: Starting precision (defaults to settings.precision_bits)
        max_bits: Precision cap (defaults to settings.max_precision_bits)

    Returns:
        The first non-None value produced by the predicate

    Raises:
        PrecisionExhaustedError: if undecided at max_bits
    """
    result = try_decide(predicate, what=what, bits=bits, max_bits=max_bits)
    if result is None:
        logger.error(f"Undecided {what} at {max_bits or settings.max_precision_bits} bits")
        raise PrecisionExhaustedError(f"could not decide {what}", code)
    return result


def try_decide(
    predicate: Callable[[], Optional[T]],
    what: str = "comparison",
    bits: Optional[int] = None,
    max_bits: Optional[int] = None,
) -> Optional[T]:
    """Like decide() but returns None instead of raising."""
    bits = bits or settings.precision_bits
    max_bits = max_bits or settings.max_precision_bits
    while True:
        with iv.workprec(bits):
            result = predicate()
        if result is not None:
            return result
        if bits >= max_bits:
            return None
        bits = min(2 * bits, max_bits)
        logger.debug(f"Escalating precision for {what} to {bits} bits")


@dataclass(frozen=True)
class Enclosure:
    """Serializable closed interval [lo, hi] with decimal string endpoints"""

    lo: str
    hi: str

    @classmethod
    def from_iv(cls, x, digits: int = 20) -> "Enclosure":
        a, b = to_iv(x)._mpi_
        # printing rounds to nearest, so step one printed ulp outward
        ulp = libmp.from_rational(1, 10 ** (digits - 1), 64, libmp.round_ceiling)
        lo = libmp.mpf_sub(a, libmp.mpf_mul(libmp.mpf_abs(a), ulp), 64, libmp.round_floor)
        hi = libmp.mpf_add(b, libmp.mpf_mul(libmp.mpf_abs(b), ulp), 64, libmp.round_ceiling)
        return cls(lo=libmp.to_str(lo, digits), hi=libmp.to_str(hi, digits))

    @classmethod
    def exact(cls, value: Union[int, Fraction]) -> "Enclosure":
        text = str(value)
        return cls(lo=text, hi=text)

    def to_iv(self):
        return iv_hull(_text_iv(self.lo), _text_iv(self.hi))

    @property
    def mid(self) -> float:
        return float((_to_mpf(self.lo) + _to_mpf(self.hi)) / 2)

    def contains(self, value: Union[int, Fraction, float]) -> bool:
        point = value if isinstance(value, Fraction) else Fraction(str(value))
        return Fraction(self.lo) <= point <= Fraction(self.hi)

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi}


def _text_iv(text: str):
    if "/" in text:
        return to_iv(Fraction(text))
    return iv.mpf(text)


def _to_mpf(text: str):
    if "/" in text:
        frac = Fraction(text)
        return mp.mpf(frac.numerator) / frac.denominator
    return mp.mpf(text)


def enclose(x, digits: int = 20) -> Enclosure:
    """Enclosure of an interval or exact value."""
    if isinstance(x, (int, Fraction)):
        return Enclosure.exact(x)
    return Enclosure.from_iv(x, digits)


def evaluate_expression(expr: sympy.Expr, env: Optional[Dict] = None, log_q=None, ctx=iv, log_symbol=None):
    """
    Evaluate a sympy expression in an mpmath context.

    Args:
        expr: Expression tree (numbers, symbols, +, *, powers, log, exp)
        env: Symbol values (ints or intervals)
        log_q: Optional interval used verbatim for log(log_symbol) leaves
        ctx: mpmath context (iv by default)
        log_symbol: Symbol whose log is supplied through log_q
    """
    env = env or {}

    def walk(node):
        return evaluate_expression(node, env, log_q, ctx, log_symbol)

    if expr.is_Integer:
        return ctx.mpf(int(expr))
    if expr.is_Rational:
        return ctx.mpf(int(expr.p)) / ctx.mpf(int(expr.q))
    if expr is sympy.E:
        return +ctx.e
    if expr is sympy.pi:
        return +ctx.pi
    if expr.is_Float:
        return ctx.mpf(str(expr))
    if expr.is_Symbol:
        if expr not in env:
            raise SpecParseError(f"unbound symbol {expr}", "numeric.unbound_symbol")
        value = env[expr]
        return value if hasattr(value, "_mpi_") or hasattr(value, "_mpf_") else ctx.mpf(value)
    uses_log_q = log_q is not None and log_symbol is not None
    if isinstance(expr, sympy.log):
        if uses_log_q and expr.args[0] == log_symbol:
            return log_q
        return ctx.log(walk(expr.args[0]))
    if isinstance(expr, sympy.exp):
        return ctx.exp(walk(expr.args[0]))
    if expr.is_Add:
        total = ctx.mpf(0)
        for arg in expr.args:
            total = total + walk(arg)
        return total
    if expr.is_Mul:
        total = ctx.mpf(1)
        for arg in expr.args:
            total = total * walk(arg)
        return total
    if expr.is_Pow:
        base, power = expr.args
        if power.is_Integer:
            return walk(base) ** int(power)
        if uses_log_q and base == log_symbol:
            return ctx.exp(walk(power) * log_q)
        return ctx.exp(walk(power) * ctx.log(walk(base)))
    raise SpecParseError(f"unsupported expression node {expr!r}", "numeric.expression")


def as_fraction(x: Real) -> Optional[Fraction]:
    """Exact rational value of x, or None for irrational expressions."""
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    x = sympy.sympify(x)
    if x.is_Rational:
        return Fraction(int(x.p), int(x.q))
    return None


def real_iv(x: Real):
    """Interval enclosure of a real parameter (inside iv.workprec)."""
    exact = as_fraction(x)
    if exact is not None:
        return to_iv(exact)
    return evaluate_expression(sympy.sympify(x))


def compare_reals(x: Real, y: Real, what: str = "parameter comparison") -> int:
    """
    Sign of x − y.

    Exact when both are rational, otherwise decided by interval escalation.

    Raises:
        PrecisionExhaustedError: if the values cannot be separated
    """
    fx, fy = as_fraction(x), as_fraction(y)
    if fx is not None and fy is not None:
        return (fx > fy) - (fx < fy)

    def predicate():
        d = real_iv(x) - real_iv(y)
        if d > 0:
            return 1
        if d < 0:
            return -1
        return None

    return decide(predicate, what=what)


def _power_fraction(base: Union[int, Fraction], exponent: Fraction, scale: Union[int, Fraction]) -> Fraction:
    """scale^b · base^a for exponent a/b, guarded by the digit budget."""
    base, exponent, scale = Fraction(base), Fraction(exponent), Fraction(scale)
    if base <= 0 or scale <= 0:
        raise DomainError("powers need a positive base and scale", "numeric.power")
    a, b = exponent.numerator, exponent.denominator
    bits = abs(a) * max(base.numerator.bit_length(), base.denominator.bit_length())
    bits += b * max(scale.numerator.bit_length(), scale.denominator.bit_length())
    if bits > settings.digit_budget * 4:
        raise BudgetExceededError(
            f"{scale}·{base}^{exponent} needs about {bits} bits",
            "numeric.digit_budget",
        )
    return scale ** b * base ** a


def floor_power(
    base: Union[int, Fraction],
    exponent: Fraction,
    scale: Union[int, Fraction] = 1,
) -> Tuple[int, bool]:
    """
    floor(scale · base^exponent) for a positive rational base.

    Returns:
        (floor, exact) where exact tells whether the power is an integer
    """
    value = _power_fraction(base, exponent, scale)
    b = Fraction(exponent).denominator
    root, _ = sympy.integer_nthroot(value.numerator // value.denominator, b)
    root = int(root)
    return root, Fraction(root) ** b == value


def ceil_power(base: Union[int, Fraction], exponent: Fraction, scale: Union[int, Fraction] = 1) -> int:
    """ceil(scale · base^exponent)."""
    f, exact = floor_power(base, exponent, scale)
    return f if exact else f + 1


def compare_product(
    x: Union[int, Fraction],
    factors: Sequence[Tuple[Union[int, Fraction], Fraction]],
) -> int:
    """
    Sign of x − Π base_i^{e_i} for positive rational bases and rational exponents.

    Both sides are raised to the common denominator of the exponents and
    compared as exact rationals.
    """
    x = Fraction(x)
    if x <= 0:
        return -1
    L = 1
    for _, e in factors:
        L = L * Fraction(e).denominator // gcd(L, Fraction(e).denominator)
    rhs = Fraction(1)
    for base, e in factors:
        e = Fraction(e)
        rhs *= _power_fraction(base, e * L, 1)
    lhs = x ** L
    return (lhs > rhs) - (lhs < rhs)


def compare_power(
    x: Union[int, Fraction],
    base: Union[int, Fraction],
    exponent: Fraction,
    scale: Union[int, Fraction] = 1,
) -> int:
    """Sign of x − scale · base^exponent, decided exactly."""
    return compare_product(x, [(base, Fraction(exponent)), (scale, Fraction(1))])


def floor_real(x: Real, what: str = "floor") -> int:
    """Certified floor of a real parameter."""
    exact = as_fraction(x)
    if exact is not None:
        return exact.numerator // exact.denominator

    def predicate():
        value = real_iv(x)
        lo = int(libmp.to_int(value._mpi_[0], libmp.round_floor))
        hi = int(libmp.to_int(value._mpi_[1], libmp.round_floor))
        return lo if lo == hi else None

    return decide(predicate, what=what)


def ceil_real(x: Real, what: str = "ceiling") -> int:
    """Certified ceiling of a real parameter."""
    negated = -x if isinstance(x, (int, Fraction)) else -sympy.sympify(x)
    return -floor_real(negated, what=what)
