"""
Exact arithmetic in Z + Zλ with certified sign resolution
"""

import logging
from fractions import Fraction
from typing import Optional, Tuple, Union

from mpmath import iv, libmp

from slitforge.core.config import settings
from slitforge.core.errors import PrecisionExhaustedError
from slitforge.core.numeric import iv_hull
from slitforge.models.enums import Ordering, SpecKind
from slitforge.models.spec import PartialQuotientSpec
from slitforge.models.vectors import LambdaLinear
from slitforge.services.cf_core import CFStream, StreamLike, as_stream

# Configure logging
logger = logging.getLogger(__name__)

START_DEPTH = 8

Theta = Union[Fraction, int, StreamLike, None]


def _sign_of(value: Fraction) -> int:
    return (value > 0) - (value < 0)


def _bracket_sign(lo: Fraction, hi: Fraction, is_open: bool) -> Optional[int]:
    """Sign of every value in the bracket, or None if it straddles 0."""
    if lo > 0 or (is_open and lo == 0 and hi > 0):
        return 1
    if hi < 0 or (is_open and hi == 0 and lo < 0):
        return -1
    if lo == hi == 0:
        return 0
    return None


def sign(x: LambdaLinear, spec_of_lambda: StreamLike, max_depth: Optional[int] = None) -> int:
    """
    Certified sign of s + t·λ.

    The CF bracket of λ is refined with doubling depth until the image of
    the bracket excludes 0.

    Raises:
        PrecisionExhaustedError: if the depth limit is reached first
    """
    if x.t == 0:
        return _sign_of(Fraction(x.s))
    return linear_sign(x.s, x.t, 0, spec_of_lambda, None, max_depth=max_depth)


def _affine_in_lambda(theta: StreamLike, spec_of_lambda: StreamLike) -> Optional[Tuple[Fraction, Fraction]]:
    """(A, B) with θ = A·λ + B when θ is λ itself or (aλ + b)/d over the same stream."""
    lam = as_stream(spec_of_lambda)
    if as_stream(theta) is lam:
        return Fraction(1), Fraction(0)
    if isinstance(theta, PartialQuotientSpec) and theta.kind == SpecKind.HOMOGRAPHIC:
        a, b, c, d = theta.coefficients
        if c == 0 and as_stream(theta.source) is lam:
            return Fraction(a, d), Fraction(b, d)
    return None


def floor_linear(
    c0: Union[int, Fraction],
    c1: Union[int, Fraction],
    c2: Union[int, Fraction],
    spec_of_lambda: StreamLike,
    theta: Theta = None,
) -> int:
    """Certified floor of c0 + c1·λ + c2·θ."""
    c0, c1, c2 = Fraction(c0), Fraction(c1), Fraction(c2)
    with iv.workprec(settings.precision_bits):
        estimate = iv.mpf(c0.numerator) / c0.denominator
        if c1 != 0:
            estimate = estimate + (iv.mpf(c1.numerator) / c1.denominator) * lambda_interval(spec_of_lambda)
        if c2 != 0:
            if isinstance(theta, (int, Fraction)):
                th = iv.mpf(Fraction(theta).numerator) / Fraction(theta).denominator
            else:
                th = lambda_interval(theta)
            estimate = estimate + (iv.mpf(c2.numerator) / c2.denominator) * th
        f = int(libmp.to_int(estimate._mpi_[0], libmp.round_floor))
    while linear_sign(c0 - f, c1, c2, spec_of_lambda, theta) < 0:
        f -= 1
    while linear_sign(c0 - f - 1, c1, c2, spec_of_lambda, theta) >= 0:
        f += 1
    return f


def _image(c0: Fraction, c1: Fraction, bracket: Tuple[Fraction, Fraction, bool]) -> Tuple[Fraction, Fraction]:
    lo, hi, _ = bracket
    a, b = c0 + c1 * lo, c0 + c1 * hi
    return (a, b) if a <= b else (b, a)


def linear_sign(
    c0: Union[int, Fraction],
    c1: Union[int, Fraction],
    c2: Union[int, Fraction],
    spec_of_lambda: StreamLike,
    theta: Theta = None,
    max_depth: Optional[int] = None,
) -> int:
    """
    Certified sign of c0 + c1·λ + c2·θ.

    θ may be a rational, a spec/stream of its own, or None (then c2 must be 0).
    Both brackets are refined together with doubling depth.
    """
    c0, c1, c2 = Fraction(c0), Fraction(c1), Fraction(c2)
    if isinstance(theta, (int, Fraction)):
        c0, c2, theta = c0 + c2 * Fraction(theta), Fraction(0), None
    elif theta is not None and c2 != 0:
        folded = _affine_in_lambda(theta, spec_of_lambda)
        if folded is not None:
            c0, c1, c2, theta = c0 + c2 * folded[1], c1 + c2 * folded[0], Fraction(0), None
    if c2 == 0:
        theta = None
    if c1 == 0 and theta is None:
        return _sign_of(c0)
    max_depth = max_depth or settings.max_cf_depth
    lam = as_stream(spec_of_lambda)
    th = as_stream(theta) if theta is not None else None
    depth = START_DEPTH
    while True:
        lam_ok = lam.ensure(depth)
        th_ok = th.ensure(depth) if th is not None else True
        lam_bracket = lam.bracket(depth if lam_ok else lam.depth)
        lo, hi = _image(c0, c1, lam_bracket)
        is_open = lam_bracket[2] and c1 != 0
        if th is not None:
            th_bracket = th.bracket(depth if th_ok else th.depth)
            t_lo, t_hi = _image(Fraction(0), c2, th_bracket)
            lo, hi = lo + t_lo, hi + t_hi
            is_open = is_open or th_bracket[2]
        result = _bracket_sign(lo, hi, is_open)
        if result is not None:
            return result
        exhausted_lam = not lam_ok or (lam.terminal and depth >= lam.depth)
        exhausted_th = th is None or not th_ok or (th.terminal and depth >= th.depth)
        if (exhausted_lam and exhausted_th) or depth >= max_depth:
            logger.error(f"Sign of {c0} + {c1}·λ + {c2}·θ undecided at depth {depth}")
            raise PrecisionExhaustedError(
                f"sign undecided at CF depth {depth} for {c0} + {c1}λ + {c2}θ",
                "lambda_arith.precision",
            )
        depth = min(2 * depth, max_depth)
        logger.debug(f"Refining λ bracket to depth {depth}")


def compare(x: LambdaLinear, y: LambdaLinear, spec_of_lambda: StreamLike) -> Ordering:
    """Ordering of x against y."""
    s = sign(x - y, spec_of_lambda)
    if s < 0:
        return Ordering.LESS
    if s > 0:
        return Ordering.GREATER
    return Ordering.EQUAL


def abs_value(x: LambdaLinear, spec_of_lambda: StreamLike) -> Tuple[LambdaLinear, bool]:
    """|x| together with a flag telling whether x was negated."""
    if sign(x, spec_of_lambda) < 0:
        return -x, True
    return x, False


def lambda_interval(spec_of_lambda: StreamLike):
    """
    Interval enclosure of λ from its CF bracket (inside iv.workprec).

    The depth is chosen so that the bracket width 1/q_k^2 is below the
    working precision.
    """
    stream: CFStream = as_stream(spec_of_lambda)
    target_bits = iv.prec + 16
    k = 1
    while k < settings.max_cf_depth and stream.ensure(k + 1) and 2 * stream.pq(k)[1].bit_length() < target_bits:
        k += 1
    lo, hi, _ = stream.bracket(min(k, stream.depth))
    return iv_hull(lo, hi)


def to_interval(x: LambdaLinear, spec_of_lambda: StreamLike):
    """Interval enclosure of s + t·λ (inside iv.workprec)."""
    if x.t == 0:
        return iv.mpf(x.s)
    return iv.mpf(x.s) + iv.mpf(x.t) * lambda_interval(spec_of_lambda)
