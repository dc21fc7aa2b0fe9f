"""
Holonomy geometry on the marked torus and its double cover
"""

import logging
from fractions import Fraction
from typing import Dict, Optional, Union

from mpmath import iv

from slitforge.core.config import settings
from slitforge.core.errors import DomainError, InconsistencyError
from slitforge.core.numeric import Enclosure, enclose
from slitforge.models.spec import PartialQuotientSpec
from slitforge.models.vectors import HolVec, LambdaLinear, TwistWitness
from slitforge.services.cf_core import StreamLike, homographic_stream
from slitforge.services.lambda_arith import (
    abs_value,
    lambda_interval,
    linear_sign,
    sign,
    to_interval,
)

# Configure logging
logger = logging.getLogger(__name__)

Direction = Union[Fraction, int, StreamLike]


def cross(u: HolVec, v: HolVec) -> LambdaLinear:
    """u × v = u.x·v.y − u.y·v.x, exact in Z + Zλ."""
    return u.x * v.y - v.x * u.y


def abs_cross(u: HolVec, v: HolVec, spec_of_lambda: StreamLike) -> LambdaLinear:
    return abs_value(cross(u, v), spec_of_lambda)[0]


def _require_height(*vectors: HolVec) -> None:
    for v in vectors:
        if v.y == 0:
            raise DomainError(f"{v} has height 0", "surface_geom.zero_height")


def angle(u: HolVec, v: HolVec, spec_of_lambda: StreamLike) -> Enclosure:
    """∠uv = |u×v| / (|u||v|), certified enclosure."""
    _require_height(u, v)
    c = cross(u, v)
    if c.is_zero():
        return Enclosure.exact(0)
    with iv.workprec(settings.precision_bits):
        return enclose(abs(to_interval(c, spec_of_lambda)) / (u.height * v.height))


def inverse_slope(v: HolVec, spec_of_lambda: StreamLike) -> Enclosure:
    """x / y of a vector with nonzero height."""
    _require_height(v)
    if v.x.t == 0:
        return Enclosure.exact(Fraction(v.x.s, v.y))
    with iv.workprec(settings.precision_bits):
        return enclose(to_interval(v.x, spec_of_lambda) / v.y)


def direction_of(v: HolVec, spec_of_lambda: PartialQuotientSpec) -> Direction:
    """Inverse slope of v as an exact direction (a Fraction or a homographic spec of λ)."""
    _require_height(v)
    v = v if v.y > 0 else -v
    if v.x.t == 0:
        return Fraction(v.x.s, v.y)
    return homographic_stream(spec_of_lambda, v.x.t, v.x.s, 0, v.y)


def _theta_interval(theta: Direction):
    if isinstance(theta, (int, Fraction)):
        return iv.mpf(Fraction(theta).numerator) / iv.mpf(Fraction(theta).denominator)
    return lambda_interval(theta)


def hor(theta: Direction, v: HolVec, spec_of_lambda: StreamLike) -> Enclosure:
    """hor_θ(v) = |y·θ − x|, certified enclosure."""
    if isinstance(theta, (int, Fraction)) and v.x.t == 0:
        return Enclosure.exact(abs(v.y * Fraction(theta) - v.x.s))
    with iv.workprec(settings.precision_bits):
        value = v.y * _theta_interval(theta) - to_interval(v.x, spec_of_lambda)
        return enclose(abs(value))


def hor_sign(theta: Direction, v: HolVec, spec_of_lambda: StreamLike) -> int:
    """Sign of y·θ − x (0 when v points exactly along θ)."""
    return linear_sign(-v.x.s, -v.x.t, v.y, spec_of_lambda, theta)


def in_cylinder(w: HolVec, v: HolVec, spec_of_lambda: StreamLike) -> bool:
    """True iff |w × v| < 1, i.e. w lies in a cylinder of the loop v."""
    if not v.is_loop:
        raise DomainError(f"{v} is not a primitive loop", "surface_geom.not_loop")
    c = cross(w, v)
    return sign(c - LambdaLinear(1), spec_of_lambda) < 0 and sign(c + LambdaLinear(1), spec_of_lambda) > 0


def _orient(w: HolVec, w2: HolVec):
    if w.is_positive_slit and w2.is_positive_slit:
        return w, w2
    if (-w).is_positive_slit and (-w2).is_positive_slit:
        return -w, -w2
    raise DomainError(f"{w} and {w2} are not both in V1^+ or both in -V1^+", "surface_geom.orientation")


def twist_order(delta: HolVec, v: HolVec) -> Optional[int]:
    """b with delta = b·v, or None if delta is not an integer multiple of v."""
    if delta.x.t != 0:
        return None
    p, q = v.x.s, v.y
    if q != 0:
        if delta.y % q:
            return None
        b = delta.y // q
    else:
        if p == 0 or delta.x.s % p:
            return None
        b = delta.x.s // p
    if delta.x.s != b * p or delta.y != b * q:
        return None
    return b


def dehn_related(w: HolVec, w2: HolVec, v: HolVec, spec_of_lambda: StreamLike) -> Optional[TwistWitness]:
    """
    Twist witness for w' = w + b·v when |w×v| + |w'×v| < 1.

    Returns:
        The witness (b = 0 marks the trivial identity w' = w), or None when
        the area condition fails

    Raises:
        InconsistencyError: area condition holds but w' − w is not a multiple of v
    """
    if not v.is_loop:
        raise DomainError(f"{v} is not a primitive loop", "surface_geom.not_loop")
    w, w2 = _orient(w, w2)
    total = abs_cross(w, v, spec_of_lambda) + abs_cross(w2, v, spec_of_lambda)
    if sign(total - LambdaLinear(1), spec_of_lambda) >= 0:
        return None
    b = twist_order(w2 - w, v)
    if b is None:
        raise InconsistencyError(
            f"{w} and {w2} share a cylinder of {v} but differ by a non-multiple",
            "surface_geom.dehn_related",
        )
    if w.is_separating and w2.is_separating and b % 2:
        raise InconsistencyError(f"odd twist order {b} between separating slits", "surface_geom.dehn_related")
    side = "identity" if b == 0 else ("positive" if b > 0 else "negative")
    return TwistWitness(v=v, b=b, side=side)


def area_exchange(w: HolVec, w2: HolVec, v: HolVec, spec_of_lambda: StreamLike) -> Dict:
    """
    Area χ(w, w') = |w×v| = |w'×v| of the torus exchanged by a twist.

    Also checks |w×w'| = |b|·|w×v|; χ is returned unmodified and flagged
    when it exceeds 1.
    """
    if not (w.is_separating and w2.is_separating):
        raise DomainError("area exchange needs separating slits", "surface_geom.area_exchange")
    witness = dehn_related(w, w2, v, spec_of_lambda)
    if witness is None or witness.b == 0:
        raise DomainError("slits are not related by a nontrivial twist", "surface_geom.area_exchange")
    chi = abs_cross(w, v, spec_of_lambda)
    if chi.is_zero():
        raise DomainError("parallel loop gives a degenerate twist", "surface_geom.area_exchange")
    if chi != abs_cross(w2, v, spec_of_lambda):
        raise InconsistencyError("|w×v| and |w'×v| differ", "surface_geom.area_exchange")
    if abs_cross(w, w2, spec_of_lambda) != chi * abs(witness.b):
        raise InconsistencyError("|w×w'| differs from |b|·|w×v|", "surface_geom.area_exchange")
    exceeds = sign(chi - LambdaLinear(1), spec_of_lambda) > 0
    if exceeds:
        logger.warning(f"Area exchange {chi} of {w} -> {w2} exceeds 1")
    with iv.workprec(settings.precision_bits):
        enclosure = enclose(to_interval(chi, spec_of_lambda))
    return {"chi": chi, "enclosure": enclosure, "b": witness.b, "exceeds_one": exceeds}
