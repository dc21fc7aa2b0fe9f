"""
Z-expansions relative to Z = V0, V2 or V0 ∪ V2: Z-convergents, angle bounds,
Diophantine/Liouville classification, E_r covers and certificate checking
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import ceil, floor, gcd, prod
from typing import Dict, List, Optional, Sequence, Tuple, Union

from mpmath import iv
from sympy import primefactors

from slitforge.core.config import settings
from slitforge.core.errors import DomainError, InconsistencyError
from slitforge.core.numeric import Enclosure, enclose, iv_hull, to_iv
from slitforge.models.enums import CertificateStatus
from slitforge.models.records import (
    CertificateReport,
    CoverBand,
    CoverInterval,
    CoverTable,
    NonergodicCertificate,
    ZConvergentRecord,
    ZExpansion,
    ZSetDescriptor,
)
from slitforge.models.spec import PartialQuotientSpec
from slitforge.models.vectors import HolVec, LambdaLinear
from slitforge.services.cf_core import CFStream, StreamLike, exceeds_power
from slitforge.services.lambda_arith import floor_linear, lambda_interval, linear_sign, sign, to_interval
from slitforge.services.surface_geom import (
    Direction,
    abs_cross,
    dehn_related,
    hor,
    hor_sign,
    inverse_slope,
    twist_order,
)

# Configure logging
logger = logging.getLogger(__name__)

# polynomial growth degree of holonomy sets
GROWTH_DEGREE = 2


@dataclass(frozen=True)
class _Candidate:
    """Vector with hor_θ(v) = c0 + c1·λ + c2·θ"""

    vector: HolVec
    c0: Fraction
    c1: Fraction
    c2: Fraction


def _candidate(vector: HolVec, sigma: int) -> _Candidate:
    # sigma is the sign of y·θ − x
    return _Candidate(
        vector,
        Fraction(-sigma * vector.x.s),
        Fraction(-sigma * vector.x.t),
        Fraction(sigma * vector.y),
    )


def _candidate_for(vector: HolVec, theta: Direction, spec_of_lambda: StreamLike) -> _Candidate:
    sigma = hor_sign(theta, vector, spec_of_lambda)
    return _candidate(vector, sigma or 1)


def _hor_sign_diff(a: _Candidate, b: _Candidate, theta: Direction, spec_of_lambda: StreamLike) -> int:
    """Sign of hor(a) − hor(b)."""
    return linear_sign(a.c0 - b.c0, a.c1 - b.c1, a.c2 - b.c2, spec_of_lambda, theta)


def _is_zero(c: _Candidate, theta: Direction, spec_of_lambda: StreamLike) -> bool:
    return linear_sign(c.c0, c.c1, c.c2, spec_of_lambda, theta) == 0


def _direction_label(theta: Direction) -> str:
    if isinstance(theta, (int, Fraction)):
        return str(theta)
    if isinstance(theta, PartialQuotientSpec):
        return theta.to_text()
    if isinstance(theta, CFStream):
        return theta.label
    return repr(theta)


def _best_loop(q: int, theta: Direction, spec_of_lambda: StreamLike) -> _Candidate:
    """Primitive (p, q) nearest to q·θ."""
    f = floor_linear(0, 0, q, spec_of_lambda, theta)
    left = f
    while gcd(left, q) != 1:
        left -= 1
    right = f + 1
    while gcd(right, q) != 1:
        right += 1
    a = _candidate(HolVec.loop(left, q), 1)
    b = _candidate(HolVec.loop(right, q), -1)
    return a if _hor_sign_diff(a, b, theta, spec_of_lambda) <= 0 else b


def _best_slit(n: int, theta: Direction, spec_of_lambda: StreamLike) -> _Candidate:
    """Separating slit (λ + m, n), m even, nearest to direction θ."""
    f = floor_linear(0, -1, n, spec_of_lambda, theta)
    left = f if f % 2 == 0 else f - 1
    a = _candidate(HolVec.slit(left, n), 1)
    b = _candidate(HolVec.slit(left + 2, n), -1)
    return a if _hor_sign_diff(a, b, theta, spec_of_lambda) <= 0 else b


def z_convergents(
    theta: Direction,
    members: ZSetDescriptor,
    height_bound: int,
    spec_of_lambda: StreamLike,
) -> ZExpansion:
    """
    Z-convergents of θ with heights up to height_bound.

    A member v of Z is recorded when hor_θ(v) is strictly smaller than
    hor_θ(u) for every u in Z with |u| < |v|. Per height the candidate is
    obtained by rounding; equal-height ties prefer loops, then the smaller x.

    Returns:
        The expansion; terminated is set when θ is the direction of a member
    """
    if height_bound < 1:
        raise DomainError(f"height bound must be >= 1, got {height_bound}", "z_expansion.height_bound")
    horizontal = members.horizontal()
    best = _candidate(horizontal, -1)
    records: List[ZConvergentRecord] = []
    terminated = False
    for q in range(1, height_bound + 1):
        candidates: List[_Candidate] = []
        if members.has_loops:
            candidates.append(_best_loop(q, theta, spec_of_lambda))
        if members.has_slits and q % 2 == 0:
            candidates.append(_best_slit(q, theta, spec_of_lambda))
        if not candidates:
            continue
        winner = candidates[0]
        for other in candidates[1:]:
            if _hor_sign_diff(other, winner, theta, spec_of_lambda) < 0:
                winner = other
        if _hor_sign_diff(winner, best, theta, spec_of_lambda) >= 0:
            continue
        hit = _is_zero(winner, theta, spec_of_lambda)
        records.append(
            ZConvergentRecord(
                vector=winner.vector,
                height=q,
                hor=Enclosure.exact(0) if hit else hor(theta, winner.vector, spec_of_lambda),
                kind=winner.vector.kind,
                terminal=hit,
            )
        )
        best = winner
        if hit:
            terminated = True
            logger.info(f"Direction {_direction_label(theta)} is the direction of {winner.vector}; expansion ends")
            break
    logger.debug(f"{len(records)} Z-convergents of {_direction_label(theta)} up to height {height_bound}")
    return ZExpansion(
        theta=_direction_label(theta),
        members=members,
        height_bound=height_bound,
        records=records,
        terminated=terminated,
        direction=theta,
    )


def check_angle_bounds(
    expansion: ZExpansion,
    spec_of_lambda: StreamLike,
    members: Optional[ZSetDescriptor] = None,
) -> Dict:
    """
    Check |v_k×v_{k+1}| / (2|v_k||v_{k+1}|) < ∠v_kθ ≤ μ / (|v_k||v_{k+1}|) per step.

    Both sides are decided exactly as linear forms in λ and θ. The right side
    is conditional on the configured bound μ.
    """
    members = members or expansion.members
    theta = expansion.direction
    if theta is None and len(expansion) > 1:
        raise DomainError("expansion carries no direction to check against", "z_expansion.angle_bounds")
    mu = Fraction(members.mu_bound)
    steps: List[Dict] = []
    monotone = True
    records = expansion.records
    for k in range(len(records) - 1):
        v, v_next = records[k].vector, records[k + 1].vector
        height_ok = records[k + 1].height > records[k].height
        c = _candidate_for(v, theta, spec_of_lambda)
        c_next = _candidate_for(v_next, theta, spec_of_lambda)
        hor_ok = _hor_sign_diff(c_next, c, theta, spec_of_lambda) < 0
        monotone = monotone and height_ok and hor_ok
        H = v_next.height
        x = abs_cross(v, v_next, spec_of_lambda)
        left = linear_sign(2 * H * c.c0 - x.s, 2 * H * c.c1 - x.t, 2 * H * c.c2, spec_of_lambda, theta) > 0
        right = linear_sign(mu - H * c.c0, -H * c.c1, -H * c.c2, spec_of_lambda, theta) >= 0
        steps.append(
            {
                "k": k,
                "height_increasing": height_ok,
                "hor_decreasing": hor_ok,
                "left": left,
                "right": right,
            }
        )
    passed = monotone and all(s["left"] and s["right"] for s in steps)
    if not monotone:
        logger.warning(f"Z-expansion of {expansion.theta} is not monotone")
    return {
        "steps": steps,
        "monotone": monotone,
        "passed": passed,
        "conditional_on_mu": str(mu),
    }


def classify_relative(expansion: Union[ZExpansion, Sequence[int]], N: Union[Fraction, int, str]) -> Dict:
    """
    Exponents e_k = log|v_{k+1}| / log|v_k| and a depth-limited verdict.

    A Liouville witness at k means |v_{k+1}| > |v_k|^N; the verdict only
    describes the computed prefix.
    """
    N = Fraction(N)
    heights = expansion.heights if isinstance(expansion, ZExpansion) else list(expansion)
    if len(heights) < 2:
        return {"N": str(N), "exponents": [], "witnesses": [], "verdict": None, "depth_limited": True}
    exponents: List[Optional[Enclosure]] = []
    witnesses: List[int] = []
    with iv.workprec(settings.precision_bits):
        for k in range(len(heights) - 1):
            h, h_next = heights[k], heights[k + 1]
            exponents.append(enclose(iv.log(iv.mpf(h_next)) / iv.log(iv.mpf(h))) if h > 1 else None)
            if exceeds_power(h_next, h, N):
                witnesses.append(k)
    verdict = "liouville-witness" if witnesses else f"diophantine-so-far({N})"
    return {
        "N": str(N),
        "exponents": [e.to_dict() if e else None for e in exponents],
        "witnesses": witnesses,
        "verdict": verdict,
        "depth_limited": True,
    }


def _coprime_count(q: int, lo: int, hi: int) -> int:
    """#{p in [lo, hi] : gcd(p, q) = 1} by Möbius inversion over the prime factors of q."""
    if hi < lo:
        return 0
    primes = primefactors(q)
    total = 0
    for size in range(len(primes) + 1):
        for subset in combinations(primes, size):
            d = prod(subset)
            total += (-1) ** size * (hi // d - (lo - 1) // d)
    return total


def _slit_count(n: int, a: Fraction, spec_of_lambda: StreamLike) -> int:
    """#{m even : (λ + m)/n in [a, a+1]}."""
    lo = -floor_linear(-a * n, 1, 0, spec_of_lambda)
    hi = floor_linear((a + 1) * n, -1, 0, spec_of_lambda)
    if hi < lo:
        return 0
    return hi // 2 - (lo - 1) // 2


def _members_at(h: int, a: Fraction, members: ZSetDescriptor, spec_of_lambda: StreamLike) -> List[HolVec]:
    """Members of Z at height h with inverse slope in [a, a+1], checked against the Möbius count."""
    found: List[HolVec] = []
    expected = 0
    if members.has_loops:
        p_lo, p_hi = ceil(a * h), floor((a + 1) * h)
        found.extend(HolVec.loop(p, h) for p in range(p_lo, p_hi + 1) if gcd(p, h) == 1)
        expected += _coprime_count(h, p_lo, p_hi)
    if members.has_slits and h % 2 == 0:
        lo = -floor_linear(-a * h, 1, 0, spec_of_lambda)
        hi = floor_linear((a + 1) * h, -1, 0, spec_of_lambda)
        found.extend(HolVec.slit(m, h) for m in range(lo + lo % 2, hi + 1, 2))
        expected += _slit_count(h, a, spec_of_lambda)
    if len(found) != expected:
        raise InconsistencyError(
            f"height {h}: enumerated {len(found)} members, counted {expected}", "z_expansion.cover"
        )
    return found


def cover_E_r(
    members: ZSetDescriptor,
    r: Union[Fraction, int, str],
    a: Union[Fraction, int, str],
    bands: Tuple[int, int],
    s: Union[Fraction, int, str],
    spec_of_lambda: StreamLike,
    max_height: Optional[int] = None,
    max_intervals: Optional[int] = None,
) -> CoverTable:
    """
    Cover of E'_r ∩ [a, a+1] by intervals I(v) of length 2μ/|v|^(1+r).

    Every member v of Z with inverse slope in [a, a+1] is enumerated per
    height and cross-checked against the Möbius count. Band sums use the
    enumerated counts since |I(v)| depends on |v| only.

    Args:
        members: Holonomy set Z
        r: Exponent, r > 1
        a: Left end of the direction window
        bands: Inclusive range (k_start, k_end) of dyadic bands [2^k, 2^(k+1))
        s: Dimension parameter, s > 0
        spec_of_lambda: λ
        max_height: Optional cap on heights (bands above it are empty)
        max_intervals: Keep at most this many I(v) rows (all when None)

    Raises:
        DomainError: r <= 1 or s <= 0
        InconsistencyError: enumeration and Möbius count disagree
    """
    r, a, s = Fraction(r), Fraction(a), Fraction(s)
    if r <= 1 or s <= 0:
        raise DomainError("cover_E_r needs r > 1 and s > 0", "z_expansion.cover")
    k_start, k_end = bands
    mu = Fraction(members.mu_bound)
    rows: List[CoverBand] = []
    intervals: List[CoverInterval] = []
    truncated = False
    previous = None
    with iv.workprec(settings.precision_bits):
        exponent = (1 + r) * s
        scale = iv.exp(to_iv(s) * iv.log(to_iv(2 * mu)))
        lam = lambda_interval(spec_of_lambda) if members.has_slits else None
        for k in range(k_start, k_end + 1):
            lo_h, hi_h = 2 ** k, 2 ** (k + 1) - 1
            if max_height is not None:
                hi_h = min(hi_h, max_height)
            count = 0
            s_sum = iv.mpf(0)
            for h in range(lo_h, hi_h + 1):
                found = _members_at(h, a, members, spec_of_lambda)
                if not found:
                    continue
                count += len(found)
                s_sum = s_sum + len(found) * scale * iv.exp(-to_iv(exponent) * iv.log(iv.mpf(h)))
                if truncated:
                    continue
                half = to_iv(mu) * iv.exp(-to_iv(1 + r) * iv.log(iv.mpf(h)))
                length = enclose(2 * half)
                for v in found:
                    if max_intervals is not None and len(intervals) >= max_intervals:
                        truncated = True
                        break
                    if v.is_slit:
                        center = (lam + v.x.s) / iv.mpf(h)
                        slope = enclose(center)
                    else:
                        center = to_iv(Fraction(v.x.s, h))
                        slope = Enclosure.exact(Fraction(v.x.s, h))
                    span = iv_hull(center - half, center + half)
                    intervals.append(
                        CoverInterval(band=k, vector=v, slope=slope, interval=enclose(span), length=length)
                    )
            longest = to_iv(2 * mu) * iv.exp(-to_iv(1 + r) * iv.log(iv.mpf(lo_h)))
            shortest = None
            if hi_h >= lo_h:
                shortest = enclose(to_iv(2 * mu) * iv.exp(-to_iv(1 + r) * iv.log(iv.mpf(hi_h))))
            ratio = None
            if previous is not None and count and previous.count:
                ratio = enclose(s_sum / previous.s_sum.to_iv())
            band = CoverBand(
                band=k,
                count=count,
                interval_length=enclose(longest),
                s_sum=enclose(s_sum) if count else Enclosure.exact(0),
                ratio=ratio,
                min_length=shortest,
            )
            rows.append(band)
            previous = band
        tail_sums: Dict[int, Enclosure] = {}
        running = iv.mpf(0)
        for band in reversed(rows):
            running = running + band.s_sum.to_iv()
            tail_sums[band.band] = enclose(running)
        predicted = enclose(iv.exp(to_iv(GROWTH_DEGREE - exponent) * iv.log(iv.mpf(2))))
    summable = s > Fraction(GROWTH_DEGREE) / (1 + r)
    logger.info(f"Cover of E'_{r} over bands {k_start}..{k_end}: {sum(b.count for b in rows)} intervals")
    return CoverTable(
        members=members,
        r=r,
        s=s,
        a=a,
        bands=rows,
        tail_sums=dict(sorted(tail_sums.items())),
        predicted_ratio=predicted,
        summable=summable,
        intervals=intervals,
        intervals_truncated=truncated,
    )


def _rejected(step: Optional[int], reason: str, **extra) -> CertificateReport:
    logger.info(f"Certificate rejected at step {step}: {reason}")
    return CertificateReport(status=CertificateStatus.REJECTED, failed_step=step, reason=reason, **extra)


def check_certificate(
    cert: NonergodicCertificate,
    tail_bound: Union[Fraction, int, str, Enclosure],
    spec_of_lambda: StreamLike,
) -> CertificateReport:
    """
    Check a summable cross-products certificate w_0, v_0, w_1, v_1, ...

    Every step must be a nontrivial even twist w_{j+1} = w_j + b·v_j with
    |w_j×v_j| < 1/2 and |w_{j+1}| > |w_j|. The tail bound is the caller's
    certified bound for Σ_{j >= J} |w_j×v_j| past the supplied prefix.

    Returns:
        ACCEPTED with partial sums, the enclosure of the limit direction and
        the bounds h_j <= 2 Σ_{i >= j} |w_i×v_i|; REJECTED naming the step
    """
    slits, loops = cert.slits, cert.loops
    if len(slits) < 2 or len(loops) < len(slits) - 1:
        return _rejected(None, "certificate needs at least two slits and a loop per step")
    if isinstance(tail_bound, Enclosure):
        tail = tail_bound.to_iv()
        tail_negative = tail_bound.mid < 0
    else:
        tail = Fraction(tail_bound)
        tail_negative = tail < 0
    if tail_negative:
        raise DomainError("tail bound must be nonnegative", "z_expansion.certificate")

    crosses: List[LambdaLinear] = []
    for j in range(len(slits) - 1):
        w, w2, v = slits[j], slits[j + 1], loops[j]
        if not (w.is_separating and w2.is_separating):
            return _rejected(j, f"{w} or {w2} is not a separating slit")
        if not v.is_loop:
            return _rejected(j, f"{v} is not a primitive loop")
        if w2.height <= w.height:
            return _rejected(j, f"heights not strictly increasing: |{w}| >= |{w2}|")
        b = twist_order(w2 - w, v)
        if b is None:
            return _rejected(j, f"{w2} - {w} is not a multiple of {v}")
        if b == 0:
            return _rejected(j, "trivial twist")
        if b % 2:
            return _rejected(j, f"odd twist order {b} between separating slits")
        chi = abs_cross(w, v, spec_of_lambda)
        if sign(chi * 2 - LambdaLinear(1), spec_of_lambda) >= 0:
            return _rejected(j, f"|w_j x v_j| = {chi} is not below 1/2")
        try:
            witness = dehn_related(w, w2, v, spec_of_lambda)
        except (DomainError, InconsistencyError) as e:
            return _rejected(j, str(e))
        if witness is None:
            return _rejected(j, f"{w} and {w2} are not twist-related about {v}")
        crosses.append(chi)

    with iv.workprec(settings.precision_bits):
        values = [to_interval(c, spec_of_lambda) for c in crosses]
        tail_iv = to_iv(tail)
        partial_sums: List[Enclosure] = []
        running = iv.mpf(0)
        for value in values:
            running = running + value
            partial_sums.append(enclose(running))
        total = running + tail_iv
        h_bounds: List[Enclosure] = []
        suffix = tail_iv
        for value in reversed(values):
            suffix = suffix + value
            h_bounds.append(enclose(2 * suffix))
        h_bounds.reverse()
        last = slits[-1]
        radius = 2 * tail_iv / last.height
        theta = enclose(inverse_slope(last, spec_of_lambda).to_iv() + iv.mpf([-1, 1]) * radius)
    cert.cross_terms = [enclose(c) for c in values]
    notes = [
        "mu(T^1_w) = 1/2 holds for every separating slit",
        "limit direction enclosure is relative to the supplied tail bound",
    ]
    logger.info(f"Certificate with {len(crosses)} steps accepted; total bound {enclose(total)}")
    return CertificateReport(
        status=CertificateStatus.ACCEPTED,
        partial_sums=partial_sums,
        total_bound=enclose(total),
        theta=theta,
        h_bounds=h_bounds,
        notes=notes,
    )
