"""
Child-slit constructions: Liouville convergents, good slits, normality
"""

import logging
import math
from fractions import Fraction
from math import gcd
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import sympy
from mpmath import iv

from slitforge.core.config import settings
from slitforge.core.errors import DomainError, InconsistencyError, PrecisionExhaustedError, TruncationError
from slitforge.core.numeric import (
    Real,
    as_fraction,
    ceil_power,
    ceil_real,
    compare_power,
    compare_product,
    compare_reals,
    decide,
    enclose,
    floor_power,
    floor_real,
    iv_pow,
    real_iv,
    to_iv,
    try_decide,
)
from slitforge.models.enums import LambdaMode, MinAreaCase, Verdict
from slitforge.models.params import ParamPack, default_c0
from slitforge.models.records import (
    ChildRecord,
    ChildSet,
    GoodnessWitness,
    LiouvilleConvergentRecord,
    MinAreaVerdict,
    NormalityWitness,
)
from slitforge.models.spec import PartialQuotientSpec
from slitforge.models.vectors import HolVec, LambdaLinear
from slitforge.services.cf_core import CFStream, as_stream, homographic_cf, is_convergent
from slitforge.services.lambda_arith import floor_linear, linear_sign, sign, to_interval
from slitforge.services.surface_geom import abs_cross, cross, dehn_related

# Configure logging
logger = logging.getLogger(__name__)

INFINITY = None


def _expr(x: Real) -> sympy.Expr:
    if isinstance(x, Fraction):
        return sympy.Rational(x.numerator, x.denominator)
    return sympy.sympify(x)


def c0_constant(pack: Optional[ParamPack] = None) -> sympy.Expr:
    """Active lattice-count constant c_0 (pack override, else (4/(27π))/9)."""
    return pack.c0 if pack is not None else default_c0()


def _require_slit(w: HolVec) -> HolVec:
    if not w.is_slit:
        raise DomainError(f"{w} is not a slit", "constructions.not_slit")
    w = w.normalized()
    if w.n < 1:
        raise DomainError(f"{w} needs positive height", "constructions.zero_height")
    return w


def inverse_slope_spec(w: HolVec, spec_of_lambda: PartialQuotientSpec) -> PartialQuotientSpec:
    """Spec of the inverse slope (λ + m)/n of a slit."""
    w = _require_slit(w)
    return homographic_cf(spec_of_lambda, w.m, w.n)


def _abs_vs(c: LambdaLinear, t: Real, spec_of_lambda: PartialQuotientSpec) -> int:
    """Sign of |c| − t."""
    s = sign(c, spec_of_lambda)
    exact = as_fraction(t)
    if exact is not None:
        return linear_sign(s * c.s - exact, s * c.t, 0, spec_of_lambda)

    def predicate():
        d = abs(to_interval(c, spec_of_lambda)) - real_iv(t)
        if d > 0:
            return 1
        if d < 0:
            return -1
        return None

    return decide(predicate, what="cross-product threshold", code="constructions.precision")


def compare_cross(w: HolVec, v: HolVec, t: Real, spec_of_lambda: PartialQuotientSpec) -> int:
    """Sign of |w×v| − t, certified."""
    return _abs_vs(cross(w, v), t, spec_of_lambda)


def _cross_enclosure(w: HolVec, v: HolVec, spec_of_lambda: PartialQuotientSpec):
    with iv.workprec(settings.precision_bits):
        return enclose(to_interval(abs_cross(w, v, spec_of_lambda), spec_of_lambda))


def _heights(stream: CFStream) -> Iterable[Tuple[int, int, int]]:
    """Yield (k, p_k, q_k) with distinct increasing q_k until the stream ends."""
    k = 0
    last = 0
    while stream.ensure(k):
        p, q = stream.pq(k)
        if q != last:
            yield k, p, q
            last = q
        k += 1
    if not stream.terminal:
        raise TruncationError(
            f"{stream.label}: convergents end at k={stream.depth} ({stream.truncation_reason})",
            max_index=stream.depth,
        )


# --- Liouville construction -------------------------------------------------


def liouville_convergent(w: HolVec, k: int, spec_of_lambda: PartialQuotientSpec) -> LiouvilleConvergentRecord:
    """
    Liouville convergent u of w = (λ+m, n) indexed by k: d·u = (p_k + m q_k, n q_k).

    Raises:
        DomainError: if n >= q_{k+1}/(2 q_k)
        TruncationError: if q_{k+1} is not available
    """
    w = _require_slit(w)
    stream = as_stream(spec_of_lambda)
    conv, nxt = stream.convergent(k), stream.convergent(k + 1)
    if not 2 * w.n * conv.q < nxt.q:
        raise DomainError(
            f"|w| = {w.n} is not below q_{k + 1}/(2q_{k}) = {nxt.q}/{2 * conv.q}",
            "constructions.liouville_precondition",
        )
    A, B = conv.p + w.m * conv.q, w.n * conv.q
    d = gcd(A, B)
    u = (A // d, B // d)
    return LiouvilleConvergentRecord(w=w, k=k, u=u, d=d, companions=companions(u))


def companions(u: Tuple[int, int]) -> Tuple[Tuple[int, int], ...]:
    """The two ũ = (c, e) with 0 < e <= |u| and u × ũ = ±1."""
    ux, uy = u
    if uy < 1 or gcd(ux, uy) != 1:
        raise DomainError(f"{u} is not a primitive vector of positive height", "constructions.companion")
    found = []
    for s in (1, -1):
        e = uy if uy == 1 else (s * pow(ux, -1, uy)) % uy
        c, rem = divmod(ux * e - s, uy)
        if rem:
            raise InconsistencyError(f"no companion of {u} for sign {s}", "constructions.companion")
        found.append((c, e))
    return tuple(sorted(found))


def check_liouville_convergent(record: LiouvilleConvergentRecord, spec_of_lambda: PartialQuotientSpec) -> Dict:
    """
    Check that u is a convergent of (λ+m)/n whose successor height exceeds q_{k+1}/2.
    """
    theta = as_stream(inverse_slope_spec(record.w, spec_of_lambda))
    verdict = is_convergent(theta, record.u[0], record.u[1])
    q_next = as_stream(spec_of_lambda).convergent(record.k + 1).q
    following = None
    for _, _, q in _heights(theta):
        if q > record.u[1]:
            following = q
            break
    return {
        "is_convergent": verdict,
        "next_height": following,
        "next_exceeds_half": following is None or 2 * following > q_next,
    }


def _gcd_at(w: HolVec, k: int, stream: CFStream) -> int:
    p, q = stream.pq(k)
    return gcd(p + w.m * q, w.n * q)


def lambda_children(
    w: HolVec,
    k: int,
    spec_of_lambda: PartialQuotientSpec,
    r: Optional[Fraction] = None,
    mode: LambdaMode = LambdaMode.WINDOW,
    a_range: Optional[Tuple[int, int]] = None,
) -> ChildSet:
    """
    Λ1 children w' = w + 2v with v = ũ + a·u, a >= 1.

    WINDOW mode keeps |w|^r <= |v| <= 2|w|^r; RANGE mode keeps a in a_range.
    Each child is flagged when d(w', k) > 2, when |w×v| >= 2d/q_k although
    |v| < q_{k+1}, or when |u×v| != 1.
    """
    record = liouville_convergent(w, k, spec_of_lambda)
    w = record.w
    stream = as_stream(spec_of_lambda)
    q_k, q_next = stream.pq(k)[1], stream.pq(k + 1)[1]
    ux, uy = record.u
    diagnostics: Dict = {"u": list(record.u), "d": record.d, "companions": [list(c) for c in record.companions]}
    if mode == LambdaMode.WINDOW:
        if r is None:
            raise DomainError("window mode needs r", "constructions.lambda_children")
        lo, hi = ceil_power(w.n, r), floor_power(w.n, r, 2)[0]
        diagnostics["window"] = [lo, hi]
    else:
        if a_range is None:
            raise DomainError("range mode needs a_range", "constructions.lambda_children")
        lo, hi = None, None
        diagnostics["a_range"] = list(a_range)

    max_area = Fraction(2 * record.d, q_k)
    records: List[ChildRecord] = []
    for c, e in record.companions:
        if mode == LambdaMode.WINDOW:
            a_lo = max(1, -(-(lo - e) // uy))
            a_hi = (hi - e) // uy
        else:
            a_lo, a_hi = max(1, a_range[0]), a_range[1]
        for a in range(a_lo, a_hi + 1):
            v = HolVec.loop(c + a * ux, e + a * uy)
            child = w + 2 * v
            flags: List[str] = []
            if _gcd_at(child, k, stream) > 2:
                flags.append("gcd-exceeds-2")
            if ux * v.y - v.x.s * uy not in (1, -1):
                flags.append("not-a-basis")
            if v.height < q_next:
                if _abs_vs(cross(w, v), max_area, spec_of_lambda) >= 0:
                    flags.append("max-area-exceeded")
            else:
                flags.append("max-area-unchecked")
            records.append(
                ChildRecord(parent=w, child=child, v=v, cross=_cross_enclosure(w, v, spec_of_lambda), flags=tuple(flags))
            )
    records.sort(key=lambda rec: (rec.v.y, rec.v.x.s))

    result = ChildSet(parent=w, children=records, diagnostics=diagnostics)
    if not records:
        result.flags.append("empty-window")
        logger.info(f"Empty Λ window for {w} at k={k}: {diagnostics}")
    if mode == LambdaMode.WINDOW:
        # |w|^{r-1} >= q_k
        active = compare_power(q_k, w.n, r - 1) <= 0
        result.guarantee_active = active
        with iv.workprec(settings.precision_bits):
            result.guaranteed = enclose(iv_pow(w.n, r - 1) / q_k)
        if not active:
            result.flags.append("count-guarantee-inactive")
        elif compare_power(len(records) * q_k, w.n, r - 1) < 0:
            result.flags.append("count-below-guarantee")
    else:
        result.guarantee_active = False
    logger.debug(f"Λ children of {w} at k={k}: {len(records)}")
    return result


# --- Diophantine construction -----------------------------------------------


def is_good(w: HolVec, alpha: Real, beta: Real, spec_of_lambda: PartialQuotientSpec) -> Optional[GoodnessWitness]:
    """
    Witness that the inverse slope of w has a convergent height q with α|w| <= q <= β|w|.

    Raises:
        TruncationError: if the convergents end before β|w| is passed
    """
    w = _require_slit(w)
    theta = as_stream(inverse_slope_spec(w, spec_of_lambda))
    low, high = _expr(alpha) * w.n, _expr(beta) * w.n
    for _, p, q in _heights(theta):
        if compare_reals(q, high) > 0:
            return None
        if compare_reals(q, low) >= 0:
            return GoodnessWitness(w=w, alpha=alpha, beta=beta, q=q, p=p)
    return None


def _cross_in_window(w: HolVec, v: HolVec, alpha: Real, beta: Real, spec_of_lambda: PartialQuotientSpec) -> bool:
    c = cross(w, v)
    return _abs_vs(c, 1 / _expr(alpha), spec_of_lambda) < 0 and _abs_vs(c, 1 / _expr(beta), spec_of_lambda) > 0


def _height_window(w: HolVec, beta: Real) -> Tuple[int, int]:
    b = _expr(beta)
    return ceil_real(b * w.n), floor_real(2 * b * w.n)


def _candidates_by_height(
    w: HolVec, q_lo: int, q_hi: int, spec_of_lambda: PartialQuotientSpec
) -> Iterable[Tuple[int, int]]:
    for q in range(max(q_lo, 1), q_hi + 1):
        f = floor_linear(Fraction(q * w.m, w.n), Fraction(q, w.n), 0, spec_of_lambda)
        yield f, q
        yield f + 1, q


def _bracket_range(lo: Fraction, hi: Fraction, y: int) -> Tuple[Fraction, Fraction]:
    a, b = lo * y, hi * y
    return (a, b) if a <= b else (b, a)


def _candidates_by_strip(
    w: HolVec, alpha: Real, q_lo: int, q_hi: int, spec_of_lambda: PartialQuotientSpec
) -> Iterable[Tuple[int, int]]:
    """
    Lattice points (p, q) in the height window near the line of slope θ_w.

    Uses the unimodular basis of consecutive convergents of θ_w around q_hi,
    so the work is proportional to the number of candidates.
    """
    theta = as_stream(inverse_slope_spec(w, spec_of_lambda))
    J = 0
    while theta.ensure(J + 1) and theta.pq(J + 1)[1] <= q_hi:
        J += 1
    if not theta.ensure(J + 1) and not theta.terminal:
        raise TruncationError(f"{theta.label}: needs a convergent beyond height {q_hi}", max_index=theta.depth)
    p1, q1 = theta.pq(J)
    p0, q0 = theta.pq(J - 1)
    alpha_n = _expr(alpha) * w.n
    floor_an = floor_real(alpha_n)
    eps_hi = Fraction(1, floor_an) if floor_an >= 1 else None
    Y = floor_real(sympy.Integer(q1) / alpha_n) + 1
    depth = J + 3 if theta.ensure(J + 3) else theta.depth
    t_lo, t_hi, _ = theta.bracket(depth)
    d1 = (q1 * t_lo - p1, q1 * t_hi - p1)
    d0 = (q0 * t_lo - p0, q0 * t_hi - p0)
    d1_lo, d1_hi = min(d1), max(d1)
    for y in range(-Y, Y + 1):
        x_lo = -((-(q_lo - y * q0)) // q1)
        x_hi = (q_hi - y * q0) // q1
        if eps_hi is not None and (d1_lo > 0 or d1_hi < 0):
            yd_lo, yd_hi = _bracket_range(min(d0), max(d0), y)
            n_lo, n_hi = -eps_hi - yd_hi, eps_hi - yd_lo
            ends = [n / d for n in (n_lo, n_hi) for d in (d1_lo, d1_hi)]
            x_lo = max(x_lo, math.floor(min(ends)) - 1)
            x_hi = min(x_hi, math.ceil(max(ends)) + 1)
        for x in range(x_lo, x_hi + 1):
            if gcd(x, y) != 1:
                continue
            yield x * p1 + y * p0, x * q1 + y * q0


def delta_children(
    w: HolVec,
    alpha: Real,
    beta: Real,
    spec_of_lambda: PartialQuotientSpec,
    pack: Optional[ParamPack] = None,
    method: str = "strip",
    check_children: bool = False,
) -> ChildSet:
    """
    Δ(w, α, β): children w + 2v with v primitive, β|w| <= |v| <= 2β|w| and 1/β < |w×v| < 1/α.

    The count guarantee c_0β/α applies when w is (α, β)-good and α < c_0β;
    otherwise it is withdrawn and flagged.

    Args:
        method: "strip" (lattice strip around the slit direction) or "height"
            (per-height scan, for small windows)
        check_children: also check that each child is (α−1/2, β)-good and
            not (1, α−1/2)-good
    """
    w = _require_slit(w)
    c0 = c0_constant(pack)
    result = ChildSet(parent=w, children=[])
    if compare_reals(alpha, beta) >= 0:
        result.flags.append("empty-window")
        result.guarantee_active = False
        result.diagnostics["reason"] = "α >= β"
        return result
    q_lo, q_hi = _height_window(w, beta)
    result.diagnostics["heights"] = [q_lo, q_hi]
    if method == "height":
        candidates = _candidates_by_height(w, q_lo, q_hi, spec_of_lambda)
    elif method == "strip":
        candidates = _candidates_by_strip(w, alpha, q_lo, q_hi, spec_of_lambda)
    else:
        raise DomainError(f"unknown enumeration method {method!r}", "constructions.delta_children")

    seen = set()
    records: List[ChildRecord] = []
    for p, q in candidates:
        if (p, q) in seen or not q_lo <= q <= q_hi or gcd(p, q) != 1:
            continue
        seen.add((p, q))
        v = HolVec.loop(p, q)
        if not _cross_in_window(w, v, alpha, beta, spec_of_lambda):
            continue
        child = w + 2 * v
        flags: Tuple[str, ...] = ()
        if check_children:
            flags = _child_goodness_flags(child, alpha, beta, spec_of_lambda)
        records.append(ChildRecord(parent=w, child=child, v=v, cross=_cross_enclosure(w, v, spec_of_lambda), flags=flags))
    records.sort(key=lambda rec: (rec.v.y, rec.v.x.s))
    result.children = records

    bound = c0 * _expr(beta) / _expr(alpha)
    with iv.workprec(settings.precision_bits):
        result.guaranteed = enclose(real_iv(bound))
    try:
        good = is_good(w, alpha, beta, spec_of_lambda) is not None
    except TruncationError:
        good = False
        result.flags.append("goodness-unchecked")
    small_alpha = compare_reals(alpha, c0 * _expr(beta)) < 0
    result.guarantee_active = good and small_alpha
    if not good:
        result.flags.append("parent-not-good")
    if not small_alpha:
        result.flags.append("alpha-not-below-c0-beta")
    if result.guarantee_active and compare_reals(len(records), bound) < 0:
        result.flags.append("count-below-guarantee")
    logger.debug(f"Δ children of {w}: {len(records)} (heights {q_lo}..{q_hi}, method {method})")
    return result


def _child_goodness_flags(child: HolVec, alpha: Real, beta: Real, spec_of_lambda: PartialQuotientSpec) -> Tuple[str, ...]:
    lowered = _expr(alpha) - sympy.Rational(1, 2)
    flags = []
    try:
        if is_good(child, lowered, beta, spec_of_lambda) is None:
            flags.append("not-(α-1/2,β)-good")
        if is_good(child, 1, lowered, spec_of_lambda) is not None:
            flags.append("(1,α-1/2)-good")
    except TruncationError:
        flags.append("goodness-unchecked")
    return tuple(flags)


# --- Normality ----------------------------------------------------------------


def _t_upper(alpha: Real, n: int, r: Fraction, rho: Fraction):
    """T with α ρ^T = n^{r−1} (inside iv.workprec)."""
    return (to_iv(r - 1) * iv.log(n) - iv.log(real_iv(alpha))) / iv.log(to_iv(rho))


def _window_nonempty(a: int, b: Optional[int], alpha: Real, n: int, r: Fraction, rho: Fraction) -> Optional[bool]:
    """
    Whether {t in [1, T] : a < αρ^t n and b > n^{1+(r−1)t}} is nonempty.

    a = 0 and b = None stand for the sentinels 0 and ∞.
    """
    # t_a < T  <=>  a < n^r ;  t_b > 1  <=>  b > n^r
    if a > 0 and compare_power(a, n, r) >= 0:
        return False
    if b is not None and compare_power(b, n, r) <= 0:
        return False
    if a == 0 or b is None:
        return True

    def predicate():
        t_a = iv.log(iv.mpf(a) / (real_iv(alpha) * n)) / iv.log(to_iv(rho))
        t_b = (iv.log(b) / iv.log(n) - 1) / to_iv(r - 1)
        if t_a < t_b:
            return True
        if t_a >= t_b:
            return False
        return None

    return try_decide(predicate, what="normality window")


def _t_values(a: int, b: Optional[int], alpha: Real, n: int, r: Fraction, rho: Fraction) -> Dict:
    with iv.workprec(settings.precision_bits):
        t_a = None if a == 0 else enclose(iv.log(iv.mpf(a) / (real_iv(alpha) * n)) / iv.log(to_iv(rho)))
        t_b = None if b is None else enclose((iv.log(b) / iv.log(n) - 1) / to_iv(r - 1))
    return {"t_a": t_a.to_dict() if t_a else "-inf", "t_b": t_b.to_dict() if t_b else "inf"}


def normality_heights(w: HolVec, r: Fraction, spec_of_lambda: PartialQuotientSpec) -> Tuple[List[int], bool]:
    """
    Distinct convergent heights of the inverse slope up to the first one >= |w|^r.

    Returns:
        (heights, ended) where ended means the expansion terminated below |w|^r
    """
    w = _require_slit(w)
    theta = as_stream(inverse_slope_spec(w, spec_of_lambda))
    heights: List[int] = []
    for _, _, q in _heights(theta):
        heights.append(q)
        if compare_power(q, w.n, r) >= 0:
            return heights, False
    return heights, True


def is_normal(
    w: HolVec,
    alpha: Real,
    r: Fraction,
    spec_of_lambda: PartialQuotientSpec,
    rho: Optional[Fraction] = None,
    N_prime: Optional[Fraction] = None,
    window: Optional[Tuple[int, int, Fraction]] = None,
    fast: bool = False,
) -> NormalityWitness:
    """
    Decide α-normality: Ψ(w) ∩ [αρ^t|w|, |w|^{1+(r−1)t}] ≠ ∅ for every t in [1, T].

    The continuous condition reduces to one window per pair of consecutive
    heights of Ψ(w) (with sentinels 0 and ∞). Windows that cannot be decided
    at maximum precision make the verdict UNCERTAIN.

    Args:
        window: (q_{k+1}, q_{k'}, N) for the fast sufficient test
        fast: try (αρ^{N'}, |w|^{r−1})-goodness first when q_{k+1}^{1/N} <= |w| < q_{k'}^{1/r}

    Raises:
        DomainError: if α <= 1 or T < 1
        TruncationError: if the convergents of w are not available up to |w|^r
    """
    w = _require_slit(w)
    r = Fraction(r)
    rho = Fraction(rho) if rho is not None else r + Fraction(1, 2)
    n = w.n
    n_pow = sympy.Integer(n) ** sympy.Rational(r.numerator - r.denominator, r.denominator)
    if compare_reals(alpha, 1) <= 0:
        raise DomainError(f"α must exceed 1, got {alpha}", "constructions.is_normal")
    if compare_reals(_expr(alpha) * sympy.Rational(rho.numerator, rho.denominator), n_pow) > 0:
        raise DomainError(f"T < 1 for |w| = {n} and α = {alpha}", "constructions.is_normal")
    with iv.workprec(settings.precision_bits):
        T = enclose(_t_upper(alpha, n, r, rho))

    if fast and window is not None and N_prime is not None:
        q_next, q_later, N = window
        in_range = compare_power(n, q_next, 1 / Fraction(N)) >= 0 and compare_power(n, q_later, 1 / r) < 0
        if in_range:
            strong = _expr(alpha) * sympy.Rational(rho.numerator, rho.denominator) ** sympy.Rational(
                N_prime.numerator, N_prime.denominator
            )
            try:
                witness = is_good(w, strong, n_pow, spec_of_lambda)
            except TruncationError:
                witness = None
            if witness is not None:
                return NormalityWitness(
                    w=w, alpha=alpha, r=r, T=T, verdict=Verdict.TRUE, heights=[witness.q], method="fast"
                )

    heights, ended = normality_heights(w, r, spec_of_lambda)
    bounds: List[Optional[int]] = [0] + heights + ([INFINITY] if ended else [])
    windows: List[Dict] = []
    verdict = Verdict.TRUE
    for a, b in zip(bounds, bounds[1:]):
        nonempty = _window_nonempty(a, b, alpha, n, r, rho)
        if nonempty is False:
            continue
        entry = {"lo": a, "hi": b if b is not None else "inf", "nonempty": Verdict.of(nonempty).value}
        entry.update(_t_values(a, b, alpha, n, r, rho))
        windows.append(entry)
        if nonempty:
            verdict = Verdict.FALSE
        elif verdict == Verdict.TRUE:
            verdict = Verdict.UNCERTAIN
    logger.debug(f"Normality of {w} at α={alpha}: {verdict.value}")
    return NormalityWitness(w=w, alpha=alpha, r=r, T=T, verdict=verdict, heights=heights, windows=windows)


def _last_below(w: HolVec, r: Fraction, spec_of_lambda: PartialQuotientSpec) -> Tuple[int, int]:
    """Convergent (p, q) of the inverse slope with the largest height q < |w|^r."""
    theta = as_stream(inverse_slope_spec(w, spec_of_lambda))
    best = (0, 1)
    for _, p, q in _heights(theta):
        if compare_power(q, w.n, r) >= 0:
            break
        best = (p, q)
    return best


def _hypotheses(
    w: HolVec, alpha: Real, pack: ParamPack, spec_of_lambda: PartialQuotientSpec, window
) -> Dict[str, str]:
    r, rho, n = pack.r, pack.rho, w.n
    rho_e = sympy.Rational(rho.numerator, rho.denominator)
    Np = sympy.Rational(pack.N_prime.numerator, pack.N_prime.denominator)
    rm1 = sympy.Rational((r - 1).numerator, (r - 1).denominator)
    result: Dict[str, str] = {}
    try:
        normal = is_normal(w, alpha, r, spec_of_lambda, rho=rho).verdict
    except (DomainError, TruncationError):
        normal = Verdict.UNCERTAIN
    result["parent α-normal"] = normal.value
    if window is None:
        result["|w|^N >= q_{k+1}"] = "unchecked"
        result["(5|w|^r)^r < q_{k'}"] = "unchecked"
    else:
        q_next, q_later = window[0], window[1]
        result["|w|^N >= q_{k+1}"] = Verdict.of(compare_power(q_next, n, pack.N) <= 0).value
        # (5 n^r)^r < q_{k'}
        later = compare_product(q_later, [(5, r), (n, r * r)]) > 0
        result["(5|w|^r)^r < q_{k'}"] = Verdict.of(later).value
    lhs = 240 * _expr(alpha) ** 2 * rho_e ** (3 * Np + 3)
    rhs = pack.c0 * sympy.Integer(n) ** (rm1 ** 2)
    result["240α²ρ^(3N'+3) <= c0|w|^((r-1)²)"] = Verdict.of(compare_reals(lhs, rhs) <= 0).value
    return result


def normal_children(
    w: HolVec,
    alpha: Real,
    pack: ParamPack,
    spec_of_lambda: PartialQuotientSpec,
    window: Optional[Tuple[int, int]] = None,
    limit: Optional[int] = None,
) -> ChildSet:
    """
    (αr)-normal members of Δ(w, α, |w|^{r−1}).

    The guarantee c_0|w|^{r−1}/(2αρ^{N'+1}) is active only when every
    hypothesis holds; failures are itemized in diagnostics. Rejected children
    are keyed by strip integer and cluster for comparison with the
    strip/cluster/size bounds.

    Args:
        window: (q_{k+1}, q_{k'}) of the consecutive gap indices around |w|
        limit: stop once this many normal children are found
    """
    w = _require_slit(w)
    r, rho, n = pack.r, pack.rho, w.n
    rm1 = sympy.Rational((r - 1).numerator, (r - 1).denominator)
    rho_e = sympy.Rational(rho.numerator, rho.denominator)
    Np = sympy.Rational(pack.N_prime.numerator, pack.N_prime.denominator)
    beta = sympy.Integer(n) ** rm1
    hypotheses = _hypotheses(w, alpha, pack, spec_of_lambda, window)
    base = delta_children(w, alpha, beta, spec_of_lambda, pack=pack)
    alpha_r = _expr(alpha) * sympy.Rational(r.numerator, r.denominator)

    kept: List[ChildRecord] = []
    rejected: List[Tuple[ChildRecord, str]] = []
    for rec in base.children:
        if limit is not None and len(kept) >= limit:
            break
        try:
            verdict = is_normal(rec.child, alpha_r, r, spec_of_lambda, rho=rho).verdict
        except (DomainError, TruncationError) as e:
            logger.debug(f"Normality of {rec.child} unchecked: {e}")
            rejected.append((rec, "unchecked"))
            continue
        if verdict == Verdict.TRUE:
            kept.append(rec)
        else:
            rejected.append((rec, verdict.value))

    result = ChildSet(parent=w, children=kept, flags=list(base.flags))
    bound = pack.c0 * beta / (2 * _expr(alpha) * rho_e ** (Np + 1))
    with iv.workprec(settings.precision_bits):
        result.guaranteed = enclose(real_iv(bound))
    result.guarantee_active = all(v == Verdict.TRUE.value for v in hypotheses.values())
    if not result.guarantee_active:
        result.flags.append("hypotheses-failed")
    elif compare_reals(len(kept), bound) < 0:
        result.flags.append("count-below-guarantee")
    result.diagnostics = {
        "hypotheses": hypotheses,
        "candidates": base.count,
        "rejected": len(rejected),
        "rejected_reasons": sorted({reason for _, reason in rejected}),
    }
    if limit is not None and len(kept) >= limit:
        result.flags.append("enumeration-stopped")
    if rejected:
        result.diagnostics.update(_strip_diagnostics(w, rejected, alpha, pack, spec_of_lambda))
    logger.debug(f"Normal children of {w}: {len(kept)} of {base.count}")
    return result


def _strip_diagnostics(
    w: HolVec,
    rejected: Sequence[Tuple[ChildRecord, str]],
    alpha: Real,
    pack: ParamPack,
    spec_of_lambda: PartialQuotientSpec,
) -> Dict:
    r, n = pack.r, w.n
    rho_e = sympy.Rational(pack.rho.numerator, pack.rho.denominator)
    Np = sympy.Rational(pack.N_prime.numerator, pack.N_prime.denominator)
    rm1 = sympy.Rational((r - 1).numerator, (r - 1).denominator)
    try:
        u = _last_below(w, r, spec_of_lambda)
    except TruncationError:
        return {"strips": "unchecked"}
    strips: Dict[int, int] = {}
    clusters: Dict[Tuple[int, int], int] = {}
    for rec, _ in rejected:
        try:
            up, uq = _last_below(rec.child, r, spec_of_lambda)
        except TruncationError:
            continue
        # a = round(−(w × u')/2), w × u' = (m q' − n p') + q'λ
        a = floor_linear(Fraction(-(w.m * uq - n * up), 2) + Fraction(1, 2), Fraction(-uq, 2), 0, spec_of_lambda)
        strips[a] = strips.get(a, 0) + 1
        key = (a, u[0] * uq - up * u[1])
        clusters[key] = clusters.get(key, 0) + 1
    size_term = sympy.Integer(n) ** (rm1 - rm1 ** 2)
    bounds = {
        "strips": 4 * rho_e ** (Np + 1),
        "clusters": 6 * _expr(alpha) * rho_e ** (Np + 1),
        "cluster_size": 5 * size_term,
        "rejects": 120 * _expr(alpha) * rho_e ** (2 * Np + 2) * size_term,
    }
    largest = max(clusters.values()) if clusters else 0
    observed = {"strips": len(strips), "clusters": len(clusters), "cluster_size": largest, "rejects": len(rejected)}
    within = {}
    for name, bound in bounds.items():
        try:
            within[name] = compare_reals(observed[name], bound) <= 0
        except PrecisionExhaustedError:
            within[name] = None
    return {
        "strip_keys": {str(a): count for a, count in sorted(strips.items())},
        "cluster_keys": {f"{a},{c}": count for (a, c), count in sorted(clusters.items())},
        "observed": observed,
        "bounds": {name: str(bound) for name, bound in bounds.items()},
        "within_bounds": within,
    }


# --- Minimal area ----------------------------------------------------------------


def check_min_area(
    w: HolVec,
    w2: HolVec,
    v: HolVec,
    k: int,
    spec_of_lambda: PartialQuotientSpec,
    others: Sequence[HolVec] = (),
) -> MinAreaVerdict:
    """
    Case split for Dehn-related slits w, w' = w + b·v with |w×v| < 1/2.

    Case (i): v is not the Liouville convergent u of w and |w×v| > 1/(2q_k).
    Case (ii): v = ±u; every supplied v' outside Zv with |w'×v'| < 1/2 is
    checked to satisfy |v'| > q_{k+1}/4.

    Raises:
        DomainError: preconditions fail
        InconsistencyError: the case inequality fails
    """
    w, w2 = _require_slit(w), _require_slit(w2)
    stream = as_stream(spec_of_lambda)
    q_k, q_next = stream.convergent(k).q, stream.convergent(k + 1).q
    if not (w.n < w2.n and 2 * q_k * w2.n < q_next):
        raise DomainError(
            f"need |w| < |w'| < q_{k + 1}/(2q_{k}), got {w.n}, {w2.n}, {q_next}/{2 * q_k}",
            "constructions.min_area",
        )
    if dehn_related(w, w2, v, spec_of_lambda) is None:
        raise DomainError(f"{w} and {w2} are not Dehn related by {v}", "constructions.min_area")
    c = cross(w, v)
    half = Fraction(1, 2)
    if _abs_vs(c, half, spec_of_lambda) >= 0:
        raise DomainError(f"|w×v| >= 1/2 for v = {v}", "constructions.min_area")
    u = liouville_convergent(w, k, spec_of_lambda).u
    enclosure = _cross_enclosure(w, v, spec_of_lambda)
    threshold = Fraction(1, 2 * q_k)
    if (v.x.s, v.y) in (u, (-u[0], -u[1])):
        checked = []
        for other in others:
            if other.x.t != 0 or other.x.s * v.y - v.x.s * other.y == 0:
                continue
            if _abs_vs(cross(w2, other), half, spec_of_lambda) >= 0:
                continue
            if not 4 * other.height > q_next:
                raise InconsistencyError(
                    f"{other} has |w'×v'| < 1/2 but |v'| <= q_{k + 1}/4",
                    "constructions.min_area",
                )
            checked.append((other.x.s, other.y))
        return MinAreaVerdict(
            case=MinAreaCase.LIOUVILLE_CONVERGENT,
            cross=enclosure,
            threshold=threshold,
            checked_vectors=tuple(checked),
            note=f"|v'| > q_{k + 1}/4 = {Fraction(q_next, 4)} verified for supplied vectors only",
        )
    if _abs_vs(c, threshold, spec_of_lambda) <= 0:
        raise InconsistencyError(
            f"|w×v| <= 1/(2q_{k}) for v = {v} other than the Liouville convergent {u}",
            "constructions.min_area",
        )
    return MinAreaVerdict(case=MinAreaCase.LARGE_AREA, cross=enclosure, threshold=threshold)
