"""
Continued-fraction engine: quotient streams, convergents, Khinchin checks,
homographic transforms, Pérez Marco partial sums and large-gap index sets
"""

import logging
import threading
from fractions import Fraction
from math import floor
from typing import Dict, List, Optional, Tuple, Union

import sympy
from mpmath import iv, libmp

from slitforge.core.config import settings
from slitforge.core.errors import (
    DomainError,
    InconsistencyError,
    PrecisionExhaustedError,
    SpecParseError,
    TruncationError,
)
from slitforge.core.numeric import Enclosure, enclose, evaluate_expression, to_iv, try_decide
from slitforge.models.enums import Exactness, SpecKind, Verdict
from slitforge.models.records import Convergent, GapIndexSet, PMSum
from slitforge.models.spec import K_SYMBOL, Q_SYMBOL, PartialQuotientSpec, gap_expression

# Configure logging
logger = logging.getLogger(__name__)

LOG10_2 = 0.30103


class StreamExhausted(Exception):
    """Raised by a quotient generator that cannot certify its next quotient"""


class CFStream:
    """
    Append-only cache of partial quotients a_0, a_1, ... and convergents p_k/q_k.

    Extension happens under a lock; the materialized prefix never changes, so
    reads below `depth` need no synchronization.
    """

    def __init__(self, label: str):
        self.label = label
        self._a: List[int] = []
        self._p: List[int] = []
        self._q: List[int] = []
        self._lock = threading.Lock()
        self._finished = False
        self.terminal = False
        self.truncation_reason = ""

    @property
    def depth(self) -> int:
        """Largest materialized index (-1 when empty)."""
        return len(self._a) - 1

    @property
    def finished(self) -> bool:
        return self._finished

    def _next_quotient(self) -> Optional[int]:
        """Next quotient, or None once the value is an exhausted rational."""
        raise NotImplementedError

    def ensure(self, k: int) -> bool:
        """Materialize quotients up to index k; False if the stream ends first."""
        if k <= self.depth:
            return True
        with self._lock:
            budget_bits = int(settings.digit_budget / LOG10_2)
            while self.depth < k and not self._finished:
                if self.depth >= settings.max_cf_depth:
                    self._finish(f"depth limit {settings.max_cf_depth} reached")
                    break
                try:
                    a = self._next_quotient()
                except StreamExhausted as e:
                    self._finish(str(e))
                    break
                if a is None:
                    self._finished = True
                    self.terminal = True
                    break
                p, q = self._next_pq(a)
                if q.bit_length() > budget_bits:
                    self._finish(f"digit budget {settings.digit_budget} exceeded at k={self.depth + 1}")
                    break
                self._a.append(a)
                self._p.append(p)
                self._q.append(q)
        return self.depth >= k

    def _finish(self, reason: str) -> None:
        self._finished = True
        self.truncation_reason = reason
        logger.debug(f"Stream {self.label} truncated at k={self.depth}: {reason}")

    def _next_pq(self, a: int) -> Tuple[int, int]:
        p1, q1 = self.pq(self.depth)
        p2, q2 = self.pq(self.depth - 1)
        return a * p1 + p2, a * q1 + q2

    def pq(self, k: int) -> Tuple[int, int]:
        """(p_k, q_k) with the conventions p_{-1}/q_{-1} = 1/0, p_{-2}/q_{-2} = 0/1."""
        if k >= 0:
            return self._p[k], self._q[k]
        if k == -1:
            return 1, 0
        return 0, 1

    def _require(self, k: int) -> None:
        if not self.ensure(k):
            raise TruncationError(
                f"{self.label}: index {k} not materializable ({self.truncation_reason or 'terminal'})",
                max_index=self.depth,
            )

    def quotient(self, k: int) -> int:
        self._require(k)
        return self._a[k]

    def quotients(self, k: int) -> List[int]:
        self._require(k)
        return list(self._a[: k + 1])

    def convergent(self, k: int) -> Convergent:
        self._require(k)
        return Convergent(k=k, p=self._p[k], q=self._q[k])

    def value(self) -> Optional[Fraction]:
        """Exact value when the stream is a terminated rational."""
        if self.terminal:
            return Fraction(self._p[-1], self._q[-1])
        return None

    def bracket(self, k: int) -> Tuple[Fraction, Fraction, bool]:
        """
        Rational bracket containing the value at materialized depth k.

        Returns:
            (lo, hi, open) where open means the value lies strictly inside
        """
        self._require(k)
        if self.terminal and k >= self.depth:
            v = self.value()
            return v, v, False
        p, q = self.pq(k)
        p1, q1 = self.pq(k - 1)
        x = Fraction(p, q)
        y = Fraction(p + p1, q + q1)
        lo, hi = (x, y) if x <= y else (y, x)
        return lo, hi, not self.terminal

    def brackets(self, start: int = 4):
        """Yield brackets at doubling depths until the stream ends."""
        k = max(start, 0)
        while True:
            if not self.ensure(k):
                if self.depth < 0:
                    return
                yield self.bracket(self.depth)
                return
            yield self.bracket(k)
            if self.terminal and k >= self.depth:
                return
            k *= 2

    def log_q(self, k: int):
        """Interval log q_k (exact integers below depth, log surrogates above)."""
        if self.ensure(k):
            return iv.log(iv.mpf(self._q[k]))
        return None

    def loglog_q(self, k: int):
        if self.ensure(k):
            return iv.log(iv.log(iv.mpf(self._q[k])))
        return None


class SpecStream(CFStream):
    """Quotient stream generated from a PartialQuotientSpec"""

    def __init__(self, spec: PartialQuotientSpec):
        super().__init__(spec.to_text())
        self.spec = spec
        self._expr = gap_expression(spec.n_expr) if spec.kind == SpecKind.GAPS else None
        self._log_expr = (
            sympy.expand_log(sympy.log(self._expr), force=True) if self._expr is not None else None
        )
        # log-domain trail: k -> (log q_k, log log q_k), past the exact depth
        self._trail: Dict[int, Tuple[Optional[object], object]] = {}
        self._trail_end = False
        self.exactness = Exactness.EXACT

    def _next_quotient(self) -> Optional[int]:
        k = self.depth + 1
        if k == 0:
            return 0
        spec = self.spec
        if spec.kind in (SpecKind.CF, SpecKind.RATIONAL):
            if k <= len(spec.prefix):
                return spec.prefix[k - 1]
            if spec.kind == SpecKind.RATIONAL:
                return None
            raise StreamExhausted("explicit quotient list exhausted")
        if spec.kind == SpecKind.PERIODIC:
            return spec.base_quotient(k)
        return self._gap_quotient(k)

    def _gap_quotient(self, k: int) -> int:
        q_prev, q_prev2 = self._q[k - 1], self.pq(k - 2)[1]
        if q_prev < 2:
            return self.spec.base_quotient(k)
        n_value = self._exact_exponent(k - 1, q_prev)
        if n_value is None:
            return self.spec.base_quotient(k)
        target = self._floor_power(q_prev, n_value)
        return max(1, (target - q_prev2) // q_prev)

    def _exact_exponent(self, k: int, q: int):
        """n_k at (k, q_k) if it exceeds 1, else None; raises StreamExhausted past the budget."""
        if self._expr.is_polynomial(K_SYMBOL, Q_SYMBOL):
            value = self._expr.subs({K_SYMBOL: k, Q_SYMBOL: q})
            if value.is_Rational:
                n = Fraction(int(value.p), int(value.q))
                if n <= 1:
                    return None
                if float(n) * len(str(q)) > settings.digit_budget:
                    raise StreamExhausted(f"gap exponent at k={k} exceeds the digit budget")
                return n
        env = {K_SYMBOL: k, Q_SYMBOL: q}

        def log_n():
            return evaluate_expression(self._log_expr, env, log_q=iv.log(iv.mpf(q)), log_symbol=Q_SYMBOL)

        above = try_decide(lambda: log_n() > 0, what=f"n_{k} > 1")
        if above is None:
            raise StreamExhausted(f"cannot decide n_{k} > 1")
        if not above:
            return None
        with iv.workprec(64):
            # log of the digit count of q^n
            log_digits = log_n() + iv.log(iv.log(iv.mpf(q))) - iv.log(iv.log(iv.mpf(10)))
            if not log_digits < iv.log(iv.mpf(settings.digit_budget)):
                raise StreamExhausted(f"gap exponent at k={k} exceeds the digit budget")
            digits = iv.exp(log_digits)
            bits = int(libmp.to_int(digits._mpi_[1], libmp.round_ceiling) / LOG10_2) + 64
        return (self._expr, env, bits)

    @staticmethod
    def _floor_power(q: int, n) -> int:
        """floor(q ** n), certified."""
        if isinstance(n, Fraction):
            if n.denominator == 1:
                return q ** n.numerator
            # floor of the b-th root of q^a
            root = sympy.integer_nthroot(q ** n.numerator, n.denominator)[0]
            return int(root)
        value, env, bits = n

        def floor_pair():
            x = iv.exp(evaluate_expression(value, env) * iv.log(iv.mpf(q)))
            lo = libmp.to_int(x._mpi_[0], libmp.round_floor)
            hi = libmp.to_int(x._mpi_[1], libmp.round_floor)
            return lo if lo == hi else None

        result = try_decide(floor_pair, what="floor(q^n)", bits=bits, max_bits=4 * bits + settings.max_precision_bits)
        if result is None:
            raise StreamExhausted("cannot certify floor(q^n)")
        return int(result)

    def _extend_trail(self, k: int) -> None:
        """Extend the log-domain trail up to index k (as far as the cap allows)."""
        if self._expr is None or not self._finished or self.terminal:
            return
        with self._lock:
            with iv.workprec(settings.precision_bits):
                j = max(self._trail) if self._trail else self.depth
                if j == self.depth and j not in self._trail:
                    q = iv.mpf(self._q[j])
                    self._trail[j] = (iv.log(q), iv.log(iv.log(q)) if self._q[j] > 1 else None)
                while j < k and not self._trail_end:
                    step = self._trail_step(j)
                    if step is None:
                        self._trail_end = True
                        break
                    j += 1
                    self._trail[j] = step
                    if step[0] is None:
                        self._trail_end = True
            if self._trail and self.exactness != Exactness.LOG_DOMAIN:
                logger.info(f"Stream {self.label} continues in log-domain mode from k={self.depth}")
                self.exactness = Exactness.LOG_DOMAIN

    def _trail_step(self, j: int):
        log_q, loglog_q = self._trail[j]
        if log_q is None or loglog_q is None:
            return None
        # n_k itself can be unrepresentable; only log n_k is formed
        env = {K_SYMBOL: iv.mpf(j), Q_SYMBOL: iv.exp(log_q)}
        log_n = evaluate_expression(self._log_expr, env, log_q=log_q, log_symbol=Q_SYMBOL)
        above = log_n > 0
        if above is None:
            logger.warning(f"Log-domain trail of {self.label} stops at k={j}: n_k > 1 undecided")
            return None
        if above:
            loglog_next = log_n + loglog_q
            if not loglog_next < self._cap_loglog():
                return (None, loglog_next)
            log_next_top = iv.exp(loglog_next)
            shrink = 4 * iv.exp(log_q - log_next_top)
            log_next = log_next_top - iv.mpf((0, shrink.b))
        else:
            a = self.spec.base_quotient(j + 1)
            log_next = log_q + iv.mpf((iv.log(iv.mpf(a)).a, iv.log(iv.mpf(a + 1)).b))
            loglog_next = iv.log(log_next)
        if iv.mag(log_next) > settings.log_domain_cap_bits:
            return (None, loglog_next)
        return (log_next, loglog_next)

    @staticmethod
    def _cap_loglog():
        """log log q above which log q exceeds 2^cap."""
        return settings.log_domain_cap_bits * iv.log(iv.mpf(2))

    def log_q(self, k: int):
        if self.ensure(k):
            return super().log_q(k)
        self._extend_trail(k)
        entry = self._trail.get(k)
        return entry[0] if entry else None

    def loglog_q(self, k: int):
        if self.ensure(k):
            return super().loglog_q(k)
        self._extend_trail(k)
        entry = self._trail.get(k)
        return entry[1] if entry else None


class HomographicStream(CFStream):
    """
    Quotients of (a·x + b)/(c·x + d) for x given by a source stream.

    Integer state transitions only: ingest t maps (a, b, c, d) to
    (a t + b, a, c t + d, c); egest q maps it to (c, d, a − q c, b − q d).
    """

    def __init__(self, source: CFStream, a: int, b: int, c: int, d: int, label: str = ""):
        super().__init__(label or f"hom:({a},{b},{c},{d}):{source.label}")
        if a * d - b * c == 0:
            raise DomainError("homographic transform must be invertible", "cf_core.homographic")
        self.source = source
        self._state = (a, b, c, d)
        self._i = 0
        self._exact: Optional[Fraction] = None
        self._exact_done = False

    def _next_quotient(self) -> Optional[int]:
        while True:
            if self._exact is not None or self._exact_done:
                return self._next_exact()
            q = self._try_egest()
            if q is not None:
                return q
            if self._exact is not None or self._exact_done:
                continue
            self._ingest()

    def _next_exact(self) -> Optional[int]:
        if self._exact_done:
            return None
        x = self._exact
        q = floor(x)
        rem = x - q
        if rem == 0:
            self._exact_done = True
            self._exact = None
        else:
            self._exact = 1 / rem
        return q

    def _tail_value(self) -> Optional[Fraction]:
        """Exact value of the unconsumed tail [a_i; a_{i+1}, ...] of a terminated source (None = infinity)."""
        tail = self.source._a[self._i:]
        if not tail:
            return None
        v = Fraction(tail[-1])
        for t in reversed(tail[:-1]):
            v = t + 1 / v
        return v

    def _switch_exact(self) -> None:
        a, b, c, d = self._state
        x = self._tail_value()
        if x is None:
            num, den = Fraction(a), Fraction(c)
        else:
            num, den = a * x + b, c * x + d
        if den == 0:
            self._exact_done = True
            return
        self._exact = num / den

    def _try_egest(self) -> Optional[int]:
        if self._i == 0:
            return None
        if not self.source.ensure(self._i + 1) and self.source.terminal:
            self._switch_exact()
            return None
        a, b, c, d = self._state
        if c == 0 or c + d == 0 or (c > 0) != (c + d > 0):
            return None
        e1 = Fraction(a + b, c + d)
        e2 = Fraction(a, c)
        lo, hi = (e1, e2) if e1 <= e2 else (e2, e1)
        q = floor(lo)
        if hi > q + 1:
            return None
        self._state = (c, d, a - q * c, b - q * d)
        return q

    def _ingest(self) -> None:
        if not self.source.ensure(self._i):
            if self.source.terminal:
                self._switch_exact()
                return
            raise StreamExhausted(f"source truncated: {self.source.truncation_reason}")
        t = self.source._a[self._i]
        a, b, c, d = self._state
        self._state = (a * t + b, a, c * t + d, c)
        self._i += 1


_STREAMS: Dict[str, CFStream] = {}
_STREAMS_LOCK = threading.Lock()


def stream_for(spec: PartialQuotientSpec) -> CFStream:
    """Shared quotient cache for a spec."""
    with _STREAMS_LOCK:
        return _stream_for_unlocked(spec)


def _stream_for_unlocked(spec: PartialQuotientSpec) -> CFStream:
    key = spec.model_dump_json()
    stream = _STREAMS.get(key)
    if stream is None:
        if spec.kind == SpecKind.HOMOGRAPHIC:
            a, b, c, d = spec.coefficients
            stream = HomographicStream(_stream_for_unlocked(spec.source), a, b, c, d, label=spec.to_text())
        else:
            stream = SpecStream(spec)
        _STREAMS[key] = stream
    return stream


StreamLike = Union[PartialQuotientSpec, CFStream]


def as_stream(spec: StreamLike) -> CFStream:
    if isinstance(spec, CFStream):
        return spec
    return stream_for(spec)


def convergents(spec: StreamLike, k_max: int) -> List[Convergent]:
    """
    Convergents p_k/q_k for k = 0..k_max.

    Raises:
        TruncationError: if the λ-spec is exhausted before k_max (carries the largest k)
    """
    stream = as_stream(spec)
    if not stream.ensure(k_max):
        raise TruncationError(
            f"{stream.label}: only {stream.depth} quotients available, {k_max} requested",
            max_index=stream.depth,
        )
    return [Convergent(k=k, p=stream._p[k], q=stream._q[k]) for k in range(k_max + 1)]


def quotients(spec: StreamLike, k_max: int) -> List[int]:
    return as_stream(spec).quotients(k_max)


def _abs_distance_bounds(lo: Fraction, hi: Fraction, c: Fraction) -> Tuple[Fraction, Fraction]:
    """Bounds of |x − c| for x in [lo, hi]."""
    a, b = abs(lo - c), abs(hi - c)
    low = Fraction(0) if lo <= c <= hi else min(a, b)
    return low, max(a, b)


def check_cf1(spec: StreamLike, k: int) -> bool:
    """
    Check 1/(q_k(q_k + q_{k+1})) < |θ − p_k/q_k| < 1/(q_k q_{k+1}).

    Raises:
        TruncationError: if q_{k+1} is not available
        PrecisionExhaustedError: if no materialized bracket decides
    """
    stream = as_stream(spec)
    if not stream.ensure(k + 1):
        raise TruncationError(f"check_cf1 needs q_{k + 1}", max_index=stream.depth)
    p, q = stream.pq(k)
    q_next = stream.pq(k + 1)[1]
    lower = Fraction(1, q * (q + q_next))
    upper = Fraction(1, q * q_next)
    center = Fraction(p, q)
    for lo, hi, is_open in stream.brackets(start=k + 2):
        d_lo, d_hi = _abs_distance_bounds(lo, hi, center)
        lower_ok = lower <= d_lo if is_open else lower < d_lo
        upper_ok = d_hi <= upper if is_open else d_hi < upper
        if lower_ok and upper_ok:
            return True
        if d_hi <= lower or d_lo >= upper:
            return False
    raise PrecisionExhaustedError(f"check_cf1 undecided at depth {stream.depth}", "cf_core.precision")


def is_convergent(spec: StreamLike, p: int, q: int) -> Verdict:
    """
    Whether p/q is a convergent of θ.

    Returns:
        Verdict.TRUE / Verdict.FALSE, or Verdict.UNCERTAIN when the materialized
        depth cannot settle the question (insufficient depth)
    """
    if q < 1:
        raise DomainError("q must be positive", "cf_core.is_convergent")
    stream = as_stream(spec)
    k = 0
    found = False
    enumerated = False
    while stream.ensure(k):
        pk, qk = stream.pq(k)
        if (pk, qk) == (p, q):
            found = True
        if qk > q or (stream.terminal and k == stream.depth):
            enumerated = True
            break
        k += 1
    if found:
        return Verdict.TRUE
    legendre = _legendre_holds(stream, p, q)
    if legendre and enumerated:
        raise InconsistencyError(
            f"{p}/{q} is within 1/(2q^2) of {stream.label} but not among its convergents",
            "cf_core.is_convergent",
        )
    if legendre:
        return Verdict.TRUE
    if enumerated:
        return Verdict.FALSE
    return Verdict.UNCERTAIN


def _legendre_holds(stream: CFStream, p: int, q: int) -> bool:
    """Certified |θ − p/q| < 1/(2q²); False when undecided."""
    target = Fraction(p, q)
    bound = Fraction(1, 2 * q * q)
    for lo, hi, is_open in stream.brackets(start=max(stream.depth, 4)):
        d_lo, d_hi = _abs_distance_bounds(lo, hi, target)
        if (d_hi <= bound) if is_open else (d_hi < bound):
            return True
        if d_lo >= bound:
            return False
    return False


def homographic_stream(spec: StreamLike, a: int, b: int, c: int, d: int) -> PartialQuotientSpec:
    """Spec of (a·x + b)/(c·x + d) for x given by spec."""
    if isinstance(spec, CFStream):
        raise DomainError("homographic_stream takes a spec", "cf_core.homographic")
    if a * d - b * c == 0:
        raise DomainError("homographic transform must be invertible", "cf_core.homographic")
    return PartialQuotientSpec(kind=SpecKind.HOMOGRAPHIC, coefficients=[a, b, c, d], source=spec)


def homographic_cf(spec: PartialQuotientSpec, m: int, n: int) -> PartialQuotientSpec:
    """Spec of the inverse slope (λ + m)/n of the slit (λ + m, n)."""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}", "cf_core.homographic")
    if m == 0 and n == 1:
        return spec
    return homographic_stream(spec, 1, m, 0, n)


def perez_marco_partial_sum(spec: StreamLike, K: int) -> PMSum:
    """
    Certified enclosure of Σ_{0 <= k < K} log log q_{k+1} / q_k.

    Terms with q_{k+1} < 3 are skipped and counted. Families whose q_k cannot
    be materialized use the log-domain trail and are tagged LOG_DOMAIN.
    """
    stream = as_stream(spec)
    terms: Dict[int, Enclosure] = {}
    skipped = 0
    exactness = Exactness.EXACT
    with iv.workprec(settings.precision_bits):
        total = iv.mpf(0)
        for k in range(K):
            if stream.ensure(k + 1):
                q_next = stream.pq(k + 1)[1]
                if q_next < 3:
                    skipped += 1
                    continue
                term = iv.log(iv.log(iv.mpf(q_next))) / iv.mpf(stream.pq(k)[1])
            else:
                loglog_next = stream.loglog_q(k + 1)
                log_q = stream.log_q(k)
                if loglog_next is None or log_q is None:
                    raise TruncationError(
                        f"{stream.label}: PM term {k} unavailable in log-domain mode",
                        max_index=k,
                    )
                q_k = iv.mpf(stream.pq(k)[1]) if k <= stream.depth else iv.exp(log_q)
                term = loglog_next / q_k
                exactness = Exactness.LOG_DOMAIN
            terms[k] = Enclosure.from_iv(term)
            total = total + term
        result = Enclosure.exact(0) if K == 0 else Enclosure.from_iv(total)
    logger.debug(f"PM partial sum of {stream.label} to K={K}: {result} (skipped {skipped})")
    return PMSum(K=K, total=result, terms=terms, skipped=skipped, exactness=exactness)


def exceeds_power(q_next: int, q: int, N: Fraction) -> bool:
    """Exact q_next > q^N."""
    if N <= 0:
        return q_next > (1 if N == 0 or q == 1 else 0)
    if q == 1:
        return q_next > 1
    digits = len(str(q))
    if N.numerator * digits <= settings.digit_budget:
        return q_next ** N.denominator > q ** N.numerator
    hi_exp = -(-N.numerator // N.denominator)
    lo_exp = N.numerator // N.denominator
    if hi_exp * digits <= settings.digit_budget and q_next > q ** hi_exp:
        return True
    if lo_exp * digits <= settings.digit_budget and q_next <= q ** lo_exp:
        return False

    def compare():
        return iv.log(iv.mpf(q_next)) > to_iv(N) * iv.log(iv.mpf(q))

    result = try_decide(compare, what="q_{k+1} > q_k^N")
    if result is None:
        raise PrecisionExhaustedError("gap comparison undecided", "cf_core.gap_indices")
    return result


def gap_indices(spec: StreamLike, N: Union[Fraction, float, int, str], K: int) -> GapIndexSet:
    """
    ℓ_N ∩ [0, K] = {k : q_{k+1} > q_k^N} with exponents log q_{k+1} / log q_k.

    Exact integer comparison where the q_k are materialized; log-domain
    comparison otherwise.
    """
    N = Fraction(str(N)) if isinstance(N, float) else Fraction(N)
    stream = as_stream(spec)
    indices: List[int] = []
    exponents: Dict[int, Optional[Enclosure]] = {}
    exactness = Exactness.EXACT
    for k in range(K + 1):
        if stream.ensure(k + 1):
            q, q_next = stream.pq(k)[1], stream.pq(k + 1)[1]
            member = exceeds_power(q_next, q, N)
            if q > 1:
                with iv.workprec(settings.precision_bits):
                    exponents[k] = enclose(iv.log(iv.mpf(q_next)) / iv.log(iv.mpf(q)))
            else:
                exponents[k] = None
        else:
            loglog_k, loglog_next = stream.loglog_q(k), stream.loglog_q(k + 1)
            if loglog_k is None or loglog_next is None:
                raise TruncationError(f"{stream.label}: gap index {k} unavailable", max_index=k - 1)
            exactness = Exactness.LOG_DOMAIN
            with iv.workprec(settings.precision_bits):
                spread = loglog_next - loglog_k
                # n_k itself past the cap is not representable
                exponents[k] = enclose(iv.exp(spread)) if (spread < settings.log_domain_cap_bits) is True else None
                member = True if N <= 0 else (loglog_next > iv.log(to_iv(N)) + loglog_k)
            if member is None:
                raise PrecisionExhaustedError(f"gap membership of k={k} undecided", "cf_core.gap_indices")
        if member:
            indices.append(k)
    return GapIndexSet(N=N, K=K, indices=indices, exponents=exponents, exactness=exactness)
