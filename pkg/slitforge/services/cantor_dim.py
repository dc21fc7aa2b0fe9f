"""
Cantor-set side of the construction: direction intervals, gap checks, Falconer
lower bounds, Σδ_j accounting and the dimension-zero counting tables
"""

import functools
import logging
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Union

from mpmath import iv

from slitforge.core.config import settings
from slitforge.core.errors import DomainError, InconsistencyError, PrecisionExhaustedError, TruncationError
from slitforge.core.numeric import Enclosure, Real, enclose, iv_hull, real_iv, to_iv, try_decide
from slitforge.models.enums import MinAreaCase, Region
from slitforge.models.params import ParamPack
from slitforge.models.records import DimEstimate, DirInterval, FalconerEstimate, NonergodicCertificate
from slitforge.models.spec import PartialQuotientSpec
from slitforge.models.vectors import HolVec
from slitforge.services.cf_core import as_stream, gap_indices
from slitforge.services.constructions import check_min_area
from slitforge.services.lambda_arith import sign, to_interval
from slitforge.services.surface_geom import abs_cross, cross
from slitforge.services.tree_builder import LevelSchedule, SlitTree, compare_factors

# Configure logging
logger = logging.getLogger(__name__)

RELATIVE_TOLERANCE = Fraction(1, 10 ** 9)

Value = Union[Real, Enclosure]


def _bits_for(*heights: int) -> int:
    """Working precision resolving direction differences of slits of these heights."""
    widest = max((abs(h).bit_length() for h in heights), default=1)
    return max(settings.precision_bits, 4 * widest + 64)


def _value_iv(x: Value):
    if isinstance(x, Enclosure):
        return x.to_iv()
    return real_iv(x)


def _length_iv(n: int, r: Fraction):
    """4/n^{r+1}"""
    return 4 * iv.exp(-to_iv(r + 1) * iv.log(iv.mpf(n)))


def _min_iv(values: Sequence):
    """Enclosure of the minimum of a nonempty list of intervals."""
    low = min(v.a for v in values)
    high = min(v.b for v in values)
    return iv_hull(low, high)


def _slit(w: HolVec) -> HolVec:
    w = w.normalized()
    if not w.is_slit or w.n <= 0:
        raise DomainError(f"{w} is not a slit of positive height", "cantor_dim.slit")
    return w


def dir_interval(w: HolVec, r: Union[Fraction, int, str], spec_of_lambda: PartialQuotientSpec) -> DirInterval:
    """I(w): center (λ + m)/n, length 4/|w|^{r+1}."""
    w, r = _slit(w), Fraction(r)
    with iv.workprec(_bits_for(w.n)):
        center = to_interval(w.x, spec_of_lambda) / iv.mpf(w.n)
        return DirInterval(slit=w, r=r, center=enclose(center), length=enclose(_length_iv(w.n, r)))


# --- Nesting and gaps ----------------------------------------------------------------


def _slope_gap(a: HolVec, b: HolVec, spec_of_lambda: PartialQuotientSpec):
    """|θ_a − θ_b| = |a×b| / (|a||b|), inside the caller's precision."""
    c = cross(a, b)
    if c.is_zero():
        return iv.mpf(0)
    return abs(to_interval(c, spec_of_lambda)) / (iv.mpf(a.n) * iv.mpf(b.n))


def nested(child: HolVec, parent: HolVec, r: Fraction, spec_of_lambda: PartialQuotientSpec) -> Optional[bool]:
    """I(child) ⊂ I(parent); None when undecided at maximum precision."""
    child, parent = _slit(child), _slit(parent)
    bits = _bits_for(child.n, parent.n)

    def predicate():
        slack = (_length_iv(parent.n, r) - _length_iv(child.n, r)) / 2
        return _slope_gap(child, parent, spec_of_lambda) <= slack

    return try_decide(predicate, what="interval nesting", bits=bits, max_bits=max(settings.max_precision_bits, 4 * bits))


def _order(spec_of_lambda: PartialQuotientSpec) -> Callable[[HolVec, HolVec], int]:
    def compare(a: HolVec, b: HolVec) -> int:
        # θ_a − θ_b has the sign of a×b
        return sign(cross(a, b), spec_of_lambda)

    return compare


def sibling_gaps(
    parent: HolVec,
    children: Sequence[HolVec],
    r: Fraction,
    spec_of_lambda: PartialQuotientSpec,
) -> List[Dict]:
    """
    Gaps between consecutive intervals of the children of one parent.

    Children are ordered by inverse slope (exact). Each row carries the gap
    enclosure and whether it reaches 1/(16|w_parent|^{2r}).
    """
    parent = _slit(parent)
    ordered = sorted((_slit(c) for c in children), key=functools.cmp_to_key(_order(spec_of_lambda)))
    rows: List[Dict] = []
    for a, b in zip(ordered, ordered[1:]):
        bits = _bits_for(a.n, b.n, parent.n)
        max_bits = max(settings.max_precision_bits, 4 * bits)
        with iv.workprec(bits):
            gap = _slope_gap(a, b, spec_of_lambda) - (_length_iv(a.n, r) + _length_iv(b.n, r)) / 2
            required = 1 / (16 * iv.exp(to_iv(2 * r) * iv.log(iv.mpf(parent.n))))
            gap_enc, required_enc = enclose(gap), enclose(required)

        def predicate():
            g = _slope_gap(a, b, spec_of_lambda) - (_length_iv(a.n, r) + _length_iv(b.n, r)) / 2
            return g >= 1 / (16 * iv.exp(to_iv(2 * r) * iv.log(iv.mpf(parent.n))))

        rows.append(
            {
                "left": a.to_dict(),
                "right": b.to_dict(),
                "gap": gap_enc.to_dict(),
                "required": required_enc.to_dict(),
                "ok": try_decide(predicate, what="sibling gap", bits=bits, max_bits=max_bits),
            }
        )
    return rows


def _hypotheses(tree: SlitTree) -> Dict:
    sched, r = tree.schedule, tree.pack.r
    deltas = {}
    for j in range(min(tree.depth, len(sched.plans))):
        deltas[str(j)] = _below(sched.plan(j).delta, Fraction(1, 16))
    return {
        "|w0|^(r(r-1)) >= 64": compare_factors([(sched.w0_height, r * (r - 1))], [(64, Fraction(1))]) >= 0,
        "delta_j < 1/16": deltas,
    }


def _below(x: Real, bound: Fraction) -> Optional[bool]:
    return try_decide(lambda: real_iv(x) < to_iv(bound), what="δ_j < 1/16")


def check_nesting_gaps(tree: SlitTree) -> Dict:
    """
    Report-only check of the interval Cantor structure of a built tree.

    The hypotheses |w₀|^{r(r−1)} >= 64 and δ_j < 1/16 are reported; the
    checks run regardless. For every edge I(child) ⊂ I(parent); for every
    parent the gaps between consecutive children reach 1/(16|w_parent|^{2r}).
    """
    r, spec = tree.pack.r, tree.spec
    hypotheses = _hypotheses(tree)
    hyp_ok = hypotheses["|w0|^(r(r-1)) >= 64"] and all(v is True for v in hypotheses["delta_j < 1/16"].values())
    if not hyp_ok:
        logger.warning(f"Gap hypotheses fail for this tree ({tree.pack.provenance}): {hypotheses}")
    levels: Dict[int, Dict] = {}
    for j in range(tree.depth):
        edges, not_nested, undecided = 0, [], []
        gap_rows: List[Dict] = []
        measured = []
        for node in tree.levels[j]:
            kids = tree.children_of(j, node.index)
            for kid in kids:
                edges += 1
                ok = nested(kid.slit, node.slit, r, spec)
                if ok is False:
                    not_nested.append(kid.index)
                elif ok is None:
                    undecided.append(kid.index)
            rows = sibling_gaps(node.slit, [kid.slit for kid in kids], r, spec)
            for row in rows:
                row["parent"] = node.index
                with iv.workprec(settings.precision_bits):
                    measured.append(Enclosure(**row["gap"]).to_iv())
            gap_rows.extend(rows)
        gaps_ok: Optional[bool] = True
        if any(row["ok"] is False for row in gap_rows):
            gaps_ok = False
        elif any(row["ok"] is None for row in gap_rows):
            gaps_ok = None
        nest_ok: Optional[bool] = False if not_nested else (None if undecided else True)
        entry = {
            "edges": edges,
            "nested": nest_ok,
            "gap_rows": len(gap_rows),
            "gaps_ok": gaps_ok,
            "gaps": gap_rows,
        }
        if not_nested:
            entry["nesting_failures"] = not_nested
        if undecided:
            entry["nesting_unchecked"] = undecided
        if measured:
            with iv.workprec(settings.precision_bits):
                entry["min_gap"] = enclose(_min_iv(measured)).to_dict()
        else:
            entry["min_gap"] = None
        entry["pass"] = nest_ok is not False and gaps_ok is not False
        levels[j] = entry
    report = {
        "provenance": tree.pack.provenance,
        "hypotheses": hypotheses,
        "hypotheses_hold": bool(hyp_ok),
        "levels": levels,
        "all_pass": all(entry["pass"] for entry in levels.values()),
    }
    logger.info(f"Nesting/gap check of depth {tree.depth}: all_pass={report['all_pass']}")
    return report


def measured_eps(report: Dict) -> Dict[int, Optional[Enclosure]]:
    """Minimal sibling gap among the children of level-j parents, from a nesting report."""
    return {
        j: (Enclosure(**entry["min_gap"]) if entry.get("min_gap") else None) for j, entry in report["levels"].items()
    }


def measured_counts(tree: SlitTree) -> Dict[int, int]:
    """Fewest children of a level-j parent."""
    counts = {}
    for j in range(tree.depth):
        sizes = [len(tree.children_of(j, node.index)) for node in tree.levels[j]]
        counts[j] = min(sizes) if sizes else 0
    return counts


# --- Falconer estimate ---------------------------------------------------------------


def falconer_bound(m: Sequence[Value], eps: Sequence[Value]) -> FalconerEstimate:
    """
    Falconer quotients log(m_0⋯m_j) / (−log m_{j+1}ε_{j+1}) and the d_j terms.

    A quotient whose denominator is not certainly positive is None. The
    liminf proxy is the minimum over the tail half of the defined quotients.

    Raises:
        DomainError: some m_j is not certainly >= 2
    """
    for j, value in enumerate(m):
        at_least_two = try_decide(lambda: _value_iv(value) >= 2, what=f"m_{j} >= 2")
        if not at_least_two:
            raise DomainError(f"m_{j} = {value} is not >= 2", "cantor_dim.falconer")
    size = min(len(m), len(eps))
    terms: Dict[int, Optional[Enclosure]] = {}
    d_terms: Dict[int, Optional[Enclosure]] = {}
    with iv.workprec(settings.precision_bits):
        log_m = [iv.log(_value_iv(x)) for x in m[:size]]
        log_eps = [iv.log(_value_iv(x)) for x in eps[:size]]
        log_prod = [lm + le for lm, le in zip(log_m, log_eps)]
        running = iv.mpf(0)
        values = {}
        for j in range(size - 1):
            running = running + log_m[j]
            den = -log_prod[j + 1]
            terms[j] = None
            if den > 0:
                values[j] = running / den
                terms[j] = enclose(values[j])
            step = log_prod[j] - log_prod[j + 1]
            d_terms[j] = enclose(log_m[j] / step) if step > 0 else None
        tail = [values[j] for j in values if j >= (size - 1) // 2]
        proxy = enclose(_min_iv(tail)) if tail else None
        eps_decreasing = all((b < a) is True for a, b in zip(log_eps, log_eps[1:]))
        products_to_zero = None
        if size >= 2:
            last = log_prod[-3:]
            products_to_zero = all((b < a) is True for a, b in zip(last, last[1:]))
    return FalconerEstimate(
        terms=terms, d_terms=d_terms, proxy=proxy, products_to_zero=products_to_zero, eps_decreasing=eps_decreasing
    )


# --- Local dimensions d_j ------------------------------------------------------------------


def _rho_delta(j: int, schedule: Optional[LevelSchedule], rho_delta: Optional[Sequence[Real]]) -> Real:
    if rho_delta is not None:
        if j >= len(rho_delta):
            raise DomainError(f"ρ_jδ_j missing for j = {j}", "cantor_dim.d_j")
        return rho_delta[j]
    if schedule is None:
        raise DomainError("need a schedule or explicit ρ_jδ_j values", "cantor_dim.d_j")
    plan = schedule.plan(j)
    return plan.rho * plan.delta


def d_j_closed_form(
    j: int,
    pack: ParamPack,
    schedule: Optional[LevelSchedule] = None,
    w0_height: Optional[int] = None,
    rho_delta: Optional[Sequence[Real]] = None,
) -> DimEstimate:
    """
    d_j from the closed form, next to the defining quotient
    log m_j / (−log(m_{j+1}ε_{j+1} / m_jε_j)) evaluated from m_j and ε_j.

    m_j = ρ_jδ_j|w₀|^{r^j(r−1)} and ε_j = 1/(16·5^{2r(r^j−1)/(r−1)}|w₀|^{2r^{j+1}}).
    ρ_jδ_j come from the schedule's plans unless given explicitly.
    """
    r = pack.r
    height = w0_height if w0_height is not None else (schedule.w0_height if schedule else None)
    if height is None or height < 2:
        raise DomainError(f"|w₀| must be at least 2, got {height}", "cantor_dim.d_j")
    rd_j, rd_next = _rho_delta(j, schedule, rho_delta), _rho_delta(j + 1, schedule, rho_delta)

    def evaluate():
        L = iv.log(iv.mpf(height))
        log5 = iv.log(iv.mpf(5))
        a, b = iv.log(real_iv(rd_j)), iv.log(real_iv(rd_next))

        def log_m(i, log_rd):
            return log_rd + to_iv(r ** i * (r - 1)) * L

        def log_eps(i):
            return -iv.log(iv.mpf(16)) - to_iv(2 * r * (r ** i - 1) / (r - 1)) * log5 - to_iv(2 * r ** (i + 1)) * L

        lm_j, lm_next = log_m(j, a), log_m(j + 1, b)
        le_j, le_next = log_eps(j), log_eps(j + 1)
        direct = lm_j / -((lm_next + le_next) - (lm_j + le_j))
        scale = to_iv(r ** j * (r - 1)) * L
        num_term = -a / scale
        den_term = to_iv(2 * r) * log5 / (to_iv(r - 1) * L) + (a - b) / scale
        closed = (1 - num_term) / (1 + to_iv(r) + den_term)
        return lm_j, le_j, direct, closed, num_term, den_term

    with iv.workprec(settings.precision_bits):
        lm_j, le_j, direct, closed, num_term, den_term = evaluate()
        estimate = DimEstimate(
            j=j,
            m_j=enclose(iv.exp(lm_j)),
            eps_j=enclose(iv.exp(le_j)),
            d_closed=enclose(closed),
            d_direct=enclose(direct),
            num_term=enclose(num_term),
            den_term=enclose(den_term),
            agree=None,
        )

    def agreement():
        _, _, direct, closed, _, _ = evaluate()
        return abs(closed - direct) <= to_iv(RELATIVE_TOLERANCE) * abs(direct)

    estimate.agree = try_decide(agreement, what=f"d_{j} dual-path agreement")
    if estimate.agree is False:
        logger.warning(f"d_{j}: closed form {estimate.d_closed} and direct {estimate.d_direct} disagree")
    return estimate


def dimension_table(schedule: LevelSchedule, levels: Optional[int] = None) -> List[DimEstimate]:
    """DimEstimate for every level j whose successor plan exists."""
    count = len(schedule.plans) - 1 if levels is None else min(levels, len(schedule.plans) - 1)
    return [d_j_closed_form(j, schedule.pack, schedule) for j in range(max(count, 0))]


def tree_dimension(tree: SlitTree) -> Dict:
    """
    Falconer estimates of a built tree from the schedule's m_j, ε_j and from
    the measured child counts and sibling gaps.
    """
    table = dimension_table(tree.schedule, tree.depth)
    nesting = check_nesting_gaps(tree)
    eps_measured = measured_eps(nesting)
    counts = measured_counts(tree)
    result: Dict = {
        "provenance": tree.pack.provenance,
        "levels": [row.to_row() for row in table],
        "all_agree": all(row.agree is True for row in table),
        "eps": {
            str(j): {
                "schedule": table[j].eps_j.to_dict() if j < len(table) else None,
                "measured": eps_measured[j].to_dict() if eps_measured.get(j) else None,
            }
            for j in range(tree.depth)
        },
        "counts": {str(j): c for j, c in counts.items()},
    }
    if len(table) >= 2:
        try:
            result["falconer_schedule"] = falconer_bound([row.m_j for row in table], [row.eps_j for row in table]).to_dict()
        except DomainError as e:
            result["falconer_schedule"] = {"error": str(e)}
    m = [counts[j] for j in range(tree.depth)]
    eps = [eps_measured.get(j) for j in range(tree.depth)]
    usable = 0
    while usable < len(m) and m[usable] >= 2 and eps[usable] is not None:
        usable += 1
    if usable >= 2:
        result["falconer_measured"] = falconer_bound(m[:usable], eps[:usable]).to_dict()
    else:
        result["falconer_measured"] = None
    return result


# --- Σδ_j --------------------------------------------------------------------------------------

GROUPS = ("bounded", "liouville", "diophantine")


def _group(region: Region) -> str:
    if region in (Region.BOUNDED, Region.TRANSITION):
        return "bounded"
    if region == Region.LIOUVILLE:
        return "liouville"
    return "diophantine"


def _bound_terms(pack: ParamPack, q_k, loglog_next, q_prev=None) -> Dict[str, object]:
    """Per-k group bounds as intervals (inside the caller's precision)."""
    r = to_iv(pack.r)
    log_r = iv.log(r)
    rho_pow = iv.exp(to_iv(pack.N_prime) * iv.log(to_iv(pack.rho)))
    R = r / (r - 1)
    bounds = {
        "liouville": 4 / log_r * loglog_next / q_k,
        "diophantine": 2 * R * rho_pow / q_k,
    }
    if q_prev is not None:
        bounds["bounded"] = 8 * rho_pow * (iv.log(to_iv(pack.M_prime)) / log_r + 5) / q_prev
    return bounds


def sum_delta(schedule: LevelSchedule, K: Optional[int] = None) -> Dict:
    """
    Σδ_j over the planned levels j < K, split per gap index k into the bounded
    (with transition), Liouville and Diophantine groups, each next to its bound:
    8ρ^{N'}(log_r M' + 5)/q_k̃, (4/log r)·log log q_{k+1}/q_k and 2Rρ^{N'}/q_k
    with R = r/(r−1).
    """
    pack = schedule.pack
    K = len(schedule.plans) if K is None else min(K, len(schedule.plans))
    rows: List[Dict] = []
    totals = {g: Enclosure.exact(0) for g in GROUPS}
    bound_totals = {g: Enclosure.exact(0) for g in GROUPS}
    dominated: Dict[str, Optional[bool]] = {}
    with iv.workprec(settings.precision_bits):
        sums = {g: iv.mpf(0) for g in GROUPS}
        bound_sums = {g: iv.mpf(0) for g in GROUPS}
        for k in schedule.gaps:
            plans = [p for p in schedule.plans[:K] if p.k == k]
            if not plans:
                continue
            q_k, q_next = schedule.q[k], schedule.q[k + 1]
            k_prev = next((p.k_prev for p in plans if p.k_prev is not None), None)
            q_prev = schedule.q.get(k_prev) if k_prev is not None else None
            bounds = _bound_terms(
                pack, iv.mpf(q_k), iv.log(iv.log(iv.mpf(q_next))), iv.mpf(q_prev) if q_prev else None
            )
            for group in GROUPS:
                members = [p for p in plans if _group(p.region) == group]
                if not members:
                    continue
                total = iv.mpf(0)
                for p in members:
                    total = total + real_iv(p.delta)
                bound = bounds.get(group)
                ok = None if bound is None else (total <= bound)
                sums[group] = sums[group] + total
                if bound is not None:
                    bound_sums[group] = bound_sums[group] + bound
                key = f"k={k}:{group}"
                dominated[key] = ok
                rows.append(
                    {
                        "k": k,
                        "group": group,
                        "levels": [p.j for p in members],
                        "sum": enclose(total).to_dict(),
                        "bound": enclose(bound).to_dict() if bound is not None else None,
                        "dominated": ok,
                    }
                )
        if K > 0:
            totals = {g: enclose(sums[g]) for g in GROUPS}
            bound_totals = {g: enclose(bound_sums[g]) for g in GROUPS}
    all_dominated = all(v is True for v in dominated.values())
    verdict = "bounded (trend only)" if all_dominated else "bound not certified"
    logger.info(f"Σδ_j over {K} levels: {verdict}")
    return {
        "provenance": pack.provenance,
        "K": K,
        "rows": rows,
        "totals": {g: e.to_dict() for g, e in totals.items()},
        "bound_totals": {g: e.to_dict() for g, e in bound_totals.items()},
        "all_dominated": all_dominated,
        "verdict": verdict,
    }


def group_bounds(spec: PartialQuotientSpec, pack: ParamPack, K: int) -> Dict:
    """
    Per-k group bounds over ℓ_N ∩ [0, K] straight from λ, without a schedule.

    Indices past the materialized depth use the log-domain trail. The trend
    is "divergent" when the last Liouville bound terms are all >= 1.
    """
    stream = as_stream(spec)
    gaps = gap_indices(spec, pack.N, K)
    rows: List[Dict] = []
    liouville_terms = []
    prev = None
    with iv.workprec(settings.precision_bits):
        for k in gaps.indices:
            if stream.ensure(k):
                q_k = iv.mpf(stream.pq(k)[1])
            else:
                log_q = stream.log_q(k)
                if log_q is None:
                    raise TruncationError(f"{stream.label}: q_{k} unavailable", "cantor_dim.group_bounds", k - 1)
                q_k = iv.exp(log_q)
            if stream.ensure(k + 1):
                q_next = stream.pq(k + 1)[1]
                loglog_next = iv.log(iv.log(iv.mpf(q_next))) if q_next > 1 else None
            else:
                loglog_next = stream.loglog_q(k + 1)
            if loglog_next is None:
                prev = q_k
                continue
            bounds = _bound_terms(pack, q_k, loglog_next, prev)
            liouville_terms.append(bounds["liouville"])
            rows.append({"k": k, **{g: enclose(b).to_dict() for g, b in bounds.items()}})
            prev = q_k
        tail = liouville_terms[-3:]
        divergent = bool(tail) and all((t >= 1) is True for t in tail)
    trend = "divergent" if divergent else "decaying"
    logger.info(f"Group bounds over ℓ_N ∩ [0, {K}]: {len(rows)} indices, {trend} trend ({gaps.exactness.value})")
    return {"K": K, "exactness": gaps.exactness.value, "rows": rows, "trend": trend}


# --- Dimension zero: J_k counting ------------------------------------------------------------


def _below_gap_top(height: int, k: int, spec: PartialQuotientSpec) -> Optional[bool]:
    """height < q_k^{n_k − 2} = q_{k+1}/q_k²."""
    stream = as_stream(spec)
    q_k = stream.pq(k)[1]
    if stream.ensure(k + 1):
        return height * q_k * q_k < stream.pq(k + 1)[1]
    log_next = stream.log_q(k + 1)
    if log_next is None:
        # q_{k+1} beyond the log-domain cap dwarfs any materialized height
        return True
    return try_decide(
        lambda: iv.log(iv.mpf(height)) + 2 * iv.log(iv.mpf(q_k)) < log_next, what="J_k upper bound"
    )


def dim0_counting(
    certificate: NonergodicCertificate,
    spec: PartialQuotientSpec,
    N: Union[Fraction, int, str],
    N0: Optional[Union[Fraction, int, str]] = None,
    K: Optional[int] = None,
    tail_bound: Union[Fraction, int] = 0,
) -> Dict:
    """
    J_k tables of a certificate over the gap indices k ∈ ℓ_N.

    J_k holds the j with q_k <= |w_j| < |w_{j+1}| < |w_{j+2}| < q_k^{n_k−2}.
    Each member is run through the minimal-area split: case (i) certifies
    |w_j×v_j| > 1/(2q_k); case (ii) is reported, as it rules the index out.
    The count lower bound (log log q_{k+1} − log log q_k)/(2 log N) is
    reported as active when n_k > N₀, conditional when N₀ is not given.
    The totals compare Σ_k Σ_{J_k} 1/(2q_k) with the certificate's cross sum.

    Raises:
        DomainError: N <= 1 or a loop missing for some step
    """
    N = Fraction(N)
    if N <= 1:
        raise DomainError(f"N must exceed 1, got {N}", "cantor_dim.dim0")
    slits, loops = [_slit(w) for w in certificate.slits], certificate.loops
    if len(loops) < len(slits) - 1:
        raise DomainError("certificate needs a loop per step", "cantor_dim.dim0")
    heights = [w.n for w in slits]
    stream = as_stream(spec)
    if K is None:
        top = max(heights, default=0)
        K = 0
        while stream.ensure(K + 2) and stream.pq(K + 1)[1] <= top:
            K += 1
    try:
        gaps = gap_indices(spec, N, K)
    except TruncationError as e:
        logger.warning(f"Gap indices truncated at {e.max_index}: {e}")
        gaps = gap_indices(spec, N, max(e.max_index or 0, 0))

    table: List[Dict] = []
    with iv.workprec(settings.precision_bits):
        crosses = [to_interval(abs_cross(slits[j], loops[j], spec), spec) for j in range(len(slits) - 1)]
        cross_sum = to_iv(Fraction(tail_bound))
        for c in crosses:
            cross_sum = cross_sum + c
    observed = Fraction(0)
    predicted = iv.mpf(0)
    for k in gaps.indices:
        if not stream.ensure(k):
            continue
        q_k = stream.pq(k)[1]
        members = [
            j
            for j in range(len(slits) - 2)
            if q_k <= heights[j] < heights[j + 1] < heights[j + 2] and _below_gap_top(heights[j + 2], k, spec)
        ]
        rows = []
        kept = 0
        for j in members:
            case = "unchecked"
            try:
                others = (loops[j + 1],) if j + 1 < len(loops) else ()
                verdict = check_min_area(slits[j], slits[j + 1], loops[j], k, spec, others=others)
                case = verdict.case.value
            except InconsistencyError as e:
                case = "violated"
                logger.warning(f"Minimal-area inequality fails at j={j}, k={k}: {e}")
            except (DomainError, TruncationError, PrecisionExhaustedError) as e:
                logger.debug(f"Minimal-area split unchecked at j={j}, k={k}: {e}")
            if case == MinAreaCase.LIOUVILLE_CONVERGENT.value:
                logger.warning(f"j={j} hits the Liouville convergent of w_j at k={k}; not a J_k member")
            if case not in (MinAreaCase.LIOUVILLE_CONVERGENT.value, "violated"):
                kept += 1
            with iv.workprec(settings.precision_bits):
                cross_enc = enclose(crosses[j]).to_dict() if j < len(crosses) else None
            rows.append({"j": j, "height": heights[j], "case": case, "cross": cross_enc})
        observed += Fraction(kept, 2 * q_k)

        count_bound = None
        active: Optional[bool] = None
        with iv.workprec(settings.precision_bits):
            if q_k > 1:
                if stream.ensure(k + 1):
                    loglog_next = iv.log(iv.log(iv.mpf(stream.pq(k + 1)[1])))
                else:
                    loglog_next = stream.loglog_q(k + 1)
                if loglog_next is not None:
                    bound = (loglog_next - iv.log(iv.log(iv.mpf(q_k)))) / (2 * iv.log(to_iv(N)))
                    count_bound = enclose(bound)
                    exponent = gaps.exponents.get(k)
                    if N0 is not None and exponent is not None:
                        active = exponent.to_iv() > to_iv(Fraction(N0))
                    if active:
                        predicted = predicted + bound / (2 * q_k)
        table.append(
            {
                "k": k,
                "q_k": q_k,
                "n_k": gaps.exponents[k].to_dict() if gaps.exponents.get(k) else None,
                "J_k": rows,
                "count": kept,
                "count_bound": count_bound.to_dict() if count_bound else None,
                "bound_active": active,
                "conditional": N0 is None,
            }
        )

    with iv.workprec(settings.precision_bits):
        witness = to_iv(observed) > cross_sum
        totals = {
            "observed": str(observed),
            "predicted": enclose(predicted).to_dict(),
            "cross_sum": enclose(cross_sum).to_dict(),
            "contradiction": witness,
        }
    logger.info(f"J_k tables over {len(table)} gap indices; contradiction witness: {witness}")
    return {"N": str(N), "N0": None if N0 is None else str(N0), "K": K, "table": table, "totals": totals}
