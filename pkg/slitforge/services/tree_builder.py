"""
Slit tree: parameter pack, level schedule, per-level construction and verification
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import sympy
from mpmath import iv

from slitforge.core.config import settings
from slitforge.core.errors import (
    BudgetExceededError,
    DomainError,
    GuaranteeFailure,
    InconsistencyError,
    PrecisionExhaustedError,
    TruncationError,
)
from slitforge.core.numeric import (
    ceil_power,
    ceil_real,
    compare_power,
    compare_product,
    compare_reals,
    decide,
    to_iv,
)
from slitforge.models.enums import Mode, Region, Verdict
from slitforge.models.params import ParamPack, derive_params
from slitforge.models.records import ChildSet, TreeNode
from slitforge.models.spec import PartialQuotientSpec
from slitforge.models.vectors import HolVec, TwistWitness
from slitforge.services.cf_core import as_stream, gap_indices
from slitforge.services.constructions import (
    compare_cross,
    delta_children,
    is_good,
    is_normal,
    lambda_children,
    liouville_convergent,
    normal_children,
)

# Configure logging
logger = logging.getLogger(__name__)

__all__ = [
    "LevelPlan",
    "LevelSchedule",
    "LevelReport",
    "SlitTree",
    "build_level",
    "build_tree",
    "choose_k0",
    "derive_params",
    "initial_slit",
    "new_tree",
    "schedule",
    "verify_tree",
]

Factor = Tuple[Union[int, Fraction], Fraction]

DEFAULT_K_MAX = 40
LOG10_2 = 0.30103

REGION_RULES = {
    Region.LIOUVILLE: "liouville-region",
    Region.TRANSITION: "bounded-to-liouville",
    Region.DIOPHANTINE: "diophantine-region",
    Region.BOUNDED: "bounded-region",
}


def _q(spec: PartialQuotientSpec, k: int) -> int:
    return as_stream(spec).convergent(k).q


def _rational(x: Fraction) -> sympy.Rational:
    return sympy.Rational(x.numerator, x.denominator)


def compare_factors(lhs: Sequence[Factor], rhs: Sequence[Factor], what: str = "height comparison") -> int:
    """
    Sign of Π base^e (lhs) − Π base^e (rhs) for positive rational bases.

    Exact while the digit budget allows, then by certified logarithms.
    """
    try:
        return compare_product(1, list(rhs) + [(b, -Fraction(e)) for b, e in lhs])
    except BudgetExceededError:
        logger.debug(f"Falling back to log-domain {what}")

    def log_sum(factors: Sequence[Factor]):
        total = iv.mpf(0)
        for b, e in factors:
            if Fraction(e) != 0:
                total += to_iv(Fraction(e)) * iv.log(to_iv(Fraction(b)))
        return total

    def predicate():
        d = log_sum(lhs) - log_sum(rhs)
        if d > 0:
            return 1
        if d < 0:
            return -1
        return None

    return decide(predicate, what=what, code="tree_builder.precision")


# --- Initial slit and k0 -------------------------------------------------------


def choose_k0(pack: ParamPack, spec: PartialQuotientSpec, gaps: Sequence[int]) -> int:
    """
    Starting gap index.

    The pack's k₀ when set; in strict mode the first element of ℓ_N whose
    q_k exceeds every k₀ bound; in relaxed mode the first element of ℓ_N.

    Raises:
        DomainError: ℓ_N empty, k₀ not in ℓ_N, or no strict-feasible index within depth
    """
    if not gaps:
        raise DomainError(
            "ℓ_N is empty within depth: Diophantine regime, no Liouville levels available",
            "tree_builder.no_gaps",
        )
    if pack.k0 is not None:
        if pack.k0 not in gaps:
            raise DomainError(f"k₀ = {pack.k0} is not in ℓ_N = {list(gaps)}", "tree_builder.k0")
        candidates = [pack.k0]
    else:
        candidates = list(gaps)
    for k in candidates:
        failures = pack.k0_failures(_q(spec, k))
        if not failures:
            return k
        if pack.mode == Mode.RELAXED:
            logger.warning(f"k₀ = {k} misses the bounds {failures}; relaxed pack keeps it")
            return k
    bound = pack.k0_bound()
    raise DomainError(
        f"strict mode needs q_k₀ above {bound.lo}; no index of ℓ_N within depth qualifies",
        "tree_builder.k0_infeasible",
    )


def initial_slit(seed: HolVec, pack: ParamPack, spec: PartialQuotientSpec, k0: int) -> HolVec:
    """
    Minimal-height w₀ in Λ1(seed, k₀) with q_{k₀}^{M'} <= |w₀| < q_{k₀}^{M'r}.

    Raises:
        DomainError: seed not in V2+ or |seed| >= q_{k₀}/2, or the window is empty
        InconsistencyError: d(w₀, k₀) > 2
    """
    seed = seed.normalized()
    if not (seed.is_separating and seed.is_positive_slit and seed.n > 0):
        raise DomainError(f"seed {seed} must be a slit in V2+ of positive height", "tree_builder.seed")
    stream = as_stream(spec)
    q = stream.convergent(k0).q
    if not 2 * seed.n < q:
        raise DomainError(f"seed height {seed.n} is not below q_k₀/2 = {q}/2", "tree_builder.seed")
    record = liouville_convergent(seed, k0, spec)
    ux, uy = record.u
    target = ceil_power(q, pack.M_prime)
    best: Optional[HolVec] = None
    for c, e in record.companions:
        # |w₀| = n + 2(e + a·uy)
        a = max(1, -(-(target - seed.n - 2 * e) // (2 * uy)))
        candidate = seed + 2 * HolVec.loop(c + a * ux, e + a * uy)
        if best is None or candidate.n < best.n:
            best = candidate
    if best is None or compare_power(best.n, q, pack.M_prime * pack.r) >= 0:
        raise DomainError(
            f"no Λ1 child of {seed} in [q^M', q^(M'r)) for q = {q}",
            "tree_builder.initial_slit",
        )
    p_k, q_k = stream.pq(k0)
    d = math.gcd(p_k + best.m * q_k, best.n * q_k)
    if d > 2:
        raise InconsistencyError(f"d(w₀, k₀) = {d} exceeds 2 for w₀ = {best}", "tree_builder.initial_slit")
    logger.info(f"Initial slit w₀ = {best} (|w₀| = {best.n}) from seed {seed} at k₀ = {k0}")
    return best


# --- Schedule ----------------------------------------------------------------------


@dataclass
class LevelPlan:
    """Construction applied to the slits of level j, with δ_j and ρ_j"""

    j: int
    region: Region
    k: int
    k_prev: Optional[int]
    delta: sympy.Expr
    rho: sympy.Expr
    alpha: Optional[sympy.Expr] = None
    offset: int = 0

    @property
    def rule(self) -> str:
        return REGION_RULES[self.region]

    def to_row(self) -> Dict:
        return {
            "j": self.j,
            "region": self.region.value,
            "k": self.k,
            "k_prev": "" if self.k_prev is None else self.k_prev,
            "delta": str(self.delta),
            "rho": str(self.rho),
            "alpha": "" if self.alpha is None else str(self.alpha),
            "offset": self.offset,
        }


@dataclass
class LevelSchedule:
    """Level indices j^B/j^C/j^D per gap index and the per-level plans"""

    pack: ParamPack
    w0_height: int
    k0: Optional[int]
    gaps: List[int]
    q: Dict[int, int]
    indices: Dict[int, Dict[str, Optional[int]]]
    plans: List[LevelPlan]
    level_max: int
    k_max: int = DEFAULT_K_MAX
    checks: Dict[str, Optional[bool]] = field(default_factory=dict)
    messages: List[str] = field(default_factory=list)

    def plan(self, j: int) -> LevelPlan:
        if j >= len(self.plans):
            raise DomainError(f"no plan for level {j} (schedule covers {len(self.plans)})", "tree_builder.schedule")
        return self.plans[j]

    def inf_factors(self, j: int) -> List[Factor]:
        """inf H_j = |w₀|^{r^j}"""
        return [(self.w0_height, self.pack.r ** j)]

    def sup_factors(self, j: int) -> List[Factor]:
        """sup H_j = 5^{(r^j−1)/(r−1)} |w₀|^{r^j}"""
        r = self.pack.r
        return [(5, (r ** j - 1) / (r - 1)), (self.w0_height, r ** j)]

    def in_window(self, j: int, height: int) -> bool:
        return (
            compare_factors([(height, Fraction(1))], self.inf_factors(j)) >= 0
            and compare_factors([(height, Fraction(1))], self.sup_factors(j)) <= 0
        )

    @property
    def all_pass(self) -> bool:
        return all(v is not False for v in self.checks.values())

    def to_dict(self) -> Dict:
        return {
            "provenance": self.pack.provenance,
            "w0_height": self.w0_height,
            "k0": self.k0,
            "k_max": self.k_max,
            "gaps": self.gaps,
            "indices": {str(k): v for k, v in self.indices.items()},
            "plans": [p.to_row() for p in self.plans],
            "checks": self.checks,
            "messages": self.messages,
        }


def _index_search(pred: Callable[[int], bool], limit: int, kind: str) -> Optional[int]:
    """
    min or max of {j <= limit : pred(j)}.

    Returns None when the answer lies beyond the searched range, -1 for an
    empty max over a range starting false.
    """
    hits = [j for j in range(limit + 1) if pred(j)]
    if kind == "min":
        return hits[0] if hits else None
    if not hits:
        return -1
    return None if hits[-1] == limit else hits[-1]


def _plan_for(j: int, sched: LevelSchedule, pack: ParamPack, c0: sympy.Expr) -> Optional[LevelPlan]:
    rho_pow = pack.rho_pow
    rho_e = _rational(pack.rho)
    r_e = _rational(pack.r)
    ks = sched.gaps
    for i, k in enumerate(ks):
        ind = sched.indices[k]
        B, C, D = ind.get("B"), ind["C"], ind["D"]
        B_next = sched.indices[ks[i + 1]].get("B") if i + 1 < len(ks) else None
        q_k = sched.q[k]
        if i > 0:
            k_prev = ks[i - 1]
            q_prev = sched.q[k_prev]
            if B is not None and 0 <= B <= j and (C is None or j < C):
                alpha = pack.alpha_k(q_prev) - sympy.Rational(j - B, 2)
                return LevelPlan(j, Region.BOUNDED, k, k_prev, 4 * rho_pow / q_prev, c0 / 2, alpha, j - B)
            if C == j:
                return LevelPlan(
                    j, Region.TRANSITION, k, k_prev, 8 * rho_pow / q_prev, q_prev / (8 * rho_pow * q_k)
                )
        if C is None or j < C:
            continue
        if D is None or j < D:
            return LevelPlan(j, Region.LIOUVILLE, k, ks[i - 1] if i else None, sympy.Rational(4, q_k), sympy.Rational(1, 4))
        if B_next is None or j < B_next:
            alpha = pack.alpha_k(q_k) * r_e ** (j - D)
            delta = 2 * rho_pow / (q_k * r_e ** (j - D))
            return LevelPlan(j, Region.DIOPHANTINE, k, None, delta, c0 / (2 * rho_pow * rho_e), alpha, j - D)
    return None


def schedule(
    pack: ParamPack,
    spec: PartialQuotientSpec,
    level_max: int,
    w0: Optional[HolVec] = None,
    seed: HolVec = HolVec.slit(0, 2),
    k_max: int = DEFAULT_K_MAX,
) -> LevelSchedule:
    """
    Level schedule for levels 0..level_max.

    Both characterizations of every index are computed and compared. The
    first characterization of j^D_k is read as max{j : H_j ⊂ I^C_k}; the
    literal max{j : H_{j+1} ⊂ I^C_k} is reported as "D_literal".

    Raises:
        DomainError: k₀ infeasible or initial slit unavailable
    """
    stream = as_stream(spec)
    stream.ensure(k_max + 1)
    K = min(k_max, stream.depth - 1)
    gaps = gap_indices(spec, pack.N, K).indices if K >= 0 else []
    sched = LevelSchedule(
        pack=pack, w0_height=0, k0=None, gaps=[], q={}, indices={}, plans=[], level_max=level_max, k_max=k_max
    )
    if not gaps:
        sched.messages.append("Diophantine regime: ℓ_N is empty within depth, no Liouville levels available")
        logger.warning(sched.messages[-1])
        return sched
    k0 = choose_k0(pack, spec, gaps)
    if w0 is None:
        w0 = initial_slit(seed, pack, spec, k0)
    ks = [k for k in gaps if k >= k0]
    sched.k0, sched.gaps, sched.w0_height = k0, ks, w0.n
    for k in ks:
        sched.q[k], sched.q[k + 1] = stream.pq(k)[1], stream.pq(k + 1)[1]
    r, Mp = pack.r, pack.M_prime
    limit = level_max + 1

    def H_in(j: int, lo: List[Factor], hi: List[Factor]) -> bool:
        # H_j ⊂ [lo, hi)
        return compare_factors(sched.inf_factors(j), lo) >= 0 and compare_factors(sched.sup_factors(j), hi) < 0

    for i, k in enumerate(ks):
        q_k, q_next = sched.q[k], sched.q[k + 1]
        IC = ([(q_k, Mp)], [(q_next, 1 / r)])
        ind: Dict[str, Optional[int]] = sched.indices.setdefault(k, {})
        ind["C"] = _index_search(lambda j: compare_factors(sched.inf_factors(j), IC[0]) >= 0, limit, "min")
        ind["C_first"] = _index_search(lambda j: H_in(j, *IC), limit, "min")
        if i == 0:
            ind["C"] = 0
        ind["D"] = _index_search(lambda j: compare_factors(sched.sup_factors(j), IC[1]) < 0, limit, "max")
        ind["D_first"] = _index_search(lambda j: H_in(j, *IC), limit, "max")
        ind["D_literal"] = _index_search(lambda j: H_in(j + 1, *IC), limit, "max")
        overlap_lo = [(q_next, 1 / r ** 5)]
        ind["overlap"] = sum(1 for j in range(limit + 1) if H_in(j, overlap_lo, IC[1]) and H_in(j, *IC))
        if i + 1 < len(ks):
            k_next = ks[i + 1]
            q_later = stream.pq(k_next)[1]
            ID = (overlap_lo, [(q_later, 1 / r)])
            nxt = sched.indices.setdefault(k_next, {})
            nxt["B"] = _index_search(lambda j: compare_factors(sched.sup_factors(j), ID[1]) < 0, limit, "max")
            nxt["B_first"] = _index_search(lambda j: H_in(j, *ID), limit, "max")

    _schedule_checks(sched)
    c0 = pack.c0
    for j in range(level_max + 1):
        plan = _plan_for(j, sched, pack, c0)
        if plan is None:
            sched.messages.append(f"no construction region covers level {j} within depth K = {k_max}")
            logger.warning(sched.messages[-1])
            break
        sched.plans.append(plan)
    logger.info(
        f"Schedule: k₀={k0}, |w₀|={w0.n}, ℓ_N∩[k₀,{k_max}]={ks}, "
        f"{len(sched.plans)} levels planned, checks pass={sched.all_pass}"
    )
    return sched


def _schedule_checks(sched: LevelSchedule) -> None:
    pack, r = sched.pack, sched.pack.r
    checks = sched.checks
    checks["|w0|^((r-1)^2) > 5"] = compare_factors([(sched.w0_height, (r - 1) ** 2)], [(5, Fraction(1))]) > 0
    checks["sup H_j < inf H_(j+1)"] = all(
        compare_factors(sched.sup_factors(j), sched.inf_factors(j + 1)) < 0 for j in range(sched.level_max + 1)
    )
    for i, k in enumerate(sched.gaps):
        ind = sched.indices[k]
        for name in ("C", "D", "B"):
            if name not in ind or f"{name}_first" not in ind:
                continue
            checks[f"k={k}: j^{name} characterizations agree"] = ind[name] == ind[f"{name}_first"]
        B, C, D = ind.get("B"), ind["C"], ind["D"]
        B_next = sched.indices[sched.gaps[i + 1]].get("B") if i + 1 < len(sched.gaps) else None
        if B is not None and C is not None and i > 0:
            checks[f"k={k}: j^B < j^C"] = B < C
            span = C - B - 4
            checks[f"k={k}: j^C <= j^B + log_r M' + 4"] = span <= 0 or r ** span <= pack.M_prime
        if C is not None and D is not None:
            checks[f"k={k}: j^C < j^D"] = C < D
            checks[f"k={k}: #H_j in I^C∩I^D >= 3"] = ind["overlap"] >= 3
        if D is not None and B_next is not None and B_next >= 0:
            checks[f"k={k}: j^D <= j^B_k'"] = D <= B_next
    failed = [name for name, ok in checks.items() if ok is False]
    if failed:
        logger.warning(f"Schedule checks failed: {failed}")


# --- Tree ------------------------------------------------------------------------------


@dataclass
class LevelReport:
    """Per-parent guarantee outcomes for the construction of level j+1"""

    j: int
    region: Region
    k: int
    delta: str
    rho: str
    parents: int = 0
    children: int = 0
    failures: List[Dict] = field(default_factory=list)
    capped: List[int] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> Dict:
        return {
            "j": self.j,
            "region": self.region.value,
            "k": self.k,
            "delta": self.delta,
            "rho": self.rho,
            "parents": self.parents,
            "children": self.children,
            "failures": self.failures,
            "capped": self.capped,
            "flags": self.flags,
        }


@dataclass
class SlitTree:
    """Levels of slits with parent links, twist loops and per-level reports"""

    spec: PartialQuotientSpec
    pack: ParamPack
    schedule: LevelSchedule
    levels: List[List[TreeNode]] = field(default_factory=list)
    reports: List[LevelReport] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def nodes(self):
        for level in self.levels:
            yield from level

    def children_of(self, j: int, index: int) -> List[TreeNode]:
        if j + 1 >= len(self.levels):
            return []
        return [node for node in self.levels[j + 1] if node.parent == index]


def new_tree(
    spec: PartialQuotientSpec,
    pack: ParamPack,
    level_max: int,
    seed: HolVec = HolVec.slit(0, 2),
    k_max: int = DEFAULT_K_MAX,
) -> SlitTree:
    """Tree holding only w₀, with its schedule."""
    sched = schedule(pack, spec, level_max, seed=seed, k_max=k_max)
    if sched.k0 is None:
        raise DomainError(sched.messages[-1], "tree_builder.no_gaps")
    w0 = initial_slit(seed, pack, spec, sched.k0)
    root = TreeNode(level=0, index=0, slit=w0, parent=None, twist=None, region=Region.INITIAL, cross=None)
    return SlitTree(spec=spec, pack=pack, schedule=sched, levels=[[root]])


def _expand(tree: SlitTree, node: TreeNode, plan: LevelPlan, limit: Optional[int]) -> ChildSet:
    w, pack, spec = node.slit, tree.pack, tree.spec
    if plan.region in (Region.LIOUVILLE, Region.TRANSITION):
        return lambda_children(w, plan.k, spec, r=pack.r)
    beta = sympy.Integer(w.n) ** _rational(pack.r - 1)
    if plan.region == Region.BOUNDED:
        return delta_children(w, plan.alpha, beta, spec, pack=pack)
    sched = tree.schedule
    i = sched.gaps.index(plan.k)
    window = None
    if i + 1 < len(sched.gaps):
        window = (sched.q[plan.k + 1], as_stream(spec).pq(sched.gaps[i + 1])[1])
    return normal_children(w, plan.alpha, pack, spec, window=window, limit=limit)


def _required(plan: LevelPlan, w: HolVec, pack: ParamPack) -> sympy.Expr:
    """ρ_j |w|^{r−1} δ_j"""
    return plan.rho * plan.delta * sympy.Integer(w.n) ** _rational(pack.r - 1)


def _check_parent(tree: SlitTree, node: TreeNode, plan: LevelPlan, children: ChildSet) -> List[Dict]:
    w = node.slit
    failures = []
    over = [rec for rec in children.children if compare_cross(w, rec.v, plan.delta, tree.spec) >= 0]
    if over:
        failures.append({"parent": node.index, "check": "cross < δ_j", "count": len(over)})
    required = _required(plan, w, tree.pack)
    if compare_reals(children.count, required) < 0:
        failures.append(
            {"parent": node.index, "check": "count >= ρ_j|w|^(r-1)δ_j", "count": children.count, "required": str(required)}
        )
    if plan.region in (Region.LIOUVILLE, Region.TRANSITION):
        bad = [rec for rec in children.children if "gcd-exceeds-2" in rec.flags]
        if bad:
            failures.append({"parent": node.index, "check": "d(w',k) <= 2", "count": len(bad)})
    return failures


def build_level(
    tree: SlitTree,
    j: int,
    prune: bool = False,
    max_nodes: Optional[int] = None,
    workers: Optional[int] = None,
) -> SlitTree:
    """
    Construct level j+1 from level j following the schedule's region for j.

    Args:
        prune: keep exactly ⌈ρ_j|w|^{r−1}δ_j⌉ children per parent
        max_nodes: keep at most this many slits at level j+1 (parents in order)
        workers: parallel parent expansion (defaults to settings.workers)

    Raises:
        DomainError: level j not built or not planned
        GuaranteeFailure: a parent fails its guarantee in strict mode
        BudgetExceededError: a child exceeds the digit budget
    """
    if len(tree.levels) != j + 1:
        raise DomainError(f"level {j} must be the last built level (have {tree.depth})", "tree_builder.build_level")
    plan = tree.schedule.plan(j)
    parents = tree.levels[j]
    report = LevelReport(j=j, region=plan.region, k=plan.k, delta=str(plan.delta), rho=str(plan.rho), parents=len(parents))
    limits = [ceil_real(_required(plan, node.slit, tree.pack)) if prune else None for node in parents]

    def expand(args):
        node, limit = args
        return _expand(tree, node, plan, limit)

    workers = workers or settings.workers
    if workers > 1 and len(parents) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(expand, zip(parents, limits)))
    else:
        results = [expand(item) for item in zip(parents, limits)]

    budget_bits = int(settings.digit_budget / LOG10_2)
    new_level: List[TreeNode] = []
    for node, children, limit in zip(parents, results, limits):
        failures = _check_parent(tree, node, plan, children)
        if failures:
            message = f"level {j} parent {node.index} ({node.slit}) fails {[f['check'] for f in failures]}"
            if tree.pack.mode == Mode.STRICT:
                logger.error(message)
                raise GuaranteeFailure(message, lemma=plan.rule)
            logger.warning(f"{message} (relaxed pack, continuing)")
            report.failures.extend(failures)
        for flag in children.flags:
            if flag not in report.flags:
                report.flags.append(flag)
        kept = children.children[:limit] if limit is not None else children.children
        for rec in kept:
            if max_nodes is not None and len(new_level) >= max_nodes:
                if node.index not in report.capped:
                    report.capped.append(node.index)
                continue
            if rec.child.n.bit_length() > budget_bits:
                raise BudgetExceededError(
                    f"slit height at level {j + 1} exceeds {settings.digit_budget} digits",
                    "tree_builder.digit_budget",
                )
            new_level.append(
                TreeNode(
                    level=j + 1,
                    index=len(new_level),
                    slit=rec.child,
                    parent=node.index,
                    twist=TwistWitness(v=rec.v, b=2, side="positive"),
                    region=plan.region,
                    cross=rec.cross,
                )
            )
    if report.capped:
        report.flags.append("level-capped")
    report.children = len(new_level)
    tree.levels.append(new_level)
    tree.reports.append(report)
    logger.info(
        f"Built level {j + 1} ({plan.region.value}, k={plan.k}): {len(new_level)} slits from {len(parents)} parents"
    )
    return tree


def build_tree(
    spec: PartialQuotientSpec,
    pack: ParamPack,
    depth: int,
    seed: HolVec = HolVec.slit(0, 2),
    prune: bool = False,
    max_nodes: Optional[int] = None,
    workers: Optional[int] = None,
    k_max: int = DEFAULT_K_MAX,
) -> SlitTree:
    """Build levels 1..depth; stops early when a level comes out empty."""
    tree = new_tree(spec, pack, depth, seed=seed, k_max=k_max)
    for j in range(min(depth, len(tree.schedule.plans))):
        build_level(tree, j, prune=prune, max_nodes=max_nodes, workers=workers)
        if not tree.levels[-1]:
            logger.warning(f"Level {j + 1} is empty; stopping")
            break
    return tree


# --- Verification --------------------------------------------------------------------


def _handoff(tree: SlitTree, j: int) -> Dict[str, Optional[bool]]:
    sched, pack, spec = tree.schedule, tree.pack, tree.spec
    result: Dict[str, Optional[bool]] = {}
    for i, k in enumerate(sched.gaps):
        ind = sched.indices[k]
        if ind["D"] == j:
            alpha = pack.alpha_k(sched.q[k])
            result["α_k-normal at j^D"] = _all_verdicts(
                lambda w: is_normal(w, alpha, pack.r, spec, rho=pack.rho).verdict, tree.levels[j]
            )
        if i + 1 < len(sched.gaps) and sched.indices[sched.gaps[i + 1]].get("B") == j:
            alpha = pack.alpha_k(sched.q[k])

            def good(w: HolVec) -> Verdict:
                beta = sympy.Integer(w.n) ** _rational(pack.r - 1)
                return Verdict.of(is_good(w, alpha, beta, spec) is not None)

            result["(α_k, |w|^(r-1))-good at j^B_k'"] = _all_verdicts(good, tree.levels[j])
    return result


def _all_verdicts(decide_one: Callable[[HolVec], Verdict], nodes: Sequence[TreeNode]) -> Optional[bool]:
    outcome: Optional[bool] = True
    for node in nodes:
        try:
            verdict = decide_one(node.slit)
        except (DomainError, TruncationError, PrecisionExhaustedError) as e:
            logger.debug(f"Handoff check of {node.slit} unchecked: {e}")
            verdict = Verdict.UNCERTAIN
        if verdict == Verdict.FALSE:
            return False
        if verdict == Verdict.UNCERTAIN:
            outcome = None
    return outcome


def verify_tree(tree: SlitTree) -> Dict:
    """
    Report-only verification of a built tree.

    Per level: length windows, cross bounds and child counts against the
    level's δ_j and ρ_j, δ_j < 1/16, m_j >= 2, and the region handoffs
    (α_k-normal at j^D_k, (α_k, |w|^{r−1})-good at j^B_{k'}).
    """
    sched, pack = tree.schedule, tree.pack
    r_e = _rational(pack.r)
    levels: Dict[int, Dict] = {}
    for j, nodes in enumerate(tree.levels):
        entry: Dict = {}
        outside = [node.index for node in nodes if not sched.in_window(j, node.slit.n)]
        entry["length_window"] = not outside
        if outside:
            entry["outside_window"] = outside
        if j < len(sched.plans):
            plan = sched.plan(j)
            entry["region"] = plan.region.value
            entry["delta_below_1/16"] = compare_reals(plan.delta, sympy.Rational(1, 16)) < 0
            m_j = plan.rho * plan.delta * sympy.Integer(sched.w0_height) ** (r_e ** j * (r_e - 1))
            entry["m_j_at_least_2"] = compare_reals(m_j, 2) >= 0
            if j + 1 < len(tree.levels):
                report = tree.reports[j]
                capped = set(report.capped)
                over, short = [], []
                for node in nodes:
                    kids = tree.children_of(j, node.index)
                    for kid in kids:
                        if compare_cross(node.slit, kid.twist.v, plan.delta, tree.spec) >= 0:
                            over.append(kid.index)
                    if node.index in capped:
                        continue
                    if compare_reals(len(kids), _required(plan, node.slit, pack)) < 0:
                        short.append(node.index)
                entry["cross_below_delta"] = not over
                entry["counts"] = not short
                if over:
                    entry["cross_failures"] = over
                if short:
                    entry["count_failures"] = short
                if capped:
                    entry["capped_parents"] = sorted(capped)
        entry.update(_handoff(tree, j))
        entry["pass"] = all(v is not False for k, v in entry.items() if isinstance(v, bool) or v is None)
        levels[j] = entry

    deltas = [plan.delta for plan in sched.plans[: max(len(tree.levels) - 1, 0)]]
    trend = None
    if len(deltas) >= 2:
        tail = deltas[-3:]
        trend = all(compare_reals(b, a) <= 0 for a, b in zip(tail, tail[1:]))
    report = {
        "provenance": pack.provenance,
        "depth": tree.depth,
        "levels": levels,
        "delta_to_zero": trend,
        "all_pass": all(entry["pass"] for entry in levels.values()),
    }
    logger.info(f"Verified tree of depth {tree.depth}: all_pass={report['all_pass']} ({pack.provenance})")
    return report
