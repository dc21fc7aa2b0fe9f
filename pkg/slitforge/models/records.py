"""
Result records produced by the service modules
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from slitforge.core.numeric import Enclosure
from slitforge.models.enums import (
    CertificateStatus,
    Exactness,
    MinAreaCase,
    Region,
    Verdict,
    VecKind,
    ZKind,
)
from slitforge.models.vectors import HolVec, TwistWitness


@dataclass(frozen=True)
class Convergent:
    """k-th convergent p_k/q_k"""

    k: int
    p: int
    q: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)

    def to_dict(self) -> Dict:
        return {"k": self.k, "p": self.p, "q": self.q}


@dataclass
class GapIndexSet:
    """ℓ_N restricted to k <= K, with the exponents n_k = log q_{k+1} / log q_k"""

    N: Fraction
    K: int
    indices: List[int]
    exponents: Dict[int, Optional[Enclosure]]
    exactness: Exactness = Exactness.EXACT

    def to_dict(self) -> Dict:
        return {
            "N": str(self.N),
            "K": self.K,
            "indices": self.indices,
            "exponents": {str(k): (e.to_dict() if e else None) for k, e in self.exponents.items()},
            "exactness": self.exactness.value,
        }


@dataclass
class PMSum:
    """Partial sum of log log q_{k+1} / q_k over k in [0, K)"""

    K: int
    total: Enclosure
    terms: Dict[int, Enclosure]
    skipped: int
    exactness: Exactness = Exactness.EXACT

    def to_dict(self) -> Dict:
        return {
            "K": self.K,
            "total": self.total.to_dict(),
            "terms": {str(k): t.to_dict() for k, t in self.terms.items()},
            "skipped": self.skipped,
            "exactness": self.exactness.value,
        }


@dataclass(frozen=True)
class ZConvergentRecord:
    """One Z-convergent: vector, height and its horizontal component"""

    vector: HolVec
    height: int
    hor: Enclosure
    kind: VecKind
    terminal: bool = False

    def to_dict(self) -> Dict:
        return {
            "vector": self.vector.to_dict(),
            "height": self.height,
            "hor": self.hor.to_dict(),
            "kind": self.kind.value,
            "terminal": self.terminal,
        }


@dataclass
class NonergodicCertificate:
    """Alternating separating slits w_j and loops v_j"""

    slits: List[HolVec]
    loops: List[HolVec]
    cross_terms: List[Enclosure] = field(default_factory=list)

    def to_dict(self) -> Dict:
        entries = []
        for j, w in enumerate(self.slits):
            entry = {"slit": w.to_dict()}
            if j < len(self.loops):
                entry["loop"] = self.loops[j].to_dict()
            if j < len(self.cross_terms):
                entry["cross"] = self.cross_terms[j].to_dict()
            entries.append(entry)
        return {"entries": entries}


@dataclass
class CertificateReport:
    """Outcome of checking a nonergodicity certificate"""

    status: CertificateStatus
    failed_step: Optional[int] = None
    reason: str = ""
    partial_sums: List[Enclosure] = field(default_factory=list)
    total_bound: Optional[Enclosure] = None
    theta: Optional[Enclosure] = None
    h_bounds: List[Enclosure] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "status": self.status.value,
            "failed_step": self.failed_step,
            "reason": self.reason,
            "partial_sums": [s.to_dict() for s in self.partial_sums],
            "total_bound": self.total_bound.to_dict() if self.total_bound else None,
            "theta": self.theta.to_dict() if self.theta else None,
            "h_bounds": [h.to_dict() for h in self.h_bounds],
            "notes": self.notes,
        }


@dataclass(frozen=True)
class LiouvilleConvergentRecord:
    """Liouville convergent u of w indexed by k, with d·u = (p_k + m q_k, n q_k)"""

    w: HolVec
    k: int
    u: Tuple[int, int]
    d: int
    companions: Tuple[Tuple[int, int], ...]

    def to_dict(self) -> Dict:
        return {
            "w": self.w.to_dict(),
            "k": self.k,
            "u": list(self.u),
            "d": self.d,
            "companions": [list(c) for c in self.companions],
        }


@dataclass(frozen=True)
class GoodnessWitness:
    """Convergent height q of the inverse slope of w with α|w| <= q <= β|w|"""

    w: HolVec
    alpha: Any
    beta: Any
    q: int
    p: int

    def to_dict(self) -> Dict:
        return {"w": self.w.to_dict(), "alpha": str(self.alpha), "beta": str(self.beta), "q": self.q, "p": self.p}


@dataclass
class NormalityWitness:
    """Decision record for α-normality"""

    w: HolVec
    alpha: Any
    r: Fraction
    T: Enclosure
    verdict: Verdict
    heights: List[int]
    windows: List[Dict] = field(default_factory=list)
    method: str = "full"

    @property
    def is_normal(self) -> bool:
        return self.verdict == Verdict.TRUE

    def to_dict(self) -> Dict:
        return {
            "w": self.w.to_dict(),
            "alpha": str(self.alpha),
            "r": str(self.r),
            "T": self.T.to_dict(),
            "verdict": self.verdict.value,
            "heights": self.heights,
            "windows": self.windows,
            "method": self.method,
        }


@dataclass(frozen=True)
class ChildRecord:
    """Child slit w' = w + 2v with its twist loop"""

    parent: HolVec
    child: HolVec
    v: HolVec
    cross: Enclosure
    flags: Tuple[str, ...] = ()

    def to_dict(self) -> Dict:
        return {
            "parent": self.parent.to_dict(),
            "v": self.v.to_dict(),
            "child": self.child.to_dict(),
            "cross_enclosure": self.cross.to_dict(),
            "flags": list(self.flags),
        }


@dataclass
class ChildSet:
    """Children of one parent plus the guarantee that applies to them"""

    parent: HolVec
    children: List[ChildRecord]
    guaranteed: Optional[Enclosure] = None
    guarantee_active: bool = True
    flags: List[str] = field(default_factory=list)
    diagnostics: Dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return len(self.children)

    def to_dict(self) -> Dict:
        return {
            "parent": self.parent.to_dict(),
            "count": self.count,
            "guaranteed": self.guaranteed.to_dict() if self.guaranteed else None,
            "guarantee_active": self.guarantee_active,
            "flags": self.flags,
            "diagnostics": self.diagnostics,
            "children": [c.to_dict() for c in self.children],
        }


@dataclass(frozen=True)
class MinAreaVerdict:
    """Case of the minimal-area split"""

    case: MinAreaCase
    cross: Enclosure
    threshold: Fraction
    checked_vectors: Tuple[Tuple[int, int], ...] = ()
    note: str = ""

    def to_dict(self) -> Dict:
        return {
            "case": self.case.value,
            "cross": self.cross.to_dict(),
            "threshold": str(self.threshold),
            "checked_vectors": [list(v) for v in self.checked_vectors],
            "note": self.note,
        }


@dataclass(frozen=True)
class TreeNode:
    """One slit of the tree"""

    level: int
    index: int
    slit: HolVec
    parent: Optional[int]
    twist: Optional[TwistWitness]
    region: Region
    cross: Optional[Enclosure]

    def to_dict(self) -> Dict:
        return {
            "level": self.level,
            "index": self.index,
            "slit": {"m": self.slit.m, "n": self.slit.n},
            "parent": self.parent,
            "v": {"p": self.twist.v.x.s, "q": self.twist.v.y} if self.twist else None,
            "b": self.twist.b if self.twist else None,
            "side": self.twist.side if self.twist else None,
            "region": self.region.value,
            "cross_enclosure": self.cross.to_dict() if self.cross else None,
        }


@dataclass(frozen=True)
class ZSetDescriptor:
    """Holonomy set Z with an upper bound for its Minkowski constant"""

    members: ZKind = ZKind.V0_V2
    mu_bound: Fraction = Fraction(1)

    @property
    def has_loops(self) -> bool:
        return self.members in (ZKind.V0, ZKind.V0_V2)

    @property
    def has_slits(self) -> bool:
        return self.members in (ZKind.V2, ZKind.V0_V2)

    def horizontal(self) -> HolVec:
        """Shortest horizontal member: (λ, 0) when separating slits are in Z, else (1, 0)."""
        return HolVec.slit(0, 0) if self.has_slits else HolVec.loop(1, 0)

    def to_dict(self) -> Dict:
        return {"members": self.members.value, "mu_bound": str(self.mu_bound)}


@dataclass
class ZExpansion:
    """Z-convergents of a direction up to a height bound"""

    theta: str
    members: ZSetDescriptor
    height_bound: int
    records: List[ZConvergentRecord]
    terminated: bool = False
    direction: Any = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, index):
        return self.records[index]

    @property
    def heights(self) -> List[int]:
        return [rec.height for rec in self.records]

    def to_dict(self) -> Dict:
        return {
            "theta": self.theta,
            "Z": self.members.to_dict(),
            "height_bound": self.height_bound,
            "terminated": self.terminated,
            "records": [rec.to_dict() for rec in self.records],
        }


@dataclass(frozen=True)
class CoverInterval:
    """I(v): directions within μ/|v|^(1+r) of the inverse slope of v"""

    band: int
    vector: HolVec
    slope: Enclosure
    interval: Enclosure
    length: Enclosure

    def to_row(self) -> Dict:
        return {
            "band": self.band,
            "kind": self.vector.kind.value,
            "x": self.vector.x.s,
            "height": self.vector.y,
            "slope_lo": self.slope.lo,
            "slope_hi": self.slope.hi,
            "lo": self.interval.lo,
            "hi": self.interval.hi,
            "length": self.length.hi,
        }


@dataclass
class CoverBand:
    """Candidates of one dyadic height band [2^k, 2^(k+1))"""

    band: int
    count: int
    interval_length: Enclosure
    s_sum: Enclosure
    ratio: Optional[Enclosure] = None
    min_length: Optional[Enclosure] = None

    def to_row(self) -> Dict:
        return {
            "band": self.band,
            "count": self.count,
            "interval_length": self.interval_length.hi,
            "min_interval_length": self.min_length.lo if self.min_length else "",
            "s_sum_lo": self.s_sum.lo,
            "s_sum_hi": self.s_sum.hi,
            "ratio": self.ratio.mid if self.ratio else "",
        }


@dataclass
class CoverTable:
    """ε-cover of E'_r over [a, a+1] by intervals I(v) of length 2μ/|v|^(1+r)"""

    members: ZSetDescriptor
    r: Fraction
    s: Fraction
    a: Fraction
    bands: List[CoverBand]
    tail_sums: Dict[int, Enclosure]
    predicted_ratio: Enclosure
    summable: bool
    intervals: List[CoverInterval] = field(default_factory=list)
    intervals_truncated: bool = False

    def to_dict(self) -> Dict:
        return {
            "Z": self.members.to_dict(),
            "r": str(self.r),
            "s": str(self.s),
            "a": str(self.a),
            "bands": [band.to_row() for band in self.bands],
            "tail_sums": {str(k): v.to_dict() for k, v in self.tail_sums.items()},
            "predicted_ratio": self.predicted_ratio.to_dict(),
            "summable": self.summable,
            "intervals": len(self.intervals),
            "intervals_truncated": self.intervals_truncated,
        }


@dataclass(frozen=True)
class DirInterval:
    """Interval I(w) of directions centered at the inverse slope of w, of length 4/|w|^(r+1)"""

    slit: HolVec
    r: Fraction
    center: Enclosure
    length: Enclosure

    def to_dict(self) -> Dict:
        return {
            "slit": self.slit.to_dict(),
            "r": str(self.r),
            "center": self.center.to_dict(),
            "length": self.length.to_dict(),
        }


@dataclass
class DimEstimate:
    """Local dimension d_j by the closed form and by the defining quotient"""

    j: int
    m_j: Enclosure
    eps_j: Enclosure
    d_closed: Enclosure
    d_direct: Enclosure
    num_term: Enclosure
    den_term: Enclosure
    agree: Optional[bool]

    def to_row(self) -> Dict:
        return {
            "j": self.j,
            "m_j": self.m_j.mid,
            "eps_j": self.eps_j.mid,
            "d_j_closed_lo": self.d_closed.lo,
            "d_j_closed_hi": self.d_closed.hi,
            "d_j_direct_lo": self.d_direct.lo,
            "d_j_direct_hi": self.d_direct.hi,
            "num_term": self.num_term.mid,
            "den_term": self.den_term.mid,
            "agree": self.agree,
        }


@dataclass
class FalconerEstimate:
    """Falconer quotients per level with the tail-half minimum as liminf proxy"""

    terms: Dict[int, Optional[Enclosure]]
    d_terms: Dict[int, Optional[Enclosure]]
    proxy: Optional[Enclosure]
    products_to_zero: Optional[bool]
    eps_decreasing: bool

    def to_dict(self) -> Dict:
        return {
            "terms": {str(j): (t.to_dict() if t else None) for j, t in self.terms.items()},
            "d_terms": {str(j): (t.to_dict() if t else None) for j, t in self.d_terms.items()},
            "liminf_proxy": self.proxy.to_dict() if self.proxy else None,
            "products_to_zero": self.products_to_zero,
            "eps_decreasing": self.eps_decreasing,
        }
