"""
Enumerations shared across the pipeline
"""

import enum


class Mode(enum.Enum):
    """Parameter provenance mode"""
    STRICT = "strict"
    RELAXED = "relaxed"


class SpecKind(enum.Enum):
    """λ-spec kinds accepted by the grammar"""
    CF = "cf"
    PERIODIC = "periodic"
    GAPS = "gaps"
    RATIONAL = "rational"
    HOMOGRAPHIC = "hom"


class Exactness(enum.Enum):
    """Whether a quantity was computed from exact integers or log surrogates"""
    EXACT = "exact"
    LOG_DOMAIN = "log_domain"


class VecKind(enum.Enum):
    """Holonomy vector kinds"""
    LOOP = "loop"
    SLIT = "slit"


class ZKind(enum.Enum):
    """Members of the Z set used for Z-expansions"""
    V0 = "V0"
    V2 = "V2"
    V0_V2 = "V0+V2"


class Region(enum.Enum):
    """Per-level construction region of the slit tree"""
    INITIAL = "initial"
    LIOUVILLE = "liouville"
    DIOPHANTINE = "diophantine"
    BOUNDED = "bounded"
    TRANSITION = "transition"


class Verdict(enum.Enum):
    """Tri-state decision outcome"""
    TRUE = "true"
    FALSE = "false"
    UNCERTAIN = "uncertain"

    @classmethod
    def of(cls, value):
        if value is None:
            return cls.UNCERTAIN
        return cls.TRUE if value else cls.FALSE


class CertificateStatus(enum.Enum):
    """Nonergodicity certificate check outcome"""
    ACCEPTED = "accepted"
    REJECTED = "rejected"


class MinAreaCase(enum.Enum):
    """Case split of the minimal-area check"""
    LARGE_AREA = "i"
    LIOUVILLE_CONVERGENT = "ii"


class LambdaMode(enum.Enum):
    """Child range for the Liouville construction"""
    RANGE = "range"
    WINDOW = "window"


class Ordering(enum.Enum):
    """Result of comparing two elements of Z + Zλ"""
    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"
