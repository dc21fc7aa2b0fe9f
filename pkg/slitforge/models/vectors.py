"""
Holonomy value types: elements of Z + Zλ and vectors in (Z + Zλ) × Z
"""

from dataclasses import dataclass
from math import gcd
from typing import Dict

from slitforge.models.enums import VecKind


@dataclass(frozen=True)
class LambdaLinear:
    """Exact element s + t·λ of Z + Zλ"""

    s: int
    t: int = 0

    def __add__(self, other: "LambdaLinear") -> "LambdaLinear":
        return LambdaLinear(self.s + other.s, self.t + other.t)

    def __sub__(self, other: "LambdaLinear") -> "LambdaLinear":
        return LambdaLinear(self.s - other.s, self.t - other.t)

    def __neg__(self) -> "LambdaLinear":
        return LambdaLinear(-self.s, -self.t)

    def __mul__(self, k: int) -> "LambdaLinear":
        return LambdaLinear(self.s * k, self.t * k)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return self.s == 0 and self.t == 0

    def to_dict(self) -> Dict[str, int]:
        return {"s": self.s, "t": self.t}

    @classmethod
    def from_dict(cls, data: Dict[str, int]) -> "LambdaLinear":
        return cls(int(data["s"]), int(data["t"]))

    def __str__(self) -> str:
        if self.t == 0:
            return str(self.s)
        lam = "λ" if abs(self.t) == 1 else f"{abs(self.t)}λ"
        if self.s == 0:
            return lam if self.t > 0 else f"-{lam}"
        sign = "+" if self.t > 0 else "-"
        return f"{self.s}{sign}{lam}"


ZERO = LambdaLinear(0, 0)


@dataclass(frozen=True)
class HolVec:
    """Holonomy vector (x, y) with x in Z + Zλ and integer height carrier y"""

    x: LambdaLinear
    y: int

    @classmethod
    def loop(cls, p: int, q: int) -> "HolVec":
        return cls(LambdaLinear(p, 0), q)

    @classmethod
    def slit(cls, m: int, n: int) -> "HolVec":
        return cls(LambdaLinear(m, 1), n)

    @property
    def height(self) -> int:
        """|v|: absolute value of the y-coordinate"""
        return abs(self.y)

    @property
    def is_loop(self) -> bool:
        return self.x.t == 0 and gcd(self.x.s, self.y) == 1

    @property
    def is_slit(self) -> bool:
        return abs(self.x.t) == 1

    @property
    def is_positive_slit(self) -> bool:
        """V1^+ membership: (λ+m, n) with n > 0, or (λ, 0)"""
        return self.x.t == 1 and (self.y > 0 or (self.y == 0 and self.x.s == 0))

    @property
    def is_separating(self) -> bool:
        return self.is_slit and self.x.s % 2 == 0 and self.y % 2 == 0

    @property
    def kind(self) -> VecKind:
        if self.is_slit:
            return VecKind.SLIT
        if self.is_loop:
            return VecKind.LOOP
        raise ValueError(f"{self} is neither a loop nor a slit")

    @property
    def m(self) -> int:
        return self.x.s

    @property
    def n(self) -> int:
        return self.y

    def normalized(self) -> "HolVec":
        """Orient slits into V1^+ and loops to nonnegative height."""
        if self.is_slit and self.x.t == -1:
            return -self
        if not self.is_slit and (self.y < 0 or (self.y == 0 and self.x.s < 0)):
            return -self
        return self

    def __add__(self, other: "HolVec") -> "HolVec":
        return HolVec(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "HolVec") -> "HolVec":
        return HolVec(self.x - other.x, self.y - other.y)

    def __neg__(self) -> "HolVec":
        return HolVec(-self.x, -self.y)

    def __mul__(self, k: int) -> "HolVec":
        return HolVec(self.x * k, self.y * k)

    __rmul__ = __mul__

    def to_dict(self) -> Dict:
        if self.is_slit:
            return {"m": self.x.s, "n": self.y, "kind": VecKind.SLIT.value}
        return {"p": self.x.s, "q": self.y}

    @classmethod
    def from_dict(cls, data: Dict) -> "HolVec":
        if "m" in data:
            return cls.slit(int(data["m"]), int(data["n"]))
        return cls.loop(int(data["p"]), int(data["q"]))

    def __str__(self) -> str:
        return f"({self.x}, {self.y})"


@dataclass(frozen=True)
class TwistWitness:
    """Loop v and order b with w' = w + b·v"""

    v: HolVec
    b: int
    side: str = ""

    def to_dict(self) -> Dict:
        return {"v": self.v.to_dict(), "b": self.b, "side": self.side}
