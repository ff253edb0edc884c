"""Exact-exponent arithmetic for cascade scale sequences.

The cascade recursion a_{q+1} = a_q^(1+delta) underflows double precision
within a dozen levels once a_0 is small, and the derived viscosities carry
exponents like 2 - gamma/(1+delta) + 4 eps that must survive the same
treatment.  Every scale-like quantity is therefore carried as a natural
logarithm.  Powers and products act on the logarithm (exact up to one
floating operation each) and conversion to an ordinary float happens only
at solver boundaries, where `to_float` refuses values outside the
representable range.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

LN_MIN = math.log(sys.float_info.min)
LN_MAX = math.log(sys.float_info.max)


@dataclass(frozen=True, order=True)
class LogVal:
    """A positive real number stored as its natural logarithm."""

    ln: float

    @classmethod
    def of(cls, x: float) -> "LogVal":
        if not x > 0.0:
            raise ValueError(f"LogVal requires a positive value, got {x!r}")
        return cls(math.log(x))

    def pow(self, exponent: float) -> "LogVal":
        return LogVal(self.ln * exponent)

    def __mul__(self, other: "LogVal") -> "LogVal":
        return LogVal(self.ln + other.ln)

    def __truediv__(self, other: "LogVal") -> "LogVal":
        return LogVal(self.ln - other.ln)

    @property
    def log10(self) -> float:
        return self.ln / math.log(10.0)

    @property
    def representable(self) -> bool:
        """Whether the value fits in a normal double."""
        return LN_MIN < self.ln < LN_MAX

    def to_float(self, strict: bool = True) -> float:
        """Materialize as a float; reject under/overflow unless strict=False."""
        if not self.representable:
            if strict:
                raise OverflowError(
                    f"value exp({self.ln:.6g}) is outside the double range; "
                    "reduce the cascade depth Q or increase a0"
                )
            return 0.0 if self.ln <= LN_MIN else math.inf
        return math.exp(self.ln)
