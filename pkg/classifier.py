import logging
from enum import Enum
from typing import List, Optional, Sequence

from pydantic import BaseModel, model_validator

from meander import check_permutation

logger = logging.getLogger(__name__)


class PrimeVariant(str, Enum):
    PAPER = "paper"
    STRICT = "strict"


class IntervalWindow(BaseModel):
    k1: int
    k2: int
    span: int

    @property
    def width(self) -> int:
        return self.k2 - self.k1

    @property
    def is_interval(self) -> bool:
        return self.span == self.k2 - self.k1


class ClassificationRecord(BaseModel):
    perm: List[int]
    order: int
    irreducible: bool
    prime: bool
    prime_variant: PrimeVariant
    witness: Optional[IntervalWindow] = None
    prime_witness: Optional[int] = None

    @model_validator(mode="after")
    def _witness_matches_verdict(self):
        if self.irreducible == (self.witness is not None):
            raise ValueError("Irreducibility witness must be present exactly when reducible")
        if self.prime == (self.prime_witness is not None):
            raise ValueError("Prime witness must be present exactly when not prime")
        return self

    def to_json(self) -> dict:
        data = self.model_dump(mode="json", exclude={"prime_witness"})
        if self.witness is not None:
            data["witness"] = {"k1": self.witness.k1, "k2": self.witness.k2}
        return data


def interval_windows(values: Sequence[int]) -> List[IntervalWindow]:
    """All windows (k1, k2), 1-based, whose values form a run of consecutive integers."""
    windows = []
    n = len(values)
    for k1 in range(1, n + 1):
        lo = hi = values[k1 - 1]
        for k2 in range(k1 + 1, n + 1):
            v = values[k2 - 1]
            if v < lo:
                lo = v
            elif v > hi:
                hi = v
            if hi - lo == k2 - k1:
                windows.append(IntervalWindow(k1=k1, k2=k2, span=hi - lo))
    return windows


def reducing_window(values: Sequence[int]) -> Optional[IntervalWindow]:
    """First proper interval window of width 3..n-2, or None.

    The full window (1, n) always has span n-1, so it is excluded; windows of
    width at most 2 never count."""
    n = len(values)
    for k1 in range(1, n + 1):
        lo = hi = values[k1 - 1]
        for k2 in range(k1 + 1, min(n, k1 + n - 2) + 1):
            v = values[k2 - 1]
            if v < lo:
                lo = v
            elif v > hi:
                hi = v
            width = k2 - k1
            if width >= 3 and hi - lo == width:
                return IntervalWindow(k1=k1, k2=k2, span=width)
    return None


def is_irreducible(values: Sequence[int]) -> bool:
    return reducing_window(values) is None


def low_block_prefix(values: Sequence[int], first: int = 1) -> Optional[int]:
    """Smallest k in [first, n-1] with {a_1..a_k} = {1..k}, or None."""
    hi = 0
    for k in range(1, len(values)):
        hi = max(hi, values[k - 1])
        if hi == k and k >= first:
            return k
    return None


def prime_witness(values: Sequence[int], variant: PrimeVariant = PrimeVariant.PAPER) -> Optional[int]:
    if PrimeVariant(variant) is PrimeVariant.STRICT:
        return low_block_prefix(values)
    if values[0] == 1:
        return None
    return low_block_prefix(values, first=2)


def is_prime(values: Sequence[int], variant: PrimeVariant = PrimeVariant.PAPER) -> bool:
    return prime_witness(values, variant) is None


def classify(values: Sequence[int], variant: PrimeVariant = PrimeVariant.PAPER) -> ClassificationRecord:
    check_permutation(values)
    window = reducing_window(values)
    split = prime_witness(values, variant)
    return ClassificationRecord(
        perm=list(values),
        order=len(values),
        irreducible=window is None,
        prime=split is None,
        prime_variant=PrimeVariant(variant),
        witness=window,
        prime_witness=split,
    )
