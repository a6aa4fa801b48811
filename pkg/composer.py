"""
Meander-building operations: inserts, trefoil splicing, prime closure and the
construction of irreducible meanders from arbitrary ones.
"""

import json
import logging
import random
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from math import comb
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set

from pydantic import BaseModel

from classifier import PrimeVariant, is_irreducible, is_prime
from enumerator import enumerate_open
from meander import (
    MeanderError,
    OpenMeander,
    Perm,
    SymmetryConvention,
    canonicalize,
    format_permutation,
    is_admissible,
    river_reverse,
    road_reverse,
    validate,
)

logger = logging.getLogger(__name__)

FRAMES_PATH = Path(__file__).parent / "data" / "irreducible_frames.json"
TREFOIL: Perm = (3, 2, 1)


class InsertError(MeanderError):
    pass


class ConstructionError(MeanderError):
    pass


class InjectivityError(MeanderError):
    pass


class InsertMode(str, Enum):
    LITERAL = "literal"
    SPLICE = "splice"


class ConstructionVariant(str, Enum):
    PLUS32 = "plus32"
    PLUS35 = "plus35"

    @classmethod
    def parse(cls, text: str) -> "ConstructionVariant":
        text = str(text).strip().lower()
        return cls("plus" + text) if text in ("32", "35") else cls(text)

    def target_order(self, n: int) -> int:
        return 2 * n + (32 if self is ConstructionVariant.PLUS32 else 35)


@dataclass(frozen=True)
class InsertSpec:
    host: OpenMeander
    guest: OpenMeander
    position: int


@dataclass
class InsertResult:
    meander: OpenMeander
    branch: str

    @property
    def values(self) -> Perm:
        return self.meander.values


class ConstructionChecks(BaseModel):
    valid: bool
    order: bool
    irreducible: bool


class ConstructionRecord(BaseModel):
    input: List[int]
    variant: ConstructionVariant
    output: List[int]
    branch: str
    checks: ConstructionChecks


class InjectionReport(BaseModel):
    n: int
    k: float
    subset_size: int
    target_order: int
    hosts: int
    images: int
    distinct_images: int
    cross_host_collisions: int
    expected: int
    sampled: bool


def _shift_above(values: Sequence[int], threshold: int, amount: int, inclusive: bool = False) -> List[int]:
    if inclusive:
        return [v + amount if v >= threshold else v for v in values]
    return [v + amount if v > threshold else v for v in values]


def _literal_candidates(a: Perm, b: Perm, k: int):
    m = len(b)
    ak = a[k - 1]
    for label, guest in (("literal", b), ("reversed-guest", road_reverse(b))):
        shifted = _shift_above(a, ak, m)
        block = [ak + x for x in guest]
        yield label, tuple(shifted[:k] + block + shifted[k:])
    for label, guest in (("left", b), ("left-reversed-guest", road_reverse(b))):
        shifted = _shift_above(a, ak, m, inclusive=True)
        block = [ak - 1 + x for x in guest]
        yield label, tuple(shifted[:k] + block + shifted[k:])


def splice(host: Sequence[int], guest: Sequence[int], k: int) -> Perm:
    """Replace the crossing at road position k by the guest meander."""
    a, m = tuple(host), len(guest)
    ak = a[k - 1]
    shifted = _shift_above(a, ak, m - 1)
    return tuple(shifted[: k - 1] + [ak - 1 + x for x in guest] + shifted[k:])


def insert_odd(spec: InsertSpec, mode: InsertMode = InsertMode.LITERAL) -> InsertResult:
    a, b, k = spec.host.values, spec.guest.values, spec.position
    n, m = len(a), len(b)
    if m % 2 == 0:
        raise InsertError(f"Odd insert needs a guest of odd order, got {m}")
    if not 1 <= k <= n:
        raise InsertError(f"Position {k} outside 1..{n}")

    if InsertMode(mode) is InsertMode.SPLICE:
        return InsertResult(OpenMeander.of(splice(a, b, k)), "splice")

    for branch, values in _literal_candidates(a, b, k):
        if validate(values):
            if branch != "literal":
                logger.debug(f"Odd insert at {k} into {format_permutation(a)} used {branch}")
            return InsertResult(OpenMeander.of(values), branch)
    raise InsertError(
        f"No reading of the odd insert of {format_permutation(b)} at position {k} "
        f"of {format_permutation(a)} is a meander"
    )


def insert_even(spec: InsertSpec) -> InsertResult:
    a, b, k = spec.host.values, spec.guest.values, spec.position
    n, m = len(a), len(b)
    if m % 2 == 1:
        raise InsertError(f"Even insert needs a guest of even order, got {m}")
    if not 1 <= k < n:
        raise InsertError(f"Position {k} outside 1..{n - 1}")
    ak, ak1 = a[k - 1], a[k]
    if abs(ak - ak1) != 1:
        raise InsertError(f"Crossings {ak} and {ak1} at positions {k}, {k + 1} are not adjacent on the river")

    printed = b if ak < ak1 else road_reverse(b)
    shifted = _shift_above(a, ak, m)
    for branch, guest in (("literal", printed), ("reoriented", road_reverse(printed))):
        values = tuple(shifted[:k] + [ak + x for x in guest] + shifted[k:])
        if validate(values):
            return InsertResult(OpenMeander.of(values), branch)
    raise InsertError(f"Neither orientation of {format_permutation(b)} fits at position {k}")


def trefoil_block(host: Sequence[int], j: int) -> Perm:
    """Order-3 block spliced at road position j: turned against the road's next move."""
    if j < len(host) and host[j] < host[j - 1]:
        return (1, 2, 3)
    return TREFOIL


def splice_trefoils(host: Sequence[int], crossings: Iterable[int]) -> Perm:
    chosen = set(crossings)
    below = sorted(chosen)
    out: List[int] = []
    for j, v in enumerate(host, 1):
        base = v + 2 * sum(1 for s in below if s < v)
        if v in chosen:
            out.extend(base - 1 + x for x in trefoil_block(host, j))
        else:
            out.append(base)
    return tuple(out)


def insert_trefoil_set(
    host: OpenMeander, crossings: Iterable[int], mode: InsertMode = InsertMode.SPLICE
) -> InsertResult:
    """Put an order-3 block at each crossing value in `crossings`.

    The default SPLICE mode replaces each chosen crossing by a turned block,
    giving order n + 2|S|. LITERAL mode instead runs the literal odd insert of
    (3,2,1) at each chosen value from the largest down, giving order n + 3|S|;
    for host (1,2) and S = {1, 2} that is (1,4,3,2,5,8,7,6), while SPLICE gives
    (3,2,1,6,5,4).
    """
    chosen = set(crossings)
    n = host.order
    stray = [v for v in chosen if not 1 <= v <= n]
    if stray:
        raise InsertError(f"Not crossing values of an order-{n} meander: {sorted(stray)}")

    if InsertMode(mode) is InsertMode.SPLICE:
        return InsertResult(OpenMeander.of(splice_trefoils(host.values, chosen)), "splice")

    current = host
    guest = OpenMeander.of(TREFOIL)
    for v in sorted(chosen, reverse=True):
        # values below v are never shifted, so v is still at its original label
        k = current.values.index(v) + 1
        current = insert_odd(InsertSpec(current, guest, k)).meander
    return InsertResult(current, "literal")


def prime_closure(meander: OpenMeander) -> InsertResult:
    def closed(values: Perm) -> Perm:
        n = len(values)
        body = tuple(v + 2 for v in values)
        return body + ((2, 1) if n % 2 == 1 else (n + 3, 2, 1))

    for branch, values in (("literal", meander.values), ("mirrored", river_reverse(meander.values))):
        result = closed(values)
        if validate(result) and is_prime(result, PrimeVariant.PAPER):
            if branch == "mirrored":
                logger.debug(f"Prime closure of {format_permutation(meander.values)} needed the mirrored branch")
            return InsertResult(OpenMeander.of(result), branch)
    raise ConstructionError(f"Prime closure failed for {format_permutation(meander.values)}")


def load_frames(path: Path = FRAMES_PATH) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _partner(x: int) -> int:
    return x + 1 if x % 2 == 1 else x - 1


def double_road(values: Sequence[int]) -> Perm:
    """Replace the road by a thin band: out along one edge, a U-turn at the end, back along the other."""
    forward = [2 * v - 1 if i % 2 == 1 else 2 * v for i, v in enumerate(values, 1)]
    return tuple(forward + [_partner(x) for x in reversed(forward)])


def build_irreducible(
    meander: OpenMeander, variant: ConstructionVariant, frames: Optional[dict] = None
) -> ConstructionRecord:
    variant = ConstructionVariant(variant)
    frames = frames or load_frames()
    a = meander.values
    n = len(a)
    branch = "literal"
    if not is_admissible(a):
        a = road_reverse(a)
        branch = "mirrored"
    frame = frames["frames"]["odd" if n % 2 == 1 else "even"]
    seed = frames["seed"]

    extra = frame["extra_crossing"]
    skeleton = _shift_above(seed, extra, 1, inclusive=True)
    skeleton += [len(seed) + 1 + v for v in a] + [extra]
    result = double_road(skeleton)

    if variant is ConstructionVariant.PLUS35:
        pivot = frame["tail_pivot"]
        body = _shift_above(result, pivot, 2, inclusive=True)
        result = tuple(body + [len(body) + 3, pivot + 1, pivot])

    checks = ConstructionChecks(
        valid=validate(result),
        order=len(result) == variant.target_order(n),
        irreducible=is_irreducible(result),
    )
    failed = [name for name, ok in checks.model_dump().items() if not ok]
    if failed:
        raise ConstructionError(
            f"Construction {variant.value} from {format_permutation(meander.values)} failed check(s): {', '.join(failed)}"
        )
    return ConstructionRecord(
        input=list(meander.values), variant=variant, output=list(result), branch=branch, checks=checks
    )


def injection_image(
    n: int,
    k: Optional[float] = None,
    hosts: Optional[Sequence[Perm]] = None,
    subset_size: Optional[int] = None,
    max_images: int = 200_000,
    seed: int = 0,
) -> InjectionReport:
    """Splice (3,2,1) blocks at every floor(n/k)-subset of crossings of every
    irreducible meander of order n and certify that the images are meanders
    and that different subsets of one host give different images."""
    if subset_size is None:
        if k is None or k <= 1:
            raise ValueError(f"k must exceed 1, got {k}")
        subset_size = int(n // k)
    elif not 0 <= subset_size <= n:
        raise ValueError(f"Subset size {subset_size} outside 0..{n}")
    if hosts is None:
        hosts = [
            p
            for p in enumerate_open(n)
            if canonicalize(p, SymmetryConvention.EVEN_ROAD_REVERSAL) == p and is_irreducible(p)
        ]
    size = subset_size
    expected = comb(n, size) * len(hosts)
    sampled = expected > max_images
    rng = random.Random(seed)
    per_host = max(1, max_images // max(1, len(hosts)))

    seen: Dict[Perm, Perm] = {}
    images = 0
    for host in hosts:
        if sampled:
            subsets = {tuple(sorted(rng.sample(range(1, n + 1), size))) for _ in range(per_host)}
        else:
            subsets = combinations(range(1, n + 1), size)
        mine: Set[Perm] = set()
        for subset in subsets:
            image = splice_trefoils(host, subset)
            if not validate(image):
                raise InjectivityError(f"Splice of {subset} into {format_permutation(host)} is not a meander")
            if image in mine:
                raise InjectivityError(
                    f"Two subsets of crossings of {format_permutation(host)} give {format_permutation(image)}"
                )
            mine.add(image)
            images += 1
            seen.setdefault(image, host)
    distinct = len(seen)
    if distinct < images:
        logger.info(f"{images - distinct} spliced images of order {n + 2 * size} coincide across different hosts")
    return InjectionReport(
        n=n,
        k=k if k is not None else (n / size if size else float("inf")),
        subset_size=size,
        target_order=n + 2 * size,
        hosts=len(hosts),
        images=images,
        distinct_images=distinct,
        cross_host_collisions=images - distinct,
        expected=expected,
        sampled=sampled,
    )
