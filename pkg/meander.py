"""
Open and closed meanders as permutations.

An open meander of order n is stored as the sequence (a_1, ..., a_n): the road
meets the river at crossings labelled 1..n from left to right, and a_i is the
river label of the i-th crossing along the road. The road enters from the upper
side, so segment i (from a_i to a_{i+1}) lies below the river when i is odd and
above it when i is even.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

logger = logging.getLogger(__name__)

Perm = Tuple[int, ...]
Arc = Tuple[int, int]


class MeanderError(ValueError):
    pass


class MalformedPermutationError(MeanderError):
    pass


class MalformedMatchingError(MeanderError):
    pass


class ConcatenationError(MeanderError):
    pass


class Side(str, Enum):
    UPPER = "upper"
    LOWER = "lower"

    @property
    def opposite(self) -> "Side":
        return Side.LOWER if self is Side.UPPER else Side.UPPER


class Symmetry(str, Enum):
    ROAD_REVERSE = "roadReverse"
    RIVER_REVERSE = "riverReverse"


class SymmetryConvention(str, Enum):
    RAW = "raw"
    EVEN_ROAD_REVERSAL = "even-reversal"


@dataclass(frozen=True)
class MeanderPermutation:
    values: Perm

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        check_permutation(self.values)

    @property
    def order(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __str__(self):
        return format_permutation(self.values)


@dataclass(frozen=True)
class Ray:
    point: int
    side: Side


@dataclass(frozen=True)
class ArchDiagram:
    order: int
    upper_arcs: Tuple[Arc, ...]
    lower_arcs: Tuple[Arc, ...]
    entry_ray: Ray
    exit_ray: Ray

    def arcs_on(self, side: Side) -> Tuple[Arc, ...]:
        return self.upper_arcs if side is Side.UPPER else self.lower_arcs

    def crossing_pairs(self, side: Side) -> List[Tuple[Arc, Arc]]:
        """Pairs of same-side arcs that interleave (violation V1)."""
        arcs = self.arcs_on(side)
        return [(s, t) for s, t in combinations(arcs, 2) if _interleave(s, t)]

    def covering_arcs(self, ray: Ray) -> List[Arc]:
        """Same-side arcs strictly covering the base point of a ray (violation V2)."""
        return [(p, q) for p, q in self.arcs_on(ray.side) if p < ray.point < q]

    def violations(self) -> Dict[str, list]:
        found: Dict[str, list] = {}
        v1 = self.crossing_pairs(Side.UPPER) + self.crossing_pairs(Side.LOWER)
        if v1:
            found["V1"] = v1
        v2 = [("entry", arc) for arc in self.covering_arcs(self.entry_ray)]
        v2 += [("exit", arc) for arc in self.covering_arcs(self.exit_ray)]
        if v2:
            found["V2"] = v2
        return found

    def is_planar(self) -> bool:
        return not self.violations()


@dataclass(frozen=True)
class OpenMeander:
    perm: MeanderPermutation

    def __post_init__(self):
        if not validate(self.perm.values):
            raise MeanderError(f"Not a meandric permutation: {self.perm}")

    @classmethod
    def of(cls, values: Iterable[int]) -> "OpenMeander":
        return cls(MeanderPermutation(tuple(values)))

    @property
    def values(self) -> Perm:
        return self.perm.values

    @property
    def order(self) -> int:
        return self.perm.order


@dataclass(frozen=True)
class ClosedMeander:
    half_order: int
    upper_matching: Tuple[Arc, ...]
    lower_matching: Tuple[Arc, ...]

    def __post_init__(self):
        if not is_closed_meander(self.upper_matching, self.lower_matching):
            raise MeanderError("Matchings do not form a single closed curve")


@dataclass
class ConcatResult:
    meander: OpenMeander
    branch: str
    metadata: dict = field(default_factory=dict)


def check_permutation(values: Sequence[int]) -> None:
    n = len(values)
    if n == 0:
        raise MalformedPermutationError("Empty permutation")
    if sorted(values) != list(range(1, n + 1)):
        raise MalformedPermutationError(f"Not a permutation of 1..{n}: {tuple(values)}")


def parse_permutation(text: str) -> Perm:
    """Parse "3,2,1" or "(3, 2, 1)" into a tuple."""
    body = text.strip()
    if body.startswith("(") and body.endswith(")"):
        body = body[1:-1]
    try:
        values = tuple(int(part) for part in body.split(",") if part.strip())
    except ValueError as e:
        raise MalformedPermutationError(f"Cannot parse permutation {text!r}: {e}")
    check_permutation(values)
    return values


def format_permutation(values: Sequence[int]) -> str:
    return ",".join(str(v) for v in values)


def segment_side(i: int) -> Side:
    """Side of road segment i (1-based), joining the i-th and (i+1)-th crossings."""
    return Side.LOWER if i % 2 == 1 else Side.UPPER


def _interleave(s: Arc, t: Arc) -> bool:
    (p, q), (r, u) = s, t
    return p < r < q < u or r < p < u < q


def arch_diagram(values: Sequence[int]) -> ArchDiagram:
    check_permutation(values)
    n = len(values)
    upper: List[Arc] = []
    lower: List[Arc] = []
    for i in range(1, n):
        arc = tuple(sorted((values[i - 1], values[i])))
        (lower if segment_side(i) is Side.LOWER else upper).append(arc)
    return ArchDiagram(
        order=n,
        upper_arcs=tuple(upper),
        lower_arcs=tuple(lower),
        entry_ray=Ray(values[0], Side.UPPER),
        exit_ray=Ray(values[-1], segment_side(n)),
    )


def validate(values: Sequence[int]) -> bool:
    """True iff arcs on each side are noncrossing (V1) and neither ray is covered (V2)."""
    check_permutation(values)
    n = len(values)
    # mates[side][x] is the other end of the arc at x on that side, 0 if none
    mates = ([0] * (n + 2), [0] * (n + 2))
    for i in range(1, n):
        p, q = values[i - 1], values[i]
        lo, hi = (p, q) if p < q else (q, p)
        side = mates[i % 2]
        for x in range(lo + 1, hi):
            m = side[x]
            if m and (m < lo or m > hi):
                return False
        side[lo], side[hi] = hi, lo
    # index 0 holds upper arcs (even segments), index 1 lower arcs
    return not _covered(mates[0], values[0]) and not _covered(mates[n % 2], values[-1])


def _covered(mates: List[int], point: int) -> bool:
    return any(m > point for m in mates[1:point])


def apply_symmetry(values: Sequence[int], op: Symmetry) -> Perm:
    op = Symmetry(op)
    if op is Symmetry.ROAD_REVERSE:
        return tuple(reversed(values))
    n = len(values)
    return tuple(n + 1 - v for v in values)


def road_reverse(values: Sequence[int]) -> Perm:
    return apply_symmetry(values, Symmetry.ROAD_REVERSE)


def river_reverse(values: Sequence[int]) -> Perm:
    return apply_symmetry(values, Symmetry.RIVER_REVERSE)


def canonicalize(values: Sequence[int], convention: SymmetryConvention) -> Perm:
    values = tuple(values)
    if SymmetryConvention(convention) is SymmetryConvention.RAW or len(values) % 2 == 1:
        return values
    return min(values, road_reverse(values))


def is_admissible(values: Sequence[int]) -> bool:
    """Boundary condition of the disk picture: the road's far end shares a boundary
    component with the river's far end. Holds for odd orders, and for even orders
    exactly when the exit ray lies to the right of the entry ray."""
    return len(values) % 2 == 1 or values[0] < values[-1]


def _append(p: Perm, q: Perm) -> Perm:
    shift = len(p)
    return p + tuple(b + shift for b in q)


def concatenate(p: OpenMeander, q: OpenMeander) -> ConcatResult:
    a, b = p.values, q.values
    candidates = (
        ("plain", a, b),
        ("mirrored-right", a, river_reverse(b)),
        ("mirrored-left", road_reverse(a), b),
        ("mirrored-both", road_reverse(a), river_reverse(b)),
    )
    for branch, left, right in candidates:
        joined = _append(left, right)
        if validate(joined):
            if branch != "plain":
                logger.debug(f"Concatenation of {format_permutation(a)} and {format_permutation(b)} used {branch}")
            return ConcatResult(OpenMeander.of(joined), branch, {"left": left, "right": right})
    raise ConcatenationError(f"No concatenation variant validates for {a} + {b}")


def _check_matching(pairs: Iterable[Sequence[int]], size: int) -> Dict[int, int]:
    mate: Dict[int, int] = {}
    for pair in pairs:
        if len(pair) != 2 or pair[0] == pair[1]:
            raise MalformedMatchingError(f"Bad pair {tuple(pair)}")
        for x, y in (pair, pair[::-1]):
            if not 1 <= x <= size:
                raise MalformedMatchingError(f"Point {x} outside 1..{size}")
            if x in mate:
                raise MalformedMatchingError(f"Point {x} appears in two pairs")
            mate[x] = y
    return mate


def _is_noncrossing(mate: Dict[int, int]) -> bool:
    stack: List[int] = []
    for x in sorted(mate):
        if mate[x] > x:
            stack.append(x)
        elif not stack or stack.pop() != mate[x]:
            return False
    return True


def is_closed_meander(upper: Iterable[Sequence[int]], lower: Iterable[Sequence[int]]) -> bool:
    upper, lower = list(upper), list(lower)
    points = {x for pair in upper + lower for x in pair}
    if not points:
        return False
    size = max(points)
    if size % 2 == 1:
        size += 1
    up = _check_matching(upper, size)
    down = _check_matching(lower, size)
    if len(up) != size or len(down) != size:
        return False
    if not (_is_noncrossing(up) and _is_noncrossing(down)):
        return False
    return is_single_cycle(up, down, size)


def noncrossing_matchings(size: int) -> Iterator[List[int]]:
    """Yield every noncrossing perfect matching of 1..size as a mate list (index 0 unused)."""
    mate = [0] * (size + 1)

    def fill(lo: int, hi: int) -> Iterator[None]:
        if lo > hi:
            yield
            return
        for partner in range(lo + 1, hi + 1, 2):
            mate[lo], mate[partner] = partner, lo
            for _ in fill(lo + 1, partner - 1):
                yield from fill(partner + 1, hi)

    for _ in fill(1, size):
        yield list(mate)


def matching_pairs(mate: Sequence[int]) -> Tuple[Arc, ...]:
    return tuple((x, mate[x]) for x in range(1, len(mate)) if mate[x] > x)


def closed_meanders(half_order: int) -> Iterator[ClosedMeander]:
    size = 2 * half_order
    matchings = list(noncrossing_matchings(size))
    for up in matchings:
        for down in matchings:
            if is_single_cycle(up, down, size):
                yield ClosedMeander(half_order, matching_pairs(up), matching_pairs(down))


def is_single_cycle(up, down, size: int) -> bool:
    """True if alternating up and down partners from point 1 visits all `size` points; mates are lists or dicts."""
    length, x = 0, 1
    while True:
        x = down[up[x]]
        length += 2
        if x == 1:
            return length == size


if __name__ == "__main__":
    import sys

    if len(sys.argv) < 2:
        print("Usage: python meander.py <permutation>")
        sys.exit(1)

    perm = parse_permutation(sys.argv[1])
    diagram = arch_diagram(perm)
    print(f"Upper arcs: {diagram.upper_arcs}")
    print(f"Lower arcs: {diagram.lower_arcs}")
    print(f"Valid: {validate(perm)}")
