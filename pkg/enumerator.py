"""
Exhaustive enumeration and counting of open and closed meanders.

The open search walks the road: it places crossings one at a time and keeps
the faces cut out by each side's arcs, so only points sharing a face with the
road's free end are tried, and a prefix is dropped as soon as the unused
points can no longer be threaded through to an exit ray that escapes.
"""

import functools
import json
import logging
import multiprocessing as mp
from datetime import datetime
from itertools import permutations
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from pydantic import BaseModel, Field, model_validator
from tqdm import tqdm

from classifier import PrimeVariant, is_irreducible, is_prime
from meander import (
    MeanderError,
    Perm,
    SymmetryConvention,
    is_single_cycle,
    noncrossing_matchings,
    validate,
)

logger = logging.getLogger(__name__)

ENGINE_VERSION = "faces-3"
REFERENCE_PATH = Path(__file__).parent / "data" / "reference_counts.json"
CSV_HEADER = "order,total,irreducible,prime,irr_ratio"
ORACLE_MAX_ORDER = 8
CLOSED_ORACLE_MAX = 7


class CalibrationError(MeanderError):
    pass


class _Walker:
    """Depth-first walk along the road with the arc faces of both sides kept current.

    label[s][x] is the face of side s containing point x: the innermost arc
    enclosing it, or an outer face (upper: 0 left of the entry ray, 1 right of it;
    lower: 0). The arc drawn from road position i gets face id i + 2. members
    holds each face as a bitmask of points and count the unused points in it.
    A new arc is legal exactly when both ends share a face, so the legal next
    points are one mask lookup.
    """

    def __init__(self, n: int):
        self.n = n
        self.exit_side = n % 2
        self.full = ((1 << (n + 1)) - 1) ^ 1
        self.free = self.full
        self.values: List[int] = []
        self.label = ([0] * (n + 2), [0] * (n + 2))
        self.members = ([0] * (n + 3), [0] * (n + 3))
        self.count = ([0] * (n + 3), [0] * (n + 3))
        self.odd = 0
        self.trail: List[Tuple[int, int, int]] = []

    def _adjust(self, side: int, face: int, delta: int) -> None:
        count = self.count[side]
        if delta & 1:
            self.odd += -1 if count[face] & 1 else 1
        count[face] += delta

    def _start(self, v: int) -> None:
        n = self.n
        upper, lower = self.label
        for x in range(1, n + 1):
            upper[x] = 0 if x < v else 1
            lower[x] = 0
        for group, count in zip(self.members, self.count):
            group[:] = [0] * (n + 3)
            count[:] = [0] * (n + 3)
        left = ((1 << v) - 1) ^ 1
        self.members[0][0], self.members[0][1] = left, self.full ^ left
        self.members[1][0] = self.full
        self.count[0][0], self.count[0][1], self.count[1][0] = v - 1, n - v, n - 1
        self.odd = (v - 1) % 2 + (n - v) % 2 + (n - 1) % 2
        self.free = self.full ^ (1 << v)

    def candidates(self) -> int:
        i = len(self.values)
        if not i:
            return self.full
        side = i & 1
        return self.members[side][self.label[side][self.values[-1]]] & self.free

    def place(self, v: int) -> None:
        i = len(self.values)
        if not i:
            self._start(v)
            self.values.append(v)
            return
        side = i & 1
        u = self.values[-1]
        face = self.label[side][u]
        self.free ^= 1 << v
        self._adjust(0, self.label[0][v], -1)
        self._adjust(1, self.label[1][v], -1)

        lo, hi = (u, v) if u < v else (v, u)
        group = self.members[side]
        moved = group[face] & ((1 << hi) - (1 << (lo + 1)))
        if moved:
            inner = i + 2
            group[face] ^= moved
            group[inner] = moved
            label, rest = self.label[side], moved
            while rest:
                low = rest & -rest
                label[low.bit_length() - 1] = inner
                rest ^= low
            k = bin(moved & self.free).count("1")
            if k:
                self._adjust(side, face, -k)
                self._adjust(side, inner, k)
        self.trail.append((side, face, moved))
        self.values.append(v)

    def unplace(self) -> None:
        v = self.values.pop()
        i = len(self.values)
        if not i:
            self.free = self.full
            return
        side, face, moved = self.trail.pop()
        if moved:
            inner = i + 2
            group = self.members[side]
            k = bin(moved & self.free).count("1")
            if k:
                self._adjust(side, inner, -k)
                self._adjust(side, face, k)
            group[face] |= moved
            group[inner] = 0
            label, rest = self.label[side], moved
            while rest:
                low = rest & -rest
                label[low.bit_length() - 1] = face
                rest ^= low
        self.free |= 1 << v
        self._adjust(0, self.label[0][v], 1)
        self._adjust(1, self.label[1][v], 1)

    def viable(self) -> bool:
        """Necessary condition for completing the current prefix.

        Unused points are edges between their upper and lower faces; the rest of
        the road is a trail through all of them that starts in the free end's face
        and stops in an outer face of the exit side, so at most those two faces
        hold an odd number of unused points.
        """
        i = len(self.values)
        if i == self.n:
            return self.label[self.exit_side][self.values[-1]] < 2
        side = i & 1
        face = self.label[side][self.values[-1]]
        here = self.count[side][face]
        if not here:
            return False
        if self.odd == 0:
            return side == self.exit_side and face < 2
        if self.odd != 2 or not here & 1:
            return False
        exit_count = self.count[self.exit_side]
        outer_odd = (exit_count[0] & 1) + (exit_count[1] & 1)
        if side == self.exit_side and face < 2:
            outer_odd -= 1
        return outer_odd == 1

    def seed(self, prefix: Sequence[int]) -> bool:
        for v in prefix:
            if not 1 <= v <= self.n or not self.candidates() >> v & 1:
                return False
            self.place(v)
        return not prefix or self.viable()

    def walk(self) -> Iterator[Perm]:
        if len(self.values) == self.n:
            yield tuple(self.values)
            return
        rest = self.candidates()
        while rest:
            low = rest & -rest
            rest ^= low
            self.place(low.bit_length() - 1)
            if self.viable():
                yield from self.walk()
            self.unplace()

    def tally(self, halve_even: bool) -> Tuple[int, int]:
        """(raw, canonical) leaf counts below the current prefix, without building tuples."""
        i, n = len(self.values), self.n
        if i == n or (i == n - 1 and i):
            # a viable prefix one short of n has exactly one completion
            last = self.values[-1] if i == n else self.free.bit_length() - 1
            keep = not halve_even or n % 2 == 1 or self.values[0] < last
            return 1, int(keep)
        raw = canonical = 0
        rest = self.candidates()
        while rest:
            low = rest & -rest
            rest ^= low
            self.place(low.bit_length() - 1)
            if self.viable():
                r, c = self.tally(halve_even)
                raw += r
                canonical += c
            self.unplace()
        return raw, canonical

    def frontier(self, depth: int) -> Iterator[Perm]:
        if len(self.values) == depth:
            yield tuple(self.values)
            return
        rest = self.candidates()
        while rest:
            low = rest & -rest
            rest ^= low
            self.place(low.bit_length() - 1)
            if self.viable():
                yield from self.frontier(depth)
            self.unplace()


def enumerate_open(n: int, prefix: Sequence[int] = ()) -> Iterator[Perm]:
    """Every meandric permutation of order n starting with `prefix`, in lexicographic order."""
    if n < 1:
        raise ValueError(f"Order must be at least 1, got {n}")
    walker = _Walker(n)
    if walker.seed(prefix):
        yield from walker.walk()


def brute_force_open(n: int) -> List[Perm]:
    return [p for p in permutations(range(1, n + 1)) if validate(p)]


def feasible_prefixes(n: int, depth: int) -> List[Perm]:
    """Prefixes of length depth that pass the partial arc checks; depth < n."""
    if not 0 <= depth < n:
        raise ValueError(f"Prefix depth {depth} must lie in 0..{n - 1}")
    return list(_Walker(n).frontier(depth))


def is_canonical(values: Sequence[int], convention: SymmetryConvention) -> bool:
    if SymmetryConvention(convention) is SymmetryConvention.RAW or len(values) % 2 == 1:
        return True
    return values[0] < values[-1]


def _count_partition(
    prefix: Perm,
    n: int,
    convention: SymmetryConvention,
    classify: bool,
    variant: PrimeVariant,
) -> Tuple[int, int, int, int]:
    if not classify:
        walker = _Walker(n)
        if not walker.seed(prefix):
            return 0, 0, 0, 0
        halve = SymmetryConvention(convention) is SymmetryConvention.EVEN_ROAD_REVERSAL
        return (*walker.tally(halve), 0, 0)

    raw = canonical = irreducible = prime = 0
    for p in enumerate_open(n, prefix):
        raw += 1
        if not is_canonical(p, convention):
            continue
        canonical += 1
        irreducible += is_irreducible(p)
        prime += is_prime(p, variant)
    return raw, canonical, irreducible, prime


def count_open(n: int, convention: SymmetryConvention = SymmetryConvention.EVEN_ROAD_REVERSAL) -> Tuple[int, int]:
    raw, canonical, _, _ = _count_partition((), n, SymmetryConvention(convention), False, PrimeVariant.PAPER)
    return raw, canonical


def count_classified(
    n: int,
    convention: SymmetryConvention = SymmetryConvention.EVEN_ROAD_REVERSAL,
    variant: PrimeVariant = PrimeVariant.PAPER,
) -> Tuple[int, int]:
    _, _, irreducible, prime = _count_partition((), n, SymmetryConvention(convention), True, PrimeVariant(variant))
    return irreducible, prime


def count_closed(n: int) -> int:
    """Closed meanders with 2n crossings: pairs of noncrossing matchings forming one cycle."""
    if n < 1:
        raise ValueError(f"Half order must be at least 1, got {n}")
    size = 2 * n
    matchings = list(noncrossing_matchings(size))
    return sum(1 for up in matchings for down in matchings if is_single_cycle(up, down, size))


class SearchConfig(BaseModel):
    max_order: int = Field(ge=1)
    prefix_depth: int = Field(default=3, ge=0)
    workers: int = Field(default=1, ge=1)
    convention: SymmetryConvention = SymmetryConvention.EVEN_ROAD_REVERSAL
    classify: bool = True
    prime_variant: PrimeVariant = PrimeVariant.PAPER
    min_order: int = Field(default=1, ge=1)
    progress: bool = False

    @model_validator(mode="after")
    def _depth_below_order(self):
        if self.prefix_depth >= self.max_order:
            raise ValueError(f"prefix_depth ({self.prefix_depth}) must be below max_order ({self.max_order})")
        if self.min_order > self.max_order:
            raise ValueError(f"min_order ({self.min_order}) exceeds max_order ({self.max_order})")
        return self


class CountRow(BaseModel):
    n: int
    convention: SymmetryConvention
    raw: int
    canonical: int
    irreducible: Optional[int] = None
    prime: Optional[int] = None
    engine: str = ENGINE_VERSION

    @model_validator(mode="after")
    def _consistent(self):
        if self.convention is SymmetryConvention.EVEN_ROAD_REVERSAL and self.n % 2 == 0:
            if self.raw != 2 * self.canonical:
                raise ValueError(f"Raw count {self.raw} at even order {self.n} is not twice {self.canonical}")
        for name in ("irreducible", "prime"):
            value = getattr(self, name)
            if value is not None and value > self.canonical:
                raise ValueError(f"{name} count {value} exceeds canonical count {self.canonical}")
        return self

    @property
    def classified(self) -> bool:
        return self.irreducible is not None and self.prime is not None

    @property
    def irr_ratio(self) -> Optional[float]:
        if self.irreducible is None or not self.canonical:
            return None
        return self.irreducible / self.canonical


class CountTable(BaseModel):
    convention: SymmetryConvention
    engine: str = ENGINE_VERSION
    generated_at: datetime = Field(default_factory=datetime.now)
    rows: List[CountRow] = []

    def row(self, n: int) -> CountRow:
        for row in self.rows:
            if row.n == n:
                return row
        raise KeyError(f"No counts for order {n}")

    def has(self, n: int) -> bool:
        return any(row.n == n for row in self.rows)

    def totals(self) -> Dict[int, int]:
        return {row.n: row.canonical for row in self.rows}

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for row in sorted(self.rows, key=lambda r: r.n):
            ratio = row.irr_ratio
            lines.append(
                ",".join(
                    [
                        str(row.n),
                        str(row.canonical),
                        "" if row.irreducible is None else str(row.irreducible),
                        "" if row.prime is None else str(row.prime),
                        "" if ratio is None else f"{ratio:.6f}",
                    ]
                )
            )
        return "\n".join(lines) + "\n"

    def save_csv(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv(), encoding="utf-8")
        logger.info(f"Count table saved: {path}")
        return path


class CountCache:
    """Append-only JSON-lines store of count rows keyed by (n, convention, engine)."""

    def __init__(self, path: Path):
        self.path = Path(path)

    def load(self) -> Dict[Tuple[int, str], CountRow]:
        found: Dict[Tuple[int, str], CountRow] = {}
        if not self.path.exists():
            return found
        with open(self.path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, 1):
                if not line.strip():
                    continue
                try:
                    row = CountRow.model_validate(json.loads(line))
                except (json.JSONDecodeError, ValueError) as e:
                    logger.warning(f"Skipping unreadable cache line {line_no} in {self.path}: {e}")
                    continue
                if row.engine != ENGINE_VERSION:
                    continue
                key = (row.n, row.convention.value)
                # later rows win, so a classified recount replaces a bare one
                found[key] = row
        return found

    def lookup(self, n: int, convention: SymmetryConvention, need_classes: bool) -> Optional[CountRow]:
        row = self.load().get((n, SymmetryConvention(convention).value))
        if row is None or (need_classes and not row.classified):
            return None
        return row

    def append(self, row: CountRow) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(row.model_dump_json() + "\n")


def _count_order(n: int, config: SearchConfig, pool) -> CountRow:
    depth = min(config.prefix_depth, n - 1)
    prefixes = feasible_prefixes(n, depth)
    worker = functools.partial(
        _count_partition,
        n=n,
        convention=config.convention,
        classify=config.classify,
        variant=config.prime_variant,
    )
    results = pool.imap(worker, prefixes) if pool is not None else map(worker, prefixes)
    totals = [0, 0, 0, 0]
    for part in tqdm(results, total=len(prefixes), desc=f"n={n}", disable=not config.progress, leave=False):
        for i, value in enumerate(part):
            totals[i] += value
    raw, canonical, irreducible, prime = totals
    return CountRow(
        n=n,
        convention=config.convention,
        raw=raw,
        canonical=canonical,
        irreducible=irreducible if config.classify else None,
        prime=prime if config.classify else None,
    )


def parallel_count(config: SearchConfig, cache: Optional[CountCache] = None) -> CountTable:
    """Count every order in config's range, one pool task per feasible prefix.

    Partition results are summed in prefix order, so totals do not depend on
    the worker count."""
    table = CountTable(convention=config.convention)
    pool = mp.Pool(config.workers) if config.workers > 1 else None
    try:
        for n in range(config.min_order, config.max_order + 1):
            row = cache.lookup(n, config.convention, config.classify) if cache else None
            if row is None:
                row = _count_order(n, config, pool)
                if cache:
                    cache.append(row)
            else:
                logger.debug(f"Order {n} taken from cache {cache.path}")
            logger.info(f"n={n}: raw={row.raw}, canonical={row.canonical}")
            table.rows.append(row)
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return table


class ReferenceTable(BaseModel):
    open: List[int]
    closed: List[int]

    @classmethod
    def load(cls, path: Path = REFERENCE_PATH) -> "ReferenceTable":
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        return cls(open=data["open"]["values"], closed=data["closed"]["values"])

    def open_at(self, n: int) -> Optional[int]:
        return self.open[n - 1] if 1 <= n <= len(self.open) else None

    def closed_at(self, n: int) -> Optional[int]:
        return self.closed[n - 1] if 1 <= n <= len(self.closed) else None


class CalibrationRow(BaseModel):
    n: int
    raw: int
    canonical: int
    reference: Optional[int]
    oracle_checked: bool
    matches: bool


class IdentityCheck(BaseModel):
    half_order: int
    open_raw: int
    closed: int
    holds: bool


class SandwichCheck(BaseModel):
    half_order: int
    closed: int
    open_even: int
    upper: int
    holds: bool


class CalibrationReport(BaseModel):
    max_n: int
    convention: Dict[str, str] = {"odd": "raw", "even": "halved (a_1 < a_n)"}
    rows: List[CalibrationRow]
    identity: List[IdentityCheck]
    sandwich: List[SandwichCheck]
    ok: bool


def _closed_value(m: int, reference: ReferenceTable) -> int:
    if m <= CLOSED_ORACLE_MAX:
        return count_closed(m)
    value = reference.closed_at(m)
    if value is None:
        raise CalibrationError(f"No closed count available for half order {m}")
    return value


def calibrate(max_n: int, reference: Optional[ReferenceTable] = None, progress: bool = False) -> CalibrationReport:
    """Check the engine and the even-order convention against the reference table.

    Raises CalibrationError naming the first order that disagrees."""
    reference = reference or ReferenceTable.load()
    rows: List[CalibrationRow] = []
    raw_by_n: Dict[int, int] = {}
    canonical_by_n: Dict[int, int] = {}

    for n in tqdm(range(1, max_n + 1), desc="calibrate", disable=not progress):
        raw, canonical = count_open(n)
        raw_by_n[n], canonical_by_n[n] = raw, canonical
        oracle = n <= ORACLE_MAX_ORDER
        if oracle:
            brute = brute_force_open(n)
            brute_canonical = sum(1 for p in brute if is_canonical(p, SymmetryConvention.EVEN_ROAD_REVERSAL))
            if (len(brute), brute_canonical) != (raw, canonical):
                raise CalibrationError(
                    f"Order {n}: search gives {raw}/{canonical}, brute force gives {len(brute)}/{brute_canonical}"
                )
        expected = reference.open_at(n)
        matches = expected is None or expected == canonical
        rows.append(
            CalibrationRow(n=n, raw=raw, canonical=canonical, reference=expected, oracle_checked=oracle, matches=matches)
        )
        if not matches:
            raise CalibrationError(f"Order {n}: canonical count {canonical} differs from reference {expected}")

    identity: List[IdentityCheck] = []
    for m in range(1, (max_n + 1) // 2 + 1):
        closed = _closed_value(m, reference)
        open_raw = raw_by_n[2 * m - 1]
        identity.append(IdentityCheck(half_order=m, open_raw=open_raw, closed=closed, holds=open_raw == closed))
        if open_raw != closed:
            raise CalibrationError(f"Order {2 * m - 1}: {open_raw} open meanders but {closed} closed ones of half order {m}")

    sandwich: List[SandwichCheck] = []
    for m in range(1, max_n // 2 + 1):
        closed = _closed_value(m, reference)
        open_even = canonical_by_n[2 * m]
        holds = closed <= open_even <= m * closed
        sandwich.append(SandwichCheck(half_order=m, closed=closed, open_even=open_even, upper=m * closed, holds=holds))
        if not holds:
            raise CalibrationError(f"Order {2 * m}: {open_even} outside [{closed}, {m * closed}]")

    logger.info(f"Calibration through order {max_n} passed")
    return CalibrationReport(max_n=max_n, rows=rows, identity=identity, sandwich=sandwich, ok=True)
