"""
End-to-end verification suite.

Each criterion is a function returning a short detail string; it fails by
raising. Criteria that need larger orders than the configured maximum are
reported as skipped.
"""

import logging
import time
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from pathlib import Path
from typing import Callable, List, Optional

from pydantic import BaseModel, Field
from tqdm import tqdm

from bounds import BoundConstants, lower_bound, minimize_upper_bound, ratio_table
from classifier import PrimeVariant, is_irreducible, is_prime
from composer import (
    ConstructionVariant,
    InsertError,
    InsertMode,
    InsertSpec,
    build_irreducible,
    insert_even,
    insert_odd,
    prime_closure,
    splice_trefoils,
)
from enumerator import (
    REFERENCE_PATH,
    CountTable,
    ReferenceTable,
    SearchConfig,
    brute_force_open,
    calibrate,
    count_classified,
    count_closed,
    count_open,
    enumerate_open,
    parallel_count,
)
from meander import OpenMeander, SymmetryConvention, validate

logger = logging.getLogger(__name__)

CLOSED_COUNTS = [1, 2, 8, 42, 262, 1828, 13820]
K_STAR, UPPER_MIN, LOWER, OPEN_LOWER = 13.901, 3.33341, 1.83669, 3.37343
PERFORMANCE_ORDER = 18
PERFORMANCE_BUDGET = 60.0


class CriterionStatus(str, Enum):
    PASSED = "passed"
    FAILED = "failed"
    SKIPPED = "skipped"


class VerifyConfig(BaseModel):
    max_order: int = Field(default=PERFORMANCE_ORDER, ge=1)
    workers: int = Field(default=1, ge=1)
    reference_path: Path = REFERENCE_PATH
    progress: bool = False


class CriterionResult(BaseModel):
    number: int
    name: str
    status: CriterionStatus
    seconds: float
    detail: str = ""


class SuiteReport(BaseModel):
    max_order: int
    results: List[CriterionResult]

    @property
    def passed(self) -> bool:
        return all(r.status is not CriterionStatus.FAILED for r in self.results)

    @property
    def skipped(self) -> List[int]:
        return [r.number for r in self.results if r.status is CriterionStatus.SKIPPED]


@dataclass
class Criterion:
    number: int
    name: str
    needs_order: int
    run: Callable[[VerifyConfig], str]


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise AssertionError(message)


def oracle_equivalence(config: VerifyConfig) -> str:
    for n in range(1, 9):
        found = list(enumerate_open(n))
        _require(len(found) == len(set(found)), f"order {n}: search repeats a permutation")
        _require(set(found) == set(brute_force_open(n)), f"order {n}: search and brute force disagree")
    return "orders 1..8 agree with the brute-force filter"


def closed_counts(config: VerifyConfig) -> str:
    got = [count_closed(n) for n in range(1, len(CLOSED_COUNTS) + 1)]
    _require(got == CLOSED_COUNTS, f"closed counts {got}")
    return f"closed counts {got}"


def open_closed_identity(config: VerifyConfig) -> str:
    report = calibrate(13, ReferenceTable.load(config.reference_path))
    _require(all(c.holds for c in report.identity), "identity fails")
    return f"{len(report.identity)} half orders checked, reference table matches through order 13"


def sandwich(config: VerifyConfig) -> str:
    report = calibrate(12, ReferenceTable.load(config.reference_path))
    _require(all(c.holds for c in report.sandwich), "sandwich fails")
    return ", ".join(f"{c.closed}<={c.open_even}<={c.upper}" for c in report.sandwich)


def upper_minimum(config: VerifyConfig) -> str:
    minimum = minimize_upper_bound()
    _require(abs(minimum.k_star - K_STAR) <= 0.01, f"k* = {minimum.k_star}")
    _require(abs(minimum.upper_min - UPPER_MIN) <= 1e-4, f"minimum = {minimum.upper_min}")
    return f"k*={minimum.k_star:.4f}, minimum={minimum.upper_min:.6f}"


def irreducible_lower(config: VerifyConfig) -> str:
    value = lower_bound()
    _require(abs(value - LOWER) <= 1e-5, f"lower bound {value}")
    return f"lower={value:.6f}"


def corollary_gap(config: VerifyConfig) -> str:
    report = ratio_table(CountTable(convention=SymmetryConvention.EVEN_ROAD_REVERSAL), constants=BoundConstants())
    _require(report.corollary_holds and report.mu_open_lower == OPEN_LOWER, "gap does not hold")
    return f"{report.upper_min:.5f} < {report.mu_open_lower}"


def injectivity(config: VerifyConfig) -> str:
    checked = 0
    for n in range(1, 7):
        hosts = [p for p in enumerate_open(n) if is_irreducible(p)]
        for host in hosts:
            for size in range(n + 1):
                images = set()
                for subset in combinations(range(1, n + 1), size):
                    image = splice_trefoils(host, subset)
                    _require(validate(image), f"splice of {subset} into {host} is not a meander")
                    _require(image not in images, f"two subsets of {host} give {image}")
                    images.add(image)
                    checked += 1
    return f"{checked} spliced images, all valid and distinct per host"


def constructions(config: VerifyConfig) -> str:
    built = 0
    for n in range(1, 8):
        for p in enumerate_open(n):
            for variant in ConstructionVariant:
                build_irreducible(OpenMeander.of(p), variant)
                built += 1
    return f"{built} constructions passed all checks"


def prime_closures(config: VerifyConfig) -> str:
    mirrored = 0
    for n in range(1, 9):
        for p in enumerate_open(n):
            result = prime_closure(OpenMeander.of(p))
            _require(is_prime(result.values, PrimeVariant.PAPER), f"closure of {p} is not prime")
            mirrored += result.branch == "mirrored"
    _require(mirrored > 0, "mirrored branch never used")
    return f"mirrored branch used {mirrored} times"


def insert_totality(config: VerifyConfig) -> str:
    hosts = [p for n in range(1, 7) for p in enumerate_open(n)]
    odd_guests = [g for m in (1, 3, 5) for g in enumerate_open(m)]
    even_guests = [g for m in (2, 4) for g in enumerate_open(m)]
    literal = refused = even = 0
    for a in hosts:
        host = OpenMeander.of(a)
        n = len(a)
        for b in odd_guests:
            guest = OpenMeander.of(b)
            for k in range(1, n + 1):
                spec = InsertSpec(host, guest, k)
                _require(insert_odd(spec, InsertMode.SPLICE).meander.order == n + len(b) - 1, "splice order")
                try:
                    result = insert_odd(spec)
                except InsertError:
                    refused += 1
                    continue
                _require(result.meander.order == n + len(b), "odd insert order")
                literal += 1
        for b in even_guests:
            guest = OpenMeander.of(b)
            for k in range(1, n):
                if abs(a[k - 1] - a[k]) != 1:
                    continue
                _require(insert_even(InsertSpec(host, guest, k)).meander.order == n + len(b), "even insert order")
                even += 1
    return f"{literal} literal odd inserts ({refused} refused), {even} even inserts"


def performance(config: VerifyConfig) -> str:
    serial = parallel_count(SearchConfig(max_order=12, prefix_depth=3, workers=1, classify=False)).totals()
    for workers in sorted({2, max(2, config.workers)}):
        split = parallel_count(SearchConfig(max_order=12, prefix_depth=3, workers=workers, classify=False))
        _require(split.totals() == serial, f"{workers} workers disagree with the serial count")
    reference = ReferenceTable.load(config.reference_path)
    start = time.perf_counter()
    table = parallel_count(
        SearchConfig(
            min_order=PERFORMANCE_ORDER,
            max_order=PERFORMANCE_ORDER,
            prefix_depth=4,
            workers=config.workers,
            classify=False,
            progress=config.progress,
        )
    )
    elapsed = time.perf_counter() - start
    total = table.row(PERFORMANCE_ORDER).canonical
    _require(total == reference.open_at(PERFORMANCE_ORDER), f"order {PERFORMANCE_ORDER} count {total}")
    _require(elapsed < PERFORMANCE_BUDGET, f"order {PERFORMANCE_ORDER} took {elapsed:.1f}s")
    return f"order {PERFORMANCE_ORDER}: {total} in {elapsed:.1f}s with {config.workers} workers"


def ratio_trend(config: VerifyConfig) -> str:
    ratios = {}
    for n in (5, 12):
        irreducible, _ = count_classified(n)
        _, total = count_open(n)
        ratios[n] = irreducible / total
    _require(ratios[12] < ratios[5], f"ratios {ratios}")
    return f"ratio(5)={ratios[5]:.4f}, ratio(12)={ratios[12]:.4f}"


CRITERIA = [
    Criterion(1, "enumeration matches brute force", 8, oracle_equivalence),
    Criterion(2, "closed meander counts", 1, closed_counts),
    Criterion(3, "open odd orders equal closed counts", 13, open_closed_identity),
    Criterion(4, "even orders between closed bounds", 12, sandwich),
    Criterion(5, "minimum of the upper bound", 1, upper_minimum),
    Criterion(6, "lower bound for irreducible growth", 1, irreducible_lower),
    Criterion(7, "upper bound below open growth", 1, corollary_gap),
    Criterion(8, "trefoil splices are injective", 6, injectivity),
    Criterion(9, "irreducible constructions", 7, constructions),
    Criterion(10, "prime closures", 8, prime_closures),
    Criterion(11, "inserts", 6, insert_totality),
    Criterion(12, "parallel counting", PERFORMANCE_ORDER, performance),
    Criterion(13, "irreducible ratio falls", 12, ratio_trend),
]


def run_suite(config: VerifyConfig, only: Optional[List[int]] = None) -> SuiteReport:
    results = []
    selected = [c for c in CRITERIA if only is None or c.number in only]
    for criterion in tqdm(selected, desc="verify", disable=not config.progress):
        if criterion.needs_order > config.max_order:
            results.append(
                CriterionResult(
                    number=criterion.number,
                    name=criterion.name,
                    status=CriterionStatus.SKIPPED,
                    seconds=0.0,
                    detail=f"needs order {criterion.needs_order}, max order is {config.max_order}",
                )
            )
            continue
        start = time.perf_counter()
        try:
            detail = criterion.run(config)
            status = CriterionStatus.PASSED
        except (AssertionError, ValueError) as e:
            detail, status = f"{type(e).__name__}: {e}", CriterionStatus.FAILED
        seconds = time.perf_counter() - start
        log = logger.info if status is CriterionStatus.PASSED else logger.error
        log(f"[{criterion.number}] {criterion.name}: {status.value} ({seconds:.2f}s) {detail}")
        results.append(
            CriterionResult(number=criterion.number, name=criterion.name, status=status, seconds=seconds, detail=detail)
        )
    return SuiteReport(max_order=config.max_order, results=results)
