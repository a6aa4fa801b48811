"""
Growth-rate bounds for irreducible meanders.

Inserting order-3 meanders at n/k crossings of every irreducible meander of
order n gives M(n + 2n/k) >= C(n, n/k) * Irr(n), which caps the growth rate of
irreducible meanders by

    upper(k) = (k-1)^((k-1)/k) / k * mu^((k+2)/(2k))

for every k > 1, mu being the closed-meander growth bound. The irreducible
constructions of order 2n+32 and 2n+35 give the lower bound mu_open^(1/2),
i.e. 11.38^(1/4).
"""

import logging
from math import sqrt
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy.optimize import minimize_scalar
from scipy.special import comb

from composer import injection_image
from enumerator import CountTable
from meander import MeanderError, SymmetryConvention

logger = logging.getLogger(__name__)

K_MAX = 1000.0
GRID_POINTS = 20_000
GRID_RESOLUTION = 1e-6


class BoundsError(MeanderError):
    pass


class BoundConstants(BaseModel):
    mu_closed_upper: float = Field(default=12.901, gt=0)
    mu_open_lower_sq: float = Field(default=11.38, gt=0)
    mu_open_lower: float = Field(default=3.37343, gt=0)

    @model_validator(mode="after")
    def _lower_constants_agree(self):
        if self.mu_open_lower**2 < self.mu_open_lower_sq * (1 - 1e-3):
            raise ValueError(
                f"mu_open_lower^2 = {self.mu_open_lower ** 2:.5f} is below mu_open_lower_sq = {self.mu_open_lower_sq}"
            )
        return self


class BoundQuery(BaseModel):
    k: float = Field(gt=1)


class Minimum(BaseModel):
    k_star: float
    upper_min: float
    unimodal: bool
    method: str


class BoundReport(BaseModel):
    k: Optional[float] = None
    upper_at_k: Optional[float] = None
    binomial_factor: Optional[float] = None
    k_star: float
    upper_min: float
    lower: float
    open_upper: float
    corollary_holds: bool


class InsertionCheck(BaseModel):
    n: int
    k: float
    subset_size: int
    target_order: int
    lhs: int
    rhs: int
    holds: bool
    certified_images: Optional[int] = None
    distinct_images: Optional[int] = None
    cross_host_collisions: Optional[int] = None
    certified_matches: Optional[bool] = None


class RatioRow(BaseModel):
    n: int
    total: int
    irreducible: int
    ratio: float


class RatioReport(BaseModel):
    rows: List[RatioRow]
    upper_min: float
    mu_open_lower: float
    corollary_holds: bool

    def to_csv(self) -> str:
        lines = ["order,total,irreducible,ratio"]
        lines += [f"{r.n},{r.total},{r.irreducible},{r.ratio:.6f}" for r in self.rows]
        return "\n".join(lines) + "\n"


class GrowthRow(BaseModel):
    n: int
    open_root: float
    irreducible_root: Optional[float] = None
    below_open_upper: bool


class GrowthReport(BaseModel):
    rows: List[GrowthRow]
    open_upper: float

    def to_csv(self) -> str:
        lines = ["order,open_root,irreducible_root"]
        for r in self.rows:
            irr = "" if r.irreducible_root is None else f"{r.irreducible_root:.6f}"
            lines.append(f"{r.n},{r.open_root:.6f},{irr}")
        return "\n".join(lines) + "\n"


def _check_k(k: float) -> float:
    if not k > 1:
        raise BoundsError(f"k must exceed 1, got {k}")
    return float(k)


def binomial_growth_factor(k: float) -> float:
    """lim C(n, n/k)^(1/n) = k / (k-1)^((k-1)/k)."""
    k = _check_k(k)
    return k / (k - 1) ** ((k - 1) / k)


def upper_bound_at(k: float, constants: BoundConstants = BoundConstants()) -> float:
    k = _check_k(k)
    return (k - 1) ** ((k - 1) / k) / k * constants.mu_closed_upper ** ((k + 2) / (2 * k))


def _upper_grid(ks: np.ndarray, mu: float) -> np.ndarray:
    return np.power(ks - 1, (ks - 1) / ks) / ks * np.power(mu, (ks + 2) / (2 * ks))


def _is_unimodal(values: np.ndarray) -> bool:
    steps = np.sign(np.diff(values))
    steps = steps[steps != 0]
    # at most one switch, and only from falling to rising
    switches = np.flatnonzero(np.diff(steps) != 0)
    return len(switches) == 0 or (len(switches) == 1 and steps[0] < 0)


def _fine_scan(mu: float, lo: float, hi: float) -> float:
    while hi - lo > GRID_RESOLUTION:
        ks = np.linspace(lo, hi, 1001)
        i = int(np.argmin(_upper_grid(ks, mu)))
        lo, hi = ks[max(i - 1, 0)], ks[min(i + 1, len(ks) - 1)]
    return (lo + hi) / 2


def minimize_upper_bound(constants: BoundConstants = BoundConstants(), k_max: float = K_MAX) -> Minimum:
    mu = constants.mu_closed_upper
    ks = 1 + np.geomspace(1e-4, k_max - 1, GRID_POINTS)
    values = _upper_grid(ks, mu)
    i = int(np.argmin(values))
    lo, hi = ks[max(i - 1, 0)], ks[min(i + 1, len(ks) - 1)]

    if _is_unimodal(values):
        result = minimize_scalar(
            lambda k: upper_bound_at(k, constants),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-9},
        )
        k_star, method, unimodal = float(result.x), "bounded", True
    else:
        logger.warning(f"Upper bound is not unimodal on (1, {k_max}]; scanning to resolution {GRID_RESOLUTION}")
        k_star, method, unimodal = _fine_scan(mu, lo, hi), "grid", False

    return Minimum(k_star=k_star, upper_min=upper_bound_at(k_star, constants), unimodal=unimodal, method=method)


def lower_bound(constants: BoundConstants = BoundConstants()) -> float:
    return constants.mu_open_lower_sq**0.25


def check_insertion_inequality(n: int, k: float, table: CountTable, certify: bool = True) -> InsertionCheck:
    k = _check_k(k)
    size = int(n // k)
    target = n + 2 * size
    for order in (n, target):
        if not table.has(order):
            raise BoundsError(f"Count table has no row for order {order}")
    host_row = table.row(n)
    if host_row.irreducible is None:
        raise BoundsError(f"Count table row for order {n} carries no irreducible count")

    lhs = table.row(target).canonical
    rhs = int(comb(n, size, exact=True)) * host_row.irreducible
    check = InsertionCheck(n=n, k=k, subset_size=size, target_order=target, lhs=lhs, rhs=rhs, holds=lhs >= rhs)

    if certify and table.convention is SymmetryConvention.EVEN_ROAD_REVERSAL:
        report = injection_image(n, k)
        check.certified_images = report.images
        check.distinct_images = report.distinct_images
        check.cross_host_collisions = report.cross_host_collisions
        check.certified_matches = report.distinct_images == rhs and report.target_order == target
    return check


def ratio_table(table: CountTable, max_n: Optional[int] = None, constants: BoundConstants = BoundConstants()) -> RatioReport:
    rows = []
    for row in sorted(table.rows, key=lambda r: r.n):
        if max_n is not None and row.n > max_n:
            break
        if row.irreducible is None:
            raise BoundsError(f"Count table row for order {row.n} carries no irreducible count")
        rows.append(RatioRow(n=row.n, total=row.canonical, irreducible=row.irreducible, ratio=row.irreducible / row.canonical))
    minimum = minimize_upper_bound(constants)
    return RatioReport(
        rows=rows,
        upper_min=minimum.upper_min,
        mu_open_lower=constants.mu_open_lower,
        corollary_holds=minimum.upper_min < constants.mu_open_lower,
    )


def empirical_growth(table: CountTable, constants: BoundConstants = BoundConstants()) -> GrowthReport:
    rows = sorted(table.rows, key=lambda r: r.n)
    orders = np.array([r.n for r in rows], dtype=float)
    open_roots = np.power(np.array([r.canonical for r in rows], dtype=float), 1 / orders)
    open_upper = sqrt(constants.mu_closed_upper)

    growth = []
    for row, root in zip(rows, open_roots):
        irr = None if row.irreducible is None else float(row.irreducible ** (1 / row.n))
        growth.append(GrowthRow(n=row.n, open_root=float(root), irreducible_root=irr, below_open_upper=bool(root < open_upper)))
    above = [g.n for g in growth if not g.below_open_upper]
    if above:
        logger.info(f"n-th roots at orders {above} exceed {open_upper:.4f}")
    return GrowthReport(rows=growth, open_upper=open_upper)


def bound_report(query: Optional[BoundQuery] = None, constants: BoundConstants = BoundConstants()) -> BoundReport:
    minimum = minimize_upper_bound(constants)
    report = BoundReport(
        k_star=minimum.k_star,
        upper_min=minimum.upper_min,
        lower=lower_bound(constants),
        open_upper=sqrt(constants.mu_closed_upper),
        corollary_holds=minimum.upper_min < constants.mu_open_lower,
    )
    if query is not None:
        report.k = query.k
        report.upper_at_k = upper_bound_at(query.k, constants)
        report.binomial_factor = binomial_growth_factor(query.k)
    return report
