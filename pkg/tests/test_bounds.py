import math

import pytest
from pydantic import ValidationError

from bounds import (
    BoundConstants,
    BoundQuery,
    BoundsError,
    binomial_growth_factor,
    bound_report,
    check_insertion_inequality,
    empirical_growth,
    lower_bound,
    minimize_upper_bound,
    ratio_table,
    upper_bound_at,
)
from enumerator import CountTable, SearchConfig, parallel_count
from meander import SymmetryConvention


@pytest.fixture(scope="module")
def table():
    return parallel_count(SearchConfig(max_order=12, prefix_depth=2))


def test_upper_bound_values():
    assert upper_bound_at(2) == pytest.approx(6.4505)
    assert upper_bound_at(13.901) == pytest.approx(3.33341, abs=1e-4)
    assert upper_bound_at(1e6) == pytest.approx(math.sqrt(12.901), abs=1e-3)
    assert upper_bound_at(1e6) < math.sqrt(12.901)


def test_upper_bound_rejects_small_k():
    with pytest.raises(BoundsError):
        upper_bound_at(1)
    with pytest.raises(ValidationError):
        BoundQuery(k=0.5)


def test_binomial_growth_factor():
    assert binomial_growth_factor(2) == pytest.approx(2.0)
    k = 5.0
    assert upper_bound_at(k) == pytest.approx(12.901 ** ((k + 2) / (2 * k)) / binomial_growth_factor(k))


def test_minimum_of_upper_bound():
    minimum = minimize_upper_bound()
    assert minimum.unimodal
    assert minimum.k_star == pytest.approx(13.901, abs=0.01)
    assert minimum.upper_min == pytest.approx(3.33341, abs=1e-4)
    for step in (-1e-3, 1e-3):
        assert upper_bound_at(minimum.k_star + step) >= minimum.upper_min - 1e-12


def test_minimum_with_unit_constant():
    minimum = minimize_upper_bound(BoundConstants(mu_closed_upper=1.0))
    assert minimum.k_star == pytest.approx(2.0, abs=1e-3)
    assert minimum.upper_min == pytest.approx(0.5, abs=1e-6)


@pytest.mark.parametrize("value, expected", [(11.38, 1.83669), (16.0, 2.0), (1.0, 1.0)])
def test_lower_bound(value, expected):
    constants = BoundConstants(mu_open_lower_sq=value, mu_open_lower=max(value**0.5, 3.37343))
    assert lower_bound(constants) == pytest.approx(expected, abs=1e-5)
    assert lower_bound(constants) ** 4 == pytest.approx(value, rel=1e-12)


def test_constants_must_agree():
    with pytest.raises(ValidationError):
        BoundConstants(mu_open_lower=2.0)
    with pytest.raises(ValidationError):
        BoundConstants(mu_closed_upper=-1.0)


def test_bound_report_json():
    data = bound_report().model_dump(mode="json", exclude_none=True)
    assert set(data) == {"k_star", "upper_min", "lower", "open_upper", "corollary_holds"}
    assert data["corollary_holds"] is True
    assert data["lower"] == pytest.approx(1.83669, abs=1e-5)

    with_k = bound_report(BoundQuery(k=2))
    assert with_k.upper_at_k == pytest.approx(6.4505)


def test_insertion_inequality_order_four(table):
    check = check_insertion_inequality(4, 4, table)
    assert (check.subset_size, check.target_order) == (1, 6)
    assert check.rhs == 12
    assert check.lhs == 14
    assert check.holds
    # 3214 spliced at 4 and 1432 spliced at 1 both give 321654
    assert check.certified_images == 12
    assert check.distinct_images == 11
    assert check.cross_host_collisions == 1
    assert check.certified_matches is False


def test_insertion_inequality_holds_for_small_orders(table):
    for n in range(1, 7):
        for k in (2, 3, 4):
            assert check_insertion_inequality(n, k, table, certify=n <= 4).holds


def test_insertion_inequality_needs_counts():
    empty = CountTable(convention=SymmetryConvention.EVEN_ROAD_REVERSAL)
    with pytest.raises(BoundsError):
        check_insertion_inequality(4, 2, empty)


def test_ratio_table(table):
    report = ratio_table(table, max_n=12)
    ratios = {row.n: row.ratio for row in report.rows}
    assert all(ratios[n] == 1.0 for n in range(1, 5))
    assert ratios[5] < 1.0
    assert ratios[12] < ratios[5]
    assert report.corollary_holds
    assert report.upper_min < report.mu_open_lower == 3.37343
    assert report.to_csv().startswith("order,total,irreducible,ratio\n")


def test_empirical_growth(table):
    report = empirical_growth(table)
    roots = {row.n: row for row in report.rows}
    assert roots[1].open_root == 1.0
    assert roots[4].open_root == pytest.approx(3 ** 0.25)
    assert all(row.below_open_upper for row in report.rows)
    assert report.to_csv().splitlines()[0] == "order,open_root,irreducible_root"
