import json

import pytest
from pydantic import ValidationError

from enumerator import (
    CSV_HEADER,
    ENGINE_VERSION,
    CalibrationError,
    CountCache,
    CountRow,
    ReferenceTable,
    SearchConfig,
    brute_force_open,
    calibrate,
    count_classified,
    count_closed,
    count_open,
    enumerate_open,
    feasible_prefixes,
    parallel_count,
)
from meander import SymmetryConvention


def test_enumerate_small_orders():
    assert list(enumerate_open(1)) == [(1,)]
    assert list(enumerate_open(3)) == [(1, 2, 3), (3, 2, 1)]
    assert set(enumerate_open(4)) == {(1, 2, 3, 4), (1, 4, 3, 2), (2, 3, 4, 1), (3, 2, 1, 4), (4, 1, 2, 3), (4, 3, 2, 1)}


@pytest.mark.parametrize("n", range(1, 8))
def test_enumerate_matches_brute_force(n):
    found = list(enumerate_open(n))
    assert len(found) == len(set(found))
    assert found == sorted(found)
    assert set(found) == set(brute_force_open(n))


@pytest.mark.slow
def test_enumerate_matches_brute_force_order_eight():
    assert set(enumerate_open(8)) == set(brute_force_open(8))


def test_count_open_examples():
    assert count_open(1) == (1, 1)
    assert count_open(4) == (6, 3)
    assert count_open(4, SymmetryConvention.RAW) == (6, 6)
    assert count_open(5)[0] == 8


def test_count_closed_values():
    assert [count_closed(n) for n in range(1, 7)] == [1, 2, 8, 42, 262, 1828]


def test_odd_open_counts_equal_closed_counts():
    for m in range(1, 6):
        assert count_open(2 * m - 1)[0] == count_closed(m)


def test_even_raw_counts_are_twice_canonical():
    for n in (2, 4, 6, 8, 10):
        raw, canonical = count_open(n)
        assert raw == 2 * canonical


def test_count_classified_examples():
    assert count_classified(1) == (1, 1)
    assert count_classified(4)[0] == 3
    irreducible, _ = count_classified(5)
    assert irreducible < count_open(5)[1]


def test_prefix_partitions():
    assert feasible_prefixes(4, 1) == [(1,), (2,), (3,), (4,)]
    sizes = {p[0]: len(list(enumerate_open(4, p))) for p in feasible_prefixes(4, 1)}
    assert sizes == {1: 2, 2: 1, 3: 1, 4: 2}

    contributing = {p: len(list(enumerate_open(3, p))) for p in feasible_prefixes(3, 2)}
    assert {p: c for p, c in contributing.items() if c} == {(1, 2): 1, (3, 2): 1}


def test_prefixes_are_pruned_early():
    assert feasible_prefixes(3, 2) == [(1, 2), (3, 2)]
    # (1,3) draws a lower arc over 2, which would then have to be the covered exit
    assert (1, 3) not in feasible_prefixes(3, 2)


@pytest.mark.parametrize("n", range(2, 8))
def test_prefixes_keep_every_meander(n):
    valid = list(enumerate_open(n))
    for depth in range(1, n):
        prefixes = feasible_prefixes(n, depth)
        assert {p[:depth] for p in valid} <= set(prefixes)
    # one short of the full order, every surviving prefix completes in exactly one way
    last = feasible_prefixes(n, n - 1)
    assert len(last) == len(valid)
    assert all(len(list(enumerate_open(n, p))) == 1 for p in last)


def test_counts_match_reference_table():
    reference = ReferenceTable.load()
    for n in range(1, 12):
        assert count_open(n)[1] == reference.open_at(n)


@pytest.mark.slow
@pytest.mark.parametrize("n", [12, 13, 14])
def test_counts_match_reference_table_large(n):
    assert count_open(n)[1] == ReferenceTable.load().open_at(n)


def test_seed_rejects_dead_prefixes():
    assert list(enumerate_open(4, (2, 1))) == []
    assert list(enumerate_open(4, (1, 4, 2))) == []
    assert list(enumerate_open(4, (1, 4, 3))) == [(1, 4, 3, 2)]
    assert list(enumerate_open(4, (1, 1))) == []


def test_feasible_prefixes_depth_bounds():
    assert feasible_prefixes(3, 0) == [()]
    with pytest.raises(ValueError):
        feasible_prefixes(3, 3)


def test_search_config_invariants():
    with pytest.raises(ValidationError):
        SearchConfig(max_order=3, prefix_depth=3)
    with pytest.raises(ValidationError):
        SearchConfig(max_order=5, workers=0)


def test_count_row_invariants():
    with pytest.raises(ValidationError):
        CountRow(n=4, convention=SymmetryConvention.EVEN_ROAD_REVERSAL, raw=6, canonical=4)
    with pytest.raises(ValidationError):
        CountRow(n=5, convention=SymmetryConvention.EVEN_ROAD_REVERSAL, raw=8, canonical=8, irreducible=9, prime=1)


def test_parallel_count_table_and_csv():
    table = parallel_count(SearchConfig(max_order=6, prefix_depth=2))
    assert table.totals() == {1: 1, 2: 1, 3: 2, 4: 3, 5: 8, 6: 14}
    lines = table.to_csv().splitlines()
    assert lines[0] == CSV_HEADER
    assert lines[4] == "4,3,3,2,1.000000"


def test_parallel_count_is_independent_of_workers_and_depth():
    serial = parallel_count(SearchConfig(max_order=9, prefix_depth=1, workers=1, classify=False)).totals()
    for depth, workers in ((3, 2), (4, 1), (2, 4)):
        table = parallel_count(SearchConfig(max_order=9, prefix_depth=depth, workers=workers, classify=False))
        assert table.totals() == serial


def test_unclassified_rows_leave_columns_empty():
    table = parallel_count(SearchConfig(max_order=3, prefix_depth=1, classify=False))
    assert table.to_csv().splitlines()[3] == "3,2,,,"


def test_count_cache_round_trip(tmp_path):
    cache = CountCache(tmp_path / "counts.jsonl")
    first = parallel_count(SearchConfig(max_order=5, prefix_depth=2), cache)
    lines = (tmp_path / "counts.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 5
    assert json.loads(lines[3])["engine"] == ENGINE_VERSION

    again = parallel_count(SearchConfig(max_order=5, prefix_depth=2), cache)
    assert again.totals() == first.totals()
    assert len((tmp_path / "counts.jsonl").read_text(encoding="utf-8").splitlines()) == 5


def test_count_cache_ignores_stale_engines(tmp_path):
    path = tmp_path / "counts.jsonl"
    stale = CountRow(n=3, convention=SymmetryConvention.EVEN_ROAD_REVERSAL, raw=2, canonical=2, engine="old")
    path.write_text(stale.model_dump_json() + "\n", encoding="utf-8")
    cache = CountCache(path)
    assert cache.lookup(3, SymmetryConvention.EVEN_ROAD_REVERSAL, need_classes=False) is None


def test_reference_table_loads():
    reference = ReferenceTable.load()
    assert reference.open_at(4) == 3
    assert reference.open_at(20) == 19304190
    assert reference.closed_at(3) == 8
    assert reference.open_at(21) is None


def test_calibrate_small():
    report = calibrate(6)
    assert report.ok
    assert [c.holds for c in report.identity] == [True, True, True]
    first = report.sandwich[1]
    assert (first.closed, first.open_even, first.upper) == (2, 3, 4)


def test_calibrate_rejects_corrupted_reference():
    reference = ReferenceTable.load()
    reference.open[4] = 9
    with pytest.raises(CalibrationError, match="Order 5"):
        calibrate(6, reference)
