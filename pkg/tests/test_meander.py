from itertools import permutations

import pytest

from meander import (
    ClosedMeander,
    MalformedMatchingError,
    MalformedPermutationError,
    MeanderError,
    OpenMeander,
    Ray,
    Side,
    Symmetry,
    SymmetryConvention,
    apply_symmetry,
    arch_diagram,
    canonicalize,
    closed_meanders,
    concatenate,
    is_admissible,
    is_closed_meander,
    parse_permutation,
    river_reverse,
    road_reverse,
    validate,
)


def test_arch_diagram_of_321():
    diagram = arch_diagram((3, 2, 1))
    assert diagram.entry_ray == Ray(3, Side.UPPER)
    assert diagram.lower_arcs == ((2, 3),)
    assert diagram.upper_arcs == ((1, 2),)
    assert diagram.exit_ray == Ray(1, Side.LOWER)


def test_arch_diagram_small_orders():
    one = arch_diagram((1,))
    assert one.upper_arcs == () and one.lower_arcs == ()
    assert one.exit_ray == Ray(1, Side.LOWER)

    two = arch_diagram((1, 2))
    assert two.lower_arcs == ((1, 2),)
    assert two.exit_ray == Ray(2, Side.UPPER)


def test_violations_are_reported():
    diagram = arch_diagram((2, 1, 3))
    found = diagram.violations()
    assert "V2" in found
    assert ("entry", (1, 3)) in found["V2"]
    assert not diagram.is_planar()


@pytest.mark.parametrize(
    "values, expected",
    [
        ((1, 2, 3), True),
        ((2, 1, 3), False),
        ((3, 2, 1, 6, 5, 4), True),
        ((1,), True),
    ],
)
def test_validate_examples(values, expected):
    assert validate(values) is expected


def test_order_three_and_four_sets():
    assert {p for p in permutations(range(1, 4)) if validate(p)} == {(1, 2, 3), (3, 2, 1)}
    four = {p for p in permutations(range(1, 5)) if validate(p)}
    assert four == {(1, 2, 3, 4), (1, 4, 3, 2), (2, 3, 4, 1), (3, 2, 1, 4), (4, 1, 2, 3), (4, 3, 2, 1)}


def test_validate_agrees_with_arch_diagram():
    for n in range(1, 7):
        for p in permutations(range(1, n + 1)):
            assert validate(p) == arch_diagram(p).is_planar()


def test_malformed_permutation_is_an_error():
    with pytest.raises(MalformedPermutationError):
        validate((1, 1, 2))
    with pytest.raises(MalformedPermutationError):
        validate(())
    with pytest.raises(MalformedPermutationError):
        parse_permutation("1,x,3")


def test_parse_permutation_formats():
    assert parse_permutation("3,2,1") == (3, 2, 1)
    assert parse_permutation("(3, 2, 1)") == (3, 2, 1)


def test_open_meander_rejects_invalid():
    with pytest.raises(MeanderError):
        OpenMeander.of((2, 1, 3))


def test_symmetries_preserve_validity(valid_by_order):
    for n in range(1, 8):
        for p in valid_by_order[n]:
            assert validate(road_reverse(p))
            assert validate(river_reverse(p))


def _valid_with_entry_side(values, entry):
    """Independent V1/V2 check with the entry ray on side `entry` (0 upper, 1 lower)."""
    n = len(values)
    arcs = ([], [])
    for i in range(1, n):
        arcs[(i + entry) % 2].append(tuple(sorted((values[i - 1], values[i]))))

    def covered(point, side):
        return any(a < point < b for a, b in arcs[side])

    for side in arcs:
        for a, b in side:
            if any(a < c < b < d for c, d in side):
                return False
    return not covered(values[0], entry) and not covered(values[-1], (n + entry) % 2)


@pytest.mark.parametrize("n", range(1, 7))
def test_validate_is_symmetric_on_all_permutations(n):
    for p in permutations(range(1, n + 1)):
        assert validate(p) == validate(road_reverse(p)) == validate(river_reverse(p))


@pytest.mark.slow
@pytest.mark.parametrize("n", [7, 8])
def test_validate_is_symmetric_on_all_permutations_large(n):
    for p in permutations(range(1, n + 1)):
        assert validate(p) == validate(road_reverse(p)) == validate(river_reverse(p))


@pytest.mark.parametrize("n", range(1, 7))
def test_validate_does_not_depend_on_entry_side(n):
    for p in permutations(range(1, n + 1)):
        assert validate(p) == _valid_with_entry_side(p, 0) == _valid_with_entry_side(p, 1)


def test_apply_symmetry_by_name():
    assert apply_symmetry((3, 2, 1, 4), "roadReverse") == (4, 1, 2, 3)
    assert apply_symmetry((3, 2, 1, 4), Symmetry.RIVER_REVERSE) == (2, 3, 4, 1)
    assert apply_symmetry(apply_symmetry((1, 4, 3, 2), "riverReverse"), "riverReverse") == (1, 4, 3, 2)
    with pytest.raises(ValueError):
        apply_symmetry((1,), "flip")


def test_canonicalize_is_idempotent_and_class_constant(valid_by_order):
    for n in range(1, 8):
        for p in valid_by_order[n]:
            c = canonicalize(p, SymmetryConvention.EVEN_ROAD_REVERSAL)
            assert canonicalize(c, SymmetryConvention.EVEN_ROAD_REVERSAL) == c
            if n % 2 == 0:
                assert canonicalize(road_reverse(p), SymmetryConvention.EVEN_ROAD_REVERSAL) == c
            else:
                assert c == p
            assert canonicalize(p, SymmetryConvention.RAW) == p


def test_admissible_is_the_canonical_representative(valid_by_order):
    for n in (2, 4, 6):
        for p in valid_by_order[n]:
            assert is_admissible(p) == (canonicalize(p, SymmetryConvention.EVEN_ROAD_REVERSAL) == p)


def test_concatenate_figure_example():
    result = concatenate(OpenMeander.of((3, 2, 1)), OpenMeander.of((3, 2, 1)))
    assert result.meander.values == (3, 2, 1, 6, 5, 4)
    assert result.branch == "plain"


def test_concatenate_falls_back_for_non_admissible_left():
    # (2,1) ends left of where it starts, so the plain join is covered
    result = concatenate(OpenMeander.of((2, 1)), OpenMeander.of((1,)))
    assert result.branch != "plain"
    assert validate(result.meander.values)
    assert result.meander.order == 3


def test_concatenate_is_total(valid_by_order):
    for n in range(1, 5):
        for m in range(1, 5):
            for p in valid_by_order[n]:
                for q in valid_by_order[m]:
                    result = concatenate(OpenMeander.of(p), OpenMeander.of(q))
                    assert result.meander.order == n + m


@pytest.mark.slow
def test_concatenate_is_total_up_to_order_six(valid_by_order):
    for n in range(1, 7):
        for m in range(1, 7):
            for p in valid_by_order[n]:
                for q in valid_by_order[m]:
                    result = concatenate(OpenMeander.of(p), OpenMeander.of(q))
                    assert result.meander.order == n + m
                    assert validate(result.meander.values)


def test_concatenate_is_associative_on_plain_branch(valid_by_order):
    small = [OpenMeander.of(p) for n in range(1, 4) for p in valid_by_order[n]]
    checked = 0
    for p in small:
        for q in small:
            pq = concatenate(p, q)
            if pq.branch != "plain":
                continue
            for r in small:
                qr = concatenate(q, r)
                if qr.branch != "plain":
                    continue
                left = concatenate(pq.meander, r)
                right = concatenate(p, qr.meander)
                if left.branch == right.branch == "plain":
                    assert left.meander.values == right.meander.values
                    checked += 1
    assert checked > 0


def test_closed_meander_single_cycle():
    assert is_closed_meander([(1, 2)], [(1, 2)])
    assert not is_closed_meander([(1, 2), (3, 4)], [(1, 2), (3, 4)])
    assert is_closed_meander([(1, 4), (2, 3)], [(1, 2), (3, 4)])


def test_closed_meander_needs_points():
    assert not is_closed_meander([], [])
    assert not is_closed_meander([(1, 2)], [])


def test_closed_meander_rejects_bad_matchings():
    with pytest.raises(MalformedMatchingError):
        is_closed_meander([(1, 2), (2, 3)], [(1, 2), (3, 4)])
    with pytest.raises(MeanderError):
        ClosedMeander(2, ((1, 2), (3, 4)), ((1, 2), (3, 4)))


def test_closed_meanders_small():
    assert len(list(closed_meanders(1))) == 1
    assert len(list(closed_meanders(2))) == 2
    assert len(list(closed_meanders(3))) == 8
