import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from temprel.algebra import (
    FULL_MASK,
    LABELS,
    Interval,
    LabelSet,
    RelLabel,
    build_composition_table,
    default_table,
    inverse,
    oracle_relation,
)

B, A, INC, ISI, SIM, V = LABELS


def ls(*labels):
    return LabelSet.of(labels)


def test_inverse_pairs():
    assert inverse(B) is A and inverse(A) is B
    assert inverse(INC) is ISI and inverse(ISI) is INC
    assert inverse(SIM) is SIM and inverse(V) is V
    assert all(inverse(inverse(r)) is r for r in LABELS)


def test_label_names_round_trip():
    assert [str(r) for r in LABELS] == ["before", "after", "includes", "is_included", "simultaneous", "vague"]
    assert all(RelLabel.parse(str(r)) is r for r in LABELS)
    with pytest.raises(ValueError):
        RelLabel.parse("overlaps")


@pytest.mark.parametrize(
    "a, b, expected",
    [
        ((0, 2), (3, 5), B),
        ((3, 5), (0, 2), A),
        ((0, 9), (2, 5), INC),
        ((2, 5), (0, 9), ISI),
        ((1, 4), (1, 4), SIM),
        ((0, 3), (2, 5), V),  # overlap
        ((0, 3), (3, 5), V),  # meets
        ((0, 3), (0, 5), V),  # shared start
    ],
)
def test_oracle_relation(a, b, expected):
    assert oracle_relation(Interval(*a), Interval(*b)) is expected


def test_degenerate_interval_rejected():
    with pytest.raises(ValueError):
        Interval(3, 3)


def test_spot_entries():
    T = default_table()
    assert T.compose(B, B) == ls(B)
    assert T.compose(A, A) == ls(A)
    assert T.compose(INC, B) == ls(B, INC, V)
    assert T.compose(B, ISI) == ls(B, ISI, V)
    assert T.compose(B, V) == LabelSet.full()
    assert T.compose(B, A) == LabelSet.full()


def test_simultaneous_is_identity():
    T = default_table()
    for r in LABELS[:5]:
        assert T.compose(SIM, r) == ls(r)
        assert T.compose(r, SIM) == ls(r)


def test_vague_rows_full():
    T = default_table()
    for r in LABELS:
        assert T.compose(V, r).mask == FULL_MASK
        assert T.compose(r, V).mask == FULL_MASK


def test_definite_entries_contain_vague_or_are_singletons():
    T = default_table()
    for r1, r2 in itertools.product(LABELS[:5], repeat=2):
        out = T.compose(r1, r2)
        assert V in out or (len(out) == 1 and next(iter(out)).definite)


def test_grid_size_does_not_matter():
    assert build_composition_table(8) == build_composition_table(12)


def test_small_grid_refused():
    with pytest.raises(ValueError):
        build_composition_table(5)


def test_converse_identity():
    T = default_table()
    for r1, r2 in itertools.product(LABELS, repeat=2):
        assert T.compose(r1, r2).inverse() == T.compose(inverse(r2), inverse(r1))


def test_set_composition_is_union_of_entries():
    T = default_table()
    m1, m2 = ls(B, INC).mask, ls(B, SIM).mask
    expected = T.compose(B, B) | T.compose(B, SIM) | T.compose(INC, B) | T.compose(INC, SIM)
    assert T.set_composition(m1, m2) == expected.mask
    assert T.set_composition(0, m2) == 0


def test_labelset_text():
    assert str(ls(B)) == "{before}"
    assert str(ls(V, B)) == "{before, vague}"
    assert len(LabelSet.full()) == 6
    assert (ls(B) | ls(A)) & ls(A) == ls(A)
    assert ls(B, INC).inverse() == ls(A, ISI)


def test_render_has_all_rows():
    text = default_table().render()
    lines = text.splitlines()
    assert len(lines) == 2 + 6
    assert lines[2].split("|")[0].strip().endswith("{before}")
    assert "{before, after, includes, is_included, simultaneous, vague}" in lines[-1]


intervals = st.tuples(st.integers(0, 20), st.integers(1, 8)).map(lambda t: Interval(t[0], t[0] + t[1]))


@settings(max_examples=300, deadline=None)
@given(intervals, intervals, intervals)
def test_oracle_is_a_model_of_the_table(a, b, c):
    T = default_table()
    assert oracle_relation(a, c) in T.compose(oracle_relation(a, b), oracle_relation(b, c))


@settings(max_examples=200, deadline=None)
@given(intervals, intervals)
def test_oracle_converse(a, b):
    assert oracle_relation(b, a) is inverse(oracle_relation(a, b))
