import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reprank.rating_core import (
    DegenerateError,
    DuplicateRatingError,
    RatingRangeError,
    RatingScale,
    RatingTable,
    prune_isolated,
    sparsity,
)


def test_single_entry_bookkeeping():
    t = RatingTable(3, 2)
    t.add_rating(0, 0, 0.7)
    assert t.user_degree[0] == 1
    assert t.object_degree[0] == 1
    assert t.get(0, 0) == 0.7
    assert (0, 0) in t and (1, 0) not in t


def test_out_of_range_rating():
    t = RatingTable(1, 1)
    with pytest.raises(RatingRangeError):
        t.add_rating(0, 0, 1.2)


def test_duplicate_pair():
    t = RatingTable(1, 1)
    t.add_rating(0, 0, 0.5)
    with pytest.raises(DuplicateRatingError):
        t.add_rating(0, 0, 0.5)


def test_bad_ids():
    t = RatingTable(2, 2)
    with pytest.raises(IndexError):
        t.add_rating(2, 0, 0.1)
    with pytest.raises(IndexError):
        t.add_rating(0, -1, 0.1)


def test_discrete_scale():
    t = RatingTable(1, 2, RatingScale(1, 5, discrete=True))
    t.add_rating(0, 0, 3)
    with pytest.raises(RatingRangeError):
        t.add_rating(0, 1, 3.5)
    with pytest.raises(ValueError):
        RatingScale(1.5, 5, discrete=True)
    with pytest.raises(ValueError):
        RatingScale(1, 1)


def test_from_arrays_validates():
    with pytest.raises(DuplicateRatingError):
        RatingTable.from_arrays(2, 2, [0, 0], [1, 1], [0.1, 0.2])
    with pytest.raises(RatingRangeError):
        RatingTable.from_arrays(2, 2, [0], [1], [-0.1])
    with pytest.raises(IndexError):
        RatingTable.from_arrays(2, 2, [0], [2], [0.1])


def test_sparsity():
    t = RatingTable(6000, 4000)
    assert t.sparsity() == 0.0
    # 4968 users x 242 mean degree over 16331 objects
    assert 1202256 / (4968 * 16331) == pytest.approx(0.0148, abs=5e-5)
    u = np.repeat(np.arange(600), 8)
    o = (np.arange(4800) * 7) % 400
    dense = RatingTable.from_arrays(600, 400, u, o, np.full(4800, 0.5))
    assert sparsity(dense) == pytest.approx(0.02)
    with pytest.raises(DegenerateError):
        RatingTable(0, 5).sparsity()


def test_default_scale_sparsity_count():
    assert 480000 / (6000 * 4000) == 0.02


def test_adjacency_queries():
    t = RatingTable.from_arrays(3, 3, [2, 0, 0, 1], [1, 2, 1, 1], [0.1, 0.2, 0.3, 0.4])
    np.testing.assert_array_equal(t.rated_objects(0), [1, 2])
    np.testing.assert_array_equal(t.user_ratings(0), [0.3, 0.2])
    np.testing.assert_array_equal(t.raters(1), [0, 1, 2])
    np.testing.assert_array_equal(t.object_ratings(1), [0.3, 0.4, 0.1])
    assert t.get(2, 2) is None


def test_prune_isolated_keeps_ids():
    t = RatingTable.from_arrays(4, 3, [0, 3], [2, 2], [0.1, 0.2])
    p, users, objects = prune_isolated(t)
    assert (p.n_users, p.n_objects) == (2, 1)
    assert p.user_ids == ["0", "3"] and p.object_ids == ["2"]
    np.testing.assert_array_equal(users, [0, 3])


@settings(max_examples=60, deadline=None)
@given(
    st.integers(1, 8),
    st.integers(1, 8),
    st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7), st.floats(0, 1)), max_size=40),
)
def test_incremental_degrees_match_recount(nu, no, entries):
    t = RatingTable(nu, no)
    seen = {}
    for u, o, v in entries:
        if u >= nu or o >= no:
            continue
        if (u, o) in seen:
            with pytest.raises(DuplicateRatingError):
                t.add_rating(u, o, v)
            continue
        t.add_rating(u, o, v)
        seen[(u, o)] = v
        # interleave reads with writes
        assert t.user_degree.sum() == len(seen)

    ku = np.zeros(nu, int)
    ko = np.zeros(no, int)
    for u, o in seen:
        ku[u] += 1
        ko[o] += 1
    np.testing.assert_array_equal(t.user_degree, ku)
    np.testing.assert_array_equal(t.object_degree, ko)
    assert t.user_degree.sum() == t.object_degree.sum() == len(t)
    for u in range(nu):
        for a in t.rated_objects(u):
            assert u in t.raters(a)
    for (u, o), v in seen.items():
        assert t.get(u, o) == v
