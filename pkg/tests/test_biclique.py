import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gpvm.GPVMConfig import use_config
from gpvm.biclique import all_rectangles, maximal_rectangles, rectangles_by_consensus, rectangles_by_row_subsets


def _contained(mask, rect):
    rows, cols = rect
    return bool(np.all(mask[np.ix_(rows, cols)]))


def test_full_and_empty_masks():
    assert maximal_rectangles(np.ones((2, 3), dtype=bool)) == [((0, 1), (0, 1, 2))]
    assert maximal_rectangles(np.zeros((3, 3), dtype=bool)) == []


def test_three_of_four_cells():
    mask = np.array([[True, True], [True, False]])
    assert maximal_rectangles(mask) == [((0,), (0, 1)), ((0, 1), (0,))]


def test_diagonal_mask():
    mask = np.eye(3, dtype=bool)
    assert maximal_rectangles(mask) == [((0,), (0,)), ((1,), (1,)), ((2,), (2,))]


@settings(max_examples=150, deadline=None)
@given(arrays(np.bool_, st.tuples(st.integers(1, 6), st.integers(1, 6))))
def test_methods_agree_and_are_maximal(mask):
    subsets = rectangles_by_row_subsets(mask)
    assert subsets == rectangles_by_consensus(mask)
    for rect in subsets:
        rows, cols = rect
        assert _contained(mask, rect)
        for i in set(range(mask.shape[0])) - set(rows):
            assert not _contained(mask, (tuple(sorted(rows + (i,))), cols))
        for k in set(range(mask.shape[1])) - set(cols):
            assert not _contained(mask, (rows, tuple(sorted(cols + (k,)))))
    covered = np.zeros_like(mask)
    for rows, cols in subsets:
        covered[np.ix_(rows, cols)] = True
    assert np.array_equal(covered, mask)


def test_consensus_used_above_row_limit():
    rng = np.random.Generator(np.random.PCG64(3))
    mask = rng.random((5, 4)) < 0.6
    with use_config(biclique_subset_max_rows=2):
        assert maximal_rectangles(mask) == rectangles_by_row_subsets(mask)


@pytest.mark.parametrize('shape', [(1, 1), (2, 2), (2, 3), (3, 3)])
def test_all_rectangles_on_full_grid(shape):
    n, m = shape
    rects = all_rectangles(np.ones(shape, dtype=bool))
    assert len(rects) == (2 ** n - 1) * (2 ** m - 1)
    assert len(set(rects)) == len(rects)
    assert rects == sorted(rects)


def test_all_rectangles_inside_mask():
    mask = np.array([[True, True, False], [False, True, True]])
    rects = all_rectangles(mask)
    assert all(_contained(mask, r) for r in rects)
    assert ((0, 1), (1,)) in rects
    assert len(rects) == 3 + 3 + 1
