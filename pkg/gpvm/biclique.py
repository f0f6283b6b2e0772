"""
Maximal rectangles S1×S2 of a boolean mask, i.e. maximal bicliques of the
bipartite graph rows ↔ columns. Sets are kept as int bitmasks.
"""
from itertools import combinations

import numpy as np

from gpvm.GPVMConfig import get_config
from gpvm.utils import Logger


def _row_bits(mask):
    n, m = mask.shape
    return [sum(1 << k for k in range(m) if mask[i, k]) for i in range(n)]


def _bits_to_tuple(bits):
    out, i = [], 0
    while bits:
        if bits & 1:
            out.append(i)
        bits >>= 1
        i += 1
    return tuple(out)


def _extent(cols, rows):
    """All rows whose neighbourhood contains `cols`."""
    return sum(1 << i for i, r in enumerate(rows) if r & cols == cols)


def _intent(row_set, rows, full_cols):
    acc = full_cols
    i = 0
    while row_set:
        if row_set & 1:
            acc &= rows[i]
        row_set >>= 1
        i += 1
    return acc


def rectangles_by_row_subsets(mask):
    """
    Every non-empty row subset paired with its maximal companion column set, then
    closed on the row side; duplicates collapse to the maximal rectangles.
    """
    mask = np.asarray(mask, dtype=bool)
    n, m = mask.shape
    rows = _row_bits(mask)
    full_cols = (1 << m) - 1
    found = set()
    for size in range(1, n + 1):
        for subset in combinations(range(n), size):
            row_set = sum(1 << i for i in subset)
            cols = _intent(row_set, rows, full_cols)
            if cols:
                found.add((_extent(cols, rows), cols))
    return _sorted(found)


def rectangles_by_consensus(mask):
    """
    Consensus enumeration: start from the closed row neighbourhoods and keep
    adding closed intersections of column sets until nothing new appears.
    """
    mask = np.asarray(mask, dtype=bool)
    rows = _row_bits(mask)
    intents = {r for r in rows if r}
    frontier = list(intents)
    while frontier:
        new = []
        for x in frontier:
            for y in list(intents):
                z = x & y
                if z and z not in intents:
                    intents.add(z)
                    new.append(z)
        frontier = new
    return _sorted({(_extent(cols, rows), cols) for cols in intents})


def _sorted(found):
    rects = [(_bits_to_tuple(r), _bits_to_tuple(c)) for r, c in found]
    rects.sort()
    return rects


def maximal_rectangles(mask):
    """
    Maximal rectangles of a mask, sorted by row set then column set.
    Args:
        mask: n×m boolean array
    Returns:
        list of (row index tuple, column index tuple)
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape[0] <= get_config().biclique_subset_max_rows:
        return rectangles_by_row_subsets(mask)
    Logger(f'maximal rectangles: consensus enumeration on a {mask.shape[0]}×{mask.shape[1]} grid')
    return rectangles_by_consensus(mask)


def all_rectangles(mask):
    """Every non-empty rectangle contained in the mask, maximal or not."""
    mask = np.asarray(mask, dtype=bool)
    n, m = mask.shape
    rows = _row_bits(mask)
    full_cols = (1 << m) - 1
    out = []
    for size in range(1, n + 1):
        for subset in combinations(range(n), size):
            cols = _intent(sum(1 << i for i in subset), rows, full_cols)
            # every non-empty sub-bitmask of the companion columns
            sub = cols
            while sub:
                out.append((subset, _bits_to_tuple(sub)))
                sub = (sub - 1) & cols
    out.sort()
    return out
