import itertools
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from onesided.dyadic import Box, DyadicCube
from onesided.grid import (CellSet, GridDomain, WeightField, WeightPair, block_sums, enumerate_dyadic_cubes,
                           measure, prefix_tables)
from onesided.oracle import naive_measure


def test_domain_basics():
    d = GridDomain(2, 3)
    assert d.n_side == 8 and d.shape == (8, 8) and d.n_cells == 64
    assert d.cell_side == F(1, 8) and d.cell_volume == 1 / 64
    e = GridDomain(1, 1, DyadicCube(-1, (-1,)))  # [-2, 0)
    assert e.n_side == 4 and e.cell_corner((0,)) == (F(-2),)
    with pytest.raises(ValueError):
        GridDomain(4, 2)


def test_measure_examples():
    d = GridDomain(2, 3)
    w = WeightField.constant(d, 1.0)
    assert measure(w, Box.from_coords((0, 0), (F(1, 2), F(1, 2)))) == 0.25
    assert w.measure(CellSet.empty(d)) == 0.0
    # boxes need not be cell-aligned
    assert measure(w, Box.from_coords((0, 0), (F(1, 16), 1))) == 1 / 16
    # outside the extent carries no mass
    assert measure(w, Box.from_coords((-1, -1), (F(1, 2), F(1, 2)))) == 0.25
    with pytest.raises(ValueError):
        measure(w, Box.from_coords((-1, -1), (F(1, 2), F(1, 2))), strict=True)


def test_measure_matches_naive(rng):
    d = GridDomain(2, 2)
    for _ in range(20):
        w = WeightField(d, rng.integers(0, 9, d.shape) / 4)
        E = CellSet(d, rng.random(d.shape) < 0.5)
        assert w.measure(E) == naive_measure(w, E)
        a, b = sorted(rng.integers(0, 5, 2)), sorted(rng.integers(0, 5, 2))
        if a[0] < a[1] and b[0] < b[1]:
            B = Box.from_coords((F(a[0], 4), F(b[0], 4)), (F(a[1], 4), F(b[1], 4)))
            assert measure(w, B) == naive_measure(w, B)


def test_prefix_tables_exhaustive():
    rng = np.random.default_rng(11)
    d = GridDomain(2, 4)
    w = WeightField(d, rng.random(d.shape))
    T = prefix_tables(w)
    assert abs(T.total - w.total) <= 1e-12 * w.total
    N = d.n_side
    spans = [(a, b) for a in range(N) for b in range(a + 1, N + 1)]
    lo = np.array([[a1, a2] for (a1, _), (a2, _) in itertools.product(spans, spans)])
    hi = np.array([[b1, b2] for (_, b1), (_, b2) in itertools.product(spans, spans)])
    fast = T.sums(lo, hi)
    cum = w.density
    direct = np.array([cum[a1:b1, a2:b2].sum() for (a1, a2), (b1, b2) in zip(lo, hi)])
    assert np.max(np.abs(fast - direct)) <= 1e-12 * w.density.sum()


def test_prefix_tables_random_boxes(rng):
    d = GridDomain(3, 3)
    w = WeightField(d, rng.random(d.shape))
    T = prefix_tables(w)
    mass = w.total
    for _ in range(1000):
        a = rng.integers(0, 8, 3)
        b = a + rng.integers(1, 9 - a)
        B = Box.from_coords([F(int(x), 8) for x in a], [F(int(x), 8) for x in b])
        assert abs(T.query(B) - measure(w, B)) <= 1e-12 * mass


def test_constant_field_query():
    d = GridDomain(2, 3)
    T = prefix_tables(WeightField.constant(d, 3.0))
    B = Box.from_coords((F(1, 8), F(2, 8)), (F(5, 8), 1))
    assert T.query(B) == 3.0 * float(B.volume)


def test_enumerate_counts():
    d = GridDomain(1, 1)
    assert len(list(enumerate_dyadic_cubes(d, "inside"))) == 3
    plus = list(enumerate_dyadic_cubes(d, "plus"))
    assert [Q.box for Q in plus] == [Box.from_coords((0,), (F(1, 2),))]
    assert len(list(enumerate_dyadic_cubes(GridDomain(2, 2), "inside"))) == 21
    minus = list(enumerate_dyadic_cubes(d, "minus"))
    assert [Q.box for Q in minus] == [Box.from_coords((F(1, 2),), (1,))]


def test_block_sums_threads_agree(rng):
    d = GridDomain(2, 6)
    vals = rng.random(d.shape)
    a = block_sums(vals, d, threads=1)
    b = block_sums(vals, d, threads=4)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert a[0].shape == (1, 1) and abs(a[0][0, 0] - vals.sum()) < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 16 - 1), st.integers(0, 2 ** 16 - 1))
def test_additivity_and_monotonicity(a, b):
    d = GridDomain(2, 2)
    w = WeightField(d, (np.arange(16).reshape(4, 4) % 5) / 4)
    A = CellSet(d, np.array([(a >> i) & 1 for i in range(16)], dtype=bool).reshape(4, 4))
    B = CellSet(d, np.array([(b >> i) & 1 for i in range(16)], dtype=bool).reshape(4, 4))
    assert w.measure(A | B) + w.measure(A & B) == w.measure(A) + w.measure(B)
    assert w.measure(A & B) <= w.measure(A)


def test_cellset_ops_and_refine():
    d = GridDomain(2, 2)
    E = CellSet.from_box(d, Box.from_coords((0, 0), (F(1, 2), F(1, 4))))
    assert E.count == 2 and E.measure == 1 / 8
    assert E.refine().count == 8 and E.refine().measure == E.measure
    assert (~E).count == 14 and (E - E).is_empty
    assert E.reflect().reflect() == E
    w = WeightField(d, np.arange(16.0).reshape(4, 4))
    assert w.refine().measure(E.refine()) == w.measure(E)
    with pytest.raises(ValueError):
        WeightField(d, -np.ones(d.shape))
    with pytest.raises(ValueError):
        WeightPair(w, w, 0.5)
