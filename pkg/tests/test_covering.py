from fractions import Fraction as F

import numpy as np
import pytest

from onesided.classes import restricted_constant
from onesided.covering import (CubeFamily, SelectedCube, band_index, band_partition, certify_depth_bound,
                               cover_lattice, covering_select_2d, depth_decompose, select_level_set_cubes)
from onesided.dyadic import Box, DyadicCube, contains, corner_square, plus_neighbor
from onesided.grid import CellSet, GridDomain, WeightField, WeightPair
from onesided.maximal import dyadic_plus_maximal, level_set

from conftest import dyadic_pair, random_set


def unit_pair(d, p=1.0):
    return WeightPair(WeightField.constant(d), WeightField.constant(d), p)


def quarter_1d():
    d = GridDomain(1, 2)
    return d, CellSet.from_box(d, Box.from_coords((F(1, 2),), (F(3, 4),)))


def test_select_examples():
    d, E = quarter_1d()
    assert len(select_level_set_cubes(E, 1.0)) == 0
    fam = select_level_set_cubes(E, 0.4)
    assert [q.cube for q in fam] == [DyadicCube(1, (0,))]
    with pytest.raises(ValueError):
        select_level_set_cubes(E, 0)


def test_select_matches_level_set_and_is_maximal(rng):
    for n, L in [(1, 6), (2, 4), (3, 2)]:
        d = GridDomain(n, L)
        for _ in range(15):
            E = random_set(rng, d)
            t = float(rng.choice([1 / 16, 1 / 8, 0.3, 0.5]))
            fam = select_level_set_cubes(E, t)
            assert fam.union() == level_set(dyadic_plus_maximal(E), t)
            assert fam.check_disjoint()
            for q in fam:
                if q.cube.level > d.extent.level:
                    P = q.cube.parent()
                    sl = d.cube_slices(plus_neighbor(P))
                    mass = E.mask[sl].sum() if sl is not None else 0
                    assert not mass / 2 ** ((L - P.level) * n) > t


def test_band_index_boundaries():
    assert band_index(0.5, 0.25) == 0  # ratio exactly 2t stays in band 0
    assert band_index(0.3, 0.25) == 0 and band_index(0.51, 0.25) == 1
    with pytest.raises(ValueError):
        band_index(0.25, 0.25)


def test_bands_disjoint_and_exhaustive(rng):
    d = GridDomain(2, 4)
    E = random_set(rng, d)
    fam = select_level_set_cubes(E, 1 / 16)
    bands = band_partition(fam)
    seen = [q.cube for b in bands for q in b]
    assert sorted(seen, key=repr) == sorted((q.cube for q in fam), key=repr)
    for k, b in enumerate(bands):
        assert b.t == fam.t * 2 ** k
        assert all(b.t < q.ratio <= 2 * b.t for q in b)


def member(d, cube, E):
    s = 2 ** (d.depth - cube.level)
    lo = tuple(a * s for a in cube.anchor)
    sl = d.cube_slices(plus_neighbor(cube))
    return SelectedCube(cube, lo, s, int(E.mask[sl].sum()) if sl is not None else 0)


def test_depth_decompose_examples():
    d = GridDomain(1, 3)
    E = CellSet.full(d)
    single = CubeFamily(d, E, (member(d, DyadicCube(1, (0,)), E),), 0.5)
    dec = depth_decompose(single)
    assert dec.levels == ((0,),)
    # Q1 = [0,1/2), Q2 = [1/2,3/4): Q2^+ = [3/4,1) strictly inside Q1^+ = [1/2,1)
    fam = CubeFamily(d, E, (member(d, DyadicCube(1, (0,)), E), member(d, DyadicCube(2, (2,)), E)), 0.5)
    dec = depth_decompose(fam)
    assert dec.levels == ((0,), (1,)) and dec.ancestors == ((), (0,))


def test_certificate_single_cube_and_unit_weights(rng):
    d = GridDomain(2, 3)
    for _ in range(30):
        E = random_set(rng, d)
        pair = unit_pair(d, float(rng.choice([1, 2])))
        fam = select_level_set_cubes(E, 1 / 8)
        for band in band_partition(fam):
            if len(band):
                rep = certify_depth_bound(depth_decompose(band), E, pair, band.t)
                assert rep.passed, rep.failed_steps()
                assert all(s.slack is None or s.slack >= 0 for s in rep.steps)
        if len(fam):
            one = CubeFamily(d, E, (fam.members[0],), fam.t)
            k = band_index(fam.members[0].ratio, fam.t)
            rep = certify_depth_bound(depth_decompose(one), E, pair, fam.t * 2 ** k)
            assert rep.passed


def test_certificate_random_weighted(rng):
    for n, L in [(1, 6), (2, 4), (3, 2)]:
        d = GridDomain(n, L)
        for _ in range(10):
            pair = dyadic_pair(rng, d, float(rng.choice([1, 2])))
            E = random_set(rng, d)
            C = restricted_constant(pair).value
            for band in band_partition(select_level_set_cubes(E, 2.0 ** -L)):
                if len(band):
                    rep = certify_depth_bound(depth_decompose(band), E, pair, band.t, C)
                    assert rep.passed and not rep.finding, rep.failed_steps()


def test_nested_chain_descendant_mass_is_nearly_tight():
    """Chain Q_0 = [0,1/2), Q_j = [1-2^-j, 1-2^-j-1): every Q_j^+ is a tail of [1/2, 1).

    E has density 1/2 on [3/4, 1) plus one cell in [1/2, 3/4), so Q_0 sits just
    above mu = 1/4 and the chain at 2 mu; the descendant mass approaches half of
    the 2^{n+1}|E_0^+| bound (the 1D supremum) from below.
    """
    L = 10
    d = GridDomain(1, L)
    N = d.n_side
    m = np.zeros(N, bool)
    m[3 * N // 4 + 1::2] = True
    m[N // 2] = True
    E = CellSet(d, m)
    cubes = [DyadicCube(1, (0,))] + [DyadicCube(j + 1, (2 ** (j + 1) - 2,)) for j in range(1, L - 1)]
    fam = CubeFamily(d, E, tuple(member(d, Q, E) for Q in cubes), 0.25)
    assert fam.check_disjoint()
    dec = depth_decompose(fam)
    assert dec.depths == tuple(range(len(cubes)))
    rep = certify_depth_bound(dec, E, unit_pair(d), 0.25)
    assert rep.passed
    step = rep.step("descendant_mass")
    assert 0.49 <= step.lhs / step.rhs < 0.5


def test_cover_one_point_and_duplicates():
    d = GridDomain(2, 3)
    E = CellSet.full(d)
    x = (F(1, 2), F(1, 2))
    sel = covering_select_2d([x], [corner_square(x, F(1, 4))], E, 0.5)
    assert sel.gamma == (0,) and sel.passed
    # F_1 is E cap (Q~_1)^+ up to the t/8 requirement
    assert sel.f_counts[0] > 0.5 / 8 * sel.ell[0] ** 2
    sel = covering_select_2d([x, x], [corner_square(x, F(1, 4))] * 2, E, 0.5)
    assert len(sel.gamma) == 1


def test_cover_random_64(rng):
    d = GridDomain(2, 6)
    E = CellSet.full(d)
    for quarter in (1, 2, 3):
        pts, sqs = [], []
        for _ in range(20):
            ell = F(int(rng.choice([2, 4, 8])), 64)
            x = tuple(F(int(rng.integers(int(ell * 64), int(64 - 2 * ell * 64) + 1)), 64) for _ in range(2))
            pts.append(x)
            sqs.append(corner_square(x, ell))
        sel = covering_select_2d(pts, sqs, E, 0.5, quarter)
        assert sel.hypothesis_ok and sel.passed, sel.certificate
        til = sel.tilde_squares
        for i, A in enumerate(til):
            for j, B in enumerate(til):
                if i != j:
                    assert not contains(A, B)
        assert sel.overlap_bound >= 1 and sel.f_overlap >= 1


def test_cover_lattice_rejects_odd_sides():
    with pytest.raises(ValueError):
        cover_lattice(np.array([[4, 4]]), np.array([3]), np.ones((8, 8), bool), 0.5)
