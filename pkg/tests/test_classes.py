import math
from fractions import Fraction as F

import numpy as np
import pytest

from onesided.dyadic import Box
from onesided.grid import GridDomain, WeightField, WeightPair
from onesided.classes import (a1_pointwise_check, evaluate_restricted_ratio, muckenhoupt_constant,
                              restricted_constant, restricted_profile, truncate_pair)
from onesided.oracle import brute_muckenhoupt_constant, exhaustive_restricted_constant

from conftest import dyadic_pair


def pair_1d(w, v, p):
    d = GridDomain(1, int(math.log2(len(w))))
    return WeightPair(WeightField(d, np.array(w, float)), WeightField(d, np.array(v, float)), p)


@pytest.mark.parametrize("p", [1, 1.5, 2, 3])
def test_unit_pair_is_one(p):
    for n, L in [(1, 4), (2, 3), (3, 2)]:
        d = GridDomain(n, L)
        pair = WeightPair(WeightField.constant(d), WeightField.constant(d), p)
        c = restricted_constant(pair)
        assert c.value == 1.0
        if p > 1:  # at p = 1 every E ties
            assert len(c.witness_cells) == 2 ** ((L - c.witness_cube.level) * n)
        assert restricted_constant(pair, "anchored").value == 1.0
        if p > 1:
            assert muckenhoupt_constant(pair).value == 1.0


def test_restricted_hand_example():
    c = restricted_constant(pair_1d([4, 0], [1, 1], 1))
    assert c.value == 4.0
    assert c.witness_cube.box == Box.from_coords((0,), (F(1, 2),))
    assert c.witness_cells == ((1,),)


def test_muckenhoupt_hand_example():
    pair = pair_1d([1, 1], [1, 4], 2)
    assert muckenhoupt_constant(pair).value == 0.25
    assert brute_muckenhoupt_constant(pair) == 0.25


def test_zero_v_is_infinite():
    pair = pair_1d([1, 1, 1, 1], [1, 1, 0, 1], 2)
    assert math.isinf(restricted_constant(pair).value)
    assert math.isinf(muckenhoupt_constant(pair).value)
    assert math.isinf(a1_pointwise_check(pair.with_p(1)).value)
    # zero w in front of the zero cell: nothing to divide
    assert math.isfinite(restricted_constant(pair_1d([0, 0, 1, 1], [1, 1, 0, 1], 2)).value)


def test_a1_constant_weights():
    pair = pair_1d([3, 3, 3, 3], [3, 3, 3, 3], 1)
    assert a1_pointwise_check(pair).value == 1.0


def test_matches_exhaustive_oracle(rng):
    for _ in range(30):
        n, L = [(1, 3), (2, 2)][int(rng.integers(0, 2))]
        pair = dyadic_pair(rng, GridDomain(n, L), float(rng.choice([1, 1.5, 2])))
        for flavor in ("dyadic", "anchored"):
            assert restricted_constant(pair, flavor).value == exhaustive_restricted_constant(pair, flavor)


def test_witness_replays(rng):
    for _ in range(20):
        pair = dyadic_pair(rng, GridDomain(2, 3), 2.0)
        for flavor in ("dyadic", "anchored"):
            c = restricted_constant(pair, flavor)
            r = evaluate_restricted_ratio(pair, c.witness_cube, c.witness_cells)
            assert abs(r - c.value) <= 1e-12 * c.value
        prof = restricted_profile(pair)
        assert max(cb.value for cb in prof) == restricted_constant(pair).value


def test_minus_side_by_reflection(rng):
    pair = dyadic_pair(rng, GridDomain(2, 3), 2.0)
    a = restricted_constant(pair, side="-")
    b = restricted_constant(pair.reflect())
    assert a.value == b.value and a.class_tag.startswith("Ap-")


def test_muckenhoupt_oracle_and_inclusion(rng):
    for _ in range(20):
        pair = dyadic_pair(rng, GridDomain(2, 2), float(rng.choice([1.5, 2, 3])))
        m = muckenhoupt_constant(pair).value
        assert abs(m - brute_muckenhoupt_constant(pair)) <= 1e-12 * m
        assert restricted_constant(pair).value <= m ** (1 / pair.p) * (1 + 1e-12)


def test_scaling_covariance(rng):
    pair = dyadic_pair(rng, GridDomain(2, 3), 2.0)
    scaled = WeightPair(WeightField(pair.domain, 4 * pair.w.density), WeightField(pair.domain, 4 * pair.v.density), 2.0)
    assert restricted_constant(scaled).value == restricted_constant(pair).value


def test_truncation(rng):
    pair = dyadic_pair(rng, GridDomain(1, 4), 2.0)
    same = truncate_pair(pair, 0.25, 0.25)
    assert same.w == pair.w and same.v == pair.v
    C = restricted_constant(pair).value
    assert restricted_constant(truncate_pair(pair, 0.5, 1.0)).value <= max(1.0, C)
    assert restricted_constant(truncate_pair(pair, 1.0, 1.0, "min-max")).value <= C
    with pytest.raises(ValueError):
        truncate_pair(pair, 0, 1)


def test_p_one_requires_a1():
    pair = pair_1d([1, 1], [1, 1], 1)
    with pytest.raises(ValueError):
        muckenhoupt_constant(pair)
    with pytest.raises(ValueError):
        a1_pointwise_check(pair.with_p(2))


def test_truncation_max_max_grid_bound():
    # grid constants skip sub-cell cubes, and there max{1, C} can be exceeded
    pair = pair_1d([2, 0.25, 0.25, 0.25], [0.75, 1.75, 1.25, 0.5], 2.0)
    C = restricted_constant(pair).value
    C0 = restricted_constant(truncate_pair(pair, 0.5, 0.5)).value
    assert C0 > max(1.0, C)
    assert C0 == math.sqrt(2.5 / 1.75)
    assert C0 <= math.sqrt(C ** 2 + 1)


def test_truncation_split_bound(rng):
    # w0(Q)/v0(E) splits into the part where w >= a and a|Q|/(b|E|), so C0^p <= C^p + 1
    for _ in range(200):
        d = GridDomain(int(rng.integers(1, 3)), 3)
        p = float(rng.choice([1, 1.5, 2, 3]))
        pair = dyadic_pair(rng, d, p, zeros=True)
        a = int(rng.integers(1, 9)) / 4.0
        b = a * float(rng.choice([1, 2, 4]))
        C = restricted_constant(pair).value
        C0 = restricted_constant(truncate_pair(pair, a, b)).value
        assert C0 <= (C ** p + 1) ** (1 / p) * (1 + 1e-12)
