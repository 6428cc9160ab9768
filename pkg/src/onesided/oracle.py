"""Brute-force reference implementations used to cross-check the fast paths.

Deliberately naive: direct loops over cubes, cells and subsets, no prefix
tables or pyramids.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .dyadic import QUARTER_OFFSETS, Box, DyadicCube, minus_neighbor, plus_neighbor
from .grid import CellSet, GridDomain, WeightField, WeightPair, enumerate_dyadic_cubes
from .classes import restricted_ratio
from .maximal import xi_level

__all__ = [
    "naive_measure",
    "brute_dyadic_maximal",
    "brute_anchored_maximal",
    "brute_subsquare_maximal",
    "exhaustive_restricted_constant",
    "brute_muckenhoupt_constant",
]


def _dens(f) -> np.ndarray:
    return f.mask.astype(np.float64) if isinstance(f, CellSet) else np.abs(f.density)


def naive_measure(field: WeightField, target) -> float:
    """Per-cell loop: add the density of every cell of the set (or cell inside the aligned box)."""
    dom = field.domain
    total = 0.0
    for idx in itertools.product(range(dom.n_side), repeat=dom.dim):
        if isinstance(target, CellSet):
            inside = bool(target.mask[idx])
        else:
            box = target.box if isinstance(target, DyadicCube) else target
            c = dom.cell_cube(idx).lower
            inside = all(a <= x < b for a, x, b in zip(box.lower, c, box.upper))
        if inside:
            total += float(field.density[idx])
    return total * dom.cell_volume


def _cube_sum(dens: np.ndarray, dom: GridDomain, Q: DyadicCube) -> float:
    sl = dom.cube_slices(Q)
    if sl is None:
        return 0.0
    return float(np.sum(dens[sl]))


def brute_dyadic_maximal(f, sign: str = "+") -> np.ndarray:
    """Loop over every grid-dyadic cube and push its one-sided mean to its cells."""
    dom = f.domain
    dens = _dens(f)
    out = np.zeros(dom.shape)
    for Q in enumerate_dyadic_cubes(dom, "inside"):
        R = plus_neighbor(Q) if sign == "+" else minus_neighbor(Q)
        ncells = 2 ** ((dom.depth - Q.level) * dom.dim)
        mean = _cube_sum(dens, dom, R) / ncells
        sl = dom.cube_slices(Q)
        out[sl] = np.maximum(out[sl], mean)
    return out


def _box_mean(dens: np.ndarray, dom: GridDomain, lo, size: int) -> float:
    sl = []
    for a in lo:
        a0, b0 = max(a, 0), min(a + size, dom.n_side)
        if a0 >= b0:
            return 0.0
        sl.append(slice(a0, b0))
    return float(np.sum(dens[tuple(sl)])) / float(size ** dom.dim)


def brute_anchored_maximal(f) -> np.ndarray:
    dom = f.domain
    dens = _dens(f)
    out = np.zeros(dom.shape)
    for idx in itertools.product(range(dom.n_side), repeat=dom.dim):
        best = 0.0
        for k in dom.levels:
            best = max(best, _box_mean(dens, dom, idx, 2 ** (dom.depth - k)))
        out[idx] = best
    return out


def brute_subsquare_maximal(f, i: int, xi=None) -> np.ndarray:
    dom = f.domain
    dens = _dens(f)
    j = xi_level(xi)
    o1, o2 = QUARTER_OFFSETS[i]
    out = np.zeros(dom.shape)
    for a, b in itertools.product(range(dom.n_side), repeat=2):
        best = 0.0
        for k in dom.levels:
            if j is not None and k >= j:
                continue
            s = 2 ** (dom.depth - k)
            if s == 1:
                best = max(best, float(dens[a, b]))
                continue
            h = s // 2
            best = max(best, _box_mean(dens, dom, (a + o1 * h, b + o2 * h), h))
        out[a, b] = best
    return out


def _qualifying(dom: GridDomain, flavor: str):
    if flavor == "dyadic":
        for Q in enumerate_dyadic_cubes(dom, "plus"):
            yield Q.box
        return
    cs = dom.cell_side
    lo0 = dom.extent.lower
    for k in dom.levels:
        s = 2 ** (dom.depth - k)
        for idx in itertools.product(range(dom.n_side), repeat=dom.dim):
            if all(i + 2 * s <= dom.n_side for i in idx):
                yield Box.square([o + i * cs for o, i in zip(lo0, idx)], s * cs)


def exhaustive_restricted_constant(pair: WeightPair, flavor: str = "dyadic") -> float:
    """Sup over qualifying cubes and *every* nonempty subset ``E`` of ``Q^+``'s cells."""
    dom = pair.domain
    w, v, p = pair.w.density, pair.v.density, pair.p
    best = 0.0
    for B in _qualifying(dom, flavor):
        lo, hi = dom.box_cells(B)
        ncells = hi[0] - lo[0]
        nq = ncells ** dom.dim
        wQ = math.fsum(w[tuple(slice(a, b) for a, b in zip(lo, hi))].ravel().tolist())
        if wQ == 0:
            continue
        plo = [a + ncells for a in lo]
        cells = list(itertools.product(*[range(a, a + ncells) for a in plo]))
        vals = [float(v[c]) for c in cells]
        for r in range(1, len(cells) + 1):
            for sub in itertools.combinations(range(len(cells)), r):
                vE = math.fsum(vals[c] for c in sub)
                if vE == 0:
                    return math.inf
                best = max(best, restricted_ratio(r, nq, wQ, vE, p))
    return best


def brute_muckenhoupt_constant(pair: WeightPair, flavor: str = "dyadic") -> float:
    dom = pair.domain
    w, v, p = pair.w.density, pair.v.density, pair.p
    if p == 1:
        raise ValueError("needs p > 1")
    pp = p / (p - 1)
    best = 0.0
    for B in _qualifying(dom, flavor):
        lo, hi = dom.box_cells(B)
        ncells = hi[0] - lo[0]
        nq = ncells ** dom.dim
        wQ = math.fsum(w[tuple(slice(a, b) for a, b in zip(lo, hi))].ravel())
        if wQ == 0:
            continue
        block = v[tuple(slice(a + ncells, b + ncells) for a, b in zip(lo, hi))].ravel()
        if (block == 0).any():
            return math.inf
        dual = math.fsum(x ** (1 - pp) for x in block)
        best = max(best, (wQ / nq) * (dual / nq) ** (p - 1))
    return best
