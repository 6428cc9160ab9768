"""Restricted and classical one-sided weight-class constants on grids.

Two families of cubes are supported:

``dyadic``
    grid-dyadic cubes ``Q`` with ``Q`` and ``Q^+`` inside the extent;
``anchored``
    cell-anchored squares/cubes ``Q_{x,h}`` of dyadic size with ``Q^+`` inside
    the extent (the grid stand-in for the non-dyadic classes).

All suprema are exact on the grid.  The inner supremum over ``E`` in the
restricted class uses the sorted-prefix rule: for a fixed number of cells,
``v(E)`` is smallest on the cells of smallest ``v``, so only prefixes of the
ascending order of ``Q^+``'s cells can be extremal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .dyadic import Box, DyadicCube
from .grid import GridDomain, WeightField, WeightPair, block_sums, prefix_tables
from .maximal import dyadic_minus_maximal

__all__ = [
    "ClassConstant",
    "CubeBest",
    "normalize_flavor",
    "restricted_ratio",
    "restricted_constant",
    "restricted_profile",
    "muckenhoupt_constant",
    "a1_pointwise_check",
    "truncate_pair",
    "evaluate_restricted_ratio",
    "reflect_box",
]

_FLAVORS = {
    "dyadic": "dyadic",
    "anchored": "anchored",
    "planar": "anchored",
    "dyadic-size-anchored": "anchored",
}

_TAGS = {
    ("restricted", "dyadic"): "Ap{s}d(R)",
    ("restricted", "anchored"): "Ap{s}(R)",
    ("muckenhoupt", "dyadic"): "Ap{s}d",
    ("muckenhoupt", "anchored"): "Ap{s}",
    ("a1", "dyadic"): "A1{s}d",
    ("a1", "anchored"): "A1{s}",
}

# Relative window used to shortlist candidates before exact scalar re-evaluation.
_SHORTLIST = 1e-12


def normalize_flavor(flavor: str) -> str:
    try:
        return _FLAVORS[flavor]
    except KeyError:
        raise ValueError(f"unknown flavor {flavor!r}; expected one of {sorted(_FLAVORS)}") from None


@dataclass(frozen=True)
class ClassConstant:
    value: float
    class_tag: str
    p: float
    flavor: str
    witness_cube: DyadicCube | Box | None = None
    witness_cells: tuple[tuple[int, ...], ...] = ()
    side: str = "+"

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    def to_dict(self) -> dict:
        Q = self.witness_cube
        if isinstance(Q, DyadicCube):
            wc = {"level": Q.level, "anchor": list(Q.anchor)}
        elif isinstance(Q, Box):
            wc = {"lower": [str(c) for c in Q.lower], "upper": [str(c) for c in Q.upper]}
        else:
            wc = None
        return {
            "value": self.value,
            "class_tag": self.class_tag,
            "p": self.p,
            "flavor": self.flavor,
            "side": self.side,
            "witness_cube": wc,
            "witness_cells": [list(c) for c in self.witness_cells],
        }


@dataclass(frozen=True)
class CubeBest:
    """Best ``E`` inside ``Q^+`` for one qualifying cube."""

    cube: DyadicCube | Box
    lo: tuple[int, ...]          # cell index of Q's lower corner
    size: int                    # side of Q in cells
    value: float
    cells: tuple[tuple[int, ...], ...] = field(default=())


def restricted_ratio(n_e: int, n_q: int, w_q: float, v_e: float, p: float) -> float:
    """``(|E|/|Q|) (w(Q)/v(E))^{1/p}`` from cell counts and raw density sums."""
    if w_q == 0:
        return 0.0
    if v_e == 0:
        return math.inf
    if p == 1:
        return (w_q / n_q) * (n_e / v_e)
    return (n_e / n_q) * math.pow(w_q / v_e, 1.0 / p)


def _ratio_array(r, n_q, w_q, v_e, p):
    with np.errstate(divide="ignore", invalid="ignore"):
        if p == 1:
            out = (w_q / n_q) * (r / v_e)
        else:
            out = (r / n_q) * (w_q / v_e) ** (1.0 / p)
    out = np.where(v_e == 0, np.inf, out)
    return np.where(w_q == 0, 0.0, out)


def _block_view(a: np.ndarray, s: int) -> np.ndarray:
    """Reshape ``(m*s,)*n`` into ``(m,)*n + (s**n,)`` blocks."""
    n = a.ndim
    m = a.shape[0] // s
    b = a.reshape(sum(((m, s) for _ in range(n)), ()))
    b = b.transpose(tuple(range(0, 2 * n, 2)) + tuple(range(1, 2 * n, 2)))
    return b.reshape((m,) * n + (s ** n,))


def _window_view(a: np.ndarray, s: int, count: int) -> np.ndarray:
    """Cells of ``[c, c+s)^n`` for ``c`` in ``[s, s+count)^n``, flattened per window."""
    n = a.ndim
    win = np.lib.stride_tricks.sliding_window_view(a, (s,) * n)
    win = win[(slice(s, s + count),) * n]
    return win.reshape((count,) * n + (s ** n,))


def _size_candidates(pair: WeightPair, flavor: str) -> Iterator[tuple[int, int, np.ndarray, np.ndarray, np.ndarray]]:
    """Per cube size: (size in cells, cubes per side, lower corners, w sums, Q^+ cells of v)."""
    dom = pair.domain
    N, n = dom.n_side, dom.dim
    w, v = pair.w.density, pair.v.density
    if flavor == "dyadic":
        wsums = block_sums(w, dom)
        for k, ws in zip(dom.levels, wsums):
            s = 2 ** (dom.depth - k)
            m = N // s
            if m < 2:
                continue
            wq = ws[(slice(0, m - 1),) * n]
            vb = _block_view(v, s)[(slice(1, None),) * n]
            lows = np.arange(m - 1) * s
            yield s, m - 1, lows, wq, vb
    else:
        table = prefix_tables(pair.w)
        for k in dom.levels:
            s = 2 ** (dom.depth - k)
            count = N - 2 * s + 1
            if count < 1:
                continue
            wq = np.asarray(table.window_sums(0, s), dtype=np.float64)[(slice(0, count),) * n]
            vb = _window_view(v, s, count)
            yield s, count, np.arange(count), wq, vb


def _scan_size(s, count, lows, wq, vb, p, n):
    """Approximate prefix ratios for every cube of one size; returns (ratios, order, sorted v, w sums)."""
    ncube = count ** n
    nq = s ** n
    V = vb.reshape(ncube, nq)
    order = np.argsort(V, axis=1, kind="stable")
    Vs = np.take_along_axis(V, order, axis=1)
    cum = np.cumsum(Vs, axis=1)
    r = np.arange(1, nq + 1, dtype=np.float64)[None, :]
    W = wq.reshape(ncube)[:, None]
    ratios = _ratio_array(r, float(nq), W, cum, p)
    return ratios, order, Vs, W[:, 0]


def _exact_prefix_sums(vals: np.ndarray) -> list[float]:
    """Correctly rounded prefix sums (exact integer accumulation, one rounding each)."""
    fr = [float(x).as_integer_ratio() for x in vals]
    den = max(d for _, d in fr)
    out, acc = [], 0
    for num, d in fr:
        acc += num * (den // d)
        out.append(acc / den)
    return out


def _exact_best(ratios_row, v_sorted, w_cells, nq, p) -> tuple[float, int]:
    """Best prefix length (smallest on ties) and its value from correctly rounded sums.

    The float scan shortlists prefixes within ``_SHORTLIST`` of its maximum;
    those are re-evaluated with ``w(Q)`` and ``v(E)`` rounded once, so the
    value does not depend on summation order.
    """
    top = ratios_row.max()
    if top == 0:
        return 0.0, int(np.argmax(ratios_row))
    thresh = top * (1 - _SHORTLIST) if math.isfinite(top) else top
    cand = np.nonzero(ratios_row >= thresh)[0]
    w_q = math.fsum(w_cells.ravel().tolist())
    sums = _exact_prefix_sums(v_sorted[: int(cand[-1]) + 1])
    best, bj = -1.0, -1
    for j in cand:
        val = restricted_ratio(int(j) + 1, nq, w_q, sums[j], p)
        if val > best:
            best, bj = val, int(j)
    return best, bj


def _w_cells(w: np.ndarray, lo, s: int) -> np.ndarray:
    return w[tuple(slice(a, a + s) for a in lo)]


def _cube_of(dom: GridDomain, flavor: str, lo: tuple[int, ...], s: int):
    if flavor == "dyadic":
        k = dom.depth - (s.bit_length() - 1)
        return DyadicCube(k, tuple(o // s + i // s for o, i in zip(dom.origin, lo)))
    cs = dom.cell_side
    return Box.square([c + i * cs for c, i in zip(dom.extent.lower, lo)], s * cs)


def _cells_of(lo, s, n, order_row, j) -> tuple[tuple[int, ...], ...]:
    cells = []
    for flat in order_row[: j + 1]:
        local = np.unravel_index(int(flat), (s,) * n)
        cells.append(tuple(int(a + s + b) for a, b in zip(lo, local)))
    return tuple(sorted(cells))


def restricted_profile(pair: WeightPair, flavor: str = "dyadic") -> list[CubeBest]:
    """Exact best ``E`` for every qualifying cube (sizes coarse to fine, anchors lexicographic)."""
    flavor = normalize_flavor(flavor)
    dom = pair.domain
    n, p = dom.dim, pair.p
    out = []
    for s, count, lows, wq, vb in _size_candidates(pair, flavor):
        ratios, order, Vs, W = _scan_size(s, count, lows, wq, vb, p, n)
        for c in range(count ** n):
            pos = np.unravel_index(c, (count,) * n)
            lo = tuple(int(lows[i]) for i in pos)
            val, j = _exact_best(ratios[c], Vs[c], _w_cells(pair.w.density, lo, s), s ** n, p)
            cells = _cells_of(lo, s, n, order[c], j) if W[c] > 0 else ()
            out.append(CubeBest(_cube_of(dom, flavor, lo, s), lo, s, val, cells))
    return out


def _tag(kind: str, flavor: str, side: str) -> str:
    return _TAGS[(kind, flavor)].format(s=side)


def _check_side(side: str) -> None:
    if side not in ("+", "-"):
        raise ValueError(f"side must be '+' or '-', got {side!r}")


def reflect_box(dom: GridDomain, box):
    """Mirror a box (or dyadic cube) through the centre of the extent."""
    is_cube = isinstance(box, DyadicCube)
    B = box.box if is_cube else box
    elo, ehi = dom.extent.lower, dom.extent.upper
    lo = [a + b - u for a, b, u in zip(elo, ehi, B.upper)]
    hi = [a + b - l for a, b, l in zip(elo, ehi, B.lower)]
    R = Box.from_coords(lo, hi)
    return DyadicCube.from_box(R) if is_cube else R


def _reflect_constant(dom: GridDomain, c: ClassConstant) -> ClassConstant:
    N = dom.n_side
    Q = reflect_box(dom, c.witness_cube) if c.witness_cube is not None else None
    cells = tuple(sorted(tuple(N - 1 - i for i in cell) for cell in c.witness_cells))
    return ClassConstant(c.value, c.class_tag, c.p, c.flavor, Q, cells, c.side)


def restricted_constant(pair: WeightPair, flavor: str = "dyadic", side: str = "+") -> ClassConstant:
    """``sup_Q sup_{E subset Q^+} (|E|/|Q|) (w(Q)/v(E))^{1/p}`` over qualifying cubes.

    ``side='-'`` gives the mirrored class (``E`` inside ``Q^-``).  An empty
    family of qualifying cubes gives 0.
    """
    _check_side(side)
    flavor = normalize_flavor(flavor)
    dom = pair.domain
    if side == "-":
        c = restricted_constant(pair.reflect(), flavor, "+")
        c = ClassConstant(c.value, _tag("restricted", flavor, "-"), c.p, flavor,
                          c.witness_cube, c.witness_cells, "-")
        return _reflect_constant(dom, c)
    n, p = dom.dim, pair.p
    best, arg = 0.0, None
    for s, count, lows, wq, vb in _size_candidates(pair, flavor):
        ratios, order, Vs, W = _scan_size(s, count, lows, wq, vb, p, n)
        row_max = ratios.max(axis=1)
        top = row_max.max()
        if top == 0 or top < best * (1 - _SHORTLIST):
            continue
        thresh = top * (1 - _SHORTLIST) if math.isfinite(top) else top
        for c in np.nonzero(row_max >= thresh)[0]:
            pos = np.unravel_index(int(c), (count,) * n)
            lo = tuple(int(lows[i]) for i in pos)
            val, j = _exact_best(ratios[c], Vs[c], _w_cells(pair.w.density, lo, s), s ** n, p)
            if val > best:
                best, arg = val, (s, count, lows, int(c), order[c], j)
        if math.isinf(best):
            break
    if arg is None:
        return ClassConstant(0.0, _tag("restricted", flavor, "+"), p, flavor)
    s, count, lows, c, order_row, j = arg
    pos = np.unravel_index(c, (count,) * n)
    lo = tuple(int(lows[i]) for i in pos)
    return ClassConstant(best, _tag("restricted", flavor, "+"), p, flavor,
                         _cube_of(dom, flavor, lo, s), _cells_of(lo, s, n, order_row, j), "+")


def evaluate_restricted_ratio(pair: WeightPair, cube, cells) -> float:
    """Re-evaluate ``(|E|/|Q|)(w(Q)/v(E))^{1/p}`` for an explicit cube and cell list."""
    dom = pair.domain
    box = cube.box if isinstance(cube, DyadicCube) else cube
    lo, hi = dom.box_cells(box, clip=False)
    nq = 1
    for a, b in zip(lo, hi):
        nq *= b - a
    w_q = math.fsum(pair.w.density[tuple(slice(a, b) for a, b in zip(lo, hi))].ravel())
    v_e = math.fsum(float(pair.v.density[tuple(c)]) for c in cells)
    return restricted_ratio(len(cells), nq, w_q, v_e, pair.p)


def muckenhoupt_constant(pair: WeightPair, flavor: str = "dyadic", side: str = "+") -> ClassConstant:
    """``sup_Q (w(Q)/|Q|) (|Q|^{-1} int_{Q^+} v^{1-p'})^{p-1}``; ``v = 0`` under positive ``w(Q)`` gives infinity."""
    _check_side(side)
    flavor = normalize_flavor(flavor)
    if pair.p == 1:
        raise ValueError("p = 1: use a1_pointwise_check")
    dom = pair.domain
    if side == "-":
        c = muckenhoupt_constant(pair.reflect(), flavor, "+")
        c = ClassConstant(c.value, _tag("muckenhoupt", flavor, "-"), c.p, flavor,
                          c.witness_cube, (), "-")
        return _reflect_constant(dom, c)
    p = pair.p
    pp = p / (p - 1)
    v = pair.v.density
    zero = (v == 0)
    with np.errstate(divide="ignore"):
        u = np.where(zero, 0.0, v ** (1 - pp))
    n, N = dom.dim, dom.n_side
    best, arg = 0.0, None
    if flavor == "dyadic":
        ws = block_sums(pair.w.density, dom)
        us = block_sums(u, dom)
        zs = block_sums(zero.astype(np.int64), dom)
        for k, wk, uk, zk in zip(dom.levels, ws, us, zs):
            s = 2 ** (dom.depth - k)
            m = N // s
            if m < 2:
                continue
            core = (slice(0, m - 1),) * n
            plus = (slice(1, m),) * n
            vals = _muck_values(wk[core], uk[plus], zk[plus], s ** n, p)
            c = int(np.argmax(vals))
            if vals.flat[c] > best:
                best = float(vals.flat[c])
                lo = tuple(int(i) * s for i in np.unravel_index(c, vals.shape))
                arg = (lo, s)
    else:
        tw, tu, tz = prefix_tables(pair.w), prefix_tables(WeightField(dom, u)), prefix_tables(
            WeightField(dom, zero.astype(np.float64)))
        for k in dom.levels:
            s = 2 ** (dom.depth - k)
            count = N - 2 * s + 1
            if count < 1:
                continue
            core = (slice(0, count),) * n
            plus = (slice(s, s + count),) * n
            wq = np.asarray(tw.window_sums(0, s), dtype=np.float64)[core]
            uq = np.asarray(tu.window_sums(0, s), dtype=np.float64)[plus]
            zq = np.asarray(tz.window_sums(0, s), dtype=np.float64)[plus]
            vals = _muck_values(wq, uq, zq, s ** n, p)
            c = int(np.argmax(vals))
            if vals.flat[c] > best:
                best = float(vals.flat[c])
                arg = (tuple(int(i) for i in np.unravel_index(c, vals.shape)), s)
    tag = _tag("muckenhoupt", flavor, "+")
    if arg is None:
        return ClassConstant(0.0, tag, p, flavor)
    lo, s = arg
    return ClassConstant(best, tag, p, flavor, _cube_of(dom, flavor, lo, s), (), "+")


def _muck_values(wq, uq, zq, nq, p):
    vals = (wq / nq) * (uq / nq) ** (p - 1)
    vals = np.where(zq > 0, np.inf, vals)
    return np.where(wq == 0, 0.0, vals)  # 0 * inf = 0: no w-mass, no constraint


def _anchored_minus_mean(pair: WeightPair) -> tuple[np.ndarray, np.ndarray]:
    """Per cell ``y``: max of ``w(Q)/|Q|`` over qualifying anchored ``Q`` with ``y`` in ``Q^+``."""
    dom = pair.domain
    N, n = dom.n_side, dom.dim
    table = prefix_tables(pair.w)
    out = np.zeros(dom.shape)
    lvl = np.full(dom.shape, -1, dtype=np.int16)
    for k in dom.levels:
        s = 2 ** (dom.depth - k)
        count = N - 2 * s + 1
        if count < 1:
            continue
        means = np.asarray(table.window_sums(0, s), dtype=np.float64)[(slice(0, count),) * n] / float(s ** n)
        # y in Q_{c,s}^+  <=>  c in [y - 2s + 1, y - s] per axis; Q^+ cells start at c + s
        g = means
        for ax in range(n):
            pad = [(0, 0)] * n
            pad[ax] = (s - 1, s - 1)
            gp = np.pad(g, pad, constant_values=-np.inf)
            win = np.lib.stride_tricks.sliding_window_view(gp, s, axis=ax)
            g = win.max(axis=-1)  # g[c'] = max over c in [c' - s + 1, c']
        # now g[c'] for c' in [0, count + s - 1); cell y = c' + s
        target = (slice(s, s + count + s - 1),) * n
        cur = out[target]
        take = g >= cur
        out[target] = np.where(take, g, cur)
        lvl[target] = np.where(take, np.int16(k), lvl[target])
    return np.maximum(out, 0.0), lvl


def a1_pointwise_check(pair: WeightPair, flavor: str = "dyadic", side: str = "+") -> ClassConstant:
    """``max_y M^- w(y) / v(y)`` over cells; infinity if ``v(y) = 0`` below positive ``M^- w(y)``.

    The minus operator runs over the cubes that qualify for the class, so on
    grids this equals the restricted constant at ``p = 1``.
    """
    _check_side(side)
    flavor = normalize_flavor(flavor)
    if pair.p != 1:
        raise ValueError(f"a1_pointwise_check needs p = 1, got {pair.p}")
    dom = pair.domain
    if side == "-":
        c = a1_pointwise_check(pair.reflect(), flavor, "+")
        c = ClassConstant(c.value, _tag("a1", flavor, "-"), 1.0, flavor, c.witness_cube, c.witness_cells, "-")
        return _reflect_constant(dom, c)
    v = pair.v.density
    if flavor == "dyadic":
        r = dyadic_minus_maximal(pair.w)
        mw, lvl = r.values, r.witness_level
    else:
        mw, lvl = _anchored_minus_mean(pair)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(v > 0, 1.0 / np.where(v > 0, v, 1.0), np.inf)
        ratio = np.where(mw > 0, mw * inv, 0.0)
    c = int(np.argmax(ratio))
    value = float(ratio.flat[c])
    tag = _tag("a1", flavor, "+")
    if value == 0:
        return ClassConstant(0.0, tag, 1.0, flavor)
    y = tuple(int(i) for i in np.unravel_index(c, dom.shape))
    return ClassConstant(value, tag, 1.0, flavor, _a1_witness(dom, flavor, y, int(lvl[y]), pair), (y,), "+")


def _a1_witness(dom, flavor, y, k, pair):
    if flavor == "dyadic":
        Q = dom.cell_cube(y).ancestor(k)
        return DyadicCube(Q.level, tuple(a - 1 for a in Q.anchor))
    s = 2 ** (dom.depth - k)
    table = prefix_tables(pair.w)
    means = np.asarray(table.window_sums(0, s), dtype=np.float64) / float(s ** dom.dim)
    best, arg = -1.0, None
    for off in np.ndindex(*(s,) * dom.dim):
        c = tuple(yi - s - o for yi, o in zip(y, off))
        if all(0 <= ci and ci + 2 * s <= dom.n_side for ci in c) and means[c] > best:
            best, arg = means[c], c
    return _cube_of(dom, flavor, arg, s)


_VARIANTS = ("max-max", "min-max")


def truncate_pair(pair: WeightPair, a: float, b: float, variant: str = "max-max") -> WeightPair:
    """``(max{w,a}, max{v,b})`` or ``(min{w,a}, max{v,b})`` cellwise."""
    if variant not in _VARIANTS:
        raise ValueError(f"variant must be one of {_VARIANTS}")
    if not (a > 0 and b > 0):
        raise ValueError("truncation levels must be positive")
    dom = pair.domain
    w = np.maximum(pair.w.density, a) if variant == "max-max" else np.minimum(pair.w.density, a)
    v = np.maximum(pair.v.density, b)
    return WeightPair(WeightField(dom, w), WeightField(dom, v), pair.p)
