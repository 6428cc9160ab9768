"""Finite dyadic grids, cell sets, cell-constant weights and exact measures.

A :class:`GridDomain` tiles a dyadic cube (the *extent*, by default ``[0, 1)^n``)
with cells of side ``2**-depth``.  Arrays over the domain are indexed
``[i1, i2, ...]`` with ``i1`` the first coordinate.  Requiring the extent to be
a dyadic cube means every grid-dyadic cube ``Q`` inside it has ``Q^+`` either
inside the extent or disjoint from it, which is what lets finite grids stand in
for the whole space.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

import numpy as np

from ._parallel import run_chunks, split_range, thread_count
from .dyadic import Box, DyadicCube, minus_neighbor, plus_neighbor

__all__ = [
    "GridDomain",
    "CellSet",
    "WeightField",
    "WeightPair",
    "SummedTable",
    "measure",
    "prefix_tables",
    "block_sums",
    "enumerate_dyadic_cubes",
]

# Prefix tables above this many cells accumulate in extended precision.
EXTENDED_PRECISION_CELLS = 2 ** 20


@dataclass(frozen=True)
class GridDomain:
    dim: int
    depth: int
    extent: DyadicCube | None = None

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        ext = self.extent
        if ext is None:
            ext = DyadicCube(0, (0,) * self.dim)
        elif isinstance(ext, Box):
            ext = DyadicCube.from_box(ext)
        if ext.dim != self.dim:
            raise ValueError("extent dimension does not match dim")
        if self.depth < ext.level:
            raise ValueError(f"depth {self.depth} is coarser than the extent (level {ext.level})")
        object.__setattr__(self, "extent", ext)

    @property
    def n_side(self) -> int:
        return 2 ** (self.depth - self.extent.level)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_side,) * self.dim

    @property
    def n_cells(self) -> int:
        return self.n_side ** self.dim

    @property
    def levels(self) -> range:
        return range(self.extent.level, self.depth + 1)

    @property
    def cell_side(self) -> Fraction:
        return Fraction(1, 2 ** self.depth) if self.depth >= 0 else Fraction(2 ** -self.depth)

    @property
    def cell_volume(self) -> float:
        return float(self.cell_side ** self.dim)

    @property
    def origin(self) -> tuple[int, ...]:
        """Anchor (at level ``depth``) of cell ``(0, ..., 0)``."""
        s = self.depth - self.extent.level
        return tuple(a << s for a in self.extent.anchor)

    def blocks_per_side(self, level: int) -> int:
        return 2 ** (level - self.extent.level)

    def cell_cube(self, index) -> DyadicCube:
        return DyadicCube(self.depth, tuple(o + int(i) for o, i in zip(self.origin, index)))

    def cell_corner(self, index) -> tuple[Fraction, ...]:
        return self.cell_cube(index).lower

    def cube_block(self, cube: DyadicCube) -> tuple[int, ...]:
        """Index of ``cube`` among the level-``cube.level`` blocks of the extent (may be out of range)."""
        s = cube.level - self.extent.level
        return tuple(a - (e << s) for a, e in zip(cube.anchor, self.extent.anchor))

    def contains_cube(self, cube: DyadicCube) -> bool:
        if cube.dim != self.dim or cube.level < self.extent.level:
            return False
        m = self.blocks_per_side(cube.level)
        return all(0 <= b < m for b in self.cube_block(cube))

    def cube_slices(self, cube: DyadicCube) -> tuple[slice, ...] | None:
        """Cell slices of ``cube`` clipped to the extent, ``None`` when disjoint from it."""
        if cube.level > self.depth:
            raise ValueError("cube is finer than a grid cell")
        s = self.depth - cube.level
        out = []
        for a, o in zip(cube.anchor, self.origin):
            lo = (a << s) - o
            hi = lo + (1 << s)
            lo, hi = max(lo, 0), min(hi, self.n_side)
            if lo >= hi:
                return None
            out.append(slice(lo, hi))
        return tuple(out)

    def cell_coords(self, box: Box) -> tuple[list[Fraction], list[Fraction]]:
        """Corners of ``box`` in cell units relative to the extent's lower corner."""
        lo0 = self.extent.lower
        cs = self.cell_side
        return ([(a - o) / cs for a, o in zip(box.lower, lo0)],
                [(b - o) / cs for b, o in zip(box.upper, lo0)])

    def box_cells(self, box: Box, clip: bool = True) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Integer cell range ``[lo, hi)`` of a cell-aligned box."""
        lo, hi = self.cell_coords(box)
        if any(v.denominator != 1 for v in lo + hi):
            raise ValueError(f"{box} is not aligned to the cells of {self}")
        lo, hi = [int(v) for v in lo], [int(v) for v in hi]
        if clip:
            lo = [min(max(v, 0), self.n_side) for v in lo]
            hi = [min(max(v, 0), self.n_side) for v in hi]
        return tuple(lo), tuple(hi)

    def contains_box(self, box: Box) -> bool:
        lo, hi = self.cell_coords(box)
        return all(a >= 0 for a in lo) and all(b <= self.n_side for b in hi)

    def refine(self, r: int = 1) -> "GridDomain":
        return GridDomain(self.dim, self.depth + r, self.extent)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class CellSet:
    """A set made of whole cells of a domain (boolean mask)."""

    domain: GridDomain
    mask: np.ndarray

    def __post_init__(self):
        m = np.array(self.mask, dtype=bool)
        if m.shape != self.domain.shape:
            raise ValueError(f"mask shape {m.shape} does not match domain {self.domain.shape}")
        object.__setattr__(self, "mask", _readonly(m))

    __hash__ = None

    def __eq__(self, other):
        return (isinstance(other, CellSet) and self.domain == other.domain
                and np.array_equal(self.mask, other.mask))

    @classmethod
    def empty(cls, domain: GridDomain) -> "CellSet":
        return cls(domain, np.zeros(domain.shape, dtype=bool))

    @classmethod
    def full(cls, domain: GridDomain) -> "CellSet":
        return cls(domain, np.ones(domain.shape, dtype=bool))

    @classmethod
    def from_box(cls, domain: GridDomain, box: Box) -> "CellSet":
        lo, hi = domain.box_cells(box)
        m = np.zeros(domain.shape, dtype=bool)
        m[tuple(slice(a, b) for a, b in zip(lo, hi))] = True
        return cls(domain, m)

    @classmethod
    def from_cubes(cls, domain: GridDomain, cubes) -> "CellSet":
        m = np.zeros(domain.shape, dtype=bool)
        for q in cubes:
            sl = domain.cube_slices(q)
            if sl is not None:
                m[sl] = True
        return cls(domain, m)

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def measure(self) -> float:
        """Lebesgue measure ``|E|``."""
        return self.count * self.domain.cell_volume

    def is_empty(self) -> bool:
        return not self.mask.any()

    def cells(self) -> list[tuple[int, ...]]:
        return [tuple(int(v) for v in ix) for ix in np.argwhere(self.mask)]

    def _check(self, other: "CellSet") -> None:
        if self.domain != other.domain:
            raise ValueError("cell sets live on different domains")

    def __or__(self, other):
        self._check(other)
        return CellSet(self.domain, self.mask | other.mask)

    def __and__(self, other):
        self._check(other)
        return CellSet(self.domain, self.mask & other.mask)

    def __sub__(self, other):
        self._check(other)
        return CellSet(self.domain, self.mask & ~other.mask)

    def __invert__(self):
        return CellSet(self.domain, ~self.mask)

    def issubset(self, other: "CellSet") -> bool:
        self._check(other)
        return not (self.mask & ~other.mask).any()

    def indicator(self) -> "WeightField":
        return WeightField(self.domain, self.mask.astype(np.float64))

    def refine(self, r: int = 1) -> "CellSet":
        m = self.mask
        for ax in range(m.ndim):
            m = np.repeat(m, 2 ** r, axis=ax)
        return CellSet(self.domain.refine(r), m)

    def reflect(self) -> "CellSet":
        return CellSet(self.domain, np.flip(self.mask))


@dataclass(frozen=True, eq=False)
class WeightField:
    """Nonnegative density, constant on each cell."""

    domain: GridDomain
    density: np.ndarray

    def __post_init__(self):
        d = np.array(self.density, dtype=np.float64)
        if d.shape != self.domain.shape:
            raise ValueError(f"density shape {d.shape} does not match domain {self.domain.shape}")
        if not np.all(np.isfinite(d)) or (d < 0).any():
            raise ValueError("densities must be finite and nonnegative")
        object.__setattr__(self, "density", _readonly(d))

    __hash__ = None

    def __eq__(self, other):
        return (isinstance(other, WeightField) and self.domain == other.domain
                and np.array_equal(self.density, other.density))

    @classmethod
    def constant(cls, domain: GridDomain, c: float = 1.0) -> "WeightField":
        return cls(domain, np.full(domain.shape, float(c)))

    def measure(self, target, strict: bool = False) -> float:
        return measure(self, target, strict=strict)

    @property
    def total(self) -> float:
        return math.fsum(self.density.ravel()) * self.domain.cell_volume

    def refine(self, r: int = 1) -> "WeightField":
        d = self.density
        for ax in range(d.ndim):
            d = np.repeat(d, 2 ** r, axis=ax)
        return WeightField(self.domain.refine(r), d)

    def reflect(self) -> "WeightField":
        return WeightField(self.domain, np.flip(self.density))


@dataclass(frozen=True, eq=False)
class WeightPair:
    """Pair ``(w, v)`` with exponent ``p >= 1`` on one domain."""

    w: WeightField
    v: WeightField
    p: float = 1.0

    def __post_init__(self):
        if self.w.domain != self.v.domain:
            raise ValueError("w and v live on different domains")
        p = float(self.p)
        if not (p >= 1.0 and math.isfinite(p)):
            raise ValueError(f"p must be a finite number >= 1, got {self.p}")
        object.__setattr__(self, "p", p)

    @property
    def domain(self) -> GridDomain:
        return self.w.domain

    @property
    def dual_exponent(self) -> float:
        """``p' = p / (p - 1)``; infinite when ``p == 1``."""
        return math.inf if self.p == 1 else self.p / (self.p - 1)

    def with_p(self, p: float) -> "WeightPair":
        return WeightPair(self.w, self.v, p)

    def reflect(self) -> "WeightPair":
        return WeightPair(self.w.reflect(), self.v.reflect(), self.p)

    def scaled(self, c: float) -> "WeightPair":
        return WeightPair(WeightField(self.domain, self.w.density * c),
                          WeightField(self.domain, self.v.density * c), self.p)


def _axis_overlaps(lo: Fraction, hi: Fraction, n: int) -> tuple[int, np.ndarray]:
    """First touched cell and per-cell overlap lengths of ``[lo, hi)`` with cells ``0..n-1``."""
    lo, hi = max(lo, Fraction(0)), min(hi, Fraction(n))
    if lo >= hi:
        return 0, np.zeros(0)
    first, last = math.floor(lo), math.ceil(hi)
    ov = [float(min(hi, Fraction(j + 1)) - max(lo, Fraction(j))) for j in range(first, last)]
    return first, np.array(ov)


def measure(field: WeightField, target, strict: bool = False) -> float:
    """Weighted volume ``w(S)`` of a cell set, box or dyadic cube.

    Boxes need not be cell-aligned: partially covered cells contribute their
    covered fraction.  Parts outside the extent carry no mass unless
    ``strict``, which rejects them.
    """
    dom = field.domain
    if isinstance(target, CellSet):
        if target.domain != dom:
            raise ValueError("set and field live on different domains")
        return math.fsum(field.density[target.mask]) * dom.cell_volume
    box = target.box if isinstance(target, DyadicCube) else target
    if not isinstance(box, Box):
        raise TypeError(f"cannot measure {type(target).__name__}")
    if box.dim != dom.dim:
        raise ValueError("dimension mismatch")
    if strict and not dom.contains_box(box):
        raise ValueError(f"{box} leaves the extent of {dom}")
    lo, hi = dom.cell_coords(box)
    slices, weights = [], []
    for a, b in zip(lo, hi):
        first, ov = _axis_overlaps(a, b, dom.n_side)
        if ov.size == 0:
            return 0.0
        slices.append(slice(first, first + ov.size))
        weights.append(ov)
    block = field.density[tuple(slices)]
    if all(np.all(wt == 1.0) for wt in weights):
        vals = block
    else:
        wgt = weights[0]
        for wt in weights[1:]:
            wgt = np.multiply.outer(wgt, wt)
        vals = block * wgt
    return math.fsum(vals.ravel()) * dom.cell_volume


@dataclass(frozen=True, eq=False)
class SummedTable:
    """Zero-padded n-dimensional prefix sums; box sums by inclusion-exclusion."""

    domain: GridDomain
    table: np.ndarray

    @property
    def total(self) -> float:
        """Total mass over the extent."""
        return float(self.table[(-1,) * self.domain.dim]) * self.domain.cell_volume

    def sums(self, lo, hi):
        """Raw density sums over the cell ranges ``[lo, hi)`` (clipped); arrays of shape (..., n)."""
        n = self.domain.dim
        N = self.domain.n_side
        lo = np.clip(np.asarray(lo, dtype=np.int64), 0, N)
        hi = np.clip(np.asarray(hi, dtype=np.int64), 0, N)
        hi = np.maximum(hi, lo)
        out = 0
        for bits in itertools.product((0, 1), repeat=n):
            idx = tuple(np.where(b, hi[..., ax], lo[..., ax]) for ax, b in enumerate(bits))
            term = self.table[idx]
            out = out + term if (n - sum(bits)) % 2 == 0 else out - term
        return out

    def window_sums(self, offset, size: int) -> np.ndarray:
        """For every cell ``i``, the sum over cells ``[i + offset, i + offset + size)``."""
        n = self.domain.dim
        N = self.domain.n_side
        if np.isscalar(offset):
            offset = (offset,) * n
        base = np.arange(N)
        lo = [np.clip(base + o, 0, N) for o in offset]
        hi = [np.clip(base + o + size, 0, N) for o in offset]
        out = 0
        for bits in itertools.product((0, 1), repeat=n):
            sel = [hi[ax] if b else lo[ax] for ax, b in enumerate(bits)]
            term = self.table[np.ix_(*sel)]
            out = out + term if (n - sum(bits)) % 2 == 0 else out - term
        return out

    def query(self, box: Box) -> float:
        """Mass of a cell-aligned box (clipped to the extent)."""
        lo, hi = self.domain.box_cells(box)
        return float(self.sums(np.array(lo), np.array(hi))) * self.domain.cell_volume


def prefix_tables(f: Union[WeightField, CellSet]) -> SummedTable:
    dom = f.domain
    if isinstance(f, CellSet):
        vals = f.mask.astype(np.int64)
    else:
        dtype = np.longdouble if dom.n_cells > EXTENDED_PRECISION_CELLS else np.float64
        vals = f.density.astype(dtype)
    t = np.zeros(tuple(s + 1 for s in vals.shape), dtype=vals.dtype)
    inner = vals
    for ax in range(vals.ndim):
        inner = np.cumsum(inner, axis=ax)
    t[(slice(1, None),) * vals.ndim] = inner
    return SummedTable(dom, _readonly(t))


def _halve(a: np.ndarray) -> np.ndarray:
    for ax in range(a.ndim):
        sl0 = [slice(None)] * a.ndim
        sl1 = [slice(None)] * a.ndim
        sl0[ax] = slice(0, None, 2)
        sl1[ax] = slice(1, None, 2)
        a = a[tuple(sl0)] + a[tuple(sl1)]
    return a


def block_sums(values: np.ndarray, domain: GridDomain, threads: int | None = 1) -> list[np.ndarray]:
    """Sums of ``values`` over every grid-dyadic cube, one array per level.

    ``out[k - k0]`` has shape ``(2**(k - k0),) * n``; the last entry is ``values``
    itself.  Children are added pairwise along each axis in a fixed order, so
    the result does not depend on the thread count.
    """
    values = np.asarray(values)
    levels = list(domain.levels)
    out = [values]
    cur = values
    threads = thread_count(threads)
    for _ in levels[:-1]:
        if threads > 1 and cur.shape[0] >= 2 * threads:
            spans = split_range(cur.shape[0] // 2, threads)
            parts = run_chunks(lambda s: _halve(cur[2 * s[0]: 2 * s[1]]), spans, threads)
            cur = np.concatenate(parts, axis=0)
        else:
            cur = _halve(cur)
        out.append(cur)
    return out[::-1]


_CONSTRAINTS = ("inside", "plus", "minus")


def enumerate_dyadic_cubes(domain: GridDomain, constraint: str = "inside") -> Iterator[DyadicCube]:
    """Grid-dyadic cubes inside the extent, coarse to fine, anchors in lexicographic order.

    ``constraint``: ``"inside"`` (``Q`` in the extent), ``"plus"`` (also ``Q^+``),
    ``"minus"`` (also ``Q^-``).
    """
    if constraint not in _CONSTRAINTS:
        raise ValueError(f"constraint must be one of {_CONSTRAINTS}")
    for k in domain.levels:
        m = domain.blocks_per_side(k)
        shift = k - domain.extent.level
        base = [e << shift for e in domain.extent.anchor]
        for idx in itertools.product(range(m), repeat=domain.dim):
            q = DyadicCube(k, tuple(b + i for b, i in zip(base, idx)))
            if constraint == "plus" and not domain.contains_cube(plus_neighbor(q)):
                continue
            if constraint == "minus" and not domain.contains_cube(minus_neighbor(q)):
                continue
            yield q
