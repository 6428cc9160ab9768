"""Cell-exact maximal operators on dyadic grids.

Dyadic operators take suprema over grid-dyadic cubes ``Q`` containing the
cell (levels from the extent down to one cell) of ``|Q|^{-1} * int_{Q^+} |f|``
(``Q^-`` for the minus operator).  Anchored operators take, at the lower-left
corner ``x`` of each cell, suprema over dyadic sizes ``h`` of the mean of
``|f|`` over ``Q_{x,h} = [x, x+h)^n`` or over one of its quarters.  Mass
outside the extent counts as zero; an empty supremum is zero; ties pick the
smallest cube.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

import numpy as np

from ._parallel import run_chunks, split_range, thread_count
from .dyadic import QUARTER_OFFSETS, Box, DyadicCube, dyadic_parts
from .grid import CellSet, GridDomain, WeightField, block_sums, prefix_tables

__all__ = [
    "MaximalResult",
    "dyadic_plus_maximal",
    "dyadic_minus_maximal",
    "anchored_maximal",
    "onesided_maximal_2d",
    "subsquare_maximal_2d",
    "anchored_means",
    "subsquare_means_2d",
    "xi_level",
    "level_set",
]

Integrand = Union[WeightField, CellSet]


@dataclass(frozen=True, eq=False)
class MaximalResult:
    """Operator values per cell with the level of the maximizing cube (or square).

    ``kind`` is one of ``"plus"``, ``"minus"``, ``"anchored"``, ``"quarter1"``,
    ``"quarter2"``, ``"quarter3"``.
    """

    domain: GridDomain
    values: np.ndarray
    witness_level: np.ndarray
    kind: str

    def witness(self, index) -> DyadicCube | Box | None:
        """The maximizing cube of cell ``index``; ``None`` if the supremum was empty."""
        index = tuple(int(i) for i in index)
        k = int(self.witness_level[index])
        if k < 0:
            return None
        cell = self.domain.cell_cube(index)
        if self.kind in ("plus", "minus"):
            return cell.ancestor(k)
        h = Fraction(1, 2 ** k) if k >= 0 else Fraction(2 ** -k)
        x = cell.lower
        if self.kind == "anchored":
            return Box.square(x, h)
        o1, o2 = QUARTER_OFFSETS[int(self.kind[-1])]
        return Box.square((x[0] + o1 * h / 2, x[1] + o2 * h / 2), h / 2)

    def to_field(self) -> WeightField:
        return WeightField(self.domain, self.values)


def _density(f: Integrand, domain: GridDomain | None) -> tuple[GridDomain, np.ndarray]:
    if domain is not None and f.domain != domain:
        raise ValueError("integrand lives on a different domain")
    if isinstance(f, CellSet):
        return f.domain, f.mask.astype(np.float64)
    if isinstance(f, WeightField):
        return f.domain, np.abs(f.density)
    raise TypeError(f"unsupported integrand {type(f).__name__}")


def _shift_plus(a: np.ndarray) -> np.ndarray:
    """``out[b] = a[b + 1]`` in every axis, zero past the end."""
    out = np.zeros_like(a)
    out[(slice(0, -1),) * a.ndim] = a[(slice(1, None),) * a.ndim]
    return out


def _upsample(a: np.ndarray) -> np.ndarray:
    for ax in range(a.ndim):
        a = np.repeat(a, 2, axis=ax)
    return a


def _merge_level(val, lvl, new, k, threads):
    """Refine ``(val, lvl)`` one level and let ``new`` win ties (smaller cube)."""
    n0 = new.shape[0]

    def work(span):
        a, b = span
        up = _upsample(val[a // 2: (b + 1) // 2])
        ul = _upsample(lvl[a // 2: (b + 1) // 2])
        nv = new[a:b]
        take = nv >= up
        return np.where(take, nv, up), np.where(take, np.int16(k), ul)

    if threads > 1 and n0 >= 8 * threads:
        spans = [(a, b) for a, b in split_range(n0 // 2, threads)]
        spans = [(2 * a, 2 * b) for a, b in spans]
        parts = run_chunks(work, spans, threads)
        return (np.concatenate([p[0] for p in parts], axis=0),
                np.concatenate([p[1] for p in parts], axis=0))
    return work((0, n0))


def dyadic_plus_maximal(f: Integrand, domain: GridDomain | None = None,
                        threads: int | None = 1) -> MaximalResult:
    """``M^{+,d} f`` on every cell, ``O(cells * L)`` via block-sum pyramids.

    ``threads=None`` uses all available workers (capped by ``ONESIDED_THREADS``).
    """
    dom, dens = _density(f, domain)
    threads = thread_count(threads)
    sums = block_sums(dens, dom, threads)
    L = dom.depth
    val = lvl = None
    for k, s in zip(dom.levels, sums):
        cells_per_cube = float(2 ** ((L - k) * dom.dim))
        mean = _shift_plus(s) / cells_per_cube
        if val is None:
            val, lvl = mean, np.full(mean.shape, k, dtype=np.int16)
        else:
            val, lvl = _merge_level(val, lvl, mean, k, threads)
    return MaximalResult(dom, val, lvl, "plus")


def dyadic_minus_maximal(f: Integrand, domain: GridDomain | None = None,
                         threads: int | None = 1) -> MaximalResult:
    """``M^{-,d} f``, by reflecting the extent onto itself."""
    dom, _ = _density(f, domain)
    r = dyadic_plus_maximal(f.reflect(), dom, threads)
    return MaximalResult(dom, np.flip(r.values).copy(), np.flip(r.witness_level).copy(), "minus")


def _levels(domain: GridDomain, sizes: Iterable[int] | None) -> list[int]:
    if sizes is None:
        return list(domain.levels)
    out = sorted(set(int(k) for k in sizes))
    bad = [k for k in out if k not in domain.levels]
    if bad:
        raise ValueError(f"size levels {bad} outside {domain.levels}")
    return out


def anchored_means(f: Integrand, domain: GridDomain | None = None,
                   sizes: Iterable[int] | None = None) -> dict[int, np.ndarray]:
    """Mean of ``|f|`` over ``Q_{x,2^-k}`` for every cell corner ``x`` and level ``k``."""
    dom, dens = _density(f, domain)
    table = prefix_tables(WeightField(dom, dens))
    out = {}
    for k in _levels(dom, sizes):
        s = 2 ** (dom.depth - k)
        out[k] = np.asarray(table.window_sums(0, s), dtype=np.float64) / float(s ** dom.dim)
    return out


def _argmax_levels(means: dict[int, np.ndarray], shape) -> tuple[np.ndarray, np.ndarray]:
    val = np.zeros(shape)
    lvl = np.full(shape, -1, dtype=np.int16)
    first = True
    for k in sorted(means):  # coarse to fine; finer wins ties
        m = means[k]
        take = m >= val if not first else np.ones(shape, dtype=bool)
        val = np.where(take, m, val)
        lvl = np.where(take, np.int16(k), lvl)
        first = False
    return val, lvl


def anchored_maximal(f: Integrand, domain: GridDomain | None = None,
                     sizes: Iterable[int] | None = None) -> MaximalResult:
    """``sup_k |Q_{x,2^-k}|^{-1} int_{Q_{x,2^-k}} |f|`` at every cell corner ``x``."""
    dom, _ = _density(f, domain)
    means = anchored_means(f, dom, sizes)
    val, lvl = _argmax_levels(means, dom.shape)
    return MaximalResult(dom, val, lvl, "anchored")


def onesided_maximal_2d(f: Integrand, domain: GridDomain | None = None,
                        sizes: Iterable[int] | None = None) -> MaximalResult:
    dom, _ = _density(f, domain)
    if dom.dim != 2:
        raise ValueError(f"planar operator needs dim 2, got {dom.dim}")
    return anchored_maximal(f, dom, sizes)


def xi_level(xi) -> int | None:
    """Level ``j`` with ``xi == 2**-j``; ``None`` passes through."""
    if xi is None:
        return None
    m, e = dyadic_parts(xi)
    if m <= 0 or m & (m - 1):
        raise ValueError(f"truncation size {xi!r} is not a power of two")
    return e - (m.bit_length() - 1)


def subsquare_means_2d(f: Integrand, domain: GridDomain | None = None, i: int = 2,
                       xi=None, sizes: Iterable[int] | None = None) -> dict[int, np.ndarray]:
    """``4 h^{-2} int_{Q^i_{x,h}} |f|`` per cell corner, for every admissible ``h = 2^-k``.

    With ``xi`` given only ``h > xi`` is admissible.  At ``h`` equal to one cell
    the quarter sits inside the cell, so the mean is the cell's own density.
    """
    dom, dens = _density(f, domain)
    if dom.dim != 2:
        raise ValueError(f"planar operator needs dim 2, got {dom.dim}")
    if i not in (1, 2, 3):
        raise ValueError(f"quarter index must be 1, 2 or 3, got {i}")
    j = xi_level(xi)
    table = prefix_tables(WeightField(dom, dens))
    o1, o2 = QUARTER_OFFSETS[i]
    out = {}
    for k in _levels(dom, sizes):
        if j is not None and k >= j:
            continue
        s = 2 ** (dom.depth - k)
        if s == 1:
            out[k] = dens.astype(np.float64).copy()
            continue
        half = s // 2
        out[k] = np.asarray(table.window_sums((o1 * half, o2 * half), half),
                            dtype=np.float64) / float(half * half)
    return out


def subsquare_maximal_2d(f: Integrand, domain: GridDomain | None = None, i: int = 2,
                         xi=None, sizes: Iterable[int] | None = None) -> MaximalResult:
    """``M^{+i} f`` (``xi=None``) or its truncation to sizes ``h > xi``."""
    dom, _ = _density(f, domain)
    means = subsquare_means_2d(f, dom, i, xi, sizes)
    val, lvl = _argmax_levels(means, dom.shape)
    return MaximalResult(dom, val, lvl, f"quarter{i}")


_MODES = (">", "band", "omega")


def level_set(result: MaximalResult, t: float, mode: str = ">",
              other: MaximalResult | None = None) -> CellSet:
    """``{T f > t}``, the band ``{t < T f <= 2t}``, or ``{t < T f, S f <= 2t}`` (``other`` = ``S f``)."""
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}")
    if not t > 0:
        raise ValueError("t must be positive")
    v = result.values
    if mode == ">":
        return CellSet(result.domain, v > t)
    if mode == "band":
        return CellSet(result.domain, (v > t) & (v <= 2 * t))
    if other is None:
        raise ValueError("omega mode needs the second operator")
    if other.domain != result.domain:
        raise ValueError("results live on different domains")
    return CellSet(result.domain, (v > t) & (other.values <= 2 * t))
