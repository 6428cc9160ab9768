"""Exact dyadic geometry.

Every coordinate handled here is a dyadic rational ``m / 2**e``.  A :class:`Box`
stores integer mantissas for its lower and upper corners together with one
shared exponent, so translations, halvings and the 3/2-dilations used by the
planar covering argument never round.  Boxes are half-open, ``[lo, hi)``.

A :class:`DyadicCube` is the grid object ``2**-level * ([0, 1)^n + anchor)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

__all__ = [
    "Box",
    "DyadicCube",
    "dyadic_parts",
    "plus_neighbor",
    "minus_neighbor",
    "scaled_extension",
    "subsquare",
    "tilde",
    "plus_quarter",
    "plus2",
    "anchored_square",
    "corner_square",
    "contains",
    "contains_point",
    "overlap_count",
    "intersect",
]

Number = Union[int, Fraction, float, str]

# quarter index -> (offset in x1, offset in x2), in half-sides
QUARTER_OFFSETS = {0: (0, 0), 1: (1, 1), 2: (1, 0), 3: (0, 1)}


def dyadic_parts(x: Number) -> tuple[int, int]:
    """Return ``(m, e)`` with ``x == m / 2**e``; raise if ``x`` is not dyadic."""
    q = Fraction(x)
    d = q.denominator
    if d & (d - 1):
        raise ValueError(f"{x!r} is not a dyadic rational")
    return q.numerator, d.bit_length() - 1


def _pow2(e: int) -> Fraction:
    return Fraction(2) ** e


def _as_point(point: Sequence[Number]) -> tuple[list[int], int]:
    parts = [dyadic_parts(c) for c in point]
    e = max(p[1] for p in parts)
    return [m << (e - pe) for m, pe in parts], e


@dataclass(frozen=True)
class Box:
    """Half-open axis-parallel box with corners ``lo / 2**exp`` and ``hi / 2**exp``.

    The representation is canonical (smallest exponent), so ``==`` is exact
    geometric equality.
    """

    lo: tuple[int, ...]
    hi: tuple[int, ...]
    exp: int = 0

    def __post_init__(self):
        lo, hi, e = tuple(int(v) for v in self.lo), tuple(int(v) for v in self.hi), int(self.exp)
        if len(lo) != len(hi) or not lo:
            raise ValueError("corner dimensions differ")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ValueError(f"empty box: lo={lo} hi={hi}")
        while all(v % 2 == 0 for v in lo + hi):
            lo = tuple(v // 2 for v in lo)
            hi = tuple(v // 2 for v in hi)
            e -= 1
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "exp", e)

    @classmethod
    def from_coords(cls, lower: Sequence[Number], upper: Sequence[Number]) -> "Box":
        lo, e1 = _as_point(lower)
        hi, e2 = _as_point(upper)
        e = max(e1, e2)
        return cls(tuple(v << (e - e1) for v in lo), tuple(v << (e - e2) for v in hi), e)

    @classmethod
    def square(cls, lower: Sequence[Number], side: Number) -> "Box":
        lower = [Fraction(c) for c in lower]
        side = Fraction(side)
        return cls.from_coords(lower, [c + side for c in lower])

    @property
    def dim(self) -> int:
        return len(self.lo)

    def at(self, e: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Mantissas of the corners at exponent ``e >= self.exp``."""
        if e < self.exp:
            raise ValueError(f"exponent {e} too coarse for {self}")
        s = e - self.exp
        return tuple(v << s for v in self.lo), tuple(v << s for v in self.hi)

    @property
    def lower(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(v) / _pow2(self.exp) for v in self.lo)

    @property
    def upper(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(v) / _pow2(self.exp) for v in self.hi)

    @property
    def sides(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(b - a) / _pow2(self.exp) for a, b in zip(self.lo, self.hi))

    @property
    def is_square(self) -> bool:
        return len({b - a for a, b in zip(self.lo, self.hi)}) == 1

    @property
    def side(self) -> Fraction:
        if not self.is_square:
            raise ValueError(f"{self} is not a cube")
        return self.sides[0]

    @property
    def volume(self) -> Fraction:
        v = Fraction(1)
        for s in self.sides:
            v *= s
        return v

    def translate(self, offset: Sequence[Number]) -> "Box":
        off, e = _as_point(offset)
        E = max(e, self.exp)
        lo, hi = self.at(E)
        off = [v << (E - e) for v in off]
        return Box(tuple(a + o for a, o in zip(lo, off)), tuple(b + o for b, o in zip(hi, off)), E)

    def __repr__(self) -> str:
        iv = " x ".join(f"[{a},{b})" for a, b in zip(self.lower, self.upper))
        return f"Box({iv})"


@dataclass(frozen=True, order=True)
class DyadicCube:
    """The dyadic cube with lower corner ``anchor * 2**-level`` and side ``2**-level``."""

    level: int
    anchor: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "anchor", tuple(int(a) for a in self.anchor))
        object.__setattr__(self, "level", int(self.level))

    @property
    def dim(self) -> int:
        return len(self.anchor)

    @property
    def side(self) -> Fraction:
        return _pow2(-self.level)

    @property
    def volume(self) -> Fraction:
        return self.side ** self.dim

    @property
    def box(self) -> Box:
        return Box(self.anchor, tuple(a + 1 for a in self.anchor), self.level)

    @property
    def lower(self) -> tuple[Fraction, ...]:
        return self.box.lower

    @property
    def upper(self) -> tuple[Fraction, ...]:
        return self.box.upper

    @classmethod
    def from_box(cls, box: Box) -> "DyadicCube":
        if not box.is_square:
            raise ValueError(f"{box} is not a cube")
        side_m = box.hi[0] - box.lo[0]
        if side_m & (side_m - 1):
            raise ValueError(f"{box} does not have a power-of-two side")
        level = box.exp - (side_m.bit_length() - 1)
        if any(a % side_m for a in box.lo):
            raise ValueError(f"{box} is not aligned to the dyadic grid")
        return cls(level, tuple(a // side_m for a in box.lo))

    def ancestor(self, level: int) -> "DyadicCube":
        if level > self.level:
            raise ValueError("ancestor must be at a coarser level")
        s = self.level - level
        return DyadicCube(level, tuple(a >> s for a in self.anchor))

    def parent(self) -> "DyadicCube":
        return self.ancestor(self.level - 1)

    def children(self) -> list["DyadicCube"]:
        out = [()]
        for a in self.anchor:
            out = [c + (2 * a + b,) for c in out for b in (0, 1)]
        return [DyadicCube(self.level + 1, c) for c in out]

    def contains_cube(self, other: "DyadicCube") -> bool:
        return other.level >= self.level and other.ancestor(self.level) == self

    def __repr__(self) -> str:
        return f"DyadicCube(level={self.level}, anchor={self.anchor})"


Shape = Union[DyadicCube, Box]


def _box(Q: Shape) -> Box:
    return Q.box if isinstance(Q, DyadicCube) else Q


def plus_neighbor(Q: Shape) -> Shape:
    """``Q^+``: translate by the side length in every coordinate."""
    if isinstance(Q, DyadicCube):
        return DyadicCube(Q.level, tuple(a + 1 for a in Q.anchor))
    return Box(Q.hi, tuple(2 * b - a for a, b in zip(Q.lo, Q.hi)), Q.exp)


def minus_neighbor(Q: Shape) -> Shape:
    """``Q^-``: translate by minus the side length in every coordinate."""
    if isinstance(Q, DyadicCube):
        return DyadicCube(Q.level, tuple(a - 1 for a in Q.anchor))
    return Box(tuple(2 * a - b for a, b in zip(Q.lo, Q.hi)), Q.lo, Q.exp)


def scaled_extension(Q: Shape, s: Number, sign: str = "+") -> Box:
    """``(Q)^{s,+}`` anchored at the lower corner, or ``(Q)^{s,-}`` ending at the upper one."""
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    sm, se = dyadic_parts(s)
    if sm <= 0:
        raise ValueError("scale must be positive")
    B = _box(Q)
    if not B.is_square:
        raise ValueError("scaled_extension needs a cube")
    E = B.exp + se
    lo, hi = B.at(E)
    h = hi[0] - lo[0]
    ext = (h * sm) >> se  # exact: h carries 2**se from the rescale
    if sign == "+":
        return Box(lo, tuple(a + ext for a in lo), E)
    return Box(tuple(b - ext for b in hi), hi, E)


def _require_square_2d(B: Box) -> None:
    if B.dim != 2:
        raise ValueError(f"planar operation needs dim 2, got {B.dim}")
    if not B.is_square:
        raise ValueError(f"{B} is not a square")


def subsquare(Q: Shape, i: int) -> Shape:
    """Quarter ``i`` of a square: 0 lower-left, 1 upper-right, 2 lower-right, 3 upper-left."""
    if i not in QUARTER_OFFSETS:
        raise ValueError(f"quarter index must be 0..3, got {i}")
    o1, o2 = QUARTER_OFFSETS[i]
    if isinstance(Q, DyadicCube):
        if Q.dim != 2:
            raise ValueError(f"planar operation needs dim 2, got {Q.dim}")
        a1, a2 = Q.anchor
        return DyadicCube(Q.level + 1, (2 * a1 + o1, 2 * a2 + o2))
    _require_square_2d(Q)
    lo, hi = Q.at(Q.exp + 1)
    half = (hi[0] - lo[0]) // 2
    nlo = (lo[0] + o1 * half, lo[1] + o2 * half)
    return Box(nlo, (nlo[0] + half, nlo[1] + half), Q.exp + 1)


def tilde(Q: Shape, variant: str = "right-down") -> Box:
    """Square of side ``3h/2`` containing ``Q``.

    ``right-down`` extends ``Q = [a, a+h) x [b, b+h)`` to ``[a, a+3h/2) x [b-h/2, b+h)``;
    ``left-up`` is its mirror across the diagonal, ``[a-h/2, a+h) x [b, b+3h/2)``.
    """
    B = _box(Q)
    _require_square_2d(B)
    lo, hi = B.at(B.exp + 1)
    h = hi[0] - lo[0]
    half = h // 2
    (a, b), (A, Bm) = lo, hi
    if variant == "right-down":
        return Box((a, b - half), (A + half, Bm), B.exp + 1)
    if variant == "left-up":
        return Box((a - half, b), (A, Bm + half), B.exp + 1)
    raise ValueError(f"unknown tilde variant {variant!r}")


def plus_quarter(Q: Shape, i: int) -> Shape:
    """Quarter ``i`` of the plus-neighbour."""
    return subsquare(plus_neighbor(Q), i)


def plus2(Q: Shape) -> Shape:
    """``Q^{+2}``: lower-right quarter of ``Q^+``."""
    return plus_quarter(Q, 2)


def anchored_square(x: Sequence[Number], h: Number) -> Box:
    """``Q_{x,h} = [x, x+h)^n``."""
    return Box.square(x, h)


def corner_square(x: Sequence[Number], h: Number) -> Box:
    """Cube of side ``h`` whose upper corner is ``x``."""
    h = Fraction(h)
    return Box.square([Fraction(c) - h for c in x], h)


def _common(*boxes: Box) -> tuple[int, list]:
    e = max(b.exp for b in boxes)
    return e, [b.at(e) for b in boxes]


def contains(outer: Shape, inner: Shape) -> bool:
    A, B = _box(outer), _box(inner)
    if A.dim != B.dim:
        raise ValueError("dimension mismatch")
    _, ((alo, ahi), (blo, bhi)) = _common(A, B)
    return all(a <= c for a, c in zip(alo, blo)) and all(d <= b for b, d in zip(ahi, bhi))


def contains_point(box: Shape, point: Sequence[Number], closed: bool = False) -> bool:
    B = _box(box)
    pt, pe = _as_point(point)
    e = max(B.exp, pe)
    lo, hi = B.at(e)
    pt = [v << (e - pe) for v in pt]
    if closed:
        return all(a <= x <= b for a, x, b in zip(lo, pt, hi))
    return all(a <= x < b for a, x, b in zip(lo, pt, hi))


def overlap_count(family: Iterable[Shape], point: Sequence[Number], closed: bool = False) -> int:
    return sum(contains_point(Q, point, closed) for Q in family)


def intersect(a: Shape, b: Shape) -> Box | None:
    A, B = _box(a), _box(b)
    e, ((alo, ahi), (blo, bhi)) = _common(A, B)
    lo = tuple(max(x, y) for x, y in zip(alo, blo))
    hi = tuple(min(x, y) for x, y in zip(ahi, bhi))
    if any(l >= h for l, h in zip(lo, hi)):
        return None
    return Box(lo, hi, e)
