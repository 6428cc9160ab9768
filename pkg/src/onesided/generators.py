"""Named pair and set generators, addressed by strings like ``loguniform(lo=0.1,seed=7)``."""

from __future__ import annotations

import ast
import re
from fractions import Fraction

import numpy as np

from .dyadic import Box
from .grid import CellSet, GridDomain, WeightField, WeightPair

__all__ = ["parse_spec", "make_pair", "make_set", "PAIR_GENERATORS", "SET_GENERATORS"]

_SPEC = re.compile(r"^\s*([a-z_][a-z0-9_]*)\s*(?:\((.*)\))?\s*$", re.I)


def parse_spec(text: str) -> tuple[str, dict]:
    """``"name(k=v, ...)"`` -> ``(name, {k: v})``; values are literals, fractions or bare strings."""
    m = _SPEC.match(text)
    if not m:
        raise ValueError(f"bad generator spec {text!r}")
    name, body = m.group(1).lower(), (m.group(2) or "").strip()
    params = {}
    if body:
        for part in body.split(","):
            if "=" not in part:
                raise ValueError(f"generator parameter {part.strip()!r} is not key=value")
            k, v = (s.strip() for s in part.split("=", 1))
            try:
                params[k] = ast.literal_eval(v)
            except (ValueError, SyntaxError):
                try:
                    params[k] = Fraction(v)  # "1/16"
                except ValueError:
                    params[k] = v
    return name, params


def _check(name: str, params: dict, allowed: set[str]) -> None:
    bad = set(params) - allowed
    if bad:
        raise ValueError(f"{name}: unknown parameter(s) {sorted(bad)}")


def _centers(dom: GridDomain) -> list[np.ndarray]:
    """Cell-center coordinates per axis, broadcastable to the grid shape."""
    out = []
    for ax in range(dom.dim):
        lo = float(dom.extent.lower[ax])
        c = lo + (np.arange(dom.n_side) + 0.5) * float(dom.cell_side)
        shape = [1] * dom.dim
        shape[ax] = -1
        out.append(c.reshape(shape))
    return out


def _pair_unit(dom, rng, **kw):
    return np.ones(dom.shape), np.ones(dom.shape)


def _pair_loguniform(dom, rng, lo=1 / 16, hi=16.0):
    lo, hi = float(lo), float(hi)
    if not 0 < lo <= hi:
        raise ValueError("loguniform needs 0 < lo <= hi")
    a, b = np.log(lo), np.log(hi)
    return np.exp(rng.uniform(a, b, dom.shape)), np.exp(rng.uniform(a, b, dom.shape))


def _pair_powerlaw(dom, rng, alpha=-0.5, beta=0.5, x0=None):
    """``w = |x - x0|^alpha``, ``v = |x - x0|^beta`` at cell centers (``x0`` defaults to the extent's center)."""
    if x0 is None:
        x0 = [float(dom.extent.lower[i]) + float(dom.extent.side) / 2 for i in range(dom.dim)]
    else:
        x0 = [float(c) for c in _coords(x0, dom.dim)]
    r2 = sum((c - x) ** 2 for c, x in zip(_centers(dom), x0))
    r = np.sqrt(np.broadcast_to(r2, dom.shape))
    return r ** float(alpha), r ** float(beta)


def _pair_step(dom, rng, high=16.0, low=1 / 16, cut=None):
    """``w`` large left of a cut along the first axis, ``v`` small right of it."""
    cut = int(rng.integers(1, dom.n_side)) if cut is None else int(cut)
    if not 0 <= cut <= dom.n_side:
        raise ValueError("step cut outside the grid")
    idx = np.arange(dom.n_side).reshape((-1,) + (1,) * (dom.dim - 1))
    w = np.broadcast_to(np.where(idx < cut, float(high), 1.0), dom.shape).copy()
    v = np.broadcast_to(np.where(idx >= cut, float(low), 1.0), dom.shape).copy()
    return w, v


def _pair_dyadic(dom, rng, bits=2, top=8):
    """Densities ``k / 2^bits`` with ``k`` in ``1..top``: every sum is exact in floating point."""
    bits, top = int(bits), int(top)
    if bits < 0 or top < 1:
        raise ValueError("dyadic needs bits >= 0 and top >= 1")
    s = float(2 ** bits)
    return rng.integers(1, top + 1, dom.shape) / s, rng.integers(1, top + 1, dom.shape) / s


PAIR_GENERATORS = {
    "unit": (_pair_unit, set()),
    "loguniform": (_pair_loguniform, {"lo", "hi"}),
    "powerlaw": (_pair_powerlaw, {"alpha", "beta", "x0"}),
    "step": (_pair_step, {"high", "low", "cut"}),
    "dyadic": (_pair_dyadic, {"bits", "top"}),
}


def make_pair(spec: str, domain: GridDomain, p: float, seed: int = 0) -> WeightPair:
    name, params = parse_spec(spec)
    if name not in PAIR_GENERATORS:
        raise ValueError(f"unknown pair generator {name!r}; known: {sorted(PAIR_GENERATORS)}")
    fn, allowed = PAIR_GENERATORS[name]
    seed = int(params.pop("seed", seed))
    _check(name, params, allowed)
    w, v = fn(domain, np.random.default_rng(seed), **params)
    return WeightPair(WeightField(domain, w), WeightField(domain, v), float(p))


def _set_bernoulli(dom, rng, density=0.3):
    density = float(density)
    if not 0 <= density <= 1:
        raise ValueError("bernoulli density must lie in [0, 1]")
    return rng.random(dom.shape) < density


def _set_blocks(dom, rng, count=3):
    """Union of ``count`` random grid-dyadic cubes."""
    mask = np.zeros(dom.shape, dtype=bool)
    for _ in range(int(count)):
        k = int(rng.integers(0, dom.depth + 1))
        s = 2 ** (dom.depth - k)
        lo = rng.integers(0, 2 ** k, dom.dim) * s
        mask[tuple(slice(int(a), int(a) + s) for a in lo)] = True
    return mask


def _coords(text, dim):
    if isinstance(text, (int, float)):
        return [Fraction(str(text))] * dim
    parts = [Fraction(str(c).strip()) for c in str(text).replace(";", ":").split(":")]
    if len(parts) == 1:
        parts = parts * dim
    if len(parts) != dim:
        raise ValueError(f"expected {dim} coordinates in {text!r}")
    return parts


def _set_box(dom, rng, lo=0, hi="1/2"):
    """Cells inside ``[lo, hi)``; coordinates as ``a:b:...`` or one value for all axes."""
    return CellSet.from_box(dom, Box.from_coords(_coords(lo, dom.dim), _coords(hi, dom.dim))).mask


def _set_empty(dom, rng):
    return np.zeros(dom.shape, dtype=bool)


def _set_full(dom, rng):
    return np.ones(dom.shape, dtype=bool)


SET_GENERATORS = {
    "bernoulli": (_set_bernoulli, {"density"}),
    "blocks": (_set_blocks, {"count"}),
    "box": (_set_box, {"lo", "hi"}),
    "empty": (_set_empty, set()),
    "full": (_set_full, set()),
}


def make_set(spec: str, domain: GridDomain, seed: int = 0) -> CellSet:
    name, params = parse_spec(spec)
    if name not in SET_GENERATORS:
        raise ValueError(f"unknown set generator {name!r}; known: {sorted(SET_GENERATORS)}")
    fn, allowed = SET_GENERATORS[name]
    seed = int(params.pop("seed", seed))
    _check(name, params, allowed)
    return CellSet(domain, fn(domain, np.random.default_rng(seed), **params))
