"""Constructive covering machinery behind the weak-type bounds.

Dyadic side: maximal-cube selection for level sets of ``M^{+,d} chi_E``,
splitting into ratio bands, grading by nesting depth of plus-neighbours and an
instance-level certificate of every step of the depth-bound argument.

Planar side: greedy selection of dilated squares ``Q~`` around corner points,
with the sets ``F_j`` built by first claim and all covering properties checked
in exact integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .classes import ClassConstant, restricted_constant
from .dyadic import QUARTER_OFFSETS, Box, DyadicCube, plus_neighbor
from .grid import CellSet, GridDomain, WeightPair, block_sums
from .report import StepCheck, VerifyReport

__all__ = [
    "SelectedCube",
    "CubeFamily",
    "DepthDecomposition",
    "CoverSelection",
    "select_level_set_cubes",
    "band_index",
    "band_partition",
    "depth_decompose",
    "certify_depth_bound",
    "depth_bound_constant",
    "tilde_variant",
    "cover_lattice",
    "covering_select_2d",
]


@dataclass(frozen=True)
class SelectedCube:
    cube: DyadicCube
    lo: tuple[int, ...]   # cell index of the lower corner
    size: int             # side in cells
    e_count: int          # cells of E inside Q^+
    band: int | None = None

    @property
    def n_cells(self) -> int:
        return self.size ** len(self.lo)

    @property
    def ratio(self) -> float:
        """``|E cap Q^+| / |Q|`` (exact: the denominator is a power of two)."""
        return self.e_count / self.n_cells

    def plus_slices(self) -> tuple[slice, ...]:
        return tuple(slice(a + self.size, a + 2 * self.size) for a in self.lo)

    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(a, a + self.size) for a in self.lo)


@dataclass(frozen=True, eq=False)
class CubeFamily:
    domain: GridDomain
    E: CellSet
    members: tuple[SelectedCube, ...]
    t: float
    disjoint: bool = True

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def union(self) -> CellSet:
        m = np.zeros(self.domain.shape, dtype=bool)
        for q in self.members:
            m[q.slices()] = True
        return CellSet(self.domain, m)

    def overlap(self) -> int:
        """Largest number of members covering one cell."""
        c = np.zeros(self.domain.shape, dtype=np.int64)
        for q in self.members:
            c[q.slices()] += 1
        return int(c.max()) if self.members else 0

    def check_disjoint(self) -> bool:
        return self.overlap() <= 1

    def to_dict(self) -> dict:
        return {"t": self.t, "disjoint": self.disjoint,
                "cubes": [{"level": q.cube.level, "anchor": list(q.cube.anchor),
                           "e_count": q.e_count, "band": q.band} for q in self.members]}


def _shift_plus(a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    out[(slice(0, -1),) * a.ndim] = a[(slice(1, None),) * a.ndim]
    return out


def _upsample(a: np.ndarray) -> np.ndarray:
    for ax in range(a.ndim):
        a = np.repeat(a, 2, axis=ax)
    return a


def select_level_set_cubes(E: CellSet, t: float) -> CubeFamily:
    """Maximal grid-dyadic cubes with ``|E cap Q^+| / |Q| > t``, coarse to fine."""
    if not t > 0:
        raise ValueError("t must be positive")
    dom = E.domain
    counts = block_sums(E.mask.astype(np.int64), dom)
    claimed = None
    members = []
    origin = dom.origin
    for k, c in zip(dom.levels, counts):
        s = 2 ** (dom.depth - k)
        nq = s ** dom.dim
        plus = _shift_plus(c)
        qual = plus / nq > t
        claimed = np.zeros(c.shape, dtype=bool) if claimed is None else _upsample(claimed)
        new = qual & ~claimed
        for idx in np.argwhere(new):
            b = tuple(int(i) for i in idx)
            cube = DyadicCube(k, tuple(o // s + i for o, i in zip(origin, b)))
            members.append(SelectedCube(cube, tuple(i * s for i in b), s, int(plus[b])))
        claimed |= new
    return CubeFamily(dom, E, tuple(members), float(t), True)


def band_index(ratio: float, t: float) -> int:
    """``k >= 0`` with ``2^k t < ratio <= 2^{k+1} t`` (exact doubling)."""
    if not ratio > t:
        raise ValueError(f"ratio {ratio} does not exceed t = {t}")
    k, mu = 0, t
    while ratio > 2 * mu:
        mu *= 2
        k += 1
    return k


def band_partition(family: CubeFamily, E: CellSet | None = None, t: float | None = None) -> list[CubeFamily]:
    """Split by ``2^k t < |E cap Q^+|/|Q| <= 2^{k+1} t``; entry ``k`` has ``t = 2^k t``."""
    t = family.t if t is None else float(t)
    E = family.E if E is None else E
    bands: dict[int, list[SelectedCube]] = {}
    for q in family.members:
        k = band_index(q.ratio, t)
        bands.setdefault(k, []).append(SelectedCube(q.cube, q.lo, q.size, q.e_count, k))
    top = max(bands) if bands else -1
    return [CubeFamily(family.domain, E, tuple(bands.get(k, ())), t * 2 ** k, family.disjoint)
            for k in range(top + 1)]


@dataclass(frozen=True, eq=False)
class DepthDecomposition:
    family: CubeFamily
    depths: tuple[int, ...]
    levels: tuple[tuple[int, ...], ...]          # i_m as member indices
    sigma: tuple[CellSet, ...]                   # union of Q_j^+ over i_m
    F: tuple[CellSet, ...]                       # E cap sigma_m
    depth_map: np.ndarray                        # deepest m with the cell in sigma_m, else -1
    ancestors: tuple[tuple[int, ...], ...]       # s with Q_j^+ strictly inside Q_s^+

    @property
    def max_depth(self) -> int:
        return len(self.levels) - 1

    def descendants(self) -> list[list[int]]:
        out = [[] for _ in self.depths]
        for j, anc in enumerate(self.ancestors):
            for s in anc:
                out[s].append(j)
        return out


def depth_decompose(family: CubeFamily) -> DepthDecomposition:
    """Grade members by the number of members whose plus-neighbour strictly contains theirs."""
    dom = family.domain
    index = {plus_neighbor(q.cube): j for j, q in enumerate(family.members)}
    ancestors, depths = [], []
    for q in family.members:
        P = plus_neighbor(q.cube)
        anc = []
        for lev in range(P.level - 1, dom.extent.level - 1, -1):
            s = index.get(P.ancestor(lev))
            if s is not None:
                anc.append(s)
        ancestors.append(tuple(sorted(anc)))
        depths.append(len(anc))
    top = max(depths) if depths else -1
    levels = tuple(tuple(j for j, d in enumerate(depths) if d == m) for m in range(top + 1))
    dmap = np.full(dom.shape, -1, dtype=np.int64)
    for j, q in enumerate(family.members):
        sl = q.plus_slices()
        dmap[sl] = np.maximum(dmap[sl], depths[j])
    E = family.E
    sigma = tuple(CellSet(dom, dmap >= m) for m in range(top + 1))
    F = tuple(CellSet(dom, (dmap >= m) & E.mask) for m in range(top + 1))
    return DepthDecomposition(family, tuple(depths), levels, sigma, F, dmap, tuple(ancestors))


def depth_bound_constant(n: int, p: float) -> float:
    """``2^{n+p+2}``: constant of the band-wise depth bound."""
    return 2.0 ** (n + p + 2)


def _rel_le(a: float, b: float, rtol: float) -> bool:
    if math.isinf(b):
        return True
    return a <= b * (1 + rtol) + 0.0


def certify_depth_bound(decomp: DepthDecomposition, E: CellSet, pair: WeightPair, mu: float,
                        constant: ClassConstant | float | None = None, rtol: float = 1e-12) -> VerifyReport:
    """Check every step of the depth-bound argument on this family, with exact counts.

    Steps: ``hypothesis`` (``mu < |E_j^+|/|Q_j| <= 2 mu``), ``descendant_geometry``,
    ``descendant_mass`` (strict ``< 2^{n+1}|E_j0^+|``), ``light_level``,
    ``uncovered_share``, ``per_cube_class``, ``telescoping``, ``final_bound``.
    Float comparisons involving weights allow ``rtol`` relative slack; cell
    counts are compared exactly.
    """
    fam = decomp.family
    dom = fam.domain
    n = dom.dim
    p = pair.p
    K = 2 ** (n + 2)
    if constant is None:
        constant = restricted_constant(pair, "dyadic")
    C = constant.value if isinstance(constant, ClassConstant) else float(constant)
    cv = dom.cell_volume
    members = fam.members
    Emask = E.mask
    dmap = decomp.depth_map
    w = pair.w.density
    v = pair.v.density
    steps = []

    # hypothesis
    bad = [j for j, q in enumerate(members) if not (mu < q.ratio <= 2 * mu)]
    steps.append(StepCheck("hypothesis", not bad, detail={"violations": bad[:10], "mu": mu}))

    desc = decomp.descendants()
    # descendant geometry
    geo_bad, worst_vol = [], 0.0
    for j0, q0 in enumerate(members):
        m0 = decomp.depths[j0]
        vol = 0
        for j in desc[j0]:
            q = members[j]
            inside = all(a0 <= a and a + q.size <= a0 + 2 * q0.size for a, a0 in zip(q.lo, q0.lo))
            if decomp.depths[j] <= m0 or not inside:
                geo_bad.append((j0, j))
            vol += q.n_cells
        if vol > 2 ** n * q0.n_cells:
            geo_bad.append((j0, None))
        worst_vol = max(worst_vol, vol / q0.n_cells)
    steps.append(StepCheck("descendant_geometry", not geo_bad, worst_vol, float(2 ** n),
                           {"violations": geo_bad[:10]}))

    # per-cube counts: E-cells of Q_j0^+ by depth
    mass_bad, light_bad, share_bad, class_bad = [], [], [], []
    worst_mass = worst_share = 0.0
    worst_class = None
    sum_w = []
    g_v = []
    e_share = []
    for j0, q0 in enumerate(members):
        m0 = decomp.depths[j0]
        sl = q0.plus_slices()
        e_here = Emask[sl]
        d_here = dmap[sl][e_here]
        e_plus = int(e_here.sum())
        # sum over m > m0 of |F_m cap Q^+| = sum over E-cells of (D - m0)^+
        mass = int(np.maximum(d_here - m0, 0).sum())
        if not mass < 2 ** (n + 1) * e_plus:
            mass_bad.append(j0)
        worst_mass = max(worst_mass, mass / (2 ** (n + 1) * e_plus) if e_plus else math.inf)
        f_counts = [int((d_here >= m).sum()) for m in range(m0 + 1, m0 + K + 1)]
        if not any(2 * c < e_plus for c in f_counts):
            light_bad.append(j0)
        uncovered = d_here < m0 + K
        g = int(uncovered.sum())
        nq = q0.n_cells
        e_share.append(g / nq)
        if not g / nq > mu / 2:
            share_bad.append(j0)
        worst_share = max(worst_share, (mu / 2) / (g / nq) if g else math.inf)
        wq = math.fsum(w[q0.slices()].ravel()) * cv
        vg = math.fsum(v[sl][e_here][uncovered]) * cv
        rhs = (2 / mu) ** p * C ** p * vg if C > 0 else 0.0
        if math.isnan(rhs):
            rhs = math.inf
        if not _rel_le(wq, rhs, rtol):
            class_bad.append(j0)
        if rhs > 0 and math.isfinite(rhs):
            r = wq / rhs
            worst_class = r if worst_class is None else max(worst_class, r)
        sum_w.append(wq)
        g_v.append(vg)
    steps.append(StepCheck("descendant_mass", not mass_bad, worst_mass, 1.0,
                           {"violations": mass_bad[:10], "bound": f"2^{n + 1} |E_j0^+|", "strict": True}))
    steps.append(StepCheck("light_level", not light_bad, detail={"violations": light_bad[:10], "window": K}))
    weak_share = []
    for j0, q0 in enumerate(members):
        m0 = decomp.depths[j0]
        dq = dmap[q0.plus_slices()]
        weak_share.append(int((dq < m0 + K).sum()) / q0.n_cells)
    steps.append(StepCheck("uncovered_share", not share_bad, worst_share, 1.0,
                           {"violations": share_bad[:10],
                            "min_share_E": min(e_share) / mu if e_share else None,
                            "min_share_cube": min(weak_share) / mu if weak_share else None}))
    steps.append(StepCheck("per_cube_class", not class_bad, worst_class, 1.0,
                           {"violations": class_bad[:10], "constant": C}))

    # telescoping: sum_m v(E cap (sigma_m \ sigma_{m+K})) <= K v(E cap sigma_0)
    in_sigma = Emask & (dmap >= 0)
    mult = np.minimum(dmap[in_sigma] + 1, K)
    vals = v[in_sigma]
    tel = math.fsum((vals * mult).tolist()) * cv
    v_sigma = math.fsum(vals.tolist()) * cv
    steps.append(StepCheck("telescoping", _rel_le(tel, K * v_sigma, rtol), tel, K * v_sigma))

    lhs = math.fsum(sum_w)
    chain_rhs = (2 / mu) ** p * C ** p * math.fsum(g_v) if C > 0 else 0.0
    steps.append(StepCheck("sum_per_cube", _rel_le(lhs, chain_rhs if not math.isnan(chain_rhs) else math.inf, rtol),
                           lhs, chain_rhs))
    final_rhs = depth_bound_constant(n, p) * C ** p * mu ** (-p) * v_sigma if C > 0 else 0.0
    if math.isnan(final_rhs):
        final_rhs = math.inf
    steps.append(StepCheck("final_bound", _rel_le(lhs, final_rhs, rtol), lhs, final_rhs,
                           {"constant": depth_bound_constant(n, p)}))
    passed = all(s.passed for s in steps)
    return VerifyReport(
        "depth-bound", passed,
        instance={"dim": n, "depth": dom.depth, "mu": mu, "p": p, "cubes": len(members),
                  "max_depth": decomp.max_depth},
        rows=[{"t": mu, "lhs": lhs, "rhs": final_rhs,
               "ratio": (lhs / final_rhs) if final_rhs and math.isfinite(final_rhs) else 0.0,
               "passed": passed}],
        steps=steps,
        constants={"class": C, "depth_constant": depth_bound_constant(n, p), "window": K},
        finding=(not passed) and steps[0].passed,
    )


# ---------------------------------------------------------------------------
# planar covering


def tilde_variant(quarter: int) -> str:
    """Dilation used for quarter ``i``: right-down for 1 and 2, its mirror for 3."""
    if quarter not in (1, 2, 3):
        raise ValueError(f"quarter must be 1, 2 or 3, got {quarter}")
    return "left-up" if quarter == 3 else "right-down"


def _tilde_int(x1, x2, ell, variant):
    """Corners of ``Q~`` for squares with upper-right corner ``x`` and side ``ell`` (even integers)."""
    h = ell // 2
    if variant == "right-down":
        return x1 - ell, x2 - ell - h, x1 + h, x2
    return x1 - ell - h, x2 - ell, x1, x2 + h


@dataclass(eq=False)
class CoverSelection:
    """Selected dilated squares, their ``F_j`` sets and the per-property certificate.

    Integer coordinates are in lattice units ``2**-exp`` relative to the extent's
    lower corner; ``F_sets`` hold flat indices into the lattice mask of ``E``.
    """

    exp: int
    origin: tuple[Fraction, Fraction]
    lattice_shape: tuple[int, int]
    quarter: int
    variant: str
    t: float
    points: np.ndarray          # (N, 2)
    ell: np.ndarray             # (N,)
    gamma: tuple[int, ...]      # selected input indices, in selection order
    boxes: np.ndarray           # (|gamma|, 4): lo1, lo2, hi1, hi2 of Q~
    e_plus: np.ndarray          # |E cap (Q~)^+| in lattice cells, per selected
    f_counts: np.ndarray        # |E cap F_j| in lattice cells, per selected
    F_sets: list = field(default_factory=list)
    overlap_bound: int = 0
    overlap_by_size: dict = field(default_factory=dict)
    f_overlap: int = 0
    certificate: dict = field(default_factory=dict)
    hypothesis_ok: bool = True
    witness: dict | None = None

    @property
    def passed(self) -> bool:
        return all(self.certificate.values())

    @property
    def finding(self) -> bool:
        """A certificate failed although every input met the hypothesis."""
        return self.hypothesis_ok and not self.passed

    def _box(self, lo1, lo2, hi1, hi2) -> Box:
        scale = Fraction(1, 2 ** self.exp) if self.exp >= 0 else Fraction(2 ** -self.exp)
        o = self.origin
        return Box.from_coords((o[0] + lo1 * scale, o[1] + lo2 * scale), (o[0] + hi1 * scale, o[1] + hi2 * scale))

    @property
    def tilde_squares(self) -> list[Box]:
        return [self._box(*(int(v) for v in b)) for b in self.boxes]

    def F_mask(self, j: int) -> np.ndarray:
        m = np.zeros(self.lattice_shape, dtype=bool)
        m.flat[self.F_sets[j]] = True
        return m

    def to_dict(self) -> dict:
        return {
            "quarter": self.quarter,
            "variant": self.variant,
            "t": self.t,
            "points": len(self.points),
            "selected": len(self.gamma),
            "overlap_bound": self.overlap_bound,
            "overlap_by_size": {str(k): v for k, v in sorted(self.overlap_by_size.items())},
            "f_overlap": self.f_overlap,
            "certificate": dict(self.certificate),
            "hypothesis_ok": self.hypothesis_ok,
            "witness": self.witness,
        }


def _box_counts(table: np.ndarray, lo1, lo2, hi1, hi2) -> np.ndarray:
    """Lattice-cell counts over half-open boxes, clipped to the lattice (vectorized)."""
    n1, n2 = table.shape[0] - 1, table.shape[1] - 1
    a1, a2 = np.clip(lo1, 0, n1), np.clip(lo2, 0, n2)
    b1, b2 = np.clip(hi1, 0, n1), np.clip(hi2, 0, n2)
    b1, b2 = np.maximum(b1, a1), np.maximum(b2, a2)
    return table[b1, b2] - table[a1, b2] - table[b1, a2] + table[a1, a2]


def _count_table(mask: np.ndarray) -> np.ndarray:
    t = np.zeros((mask.shape[0] + 1, mask.shape[1] + 1), dtype=np.int64)
    t[1:, 1:] = mask.astype(np.int64).cumsum(0).cumsum(1)
    return t


def _floor_mul(t: float, area: int) -> int:
    """``floor(t * area / 8)`` exactly (``area`` a power of two)."""
    return math.floor(Fraction(t) * area / 8)


def cover_lattice(points: np.ndarray, ell: np.ndarray, emask: np.ndarray, t: float, quarter: int = 2,
                  exp: int = 0, origin=(Fraction(0), Fraction(0))) -> CoverSelection:
    """Greedy covering on an integer lattice.

    ``points`` are lattice points (upper-right corners of the squares ``Q_j``),
    ``ell`` their even side lengths, ``emask`` the lattice mask of ``E``.
    """
    variant = tilde_variant(quarter)
    points = np.asarray(points, dtype=np.int64).reshape(-1, 2)
    ell = np.asarray(ell, dtype=np.int64).reshape(-1)
    if (ell <= 0).any() or (ell % 2).any():
        raise ValueError("side lengths must be positive and even in lattice units")
    N = len(points)
    table = _count_table(emask)
    x1, x2 = points[:, 0], points[:, 1]
    half = ell // 2
    area = ell * ell
    o1, o2 = QUARTER_OFFSETS[quarter]
    # hypothesis: t/4 < |E cap Q_j^{+i}| / |Q_j|
    q_lo1, q_lo2 = x1 + o1 * half, x2 + o2 * half
    hyp_counts = _box_counts(table, q_lo1, q_lo2, q_lo1 + half, q_lo2 + half)
    hyp = hyp_counts / area > t / 4
    hypothesis_ok = bool(hyp.all())

    # greedy selection: decreasing side, then lexicographic lower corner of Q_j
    order = sorted(range(N), key=lambda j: (-int(ell[j]), int(x1[j] - ell[j]), int(x2[j] - ell[j])))
    T = np.stack(_tilde_int(x1, x2, ell, variant), axis=1) if N else np.zeros((0, 4), dtype=np.int64)
    if N:
        pmin = points.min(axis=0)
        pmax = points.max(axis=0)
        covered = np.zeros((int(pmax[0] - pmin[0]) + 1, int(pmax[1] - pmin[1]) + 1), dtype=bool)
    gamma = []
    for j in order:
        if covered[x1[j] - pmin[0], x2[j] - pmin[1]]:
            continue
        gamma.append(j)
        a1, a2, b1, b2 = (int(v) for v in T[j])
        covered[max(a1 - pmin[0], 0): max(b1 - pmin[0] + 1, 0),
                max(a2 - pmin[1], 0): max(b2 - pmin[1] + 1, 0)] = True
    gamma_arr = np.array(gamma, dtype=np.int64)
    S = T[gamma_arr] if gamma else np.zeros((0, 4), dtype=np.int64)
    L = ell[gamma_arr] if gamma else np.zeros(0, dtype=np.int64)
    cert = {}
    witness = None

    # coverage: every point lies in some closed Q~_i
    if N and gamma:
        inside = ((points[:, None, 0] >= S[None, :, 0]) & (points[:, None, 0] <= S[None, :, 2])
                  & (points[:, None, 1] >= S[None, :, 1]) & (points[:, None, 1] <= S[None, :, 3]))
        cov = inside.any(axis=1)
    else:
        cov = np.ones(N, dtype=bool) if not N else np.zeros(N, dtype=bool)
    cert["coverage"] = bool(cov.all())
    if not cert["coverage"]:
        witness = {"uncovered_point": int(np.nonzero(~cov)[0][0])}

    # no selected Q~ inside another
    if len(gamma) > 1:
        cont = ((S[:, None, 0] >= S[None, :, 0]) & (S[:, None, 1] >= S[None, :, 1])
                & (S[:, None, 2] <= S[None, :, 2]) & (S[:, None, 3] <= S[None, :, 3]))
        np.fill_diagonal(cont, False)
        cert["no_containment"] = not bool(cont.any())
        if not cert["no_containment"] and witness is None:
            a, b = np.argwhere(cont)[0]
            witness = {"contained": [int(gamma[a]), int(gamma[b])]}
    else:
        cert["no_containment"] = True

    # (Q~)^+ is the translate by the side 3 ell / 2
    side = 3 * L // 2
    P = np.stack([S[:, 0] + side, S[:, 1] + side, S[:, 2] + side, S[:, 3] + side], axis=1) if gamma else S
    e_plus = _box_counts(table, P[:, 0], P[:, 1], P[:, 2], P[:, 3]) if gamma else np.zeros(0, dtype=np.int64)
    areas = L * L
    qm = e_plus / areas > t / 4
    cert["quarter_mass"] = bool(qm.all())
    if not cert["quarter_mass"] and witness is None:
        witness = {"quarter_mass": int(gamma[int(np.argmin(qm))])}
    cap = e_plus / areas <= 8 * t
    cert["cap"] = bool(cap.all())
    if not cert["cap"] and witness is None:
        witness = {"cap": int(gamma[int(np.argmin(cap))])}

    # same-size overlap of the Q~_i (half-open, so touching boundaries do not count)
    by_size = {}
    for l in sorted(set(int(v) for v in L), reverse=True):
        sel = S[L == l]
        lo1, lo2 = sel[:, 0].min(), sel[:, 1].min()
        diff = np.zeros((int(sel[:, 2].max() - lo1) + 1, int(sel[:, 3].max() - lo2) + 1), dtype=np.int64)
        for a1, a2, b1, b2 in sel:
            diff[a1 - lo1, a2 - lo2] += 1
            diff[b1 - lo1, a2 - lo2] -= 1
            diff[a1 - lo1, b2 - lo2] -= 1
            diff[b1 - lo1, b2 - lo2] += 1
        by_size[l] = int(diff.cumsum(0).cumsum(1).max())
    overlap = max(by_size.values()) if by_size else 0

    # F_j: unclaimed E-cells of (Q~_j)^+ first, then least-claimed ones as needed
    F_sets, f_counts = [], []
    f_ok = True
    if cert["cap"]:
        claims = np.zeros(emask.shape, dtype=np.int64)
        n1, n2 = emask.shape
        for r in range(len(gamma)):
            a1, a2, b1, b2 = (int(v) for v in P[r])
            a1, a2, b1, b2 = max(a1, 0), max(a2, 0), min(b1, n1), min(b2, n2)
            if a1 >= b1 or a2 >= b2:
                F_sets.append(np.zeros(0, dtype=np.int64))
                f_counts.append(0)
                f_ok = False
                continue
            sub_e = emask[a1:b1, a2:b2]
            sub_c = claims[a1:b1, a2:b2]
            loc = np.argwhere(sub_e)
            flat = (loc[:, 0] + a1) * n2 + (loc[:, 1] + a2)
            cl = sub_c[sub_e]
            need = _floor_mul(t, int(areas[r])) + 1
            free = cl == 0
            chosen = flat[free]
            if len(chosen) < need:
                rest = np.nonzero(~free)[0]
                rest = rest[np.lexsort((flat[rest], cl[rest]))]
                chosen = np.concatenate([chosen, flat[rest[: need - len(chosen)]]])
            chosen = np.sort(chosen)
            claims.flat[chosen] += 1
            F_sets.append(chosen)
            f_counts.append(len(chosen))
            if not len(chosen) >= need:
                f_ok = False
        f_overlap = int(claims.max()) if gamma else 0
    else:
        f_overlap = 0
    f_counts = np.array(f_counts, dtype=np.int64)
    cert["f_mass"] = bool(f_ok and cert["cap"] and (len(f_counts) == 0 or (f_counts / areas > t / 8).all()))
    if not cert["f_mass"] and witness is None:
        witness = {"f_mass": "F_j below t/8 (or cap failed first)"}
    if not hypothesis_ok and witness is None:
        witness = {"hypothesis": int(np.nonzero(~hyp)[0][0])}
    return CoverSelection(exp, tuple(origin), emask.shape, quarter, variant, float(t), points, ell,
                          tuple(int(j) for j in gamma), S, e_plus, f_counts, F_sets, overlap, by_size,
                          f_overlap, cert, hypothesis_ok, witness)


def covering_select_2d(points: Sequence[Sequence], squares: Sequence, E: CellSet, t: float,
                       quarter: int = 2) -> CoverSelection:
    """Covering selection for squares ``Q_j`` with upper-right corner ``points[j]``.

    Squares may be :class:`Box` or :class:`DyadicCube`; everything is moved to a
    lattice fine enough for the half-side shifts of ``Q~``.
    """
    dom = E.domain
    if dom.dim != 2:
        raise ValueError("planar covering needs a 2D domain")
    if len(points) != len(squares):
        raise ValueError("one square per point")
    boxes = [q.box if isinstance(q, DyadicCube) else q for q in squares]
    pts = [tuple(Fraction(c) for c in x) for x in points]
    for x, B in zip(pts, boxes):
        if not B.is_square or tuple(B.upper) != x:
            raise ValueError(f"{B} does not have {x} as upper-right corner")
    exp = dom.depth + 1
    for x, B in zip(pts, boxes):
        exp = max(exp, B.exp + 1, *(Fraction(c).denominator.bit_length() - 1 for c in x))
    r = exp - dom.depth
    emask = E.mask
    for ax in range(2):
        emask = np.repeat(emask, 2 ** r, axis=ax)
    scale = 2 ** exp
    o = dom.extent.lower
    P = np.array([[int((c - oc) * scale) for c, oc in zip(x, o)] for x in pts], dtype=np.int64).reshape(-1, 2)
    ell = np.array([int(B.side * scale) for B in boxes], dtype=np.int64)
    return cover_lattice(P, ell, emask, t, quarter, exp, tuple(o))
