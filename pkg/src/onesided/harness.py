"""End-to-end checks of the restricted weak-type bounds on grids.

* :func:`verify_dyadic_weak_type` compares ``w({M^{+,d} chi_E > t})`` with the
  explicit bound ``2^{n+p+2}/(1-2^{-p}) [(w,v)]^p t^{-p} v(E)`` and certifies the
  band-by-band depth argument on the same instance.
* :func:`verify_necessity` replays the reverse implication cube by cube.
* :func:`verify_2d_weak_type` runs the planar pipeline (quarter operators,
  witness squares, covering, ``F_j`` sets) and assembles an instance constant.
* :func:`sharpness_search` looks for pairs that make the dyadic bound tight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._parallel import run_chunks, thread_count
from .classes import ClassConstant, restricted_constant, restricted_profile, restricted_ratio
from .covering import (band_partition, certify_depth_bound, cover_lattice, depth_bound_constant,
                       depth_decompose, select_level_set_cubes)
from .dyadic import QUARTER_OFFSETS
from .grid import CellSet, GridDomain, WeightField, WeightPair
from .maximal import (anchored_maximal, dyadic_plus_maximal, level_set, onesided_maximal_2d,
                      subsquare_means_2d)
from .report import StepCheck, VerifyReport

__all__ = [
    "weak_type_constant",
    "default_t_values",
    "verify_dyadic_weak_type",
    "verify_necessity",
    "verify_2d_weak_type",
    "planar_band",
    "sharpness_search",
    "critical_t_values",
]


def weak_type_constant(n: int, p: float) -> float:
    """``2^{n+p+2} / (1 - 2^{-p})``."""
    return depth_bound_constant(n, p) / (1 - 2.0 ** (-p))


def default_t_values(domain: GridDomain) -> list[float]:
    """Dyadic sweep ``2^-L, ..., 1/2``."""
    L = max(domain.depth, 1)
    return [2.0 ** (-j) for j in range(L, 0, -1)]


def _ratio(lhs: float, rhs: float) -> float:
    if lhs == 0:
        return 0.0
    if rhs == 0:
        return math.inf
    return lhs / rhs if math.isfinite(rhs) else 0.0


def _rhs(const: float, C: float, p: float, t: float, vE: float) -> float:
    # an infinite class constant makes the bound vacuous, even when v(E) = 0
    if math.isinf(C):
        return math.inf
    if vE == 0 or C == 0:
        return 0.0
    return const * C ** p * t ** (-p) * vE


def _merge_steps(groups: list[list[StepCheck]]) -> list[StepCheck]:
    """Combine same-named steps: pass iff all pass; keep the worst lhs/rhs ratio."""
    out: dict[str, StepCheck] = {}
    for steps in groups:
        for s in steps:
            cur = out.get(s.name)
            if cur is None:
                out[s.name] = StepCheck(s.name, s.passed, s.lhs, s.rhs, dict(s.detail, instances=1))
                continue
            cur.passed = cur.passed and s.passed
            cur.detail["instances"] += 1
            if s.lhs is not None and s.rhs is not None:
                r_new = _ratio(s.lhs, s.rhs)
                r_old = _ratio(cur.lhs, cur.rhs) if cur.lhs is not None and cur.rhs is not None else -1
                if r_new > r_old:
                    cur.lhs, cur.rhs = s.lhs, s.rhs
            if not s.passed and "first_failure" not in cur.detail:
                cur.detail["first_failure"] = s.detail
    return list(out.values())


def verify_dyadic_weak_type(pair: WeightPair, E: CellSet, t_values: Sequence[float] | None = None,
                            certify: bool = True, constant: ClassConstant | None = None,
                            seed: int | None = None) -> VerifyReport:
    """Dyadic weak-type bound for ``chi_E`` at every ``t``, with per-band certificates."""
    dom = pair.domain
    if E.domain != dom:
        raise ValueError("set and pair live on different domains")
    n, p = dom.dim, pair.p
    t_values = default_t_values(dom) if t_values is None else [float(t) for t in t_values]
    if any(not t > 0 for t in t_values):
        raise ValueError("t values must be positive")
    if constant is None:
        constant = restricted_constant(pair, "dyadic")
    C = constant.value
    T = weak_type_constant(n, p)
    vE = pair.v.measure(E)
    M = dyadic_plus_maximal(E)
    rows, step_groups = [], []
    finding = False
    for t in t_values:
        ls = level_set(M, t)
        lhs = pair.w.measure(ls)
        rhs = _rhs(T, C, p, t, vE)
        ok = lhs <= rhs
        row = {"t": t, "lhs": lhs, "rhs": rhs, "ratio": _ratio(lhs, rhs), "passed": ok,
               "vacuous": math.isinf(rhs)}
        if certify:
            fam = select_level_set_cubes(E, t)
            steps = [StepCheck("family_matches_level_set", fam.union() == ls and fam.check_disjoint())]
            band_lhs, band_rhs = [], []
            for band in band_partition(fam):
                if not len(band):
                    continue
                rep = certify_depth_bound(depth_decompose(band), E, pair, band.t, C)
                steps.extend(rep.steps)
                finding = finding or rep.finding
                band_lhs.append(rep.rows[0]["lhs"])
                band_rhs.append(rep.rows[0]["rhs"])
            total = math.fsum(band_lhs)
            series = math.fsum(band_rhs) if all(math.isfinite(b) for b in band_rhs) else math.inf
            steps.append(StepCheck("band_series", total <= series * (1 + 1e-12) and series <= rhs * (1 + 1e-12)
                                   if math.isfinite(series) else True, total, series))
            row["bands"] = len(band_lhs)
            row["certified"] = all(s.passed for s in steps)
            step_groups.append(steps)
        rows.append(row)
    steps = _merge_steps(step_groups)
    passed = all(r["passed"] for r in rows) and all(s.passed for s in steps)
    return VerifyReport(
        "dyadic-weak-type", passed,
        instance={"dim": n, "depth": dom.depth, "p": p, "E_cells": E.count, "E_measure": E.measure,
                  "vE": vE, "t_values": list(t_values)},
        rows=rows, steps=steps,
        constants={"class": C, "class_tag": constant.class_tag, "weak_type": T,
                   "depth_bound": depth_bound_constant(n, p)},
        witness=constant.to_dict(), seed=seed, finding=finding)


def verify_necessity(pair: WeightPair, flavor: str = "dyadic", rtol: float = 1e-9,
                     seed: int | None = None) -> VerifyReport:
    """For every qualifying cube and its extremal ``E``, the weak-type ratio at a matched ``t`` bounds the class constant.

    Dyadic: ``t = |E|/(2|Q|)`` puts ``Q`` inside ``{M^{+,d} chi_E > t}``, giving
    ``[(w,v)] <= 2 C_weak^{1/p}``.  Anchored: a cell corner ``x`` in ``Q`` sees
    ``Q^+`` inside ``Q_{x,2h}``, so ``t = |E|/(2^{n+1}|Q|)`` and the factor is
    ``2^{n+1}``.
    """
    from .classes import normalize_flavor

    flavor = normalize_flavor(flavor)
    dom = pair.domain
    n, p = dom.dim, pair.p
    factor = 2.0 if flavor == "dyadic" else 2.0 ** (n + 1)
    op = dyadic_plus_maximal if flavor == "dyadic" else anchored_maximal
    constant = restricted_constant(pair, flavor)
    profile = restricted_profile(pair, flavor)
    c_weak = 0.0
    contain_bad = []
    replay_bad = []
    rows = []
    best_row = None
    for cb in profile:
        if not cb.cells:
            continue
        mask = np.zeros(dom.shape, dtype=bool)
        for c in cb.cells:
            mask[c] = True
        E = CellSet(dom, mask)
        nq = cb.size ** n
        t = len(cb.cells) / (factor * nq)
        ls = level_set(op(E), t)
        q_sl = tuple(slice(a, a + cb.size) for a in cb.lo)
        if not ls.mask[q_sl].all():
            contain_bad.append(cb.lo)
        lhs = pair.w.measure(ls)
        vE = pair.v.measure(E)
        ratio = math.inf if vE == 0 and lhs > 0 else (lhs * t ** p / vE if vE > 0 else 0.0)
        w_q = math.fsum(pair.w.density[q_sl].ravel())
        v_e = math.fsum(float(pair.v.density[c]) for c in cb.cells)
        replay = restricted_ratio(len(cb.cells), nq, w_q, v_e, p)
        if not (replay == cb.value or abs(replay - cb.value) <= 1e-12 * abs(cb.value)):
            replay_bad.append(cb.lo)
        if ratio > c_weak or best_row is None:
            best_row = {"cube_lo": list(cb.lo), "size": cb.size, "t": t, "lhs": lhs, "vE": vE,
                        "weak_ratio": ratio, "cube_value": cb.value}
        c_weak = max(c_weak, ratio)
    C = constant.value
    bound = factor * c_weak ** (1 / p) if math.isfinite(c_weak) else math.inf
    ok = (C <= bound * (1 + rtol)) if math.isfinite(C) else math.isinf(c_weak)
    steps = [
        StepCheck("containment", not contain_bad, detail={"violations": [list(x) for x in contain_bad[:10]]}),
        StepCheck("witness_replay", not replay_bad, detail={"violations": [list(x) for x in replay_bad[:10]]}),
        StepCheck("class_bound", ok, C, bound, {"factor": factor, "rtol": rtol}),
    ]
    if best_row is not None:
        rows.append(best_row)
    return VerifyReport(
        "necessity", all(s.passed for s in steps),
        instance={"dim": n, "depth": dom.depth, "p": p, "flavor": flavor, "cubes": len(profile)},
        rows=rows, steps=steps,
        constants={"class": C, "class_tag": constant.class_tag, "weak_ratio": c_weak,
                   "factor": factor, "bound": bound, "unbounded": math.isinf(c_weak)},
        witness=constant.to_dict(), seed=seed)


# ---------------------------------------------------------------------------
# planar pipeline

_REFINE = 2  # lattice = cells / 4: resolves the 3/4-side corners of (Q~)^{+2}


@dataclass
class _PlanarContext:
    pair: WeightPair
    E: CellSet
    xi: object
    mplus: np.ndarray
    means: dict
    emask: np.ndarray
    etable: np.ndarray
    wtable: np.ndarray
    vfine: np.ndarray
    b_class: float
    fine_cv: float


def _planar_context(pair: WeightPair, E: CellSet, xi, b_class: float) -> _PlanarContext:
    from .covering import _count_table

    dom = pair.domain
    r = 2 ** _REFINE
    emask = np.repeat(np.repeat(E.mask, r, 0), r, 1)
    wf = np.repeat(np.repeat(pair.w.density, r, 0), r, 1)
    wt = np.zeros((wf.shape[0] + 1, wf.shape[1] + 1))
    wt[1:, 1:] = wf.cumsum(0).cumsum(1)
    means = {i: subsquare_means_2d(E, dom, i, xi) for i in (1, 2, 3)}
    return _PlanarContext(pair, E, xi, onesided_maximal_2d(E).values, means, emask, _count_table(emask), wt,
                          np.repeat(np.repeat(pair.v.density, r, 0), r, 1), b_class,
                          dom.cell_volume / r ** 2)


def _wsum(table, lo1, lo2, hi1, hi2):
    n1, n2 = table.shape[0] - 1, table.shape[1] - 1
    a1, a2 = np.clip(lo1, 0, n1), np.clip(lo2, 0, n2)
    b1, b2 = np.clip(hi1, 0, n1), np.clip(hi2, 0, n2)
    b1, b2 = np.maximum(b1, a1), np.maximum(b2, a2)
    return table[b1, b2] - table[a1, b2] - table[b1, a2] + table[a1, a2]


def planar_band(ctx: _PlanarContext, mu: float, quarter: int) -> dict:
    """One quarter of one band: ``Omega = {mu < M^{+i} chi_E, M^+ chi_E <= 2 mu}`` and its chain."""
    from .covering import _box_counts

    pair, dom = ctx.pair, ctx.pair.domain
    p = pair.p
    r = 2 ** _REFINE
    means = ctx.means[quarter]
    mi = np.zeros(dom.shape)
    for m in means.values():
        mi = np.maximum(mi, m)
    omega = (mi > mu) & (ctx.mplus <= 2 * mu)
    # witness: the largest admissible size whose quarter mean exceeds mu
    size = np.zeros(dom.shape, dtype=np.int64)
    for k in sorted(means):
        s = 2 ** (dom.depth - k)
        size = np.where((size == 0) & (means[k] > mu), s, size)
    idx = np.argwhere(omega)
    lhs = math.fsum(pair.w.density[omega].tolist()) * dom.cell_volume
    out = {"quarter": quarter, "mu": mu, "cells": int(len(idx)), "lhs": lhs}
    if len(idx) == 0:
        out.update(rhs=0.0, D=1.0, C_F=0, B=ctx.b_class, overlap=0, selected=0,
                   cert={"sandwich_upper": True, "cell_cover": True, "hull_sum": True},
                   cover_cert={}, finding=False, hypothesis_ok=True, witness=None)
        return out
    pts = idx * r
    ell = size[omega] * r
    sel = cover_lattice(pts, ell, ctx.emask, mu, quarter, dom.depth + _REFINE, dom.extent.lower)
    cert = {}
    # upper sandwich: |E cap (Q~_x)^{+2}| / |Q_x| <= 8 mu for every witness square
    from .covering import _tilde_int
    lo1, lo2, hi1, hi2 = _tilde_int(pts[:, 0], pts[:, 1], ell, sel.variant)
    side = 3 * ell // 2
    P1, P2 = lo1 + side, lo2 + side
    q = 3 * ell // 4
    o1, o2 = QUARTER_OFFSETS[2]
    c2 = _box_counts(ctx.etable, P1 + o1 * q, P2 + o2 * q, P1 + o1 * q + q, P2 + o2 * q + q)
    cert["sandwich_upper"] = bool((c2 / (ell * ell) <= 8 * mu).all())
    S = sel.boxes
    L = ell[np.array(sel.gamma)]
    # hulls: Q~ grown by one cell to the right and top covers the cells whose corner it holds
    H = S.copy()
    H[:, 2] += r
    H[:, 3] += r
    paint = np.zeros(ctx.emask.shape, dtype=np.int64)
    n1, n2 = paint.shape
    for a1, a2, b1, b2 in H:
        paint[max(a1, 0):max(min(b1, n1), 0), max(a2, 0):max(min(b2, n2), 0)] = 1
    fine_omega = np.repeat(np.repeat(omega, r, 0), r, 1)
    cert["cell_cover"] = bool(paint[fine_omega].all())
    w_h = _wsum(ctx.wtable, H[:, 0], H[:, 1], H[:, 2], H[:, 3]) * ctx.fine_cv
    w_s = _wsum(ctx.wtable, S[:, 0], S[:, 1], S[:, 2], S[:, 3]) * ctx.fine_cv
    hull_total = math.fsum(w_h.tolist())
    cert["hull_sum"] = lhs <= hull_total * (1 + 1e-12)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where(w_h == 0, 0.0, np.where(w_s == 0, np.inf, w_h / np.where(w_s == 0, 1, w_s)))
    D = max(1.0, float(d.max()))
    # ratios of the squares actually used, with the hull mass in place of w(Q~):
    # w(H_j) = B_j^p (|Q~_j| / |E cap F_j|)^p v(E cap F_j), which stays finite where
    # Q~_j leaves the grid (w(Q~_j) = 0 there, so D alone would be infinite)
    B = ctx.b_class
    ratios, hull_ratios = [], []
    if sel.certificate.get("cap", False):
        for j, Fj in enumerate(sel.F_sets):
            vF = math.fsum(ctx.vfine.flat[Fj].tolist())
            nq = int((3 * L[j] // 2) ** 2)
            ratios.append(restricted_ratio(len(Fj), nq, float(w_s[j] / ctx.fine_cv), vF, p))
            hull_ratios.append(restricted_ratio(len(Fj), nq, float(w_h[j] / ctx.fine_cv), vF, p))
        if hull_ratios:
            B = max(B, max(hull_ratios))
    vE = pair.v.measure(ctx.E)
    const = sel.f_overlap * 8.0 ** p * (9 / 4) ** p
    rhs = _rhs(const, B, p, mu, vE)
    out.update(rhs=rhs, D=D, C_F=sel.f_overlap, B=B, B_squares=max(ratios) if ratios else None,
               B_hulls=max(hull_ratios) if hull_ratios else None,
               constant=const, overlap=sel.overlap_bound, selected=len(sel.gamma), cert=cert,
               cover_cert=dict(sel.certificate), finding=sel.finding or (sel.hypothesis_ok and not all(cert.values())),
               hypothesis_ok=sel.hypothesis_ok, witness=sel.witness)
    return out


def verify_2d_weak_type(pair: WeightPair, E: CellSet, t_values: Sequence[float] | None = None,
                        xi=None, seed: int | None = None) -> VerifyReport:
    """Planar weak-type bound for ``chi_E`` with an instance-assembled constant.

    For each ``t`` the level set ``{M^+ chi_E > t}`` is split into bands
    ``(2^k t, 2^{k+1} t]``; each band is covered by the three quarter sets,
    each quarter set runs the covering, and the chain
    ``w(band) <= sum_i C_F 8^p (9/4)^p B^p mu^{-p} v(E)`` is checked, where
    ``B`` also covers the hull ratios of the squares used.  With ``xi`` the
    rows bound the part of each band seen by the truncated quarter operators;
    the rest is reported as ``uncovered``.
    """
    dom = pair.domain
    if dom.dim != 2:
        raise ValueError(f"planar verification needs dim 2, got {dom.dim}")
    if E.domain != dom:
        raise ValueError("set and pair live on different domains")
    p = pair.p
    t_values = default_t_values(dom) if t_values is None else [float(t) for t in t_values]
    if any(not t > 0 for t in t_values):
        raise ValueError("t values must be positive")
    c_anch = restricted_constant(pair, "anchored")
    c_dy = restricted_constant(pair, "dyadic")
    ctx = _planar_context(pair, E, xi, c_anch.value)
    vmax = float(ctx.mplus.max()) if ctx.mplus.size else 0.0
    cache: dict[float, list[dict]] = {}
    rows, steps_all = [], []
    finding = False
    worst = {"D": 1.0, "C_F": 0, "B": c_anch.value, "overlap": 0}
    for t in t_values:
        lhs_parts, uncovered = [], []
        rhs_parts = []
        band_ok = True
        mu, k = t, 0
        while mu < vmax:
            if mu not in cache:
                cache[mu] = [planar_band(ctx, mu, i) for i in (1, 2, 3)]
            parts = cache[mu]
            band = (ctx.mplus > mu) & (ctx.mplus <= 2 * mu)
            seen = np.logical_or.reduce([_quarter_max(ctx, i) > mu for i in (1, 2, 3)])
            missed = band & ~seen
            # without truncation M^+ <= max_i M^{+i} pointwise, so nothing is missed;
            # with xi the smallest scales escape and only the covered part is bounded
            split_ok = not missed.any() if xi is None else True
            w_band = math.fsum(pair.w.density[band & seen].tolist()) * dom.cell_volume
            uncovered.append(math.fsum(pair.w.density[missed].tolist()) * dom.cell_volume)
            lhs_q = math.fsum(q["lhs"] for q in parts)
            rhs_q = math.fsum(q["rhs"] for q in parts) if all(math.isfinite(q["rhs"]) for q in parts) else math.inf
            cert_ok = all(all(q["cert"].values()) and all(q["cover_cert"].values()) for q in parts)
            ok = split_ok and w_band <= lhs_q * (1 + 1e-12) and lhs_q <= rhs_q and cert_ok
            band_ok = band_ok and ok
            finding = finding or any(q["finding"] for q in parts)
            steps_all.append(_band_steps(mu, parts, split_ok, w_band, lhs_q, rhs_q))
            lhs_parts.append(w_band)
            rhs_parts.append(rhs_q)
            for q in parts:
                worst["D"] = max(worst["D"], q["D"])
                worst["C_F"] = max(worst["C_F"], q["C_F"])
                worst["B"] = max(worst["B"], q["B"])
                worst["overlap"] = max(worst["overlap"], q["overlap"])
            mu *= 2
            k += 1
        lhs = math.fsum(lhs_parts)
        rhs = math.fsum(rhs_parts) if all(math.isfinite(x) for x in rhs_parts) else math.inf
        ok = band_ok and lhs <= rhs
        rows.append({"t": t, "lhs": lhs, "rhs": rhs, "ratio": _ratio(lhs, rhs), "passed": ok,
                     "bands": k, "vacuous": math.isinf(rhs),
                     "uncovered": math.fsum(uncovered)})
    steps = _merge_steps(steps_all)
    passed = all(r["passed"] for r in rows) and all(s.passed for s in steps)
    return VerifyReport(
        "planar-weak-type", passed,
        instance={"dim": 2, "depth": dom.depth, "p": p, "E_cells": E.count, "vE": pair.v.measure(E),
                  "t_values": list(t_values), "xi": None if xi is None else str(Fraction(xi))},
        rows=rows, steps=steps,
        constants={"class_anchored": c_anch.value, "class_dyadic": c_dy.value,
                   "worst_D": worst["D"], "worst_C_F": worst["C_F"], "worst_B": worst["B"],
                   "worst_same_size_overlap": worst["overlap"],
                   "assembled_factor": worst["C_F"] * 8.0 ** p * (9 / 4) ** p},
        witness=c_anch.to_dict(), seed=seed, finding=finding)


def _quarter_max(ctx: _PlanarContext, i: int) -> np.ndarray:
    out = np.zeros(ctx.mplus.shape)
    for m in ctx.means[i].values():
        out = np.maximum(out, m)
    return out


def _band_steps(mu, parts, split_ok, w_band, lhs_q, rhs_q) -> list[StepCheck]:
    steps = [StepCheck("band_split", split_ok, detail={"mu": mu}),
             StepCheck("band_sum", w_band <= lhs_q * (1 + 1e-12), w_band, lhs_q),
             StepCheck("band_bound", lhs_q <= rhs_q, lhs_q, rhs_q)]
    names = ["coverage", "no_containment", "quarter_mass", "cap", "f_mass"]
    for name in names:
        steps.append(StepCheck(name, all(q["cover_cert"].get(name, True) for q in parts), detail={"mu": mu}))
    for name in ("sandwich_upper", "cell_cover", "hull_sum"):
        steps.append(StepCheck(name, all(q["cert"].get(name, True) for q in parts), detail={"mu": mu}))
    steps.append(StepCheck("hypothesis", all(q["hypothesis_ok"] for q in parts), detail={"mu": mu}))
    return steps


# ---------------------------------------------------------------------------
# sharpness


def critical_t_values(values: np.ndarray) -> np.ndarray:
    """Just below each distinct positive value: where ``lhs(t) t^p`` peaks."""
    u = np.unique(values[values > 0])
    return np.nextafter(u, 0)


def _objective(pair: WeightPair, E: CellSet) -> tuple[float, float, float]:
    """``max_t w({M^{+,d} chi_E > t}) t^p / ([(w,v)]^p v(E))`` and its argmax ``t``."""
    dom = pair.domain
    C = restricted_constant(pair, "dyadic").value
    vE = pair.v.measure(E)
    if E.count == 0 or vE == 0 or not math.isfinite(C) or C == 0:
        return 0.0, 0.0, C
    vals = dyadic_plus_maximal(E).values
    best, bt = 0.0, 0.0
    w = pair.w.density
    flat_v = vals.ravel()
    order = np.argsort(-flat_v, kind="stable")
    wsorted = w.ravel()[order]
    vs = flat_v[order]
    # w({M >= u}) for each distinct u via cumulative sums over the descending order
    cum = np.cumsum(wsorted) * dom.cell_volume
    for u in np.unique(vs[vs > 0]):
        last = np.searchsorted(-vs, -u, side="right") - 1
        t = float(np.nextafter(u, 0))
        obj = cum[last] * t ** pair.p / (C ** pair.p * vE)
        if obj > best:
            best, bt = float(obj), t
    return best, bt, C


def _random_instance(dom: GridDomain, p: float, rng: np.random.Generator, family: str):
    shape = dom.shape
    if family == "unit":
        w = np.ones(shape)
        v = np.ones(shape)
    else:
        kind = rng.integers(0, 3)
        if kind == 0:
            w = np.exp2(rng.integers(-4, 5, size=shape).astype(float))
            v = np.exp2(rng.integers(-4, 5, size=shape).astype(float))
        elif kind == 1:
            cut = int(rng.integers(1, dom.n_side))
            w = np.ones(shape)
            v = np.ones(shape)
            idx = np.arange(dom.n_side).reshape((-1,) + (1,) * (dom.dim - 1))
            w = np.where(idx < cut, 2.0 ** rng.integers(1, 6), w)
            v = np.where(idx >= cut, 2.0 ** -rng.integers(1, 6), v)
        else:
            w = rng.integers(1, 9, size=shape) / 4.0
            v = rng.integers(1, 9, size=shape) / 4.0
    E = rng.random(shape) < rng.uniform(0.05, 0.6)
    return w, v, E


def _climb(dom, p, w, v, E, rng, steps, family):
    pair = WeightPair(WeightField(dom, w), WeightField(dom, v), p)
    best, bt, _ = _objective(pair, CellSet(dom, E))
    for _ in range(steps):
        w2, v2, E2 = w.copy(), v.copy(), E.copy()
        move = rng.integers(0, 3) if family != "unit" else 2
        cell = tuple(int(i) for i in rng.integers(0, dom.n_side, size=dom.dim))
        if move == 0:
            w2[cell] *= 2.0 if rng.random() < 0.5 else 0.5
        elif move == 1:
            v2[cell] *= 2.0 if rng.random() < 0.5 else 0.5
        else:
            E2[cell] = not E2[cell]
        cand = WeightPair(WeightField(dom, w2), WeightField(dom, v2), p)
        obj, t, _ = _objective(cand, CellSet(dom, E2))
        if obj > best:
            best, bt, w, v, E = obj, t, w2, v2, E2
    return best, bt, w, v, E


def sharpness_search(domain: GridDomain, p: float, budget: int = 16, seed: int = 0, family: str = "random",
                     climb_steps: int | None = None, threads: int | None = 1) -> VerifyReport:
    """Random trials plus hill climbing on the best one, maximizing ``lhs t^p / ([(w,v)]^p v(E))``.

    Deterministic in ``seed`` for any thread count (one child seed per trial).
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    if family not in ("random", "unit"):
        raise ValueError("family must be 'random' or 'unit'")
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(budget + 1)

    def trial(i):
        rng = np.random.default_rng(children[i])
        w, v, E = _random_instance(domain, p, rng, family)
        pair = WeightPair(WeightField(domain, w), WeightField(domain, v), p)
        obj, t, C = _objective(pair, CellSet(domain, E))
        return obj, t, w, v, E

    results = run_chunks(trial, range(budget), thread_count(threads))
    best_i = max(range(budget), key=lambda i: (results[i][0], -i))
    obj, t, w, v, E = results[best_i]
    steps_n = budget if climb_steps is None else climb_steps
    obj2, t2, w, v, E = _climb(domain, p, w, v, E, np.random.default_rng(children[budget]), steps_n, family)
    T = weak_type_constant(domain.dim, p)
    trial_rows = [{"trial": i, "objective": r[0], "t": r[1], "ratio": r[0] / T, "passed": r[0] <= T}
                  for i, r in enumerate(results)]
    rows = trial_rows + [{"trial": "climb", "objective": obj2, "t": t2, "ratio": obj2 / T, "passed": obj2 <= T}]
    passed = all(r["passed"] for r in rows)
    return VerifyReport(
        "sharpness", passed,
        instance={"dim": domain.dim, "depth": domain.depth, "p": p, "budget": budget, "family": family,
                  "climb_steps": steps_n},
        rows=rows,
        steps=[StepCheck("bound_holds", passed, obj2 / T, 1.0)],
        constants={"best_objective": obj2, "best_ratio": obj2 / T, "weak_type": T, "best_t": t2,
                   "best_trial": best_i},
        witness={"w": w.tolist(), "v": v.tolist(), "E": E.astype(int).tolist()},
        seed=seed)
