"""Lemma-level inequality suites for trees and antichains.

Every auxiliary object of the tree analysis is materialized on the
instance: per-point scale windows, the two stopping-time cube partitions
attached to a tile family, the Lipschitz partition of unity over the
stopping cubes, the boundary smoothing operator, and the adjoint tree
operators.  Each named inequality is then evaluated with both sides
computed independently; structural claims are exact predicates.

Bounds carrying profile constants far beyond float range are compared in
log2 space; each such item also reports the measured constant (the left
side normalized by the non-constant factors) as an informational column.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .decompose import Antichain, Forest
from .operators import (
    OperatorContext,
    bounded_random,
    boundary_shear_apply,
    collection_apply,
    collection_apply_adjoint,
    eval_nontangential,
    forest_rows,
    frac_to_float,
    maximal_function,
    projection_average,
    tile_apply_adjoint,
    tile_support_set,
)
from .phases import holder_norm
from .report import CheckItem, CheckReport, log2_number
from .space import Ball

LOG2_FLOOR = -100000.0


def _log2(x: float) -> float:
    return math.log2(x) if x > 0 else LOG2_FLOOR


def logsumexp2(terms: Sequence[float]) -> float:
    m = max(terms)
    if m <= LOG2_FLOOR:
        return LOG2_FLOOR
    return m + math.log2(sum(2.0 ** (t - m) for t in terms))


def dyadic_level(x: Fraction) -> int:
    """N with 2^N <= x < 2^(N+1), for x >= 1 (exact)."""
    if x < 1:
        raise ValueError("dyadic level needs x >= 1")
    num, den = x.numerator, x.denominator
    n = (num // den).bit_length() - 1
    while Fraction(2 ** (n + 1)) <= x:
        n += 1
    return n


def lp_norm_log2(vals: np.ndarray, w: np.ndarray, p: int) -> float:
    """log2 of the weighted L^p norm, stable for very large p."""
    terms = []
    for v, ww in zip(vals.tolist(), w.tolist()):
        if v > 0 and ww > 0:
            terms.append(p * math.log2(v) + math.log2(ww))
    if not terms:
        return LOG2_FLOOR
    return logsumexp2(terms) / p


# ---------------------------------------------------------------------------
# stopping-time cube families
# ---------------------------------------------------------------------------


def stopping_cubes_far(ctx: OperatorContext, tile_set: Sequence[int]) -> list[int]:
    """Maximal cubes that keep every tile cube out of their 100-fold ball
    (or sit at the bottom scale)."""
    ts = ctx.ts
    grid = ctx.grid
    sp = ctx.space
    prof = ctx.profile
    tile_masks = [set(ts.members(p).tolist()) for p in tile_set]
    eligible = set()
    for cube in grid.cubes:
        if cube.scale == -grid.S:
            eligible.add(cube.id)
            continue
        ball = Ball(cube.center, 100 * prof.pow_D(cube.scale + 1))
        bset = set(sp.ball_members(ball).tolist())
        if all(not (m <= bset) for m in tile_masks):
            eligible.add(cube.id)
    out = []
    for cid in eligible:
        if not any(anc in eligible for anc in grid.ancestors(cid)[1:]):
            out.append(cid)
    return sorted(out)


def stopping_cubes_near(ctx: OperatorContext, tile_set: Sequence[int]) -> list[int]:
    """Maximal cubes inside some tile cube that contain no tile cube
    (or sit at the bottom scale)."""
    ts = ctx.ts
    grid = ctx.grid
    tile_cubes = [ts.tiles[p].cube for p in tile_set]
    eligible = set()
    for cube in grid.cubes:
        if cube.scale == -grid.S:
            eligible.add(cube.id)
            continue
        inside_some = any(grid.cube_le(cube.id, tc) for tc in tile_cubes)
        contains_some = any(grid.cube_le(tc, cube.id) for tc in tile_cubes)
        if inside_some and not contains_some:
            eligible.add(cube.id)
    out = []
    for cid in eligible:
        if not any(anc in eligible for anc in grid.ancestors(cid)[1:]):
            out.append(cid)
    return sorted(out)


def is_cube_partition(ctx: OperatorContext, cubes: Sequence[int]) -> bool:
    seen = np.zeros(ctx.space.n, dtype=np.int64)
    for cid in cubes:
        seen[ctx.grid.cubes[cid].members] += 1
    return bool(np.all(seen == 1))


# ---------------------------------------------------------------------------
# partition of unity over the stopping cubes
# ---------------------------------------------------------------------------


def bump_partition(ctx: OperatorContext, jprime: Sequence[int], top_cube: int) -> dict[int, np.ndarray]:
    """Tent weights over stopping cubes, normalized on the top cube.

    chi_J(y) = 1_top(y) * max(0, 1 - dist(y, J) / (D^s(J)/4)) / normalizer.
    """
    sp = ctx.space
    grid = ctx.grid
    prof = ctx.profile
    top_mask = grid.mask(top_cube)
    raw: dict[int, np.ndarray] = {}
    for cid in jprime:
        cube = grid.cubes[cid]
        quarter = prof.pow_D(cube.scale) / 4
        dmin = sp.dist_int[:, cube.members].min(axis=1)
        vals = np.zeros(sp.n)
        for y in range(sp.n):
            ratio = frac_to_float(Fraction(int(dmin[y]), sp.dist_den) / quarter)
            vals[y] = max(0.0, 1.0 - ratio)
        raw[cid] = vals
    total = np.zeros(sp.n)
    for vals in raw.values():
        total += vals
    out = {}
    for cid, vals in raw.items():
        chi = np.zeros(sp.n)
        sel = top_mask & (total > 0)
        chi[sel] = vals[sel] / total[sel]
        out[cid] = chi
    return out


# ---------------------------------------------------------------------------
# tree suite
# ---------------------------------------------------------------------------


def _tree_scales(ctx: OperatorContext, tree: Sequence[int]) -> dict[int, list[int]]:
    """Per point: the scales of tree tiles whose support contains it."""
    out: dict[int, list[int]] = {}
    for p in tree:
        s = ctx.ts.scale(p)
        for x in tile_support_set(ctx, p).tolist():
            out.setdefault(x, []).append(s)
    return {x: sorted(v) for x, v in out.items()}


def _sum_bound_log2(terms: list[tuple[float, float]]) -> float:
    """log2 of sum of const_log2-scaled float terms: sum 2^c * b."""
    logs = []
    for c, b in terms:
        if b > 0:
            logs.append(c + math.log2(b))
    if not logs:
        return LOG2_FLOOR
    return logsumexp2(logs)


def lemma_suite_tree(ctx: OperatorContext, forest: Forest, seed: int = 11) -> CheckReport:
    """The tree/forest inequality battery on one forest instance."""
    report = CheckReport()
    sp = ctx.space
    ts = ctx.ts
    grid = ctx.grid
    prof = ctx.profile
    a = sp.a
    tau = 1.0 / a
    n = forest.n
    Z = prof.Z
    kappa = float(prof.kappa)
    logD = log2_number(Fraction(prof.D))
    rng = np.random.default_rng(seed)
    w = ctx.w
    Mg = maximal_function(sp, np.abs(ctx.g))
    absf = np.abs(ctx.f)

    # ---- per-tree machinery and single-tree lemmas -------------------------
    per_tree: dict[int, dict] = {}
    for u in forest.tops:
        tree = forest.trees[u]
        scales = _tree_scales(ctx, tree)
        convex_ok = all(
            v == list(range(v[0], v[-1] + 1)) for v in scales.values() if v
        )
        report.predicate(
            f"tree.scale-convexity[{u}]", "tree-scale-window-convexity", convex_ok
        )
        jc = stopping_cubes_far(ctx, tree)
        lc = stopping_cubes_near(ctx, tree)
        report.predicate(
            f"tree.stopping-partition[{u}]",
            "stopping-cubes-partition",
            is_cube_partition(ctx, jc) and is_cube_partition(ctx, lc),
        )
        pj_absf = projection_average(grid, jc, absf).real
        pj_f = projection_average(grid, jc, ctx.f)
        pl_absg = projection_average(grid, lc, np.abs(ctx.g)).real
        s1_pj = boundary_shear_apply(ctx, jc, pj_absf)
        m_pj = maximal_function(sp, pj_absf)
        per_tree[u] = dict(
            tree=tree,
            scales=scales,
            jc=jc,
            lc=lc,
            pj_absf=pj_absf,
            pj_f=pj_f,
            pl_absg=pl_absg,
            s1_pj=s1_pj,
            m_pj=m_pj,
            adj_g=collection_apply_adjoint(ctx, tree, ctx.g),
        )

        # pointwise bounds over stopping cubes
        qu = ts.tiles[u].q
        fmod = np.exp(-1j * ctx.family.values_float[qu]) * ctx.f
        tmod = collection_apply(ctx, tree, fmod)
        K = ctx.K
        pw_ok, first_ok, third_ok = True, True, True
        for lcid in lc:
            mem = grid.cubes[lcid].members.tolist()
            for x in mem:
                sset = scales.get(x, [])
                if not sset:
                    continue
                lhs = abs(tmod[x])
                termA = 0.0 + 0.0j
                termC = 0.0 + 0.0j
                for s in sset:
                    Ks = ctx.slice_matrix(s)[x]
                    qx = int(ts.Q[x])
                    osc = np.exp(
                        1j
                        * (
                            -ctx.family.values_float[qu]
                            + ctx.family.values_float[qx]
                            + ctx.family.values_float[qu][x]
                            - ctx.family.values_float[qx][x]
                        )
                    )
                    termA += np.sum((osc - 1.0) * Ks * ctx.f * w)
                    termC += np.sum(Ks * (ctx.f - pj_f) * w)
                for xp in mem:
                    rhs_log = _sum_bound_log2(
                        [
                            (129.0 * a**3, m_pj[xp] + s1_pj[xp]),
                            (0.0, eval_nontangential(ctx, qu, xp, h=pj_f)),
                        ]
                    )
                    if _log2(lhs) > rhs_log + 1e-9:
                        pw_ok = False
                    ra = _sum_bound_log2([(104.0 * a**3 + math.log2(10), m_pj[xp])])
                    if _log2(abs(termA)) > ra + 1e-9:
                        first_ok = False
                    rc = _sum_bound_log2([(128.0 * a**3, s1_pj[xp])])
                    if _log2(abs(termC)) > rc + 1e-9:
                        third_ok = False
        report.predicate(f"tree.pointwise[{u}]", "pointwise-tree-bound", pw_ok)
        report.predicate(f"tree.first-pointwise[{u}]", "oscillation-term-bound", first_ok)
        report.predicate(f"tree.third-pointwise[{u}]", "projection-error-term-bound", third_ok)

        pairing = abs(ctx.integral(np.conj(ctx.g) * collection_apply(ctx, tree, ctx.f)))
        npj = ctx.norm2(pj_absf.astype(np.complex128))
        npl = ctx.norm2(pl_absg.astype(np.complex128))
        report.add(
            CheckItem(
                f"tree.projection-bound[{u}]",
                "tree-projection-pairing-bound",
                lhs=_log2(pairing),
                rhs=130.0 * a**3 + _log2(npj * npl),
                passed=_log2(pairing) <= 130.0 * a**3 + _log2(npj * npl) + 1e-9,
                context="log2 scale",
            )
        )

        for label, h in (("shipped", ctx.f), ("random", bounded_random(sp, ctx.f_mask, rng))):
            s1h = boundary_shear_apply(ctx, jc, h)
            lhs2 = ctx.norm2(s1h.astype(np.complex128))
            rhs2 = 2.0 ** (12 * a) * ctx.norm2(h)
            report.compare(
                f"tree.boundary-operator[{u},{label}]",
                "boundary-operator-l2-bound",
                lhs2,
                rhs2 if rhs2 > 0 else 1e-300,
            )

        from .tiles import mass_density, overlap_density

        d1 = overlap_density(ts, tree, ctx.g_mask)
        d2 = mass_density(ts, tree, ctx.f_mask)
        nf, ng = ctx.norm2(ctx.f), ctx.norm2(ctx.g)
        if d1 > 0:
            r1 = 181.0 * a**3 + 0.5 * log2_number(d1) + _log2(nf * ng)
            dens_ok = _log2(pairing) <= r1 + 1e-9
        else:
            dens_ok = pairing <= 1e-12
        report.predicate(
            f"tree.density-bound[{u}]",
            "tree-overlap-density-pairing-bound",
            dens_ok,
        )
        if d1 > 0 and d2 > 0:
            r2 = 282.0 * a**3 + 0.5 * log2_number(d1) + 0.5 * log2_number(d2) + _log2(nf * ng)
            report.predicate(
                f"tree.density-bound-2[{u}]",
                "tree-two-density-pairing-bound",
                _log2(pairing) <= r2 + 1e-9,
            )

        mu_dens1 = overlap_density(ts, tree, ctx.g_mask)
        loc1_ok = True
        esupp = np.zeros(sp.n, dtype=bool)
        for p in tree:
            esupp[tile_support_set(ctx, p)] = True
        for lcid in lc:
            mem = grid.cubes[lcid].members
            lhs_mu = sp.measure(mem[(ctx.g_mask & esupp)[mem]])
            rhs_mu = Fraction(2 ** (101 * a**3)) * mu_dens1 * sp.measure(mem)
            if lhs_mu > rhs_mu:
                loc1_ok = False
        report.predicate(f"tree.local-dens1[{u}]", "stopping-cube-overlap-density", loc1_ok)
        loc2_ok = True
        for jcid in jc:
            mem = grid.cubes[jcid].members
            lhs_mu = sp.measure(mem[ctx.f_mask[mem]])
            rhs_mu = Fraction(2 ** (201 * a**3)) * d2 * sp.measure(mem)
            if lhs_mu > rhs_mu:
                loc2_ok = False
        report.predicate(f"tree.local-dens2[{u}]", "stopping-cube-mass-density", loc2_ok)

        tn = np.array([eval_nontangential(ctx, qu, x) for x in range(sp.n)])
        report.compare(
            f"tree.nontangential-l2[{u}]",
            "nontangential-l2-bound",
            _log2(ctx.norm2(tn.astype(np.complex128))),
            102.0 * a**3 + _log2(max(ctx.norm2(ctx.f), 1e-300)),
            context="log2 scale",
        )

    # boundary overlap count (independent of the trees)
    overlap_ok = True
    for cube in grid.cubes:
        ball = sp.ball_mask(Ball(cube.center, 16 * prof.pow_D(cube.scale)))
        cnt = 0
        for other in grid.by_scale[cube.scale]:
            ob = sp.ball_mask(Ball(grid.cubes[other].center, 16 * prof.pow_D(cube.scale)))
            if np.any(ball & ob):
                cnt += 1
        if cnt > 2 ** (9 * a):
            overlap_ok = False
    report.predicate("tree.boundary-overlap", "same-scale-ball-overlap-count", overlap_ok)

    # rows (structural, also part of the forest-operator check)
    rows = forest_rows(ts, forest)
    report.compare("tree.row-count", "row-count-bound", len(rows), 2**n)
    ej = []
    for row in rows:
        m = np.zeros(sp.n, dtype=bool)
        for u in row:
            for p in forest.trees[u]:
                m[ts.tile_g_support(p, ctx.g_mask)] = True
        ej.append(m)
    tot = np.zeros(sp.n, dtype=np.int64)
    for m in ej:
        tot += m
    report.predicate("tree.row-supports-disjoint", "row-support-disjointness", bool(tot.max(initial=0) <= 1))

    # ---- paired-tree lemmas -------------------------------------------------
    nested_pairs = []
    for u1 in forest.tops:
        for u2 in forest.tops:
            if u1 != u2 and grid.cube_le(ts.tiles[u1].cube, ts.tiles[u2].cube):
                nested_pairs.append((u1, u2))
    if not nested_pairs:
        report.skip("tree.pair-lemmas", "paired-tree-lemmas", "no nested top pair: not applicable")
        return report

    g2 = bounded_random(sp, ctx.g_mask, rng)
    Mg2 = maximal_function(sp, np.abs(g2))
    for u1, u2 in nested_pairs:
        tag = f"{u1},{u2}"
        t1, t2 = forest.trees[u1], forest.trees[u2]
        q1, q2 = ts.tiles[u1].q, ts.tiles[u2].q
        # separation set: tiles whose cube metric separates the two tops
        sep_tiles = {
            p
            for p in set(t1) | set(t2)
            if _ge_pow2_half(ts.cube_metric(ts.tiles[p].cube).value(q1, q2), Z * n)
        }
        # overlap implies distance (structural)
        o_ok = all(
            p in sep_tiles
            for p in set(t1) | set(t2)
            if np.any(grid.mask(ts.tiles[p].cube) & grid.mask(ts.tiles[u1].cube))
        ) and set(t1) <= sep_tiles
        report.predicate(f"tree.overlap-distance[{tag}]", "overlap-implies-separation", o_ok)

        adj1 = per_tree[u1]["adj_g"]
        adj2_full = collection_apply_adjoint(ctx, t2, g2)
        t2_sep = [p for p in t2 if p in sep_tiles]
        t2_rest = [p for p in t2 if p not in sep_tiles]
        adj2_sep = collection_apply_adjoint(ctx, t2_sep, g2)
        adj2_rest = adj2_full - adj2_sep

        s2_1 = np.abs(adj1) + Mg + np.abs(ctx.g)
        s2_2 = np.abs(adj2_full) + Mg2 + np.abs(g2)
        inter = grid.mask(ts.tiles[u1].cube) & grid.mask(ts.tiles[u2].cube)
        m1 = grid.mask(ts.tiles[u1].cube)

        def l2_on(vals, mask):
            return math.sqrt(float(np.sum(np.abs(vals[mask]) ** 2 * w[mask])))

        lhs_corr = abs(ctx.integral(adj1 * np.conj(adj2_full)))
        report.predicate(
            f"tree.correlation[{tag}]",
            "separated-tree-correlation-bound",
            _log2(lhs_corr)
            <= 512.0 * a**3 + 1 - 4 * n + _log2(l2_on(s2_1, inter) * l2_on(s2_2, inter)) + 1e-9,
        )
        lhs_far = abs(ctx.integral(adj1 * np.conj(adj2_sep)))
        report.predicate(
            f"tree.correlation-distant[{tag}]",
            "distant-tree-part-bound",
            _log2(lhs_far)
            <= 511.0 * a**3 - Z * n / (4 * a**2 + 2 * a**3)
            + _log2(l2_on(s2_1, m1) * l2_on(s2_2, m1))
            + 1e-9,
        )
        lhs_near = abs(ctx.integral(adj1 * np.conj(adj2_rest)))
        report.predicate(
            f"tree.correlation-near[{tag}]",
            "near-tree-part-bound",
            _log2(lhs_near)
            <= 232.0 * a**3 + 21 * a + 5 - (25.0 / (101 * a)) * Z * n * kappa
            + _log2(l2_on(s2_1, m1) * l2_on(s2_2, m1))
            + 1e-9,
        )

        # partition of unity over the separated stopping cubes
        jfull = stopping_cubes_far(ctx, sorted(sep_tiles)) if sep_tiles else []
        jprime = [cid for cid in jfull if grid.cube_le(cid, ts.tiles[u1].cube)]
        chi = bump_partition(ctx, jprime, ts.tiles[u1].cube) if jprime else {}
        if chi:
            total = np.zeros(sp.n)
            for v in chi.values():
                total += v
            top_mask = grid.mask(ts.tiles[u1].cube)
            sum_ok = bool(np.all(np.abs(total[top_mask] - 1.0) <= 1e-12)) and bool(
                np.all(np.abs(total[~top_mask]) <= 1e-12)
            )
            range_ok = True
            lip_ok = True
            for cid, v in chi.items():
                cube = grid.cubes[cid]
                bj = sp.ball_mask(Ball(cube.center, 8 * prof.pow_D(cube.scale)))
                if np.any(v < -1e-15) or np.any(v > 1 + 1e-12) or np.any(v[~bj] > 1e-15):
                    range_ok = False
                sD = log2_number(prof.pow_D(cube.scale))
                for y in np.nonzero(top_mask)[0].tolist():
                    for yp in np.nonzero(top_mask)[0].tolist():
                        if yp <= y:
                            continue
                        dv = abs(v[y] - v[yp])
                        rr = 227.0 * a**3 + _log2(
                            float(sp.distance(y, yp))
                        ) - sD
                        if _log2(dv) > rr + 1e-9:
                            lip_ok = False
            report.predicate(f"tree.partition-unity[{tag}]", "bump-partition-sums-to-one", sum_ok)
            report.predicate(f"tree.partition-range[{tag}]", "bump-partition-support", range_ok)
            report.predicate(f"tree.partition-lipschitz[{tag}]", "bump-partition-regularity", lip_ok)

            # Holder control of the correlation products
            hc_ok = True
            e1 = np.exp(1j * ctx.family.values_float[q1])
            e2 = np.exp(1j * ctx.family.values_float[q2])
            for cid, v in chi.items():
                cube = grid.cubes[cid]
                hj = v * (e1 * adj1) * np.conj(e2 * adj2_sep)
                bj_ball = Ball(cube.center, 8 * prof.pow_D(cube.scale))
                b_small = sp.ball_members(Ball(cube.center, prof.pow_D(cube.scale) / 8))
                nrm = holder_norm(sp, hj, Ball(cube.center, 16 * prof.pow_D(cube.scale)), tau)
                prod = 1.0
                for vals, mg in ((np.abs(adj1), Mg), (np.abs(adj2_full), Mg2)):
                    inf_b = float(vals[b_small].min()) if b_small.size else 0.0
                    inf_j = float(mg[cube.members].min())
                    prod *= inf_b + inf_j
                if _log2(nrm) > 485.0 * a**3 + _log2(prod) + 1e-9:
                    hc_ok = False
            report.predicate(f"tree.holder-correlation[{tag}]", "correlation-product-holder-bound", hc_ok)

            # scale window and local control on the complement part
            win_ok = True
            for p in t2_rest:
                bp = sp.ball_mask(Ball(ts.center(p), 16 * prof.pow_D(ts.scale(p))))
                for cid in jprime:
                    cube = grid.cubes[cid]
                    bsmall = sp.ball_mask(Ball(cube.center, prof.pow_D(cube.scale) / 8))
                    if np.any(bp & bsmall):
                        if not (cube.scale <= ts.scale(p) <= cube.scale + 3):
                            win_ok = False
            report.predicate(f"tree.scale-window[{tag}]", "complement-scale-window", win_ok)
            lc_ok = True
            for cid in jprime:
                cube = grid.cubes[cid]
                bsmall = sp.ball_members(Ball(cube.center, prof.pow_D(cube.scale) / 8))
                if bsmall.size == 0:
                    continue
                lhs_loc = float(np.abs(adj2_rest[bsmall]).max(initial=0.0))
                rhs_loc = 104.0 * a**3 + _log2(float(Mg2[cube.members].min()))
                if _log2(lhs_loc) > rhs_loc + 1e-9:
                    lc_ok = False
            report.predicate(f"tree.local-control[{tag}]", "complement-local-control", lc_ok)

            # global tree controls
            g1_ok, g2_ok = True, True
            for cid in jprime:
                cube = grid.cubes[cid]
                twob = sp.ball_members(Ball(cube.center, 16 * prof.pow_D(cube.scale)))
                bsmall = sp.ball_members(Ball(cube.center, prof.pow_D(cube.scale) / 8))
                infmg = float(Mg[cube.members].min())
                infmg2 = float(Mg2[cube.members].min())
                sD = log2_number(prof.pow_D(cube.scale))
                for vals, e, infm, mgv in (
                    (adj1, e1, float(np.abs(adj1[bsmall]).min(initial=0.0)), infmg),
                    (adj2_sep, e2, float(np.abs(adj2_sep[bsmall]).min(initial=0.0)), infmg2),
                ):
                    sup2b = float(np.abs(vals[twob]).max(initial=0.0))
                    ub = _sum_bound_log2([(0.0, infm), (128.0 * a**3 + 4 * a + 3, mgv)])
                    if _log2(sup2b) > ub + 1e-9:
                        g1_ok = False
                    for y in twob.tolist():
                        for yp in twob.tolist():
                            if yp <= y:
                                continue
                            dv = abs(e[y] * vals[y] - e[yp] * vals[yp])
                            rr = 128.0 * a**3 + 4 * a + 1 + (
                                _log2(float(sp.distance(y, yp))) - sD
                            ) / a + _log2(mgv)
                            if _log2(dv) > rr + 1e-9:
                                g1_ok = False
                sup_rest = float(np.abs(adj2_sep[twob]).max(initial=0.0))
                inf_full = float(np.abs(adj2_full[bsmall]).min(initial=0.0))
                ub2 = _sum_bound_log2([(0.0, inf_full), (129.0 * a**3 + 4 * a + 4, infmg2)])
                if _log2(sup_rest) > ub2 + 1e-9:
                    g2_ok = False
            report.predicate(f"tree.global-control-1[{tag}]", "tree-part-upper-and-holder", g1_ok)
            report.predicate(f"tree.global-control-2[{tag}]", "tree-part-upper-via-full", g2_ok)

            # lower oscillation over the partition cubes
            lo_ok = True
            for cid in jprime:
                cube = grid.cubes[cid]
                dval = ctx.family.ball_metric_obj(
                    Ball(cube.center, 8 * prof.pow_D(cube.scale))
                ).value(q1, q2)
                dlog = log2_number(dval) if dval > 0 else LOG2_FLOOR
                if dlog < -201.0 * a**3 + Z * n / 2 - 1e-9:
                    lo_ok = False
            report.predicate(f"tree.lower-oscillation[{tag}]", "partition-cube-frequency-gap", lo_ok)

        # per-tile Holder continuity of the adjoint pieces
        ht_ok = True
        for u, tree, gg in ((u1, t1, ctx.g), (u2, t2, g2)):
            e_u = np.exp(1j * ctx.family.values_float[ts.tiles[u].q])
            for p in tree[:: max(1, len(tree) // 24)]:
                vals = tile_apply_adjoint(ctx, p, gg)
                supp = tile_support_set(ctx, p)
                ig = float(np.sum(np.abs(gg[supp]) * w[supp]))
                mu4 = frac_to_float(
                    sp.measure_mask(sp.ball_mask(Ball(ts.center(p), 4 * prof.pow_D(ts.scale(p)))))
                )
                sD = log2_number(prof.pow_D(ts.scale(p)))
                pts = np.nonzero(np.abs(vals) > 0)[0].tolist() or [ts.center(p)]
                sample = pts + [min(sp.n - 1, x + 1) for x in pts]
                for y in sample:
                    for yp in sample:
                        if yp <= y:
                            continue
                        dv = abs(e_u[y] * vals[y] - e_u[yp] * vals[yp])
                        rr = (
                            128.0 * a**3
                            - _log2(mu4)
                            + (_log2(float(sp.distance(y, yp))) - sD) / a
                            + _log2(ig)
                        )
                        if _log2(dv) > rr + 1e-9:
                            ht_ok = False
        report.predicate(f"tree.holder-tile[{tag}]", "adjoint-tile-holder-continuity", ht_ok)

        # projected complement bound, thin scales, square-function count
        jtree = [cid for cid in stopping_cubes_far(ctx, t1) if grid.cube_le(cid, ts.tiles[u1].cube)]
        if jtree:
            pj_vals = projection_average(grid, jtree, np.abs(adj2_rest)).real
            m1mask = grid.mask(ts.tiles[u1].cube)
            lhs_pb = math.sqrt(float(np.sum(pj_vals[m1mask] ** 2 * w[m1mask])))
            rhs_pb = 102.0 * a**3 + 21 * a + 5 - (25.0 / (101 * a)) * Z * n * kappa + _log2(
                math.sqrt(float(np.sum(Mg2[m1mask] ** 2 * w[m1mask])))
            )
            report.predicate(
                f"tree.projected-complement[{tag}]",
                "projected-complement-l2-bound",
                _log2(lhs_pb) <= rhs_pb + 1e-9,
            )
            thin_ok = True
            thin = Z * n / (202.0 * a**3)
            for p in t2_rest:
                bp = sp.ball_mask(Ball(ts.center(p), 16 * prof.pow_D(ts.scale(p))))
                for cid in jtree:
                    cube = grid.cubes[cid]
                    bj = sp.ball_mask(Ball(cube.center, 8 * prof.pow_D(cube.scale)))
                    if np.any(bp & bj) and not ts.scale(p) <= cube.scale - thin:
                        thin_ok = False
            report.predicate(f"tree.thin-scale[{tag}]", "complement-scale-drop", thin_ok)
            sq_ok = True
            for cid in jtree:
                cube = grid.cubes[cid]
                muj = sp.measure(cube.members)
                for s_off in range(0, cube.scale + grid.S + 1):
                    target = cube.scale - s_off
                    acc = np.zeros(sp.n, dtype=np.int64)
                    for iid in grid.by_scale.get(target, []):
                        icube = grid.cubes[iid]
                        if np.any(grid.mask(iid) & m1):
                            continue
                        bi = sp.ball_mask(Ball(icube.center, 8 * prof.pow_D(target)))
                        if np.any(bi & grid.mask(cid)):
                            acc += bi
                    lhs_sq = float(
                        sum(
                            (int(acc[y]) ** 2) * float(sp.weight(y))
                            for y in cube.members.tolist()
                        )
                        / frac_to_float(muj)
                    )
                    rhs_sq = 14.0 * a + 1 + kappa * (3.0 - s_off * logD)
                    if _log2(lhs_sq) > rhs_sq + 1e-9:
                        sq_ok = False
            report.predicate(f"tree.square-count[{tag}]", "boundary-ball-square-count", sq_ok)
    return report


def _ge_pow2_half(value: Fraction, zn: int) -> bool:
    """value >= 2^(zn/2), exactly."""
    if value <= 0:
        return False
    if zn % 2 == 0:
        return value >= 2 ** (zn // 2)
    return value * value >= 2**zn


# ---------------------------------------------------------------------------
# antichain suite
# ---------------------------------------------------------------------------


def lemma_suite_antichain(ctx: OperatorContext, ac: Antichain, seed: int = 13) -> CheckReport:
    """The antichain inequality battery on one antichain instance."""
    report = CheckReport()
    sp = ctx.space
    ts = ctx.ts
    grid = ctx.grid
    prof = ctx.profile
    a = sp.a
    w = ctx.w
    expo = -1.0 / (2 * a * a + a**3)
    tiles = list(ac.tiles)
    if not tiles:
        report.skip("antichain.suite", "antichain-lemma-suite", "empty antichain")
        return report
    from .tiles import overlap_density

    d1 = overlap_density(ts, tiles, ctx.g_mask)
    adj = {p: tile_apply_adjoint(ctx, p, ctx.g) for p in tiles}
    supp = {p: tile_support_set(ctx, p) for p in tiles}
    int_g = {p: float(np.sum(np.abs(ctx.g[supp[p]]) * w[supp[p]])) for p in tiles}

    corr_ok, supp_ok = True, ""
    corr_supp_ok = True
    for p in tiles:
        for pp in tiles:
            if ts.scale(pp) > ts.scale(p):
                continue
            lhs = abs(ctx.integral(adj[pp] * np.conj(adj[p])))
            dpp = ts.cube_metric(ts.tiles[pp].cube).value(ts.tiles[pp].q, ts.tiles[p].q)
            mui = frac_to_float(sp.measure(ts.members(p)))
            rhs_log = (
                232.0 * a**3
                + expo * math.log2(1.0 + float(dpp))
                - _log2(mui)
                + _log2(int_g[pp] * int_g[p])
            )
            if _log2(lhs) > rhs_log + 1e-9:
                corr_ok = False
            big = sp.ball_mask(Ball(ts.center(p), 14 * prof.pow_D(ts.scale(p))))
            if not bool(np.all(big[ts.members(pp)])):
                if lhs > 1e-12 * (1 + int_g[pp] * int_g[p]):
                    corr_supp_ok = False
    report.predicate("antichain.tile-correlation", "adjoint-tile-correlation-bound", corr_ok)
    report.predicate("antichain.correlation-support", "correlation-support-window", corr_supp_ok)

    # metric transfer between interacting tiles
    unc_ok = True
    for p1 in tiles:
        for p2 in tiles:
            if ts.scale(p1) > ts.scale(p2):
                continue
            b1 = sp.ball_mask(Ball(ts.center(p1), 5 * prof.pow_D(ts.scale(p1))))
            b2 = sp.ball_mask(Ball(ts.center(p2), 5 * prof.pow_D(ts.scale(p2))))
            if not np.any(b1 & b2):
                continue
            lhs_d = 1 + ts.cube_metric(ts.tiles[p1].cube).value(ts.tiles[p1].q, ts.tiles[p2].q)
            for x1 in supp[p1].tolist():
                for x2 in supp[p2].tolist():
                    dd = ctx.family.ball_metric_obj(
                        Ball(x1, prof.pow_D(ts.scale(p1)))
                    ).value(int(ts.Q[x1]), int(ts.Q[x2]))
                    if lhs_d > Fraction(2 ** (8 * a)) * (1 + dd):
                        unc_ok = False
    report.predicate("antichain.tile-uncertainty", "selection-metric-transfer", unc_ok)

    # dyadic separation levels
    qx_levels: dict[int, dict[int, list[int]]] = {}
    for th in ts.q_range:
        lv: dict[int, list[int]] = {}
        for p in tiles:
            d = ts.cube_metric(ts.tiles[p].cube).value(ts.tiles[p].q, th)
            N = dyadic_level(1 + d)
            lv.setdefault(N, []).append(p)
        qx_levels[th] = lv

    p_exp = 4 * a**4
    union_mask = np.zeros(sp.n, dtype=bool)
    for p in tiles:
        union_mask[ts.members(p)] = True
    mu_union = sp.measure_mask(union_mask)
    count_ok = True
    for th, lv in qx_levels.items():
        subsets = [tiles] + [lv[N] for N in sorted(lv)]
        for sub in subsets:
            vals = np.zeros(sp.n)
            for p in sub:
                d = ts.cube_metric(ts.tiles[p].cube).value(ts.tiles[p].q, th)
                vals[supp[p]] = (1.0 + float(d)) ** expo
            vals *= ctx.g_mask
            lhs_log = lp_norm_log2(vals, w, p_exp)
            rhs_log = (
                5.0 * a
                + (log2_number(d1) if d1 > 0 else LOG2_FLOOR) / p_exp
                + (log2_number(mu_union) if mu_union > 0 else LOG2_FLOOR) / p_exp
            )
            if lhs_log > rhs_log + 1e-9 and lhs_log > LOG2_FLOOR / 2:
                count_ok = False
    report.predicate("antichain.tile-count", "weighted-tile-count-bound", count_ok)

    # order reach at matching separation levels
    reach_ok = True
    for th in range(ctx.family.size):
        for N in range(0, 16):
            cand = [
                p
                for p in tiles
                if ts.cube_metric(ts.tiles[p].cube).value(ts.tiles[p].q, th) <= 2**N
            ]
            for p in cand:
                for pp in cand:
                    if p == pp or not grid.cube_le(ts.tiles[p].cube, ts.tiles[pp].cube):
                        continue
                    if ts.scale(p) >= ts.scale(pp):
                        continue
                    lam = Fraction(2 ** (N + 2))
                    if not ts.tile_wiggle_le(lam, p, lam, pp):
                        reach_ok = False
    report.predicate("antichain.tile-reach", "matched-level-order-reach", reach_ok)

    # stacked support density over a fixed cube
    stack_ok = True
    glob_ok = True
    e_g = {p: sp.measure(supp[p][ctx.g_mask[supp[p]]]) for p in tiles}
    for th in ts.q_range:
        lv = qx_levels[th]
        for N, group in lv.items():
            by_cube: dict[int, list[int]] = {}
            for p in group:
                by_cube.setdefault(ts.tiles[p].cube, []).append(p)
            for cid, plist in by_cube.items():
                lhs_mu = sum((e_g[p] for p in plist), Fraction(0))
                rhs_mu = Fraction(2 ** (a * (N + 5))) * d1 * sp.measure(grid.cubes[cid].members)
                if lhs_mu > rhs_mu:
                    stack_ok = False
            total = sum((e_g[p] for p in group), Fraction(0))
            if total > Fraction(2 ** (101 * a**3 + N * a)) * d1 * mu_union:
                glob_ok = False
    report.predicate("antichain.stack-density", "per-cube-level-density", stack_ok)
    report.predicate("antichain.global-density", "summed-level-density", glob_ok)

    # local density against a receiving tile
    local_ok = True
    for th in ts.q_range:
        lv = qx_levels[th]
        for N, group in lv.items():
            for pv in range(len(ts.tiles)):
                dv = ts.cube_metric(ts.tiles[pv].cube).value(ts.tiles[pv].q, th)
                if not dv < 2 ** (N + 1):
                    continue
                lhs_mu = Fraction(0)
                pv_mask = grid.mask(ts.tiles[pv].cube)
                for p in group:
                    if ts.scale(p) > ts.scale(pv):
                        s = supp[p]
                        lhs_mu += sp.measure(s[(ctx.g_mask & pv_mask)[s]])
                rhs_mu = sp.measure(ts.tile_g_near(pv, Fraction(2 ** (N + 3)), ctx.g_mask))
                if lhs_mu > rhs_mu:
                    local_ok = False
    report.predicate("antichain.local-density", "received-level-density", local_ok)
    return report
