"""Tile structures: spatial cube x frequency patch, orders, densities.

A tile is a cube together with a distinguished frequency (a value of the
selection function Q) and a frequency patch Omega inside the family.  The
construction follows the maximal-separated-set recipe: per cube, grow a
subset Z of Q(X) whose 0.3-balls (in the core-ball metric of the cube)
are pairwise disjoint within Q(X), scanning candidates in frequency-label
order; carve first-generation patches from 0.7-balls by iterated set
difference; then assemble Omega top-down so that a child's patch swallows
the patches of the parent frequencies it captured, plus its own 0.2-ball.

The two densities are exact suprema: all continuous parameters reduce to
the finite sets of values where a strict ball membership flips, and the
one-sided limits at those values are evaluated with closed memberships.
A dense-sampling oracle recomputes both for cross-validation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .grid import GridStructure
from .phases import FreqMetric, OscMetric, PhaseFamily, RadiusMetric
from .report import CheckItem, CheckReport
from .space import Ball

ZERO = Fraction(0)


class TileError(ValueError):
    """Raised when a constructed tile structure violates a tile axiom."""


@dataclass
class Tile:
    id: int
    cube: int
    q: int  # phase index of the distinguished frequency
    omega: frozenset  # phase indices of the frequency patch

    @property
    def label(self) -> str:
        return f"t{self.id}(cube={self.cube},q={self.q})"


class TileStructure:
    """Tiles over a grid, with the selection function Q and metric caches."""

    def __init__(self, grid: GridStructure, family: PhaseFamily, Q: np.ndarray, tiles: list[Tile]):
        self.grid = grid
        self.family = family
        self.space = grid.space
        self.Q = np.asarray(Q, dtype=np.int64)
        self.tiles = tiles
        self.by_cube: dict[int, list[int]] = {}
        for t in tiles:
            self.by_cube.setdefault(t.cube, []).append(t.id)
        self.q_range = sorted(set(self.Q.tolist()))
        self._metric_cache: dict[int, FreqMetric] = {}
        # per-cube owner map: phase index -> tile id holding it in Omega
        T = family.size
        self.omega_owner = {}
        for cid, tids in self.by_cube.items():
            own = np.full(T, -1, dtype=np.int64)
            for tid in tids:
                for th in self.tiles[tid].omega:
                    own[th] = tid
            self.omega_owner[cid] = own
        self._e2_cache: dict = {}
        self._mass_cache: dict = {}
        self._pair_density_cache: dict = {}

    # -- geometry ----------------------------------------------------------------

    def cube_metric(self, cid: int) -> FreqMetric:
        m = self._metric_cache.get(cid)
        if m is None:
            m = self.family.ball_metric_obj(self.grid.core(cid))
            self._metric_cache[cid] = m
        return m

    def tile_metric(self, tid: int) -> FreqMetric:
        return self.cube_metric(self.tiles[tid].cube)

    def scale(self, tid: int) -> int:
        return self.grid.cubes[self.tiles[tid].cube].scale

    def center(self, tid: int) -> int:
        return self.grid.cubes[self.tiles[tid].cube].center

    def members(self, tid: int) -> np.ndarray:
        return self.grid.cubes[self.tiles[tid].cube].members

    def tiles_on_ancestors(self, cid: int) -> list[int]:
        out = []
        for anc in self.grid.ancestors(cid):
            out.extend(self.by_cube.get(anc, []))
        return out

    # -- orders -------------------------------------------------------------------

    def tile_le(self, p: int, q: int) -> bool:
        """p <= q: cube(p) inside cube(q) and Omega(q) inside Omega(p)."""
        tp, tq = self.tiles[p], self.tiles[q]
        return self.grid.cube_le(tp.cube, tq.cube) and tq.omega <= tp.omega

    def tile_wiggle_le(self, lam_p: Fraction, p: int, lam_q: Fraction, q: int) -> bool:
        """lam_p * p <~ lam_q * q: nested cubes and frequency-ball inclusion.

        Requires cube(p) inside cube(q) and
        B_q(freq(q), lam_q) subset B_p(freq(p), lam_p).
        """
        tp, tq = self.tiles[p], self.tiles[q]
        if not self.grid.cube_le(tp.cube, tq.cube):
            return False
        mq = self.cube_metric(tq.cube)
        mp = self.cube_metric(tp.cube)
        inside_q = mq.row_lt(tq.q, Fraction(lam_q))
        inside_p = mp.row_lt(tp.q, Fraction(lam_p))
        return not bool(np.any(inside_q & ~inside_p))

    # -- membership sets -----------------------------------------------------------

    def tile_support(self, tid: int, sigma1: np.ndarray, sigma2: np.ndarray) -> np.ndarray:
        """Points of the cube whose selection lies in Omega and whose scale
        window contains the tile scale."""
        if np.any(sigma1 > sigma2):
            raise ValueError("scale window needs sigma1 <= sigma2 pointwise")
        t = self.tiles[tid]
        mem = self.members(tid)
        s = self.scale(tid)
        own = self.omega_owner[t.cube]
        sel = (own[self.Q[mem]] == tid) & (sigma1[mem] <= s) & (s <= sigma2[mem])
        return mem[sel]

    def tile_g_support(self, tid: int, g_mask: np.ndarray) -> np.ndarray:
        """Points of cube /\\ G whose selection lies in the tile's patch."""
        t = self.tiles[tid]
        mem = self.members(tid)
        own = self.omega_owner[t.cube]
        sel = (own[self.Q[mem]] == tid) & g_mask[mem]
        return mem[sel]

    def tile_g_near(self, tid: int, lam: Fraction, g_mask: np.ndarray) -> np.ndarray:
        """Points of cube /\\ G whose selection is lam-close to the tile frequency."""
        t = self.tiles[tid]
        mem = self.members(tid)
        near = self.cube_metric(t.cube).row_lt(t.q, Fraction(lam))
        sel = near[self.Q[mem]] & g_mask[mem]
        return mem[sel]

    # -- oracles (independent literal comprehensions) -------------------------------

    def tile_support_oracle(self, tid: int, sigma1, sigma2) -> list[int]:
        t = self.tiles[tid]
        s = self.scale(tid)
        out = []
        for x in self.members(tid).tolist():
            if int(self.Q[x]) in t.omega and sigma1[x] <= s <= sigma2[x]:
                out.append(x)
        return out

    def tile_g_support_oracle(self, tid: int, g_set: set) -> list[int]:
        t = self.tiles[tid]
        return [
            x
            for x in self.members(tid).tolist()
            if x in g_set and int(self.Q[x]) in t.omega
        ]

    def tile_g_near_oracle(self, tid: int, lam: Fraction, g_set: set) -> list[int]:
        t = self.tiles[tid]
        m = self.cube_metric(t.cube)
        return [
            x
            for x in self.members(tid).tolist()
            if x in g_set and m.value(t.q, int(self.Q[x])) < lam
        ]

    def to_json(self) -> dict:
        return {
            "Q": self.Q.tolist(),
            "tiles": [
                {"id": t.id, "cube": t.cube, "q": t.q, "omega": sorted(t.omega)}
                for t in self.tiles
            ],
        }


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

R02, R03, R07, R1 = Fraction(1, 5), Fraction(3, 10), Fraction(7, 10), Fraction(1)


def _freq_ball(metric: FreqMetric, center: int, radius: Fraction) -> np.ndarray:
    return metric.row_lt(center, radius)


def build_tiles(grid: GridStructure, family: PhaseFamily, Q: np.ndarray) -> TileStructure:
    """Run the maximal-separated-set tile construction and verify the axioms."""
    Q = np.asarray(Q, dtype=np.int64)
    if Q.shape[0] != grid.space.n:
        raise ValueError("selection function must be total on points")
    if np.any(Q < 0) or np.any(Q >= family.size):
        raise ValueError("selection function hits a phase index out of range")
    qx = sorted(set(Q.tolist()))  # frequency-label order

    tiles: list[Tile] = []
    omega1: dict[tuple[int, int], np.ndarray] = {}
    omega: dict[tuple[int, int], np.ndarray] = {}
    z_of_cube: dict[int, list[int]] = {}
    T = family.size
    qx_mask = np.zeros(T, dtype=bool)
    qx_mask[qx] = True

    for cube in grid.cubes:  # ids are scale-descending: parents come first
        metric = family.ball_metric_obj(grid.core(cube.id))
        near03 = {z: _freq_ball(metric, z, R03) for z in qx}
        chosen: list[int] = []
        for z in qx:
            ok = True
            for z2 in chosen:
                if bool(np.any(near03[z] & near03[z2] & qx_mask)):
                    ok = False
                    break
            if ok:
                chosen.append(z)
        # maximality consequence: the 0.7-balls of the chosen set cover Q(X)
        cover = np.zeros(T, dtype=bool)
        for z in chosen:
            cover |= _freq_ball(metric, z, R07)
        if not all(cover[z] for z in qx):
            raise TileError(f"selected frequency net fails to cover on cube {cube.id}")
        z_of_cube[cube.id] = chosen

        taken = np.zeros(T, dtype=bool)
        counts03 = np.zeros(T, dtype=np.int64)
        for z in chosen:
            counts03 += near03[z]
        for z in chosen:
            # 0.3-balls of the *other* chosen frequencies
            others = counts03 - near03[z].astype(np.int64) > 0
            w = _freq_ball(metric, z, R07) & ~others & ~taken
            omega1[(cube.id, z)] = w
            taken |= w

        for z in chosen:
            if cube.parent is None:
                om = omega1[(cube.id, z)].copy()
            else:
                om = _freq_ball(metric, z, R02).copy()
                for zp in z_of_cube[cube.parent]:
                    if omega1[(cube.id, z)][zp]:
                        om |= omega[(cube.parent, zp)]
            omega[(cube.id, z)] = om
            tiles.append(Tile(len(tiles), cube.id, z, frozenset(np.nonzero(om)[0].tolist())))

    ts = TileStructure(grid, family, Q, tiles)
    rep = check_tiles(ts)
    if not rep.all_passed():
        bad = rep.failures()[0]
        raise TileError(f"tile axiom violated: {bad.id} ({bad.context})")
    return ts


# ---------------------------------------------------------------------------
# axiom verification
# ---------------------------------------------------------------------------


def check_tiles(ts: TileStructure) -> CheckReport:
    """Exhaustive verification of the six tile-structure axioms."""
    report = CheckReport()
    fam = ts.family
    inj_ok, inj_w = True, ""
    cover_ok, cover_w = True, ""
    for cid, tids in ts.by_cube.items():
        seen = set()
        for tid in tids:
            om = ts.tiles[tid].omega
            if om in seen:
                inj_ok, inj_w = False, f"cube {cid}: duplicate patch"
            seen.add(om)
        # pairwise disjoint and covering the selection range
        counts = np.zeros(fam.size, dtype=np.int64)
        for tid in tids:
            for th in ts.tiles[tid].omega:
                counts[th] += 1
        if np.any(counts > 1):
            cover_ok, cover_w = False, f"cube {cid}: patches overlap"
        for qv in ts.q_range:
            if counts[qv] != 1:
                cover_ok, cover_w = False, f"cube {cid}: selection value {qv} uncovered"
    report.predicate("tiles.injective", "tile-patch-injectivity", inj_ok, context=inj_w)
    report.predicate("tiles.cover-disjoint", "tile-patch-partition", cover_ok, context=cover_w)

    nest_ok, nest_w = True, ""
    for t in ts.tiles:
        for tid2 in ts.tiles_on_ancestors(t.cube):
            t2 = ts.tiles[tid2]
            if tid2 == t.id:
                continue
            if t.omega & t2.omega and not (t2.omega <= t.omega):
                nest_ok, nest_w = False, f"tiles {t.id},{t2.id}"
    report.predicate("tiles.frequency-nested", "tile-patch-nesting", nest_ok, context=nest_w)

    ball_ok, ball_w = True, ""
    for t in ts.tiles:
        m = ts.cube_metric(t.cube)
        b02 = m.row_lt(t.q, R02)
        b1 = m.row_lt(t.q, R1)
        om = np.zeros(fam.size, dtype=bool)
        om[list(t.omega)] = True
        if not b02[t.q]:
            ball_ok, ball_w = False, f"tile {t.id}: center outside its 0.2-ball"
        if bool(np.any(b02 & ~om)) or bool(np.any(om & ~b1)):
            ball_ok, ball_w = False, f"tile {t.id}"
    report.predicate("tiles.frequency-ball", "tile-patch-ball-sandwich", ball_ok, context=ball_w)

    report.predicate(
        "tiles.center",
        "tile-center-inherited",
        all(ts.center(t.id) == ts.grid.cubes[t.cube].center for t in ts.tiles),
    )
    report.predicate(
        "tiles.scale",
        "tile-scale-inherited",
        all(ts.scale(t.id) == ts.grid.cubes[t.cube].scale for t in ts.tiles),
    )
    return report


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------


def _pair_rows_scaled(ts: TileStructure, p_base: int, p_cand: int):
    """Exact metric rows of both tiles over a common integer scale.

    Returns (row_base, row_cand, den): the metric distances from each
    tile's frequency, as int64 arrays over the shared denominator (the
    oscillation metric shares one denominator across all cubes), or as
    python-int lists for metrics with scale-dependent units.
    """
    tb, tc = ts.tiles[p_base], ts.tiles[p_cand]
    mb, mc = ts.cube_metric(tb.cube), ts.cube_metric(tc.cube)
    if isinstance(mb, OscMetric) and isinstance(mc, OscMetric):
        return mb.m_int[tb.q], mc.m_int[tc.q], mb.den
    vb = [mb.value(tb.q, j) for j in range(ts.family.size)]
    vc = [mc.value(tc.q, j) for j in range(ts.family.size)]
    den = 1
    for v in vb + vc:
        den = den * v.denominator // math.gcd(den, v.denominator)
    return [int(v * den) for v in vb], [int(v * den) for v in vc], den


def _tile_g_metric_prefix(ts: TileStructure, tid: int, g_mask: np.ndarray, row, den: int):
    """Sorted metric values at selection points of cube /\\ G + weight prefix.

    Cached per tile while g_mask and the shared denominator stay fixed
    (the hot path: oscillation metrics during one decomposition).
    """
    cacheable = isinstance(row, np.ndarray)
    key = None
    if cacheable:
        key = (tid, den, g_mask.tobytes())
        hit = ts._e2_cache.get(key)
        if hit is not None:
            return hit
    mem = ts.members(tid)
    mem = mem[g_mask[mem]]
    sp = ts.space
    if cacheable:
        vals = row[ts.Q[mem]]
        order = np.argsort(vals, kind="stable")
        keys = vals[order]
        pref = np.concatenate([[0], np.cumsum(sp.weight_int[mem][order])])
        out = (keys, pref)
        if len(ts._e2_cache) < 65536:
            ts._e2_cache[key] = out
        return out
    vals = sorted((row[int(ts.Q[x])], int(sp.weight_int[x])) for x in mem.tolist())
    keys = [v for v, _ in vals]
    pref = [0]
    for _, w in vals:
        pref.append(pref[-1] + w)
    return keys, pref


def _density_pair_sup(ts: TileStructure, p_base: int, p_cand: int, g_mask: np.ndarray) -> Fraction:
    """sup over real lam >= 2 of lam^(-a) mu(E2(lam, cand))/mu(cube(cand)),
    over lam where lam*base <~ lam*cand, as an exact one-sided-limit max."""
    import bisect

    ckey = (p_base, p_cand, g_mask.tobytes())
    hit = ts._pair_density_cache.get(ckey)
    if hit is not None:
        return hit

    a = ts.space.a
    row_b, row_c, den = _pair_rows_scaled(ts, p_base, p_cand)
    keys, pref = _tile_g_metric_prefix(ts, p_cand, g_mask, row_c, den)
    total = int(pref[-1]) if len(pref) else 0
    if total == 0:
        return ZERO
    # validity of the closed inclusion at v: max{row_b[t] : row_c[t] <= v} <= v
    if isinstance(row_c, np.ndarray):
        order = np.argsort(row_c, kind="stable")
        sorted_c = row_c[order]
        prefmax = np.maximum.accumulate(row_b[order])
        cands = np.unique(np.concatenate([[2 * den], np.asarray(row_b), np.asarray(row_c), np.asarray(keys)]))
        cands = [int(v) for v in cands[cands >= 2 * den]]
        sorted_c_l = sorted_c.tolist()
        prefmax_l = prefmax.tolist()
        keys_l = keys.tolist()
        pref_l = pref.tolist()
        row_b_l, row_c_l = row_b.tolist(), row_c.tolist()
    else:
        order = sorted(range(len(row_c)), key=lambda t: row_c[t])
        sorted_c_l = [row_c[t] for t in order]
        prefmax_l = []
        cur = -1
        for t in order:
            cur = max(cur, row_b[t])
            prefmax_l.append(cur)
        cands = sorted({2 * den} | {v for v in set(row_b) | set(row_c) | set(keys) if v >= 2 * den})
        keys_l, pref_l = keys, pref
        row_b_l, row_c_l = row_b, row_c

    mu_cube = int(ts.space.weight_int[ts.members(p_cand)].sum())
    # track the max as an exact integer pair: num/den = den^a mu / (v^a mu_cube)
    den_pow = den**a
    best_num, best_den = 0, 1
    last_mu = None
    for v in cands:
        k = bisect.bisect_right(sorted_c_l, v)
        if k > 0 and prefmax_l[k - 1] > v:
            continue  # inclusion fails just above v
        mu = int(pref_l[bisect.bisect_right(keys_l, v)])
        if mu == 0 or mu == last_mu:
            continue  # dominated: same set at a larger lam
        last_mu = mu
        num = den_pow * mu
        dnm = int(v) ** a * mu_cube
        if num * best_den > best_num * dnm:
            best_num, best_den = num, dnm
    # open evaluation exactly at lam = 2
    two = 2 * den
    ok2 = all(not (row_c_l[t] < two and row_b_l[t] >= two) for t in range(len(row_c_l)))
    if ok2:
        mu = int(pref_l[bisect.bisect_left(keys_l, two)])
        if mu:
            num, dnm = mu, (2**a) * mu_cube
            if num * best_den > best_num * dnm:
                best_num, best_den = num, dnm
    best = Fraction(best_num, best_den) if best_num else ZERO
    if len(ts._pair_density_cache) < 1 << 20:
        ts._pair_density_cache[ckey] = best
    return best


def _descendant_tiles(ts: TileStructure, cube_ids: Iterable[int]) -> set:
    """Tiles whose cube lies (in cube order) below one of the given cubes."""
    out: set = set()
    seen_cubes: set = set()
    stack = list(set(cube_ids))
    while stack:
        cid = stack.pop()
        if cid in seen_cubes:
            continue
        seen_cubes.add(cid)
        out.update(ts.by_cube.get(cid, []))
        stack.extend(ts.grid.children.get(cid, []))
    return out


def overlap_density(ts: TileStructure, tile_set: Sequence[int], g_mask: np.ndarray) -> Fraction:
    """Density of frequency stacking against G over a tile collection.

    Exact supremum over base tiles in the collection, real lam >= 2, and
    candidate tiles above the base (and below some collection member).
    """
    tile_set = list(tile_set)
    if not tile_set:
        raise ValueError("density of empty set")
    pool = _descendant_tiles(ts, [ts.tiles[t].cube for t in tile_set])
    best = ZERO
    for pb in tile_set:
        for pc in ts.tiles_on_ancestors(ts.tiles[pb].cube):
            if pc not in pool:
                continue
            best = max(best, _density_pair_sup(ts, pb, pc, g_mask))
    return best


def overlap_density_restricted(
    ts: TileStructure, tile_set: Sequence[int], pool: set, g_mask: np.ndarray
) -> Fraction:
    """Same supremum with the candidate pool given explicitly (level density)."""
    tile_set = list(tile_set)
    if not tile_set:
        raise ValueError("density of empty set")
    best = ZERO
    for pb in tile_set:
        for pc in ts.tiles_on_ancestors(ts.tiles[pb].cube):
            if pc not in pool:
                continue
            best = max(best, _density_pair_sup(ts, pb, pc, g_mask))
    return best


def _tile_mass_density(ts: TileStructure, tid: int, f_mask: np.ndarray) -> Fraction:
    """Singleton mass density: sup over admissible balls around one tile."""
    key = (tid, f_mask.tobytes())
    hit = ts._mass_cache.get(key)
    if hit is not None:
        return hit
    sp = ts.space
    c = ts.center(tid)
    r0 = 4 * ts.grid.profile.pow_D(ts.scale(tid))
    dist_sorted = sp._sorted[c]
    order = sp._order[c]
    wf = np.where(f_mask[order], sp.weight_int[order], 0)
    cw = sp._wprefix[c]
    cwf = np.concatenate([[0], np.cumsum(wf)])
    best = ZERO
    # open ball exactly at r0
    thr = sp._scaled_threshold(r0)
    k = int(np.searchsorted(dist_sorted, thr, side="left"))
    if k and cwf[k]:
        best = Fraction(int(cwf[k]), int(cw[k]))
    # closed balls at realized distances >= r0 (only F-mass jump points matter)
    r0s = r0 * sp.dist_den
    for dval in np.unique(dist_sorted).tolist():
        if dval >= r0s:
            k = int(np.searchsorted(dist_sorted, dval, side="right"))
            if cwf[k]:
                best = max(best, Fraction(int(cwf[k]), int(cw[k])))
    if len(ts._mass_cache) < 65536:
        ts._mass_cache[key] = best
    return best


def mass_density(ts: TileStructure, tile_set: Sequence[int], f_mask: np.ndarray) -> Fraction:
    """Spatial mass fraction of F on balls around the tiles, radius >= 4 D^s."""
    tile_set = list(tile_set)
    if not tile_set:
        raise ValueError("density of empty set")
    best = ZERO
    for tid in tile_set:
        best = max(best, _tile_mass_density(ts, tid, f_mask))
    return best


# -- dense-sampling oracles ---------------------------------------------------


def overlap_density_oracle(
    ts: TileStructure, tile_set: Sequence[int], g_mask: np.ndarray, pool: Optional[set] = None
) -> Fraction:
    """Brute-force dense sampling over lam with closed memberships.

    Samples every realized metric value, all midpoints, and a uniform
    grid; on each sample the one-sided-limit value is computed literally.
    """
    tile_set = list(tile_set)
    if not tile_set:
        raise ValueError("density of empty set")
    if pool is None:
        pool = _descendant_tiles(ts, [ts.tiles[t].cube for t in tile_set])
    a = ts.space.a
    sp = ts.space
    g_set = set(np.nonzero(g_mask)[0].tolist())
    best = ZERO
    for pb in tile_set:
        for pc in range(len(ts.tiles)):
            if pc not in pool:
                continue
            if not ts.grid.cube_le(ts.tiles[pb].cube, ts.tiles[pc].cube):
                continue
            mb = ts.cube_metric(ts.tiles[pb].cube)
            mc = ts.cube_metric(ts.tiles[pc].cube)
            qb, qc = ts.tiles[pb].q, ts.tiles[pc].q
            vals = sorted(
                {Fraction(2)}
                | {mb.value(qb, t) for t in range(ts.family.size)}
                | {mc.value(qc, t) for t in range(ts.family.size)}
            )
            samples = set()
            for i, v in enumerate(vals):
                if v >= 2:
                    samples.add(v)
                if i + 1 < len(vals) and vals[i + 1] > max(v, 2):
                    samples.add((max(v, Fraction(2)) + vals[i + 1]) / 2)
            samples |= {Fraction(2) + Fraction(k, 3) for k in range(7)}
            for lam, strict in [(x, False) for x in sorted(samples)] + [(Fraction(2), True)]:
                # strict=True is the literal evaluation at lam itself; the
                # others are the one-sided limits from above.
                def _in(v):
                    return v < lam if strict else v <= lam

                ok = True
                for t in range(ts.family.size):
                    if _in(mc.value(qc, t)) and not _in(mb.value(qb, t)):
                        ok = False
                        break
                if not ok:
                    continue
                mu = ZERO
                for x in ts.members(pc).tolist():
                    if x in g_set and _in(mc.value(qc, int(ts.Q[x]))):
                        mu += sp.weight(x)
                if mu == 0:
                    continue
                val = (1 / lam) ** a * mu / sp.measure(ts.members(pc))
                best = max(best, val)
    return best


def mass_density_oracle(ts: TileStructure, tile_set: Sequence[int], f_mask: np.ndarray) -> Fraction:
    tile_set = list(tile_set)
    if not tile_set:
        raise ValueError("density of empty set")
    sp = ts.space
    best = ZERO
    for tid in tile_set:
        c = ts.center(tid)
        r0 = 4 * ts.grid.profile.pow_D(ts.scale(tid))
        dists = sorted({sp.distance(c, y) for y in range(sp.n)})
        samples = {r0}
        for i, d in enumerate(dists):
            if d >= r0:
                samples.add(d + Fraction(1, 97))  # just above: closed ball realized
            if i + 1 < len(dists):
                mid = (d + dists[i + 1]) / 2
                if mid >= r0:
                    samples.add(mid)
        big = max(dists) + 1
        samples.add(max(r0, big))
        for r in samples:
            num = ZERO
            denom = ZERO
            for y in range(sp.n):
                if sp.distance(c, y) < r:
                    denom += sp.weight(y)
                    if f_mask[y]:
                        num += sp.weight(y)
            if denom > 0:
                best = max(best, num / denom)
    return best


# ---------------------------------------------------------------------------
# wiggle-order consequences (measured lemma checks)
# ---------------------------------------------------------------------------


def check_wiggle_lemmas(ts: TileStructure, paper_profile: bool) -> CheckReport:
    """Order-inflation consequences of the metric contraction.

    Checked over all tile pairs: the plain-order inflation
    (p <= p', lam >= 1.1 => lam p <~ lam p') and the two-parameter
    inflation ((n + 2^(-95a) m) p <~ m p' whenever n p <~ k p' with
    distinct cubes).  These hinge on the strict cube-metric contraction,
    so under toy profiles they are reported as measured facts only.
    """
    report = CheckReport()
    a = ts.space.a
    eps = Fraction(1, 2 ** (95 * a))
    lam_list = [Fraction(11, 10), Fraction(2), Fraction(4), Fraction(100)]
    sc1_ok, sc1_w = True, ""
    for p in range(len(ts.tiles)):
        for q in ts.tiles_on_ancestors(ts.tiles[p].cube):
            if not ts.tile_le(p, q):
                continue
            for lam in lam_list:
                if not ts.tile_wiggle_le(lam, p, lam, q):
                    sc1_ok, sc1_w = False, f"tiles {p}<={q} lam={lam}"
    report.predicate(
        "tiles.order-inflation",
        "order-to-wiggle-inflation",
        sc1_ok,
        info=not paper_profile,
        context=sc1_w,
    )

    grid_vals = [Fraction(1), Fraction(2), Fraction(4), Fraction(10), Fraction(100)]
    w2_ok, w2_w = True, ""
    for p in range(len(ts.tiles)):
        for q in ts.tiles_on_ancestors(ts.tiles[p].cube):
            if ts.tiles[q].cube == ts.tiles[p].cube:
                continue
            for nv in grid_vals:
                for kv in grid_vals:
                    if not ts.tile_wiggle_le(nv, p, kv, q):
                        continue
                    for mv in grid_vals:
                        if not ts.tile_wiggle_le(nv + eps * mv, p, mv, q):
                            w2_ok, w2_w = False, f"tiles {p},{q} (n,k,m)=({nv},{kv},{mv})"
    report.predicate(
        "tiles.wiggle-inflation",
        "two-parameter-wiggle-inflation",
        w2_ok,
        info=not paper_profile,
        context=w2_w,
    )
    return report
