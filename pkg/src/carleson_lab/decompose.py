"""Density sorting, exceptional sets, forests and antichains.

The pipeline sorts tiles by the level of G-concentration over their cube
ancestry (k), by dyadic density bands (n), and by the count of reachable
heavy tiles (j); removes separation layers; builds the three exceptional
sets; and partitions every tile whose cube survives into trees grouped
as n-forests plus a controlled family of antichains.

Index ranges are derived from the instance, never configured: the
interesting unions are finite on a finite space.  Layer removal repeats
Z(n+1)+1 times; when the removal exhausts a cell first (which is the
generic situation on desk-size instances, where density bands force
n >= 5a+1) the cell is recorded as empty and all of its mass ends up in
antichains.  Tiles whose singleton level density vanishes fall outside
every density band (they carry no operator mass on G); they are layered
into extra antichains of their own so the partition stays exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .report import CheckItem, CheckReport
from .space import Ball
from .tiles import (
    TileStructure,
    mass_density,
    overlap_density,
    overlap_density_restricted,
    _density_pair_sup,
)

ZERO = Fraction(0)


@dataclass
class Forest:
    n: int
    tops: list[int]
    trees: dict[int, list[int]]
    provenance: tuple = ()

    def all_tiles(self) -> list[int]:
        out = []
        for u in self.tops:
            out.extend(self.trees[u])
        return out


@dataclass
class Antichain:
    tiles: list[int]
    n: int
    j: int
    provenance: str = ""


@dataclass
class LayerTable:
    k_of_cube: dict[int, Optional[int]]
    k_of_tile: list[Optional[int]]
    pools: dict[int, set]  # k -> tiles of that level
    n_of_tile: list[Optional[int]]  # density band, None when density vanishes
    level_density: list[Fraction]
    bands: dict[tuple[int, int], set]  # (k,n) -> C(k,n)
    heavy: dict[tuple[int, int], list[int]]  # (k,n) -> maximal heavy tiles
    heavy_reach: dict[tuple[int, int], dict[int, int]]  # tile -> |B(tile)|
    cells: dict[tuple[int, int, int], set]  # (k,n,j) -> C1
    l0: dict[tuple[int, int], set]
    l1: dict[tuple[int, int, int], list[list[int]]]
    c2: dict[tuple[int, int, int], set]
    u1: dict[tuple[int, int, int], set]
    l2: dict[tuple[int, int, int], set]
    c3: dict[tuple[int, int, int], set]
    l3: dict[tuple[int, int, int], list[list[int]]]
    c4: dict[tuple[int, int, int], set]
    l4: dict[tuple[int, int, int], set]
    c5: dict[tuple[int, int, int], set]
    boundary_cubes: dict[tuple[int, int, int], dict[int, list[int]]]
    n_stab: dict[int, int]
    zero_density: dict[int, set]  # k -> tiles with vanishing level density


@dataclass
class Decomposition:
    gprime: np.ndarray
    forests: list[Forest]
    antichains: list[Antichain]
    leftovers: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "gprime": np.nonzero(self.gprime)[0].tolist(),
            "forests": [
                {
                    "n": f.n,
                    "j": f.provenance[-1] if f.provenance else 0,
                    "tops": [{"u": u, "tree": sorted(f.trees[u])} for u in f.tops],
                }
                for f in self.forests
            ],
            "antichains": [
                {"n": ac.n, "j": ac.j, "tiles": sorted(ac.tiles), "source": ac.provenance}
                for ac in self.antichains
            ],
        }


# ---------------------------------------------------------------------------
# cube classification
# ---------------------------------------------------------------------------


def classify_cubes(ts: TileStructure, g_mask: np.ndarray) -> dict[int, Optional[int]]:
    """Concentration level of G over each cube's ancestry.

    k(I) is the dyadic band of max over J >= I of mu(G /\\ J)/mu(J);
    cubes all of whose ancestors miss G get the None sentinel.
    """
    grid = ts.grid
    sp = ts.space
    out: dict[int, Optional[int]] = {}
    ratio: dict[int, Fraction] = {}
    for cube in grid.cubes:  # parents first
        mu = sp.measure(cube.members)
        mug = sp.measure(cube.members[g_mask[cube.members]])
        r = mug / mu
        if cube.parent is not None:
            r = max(r, ratio[cube.parent])
        ratio[cube.id] = r
        if r == 0:
            out[cube.id] = None
            continue
        k = 0
        while r <= Fraction(1, 2 ** (k + 1)):
            k += 1
        out[cube.id] = k
    return out


def classify_cubes_oracle(ts: TileStructure, g_mask: np.ndarray) -> dict[int, Optional[int]]:
    """Literal two-condition scan over all ancestor pairs (test oracle)."""
    grid = ts.grid
    sp = ts.space
    out = {}
    for cube in grid.cubes:
        ancs = grid.ancestors(cube.id)
        k = 0
        found = None
        while k <= 2 * sp.n + 4:
            c1 = any(
                sp.measure(grid.cubes[j].members[g_mask[grid.cubes[j].members]])
                > Fraction(1, 2 ** (k + 1)) * sp.measure(grid.cubes[j].members)
                for j in ancs
            )
            c2 = any(
                sp.measure(grid.cubes[j].members[g_mask[grid.cubes[j].members]])
                > Fraction(1, 2**k) * sp.measure(grid.cubes[j].members)
                for j in ancs
            )
            if c1 and not c2:
                found = k
                break
            k += 1
        out[cube.id] = found
    return out


# ---------------------------------------------------------------------------
# level density and the layer table
# ---------------------------------------------------------------------------


def level_density(ts: TileStructure, pool: set, tile: int, g_mask: np.ndarray) -> Fraction:
    """Singleton density against G with candidates restricted to one level."""
    best = ZERO
    for pc in ts.tiles_on_ancestors(ts.tiles[tile].cube):
        if pc in pool:
            best = max(best, _density_pair_sup(ts, tile, pc, g_mask))
    return best


def level_density_oracle(ts: TileStructure, pool: set, tile: int, g_mask: np.ndarray) -> Fraction:
    from .tiles import overlap_density_oracle

    return overlap_density_oracle(ts, [tile], g_mask, pool=pool)


_DESC_CACHE: dict = {}


def _descendants_cache(ts: TileStructure, cid: int) -> set:
    key = (id(ts.grid), cid)
    hit = _DESC_CACHE.get(key)
    if hit is None:
        out = set()
        stack = [cid]
        while stack:
            c = stack.pop()
            out.add(c)
            stack.extend(ts.grid.children.get(c, []))
        _DESC_CACHE[key] = out
        hit = out
    return hit


def minimal_elements(ts: TileStructure, tiles: set) -> set:
    """Tiles with no other element strictly below them."""
    out = set()
    for p in tiles:
        desc = _descendants_cache(ts, ts.tiles[p].cube)
        below = any(
            q != p and ts.tiles[q].cube in desc and ts.tile_le(q, p) for q in tiles
        )
        if not below:
            out.add(p)
    return out


def maximal_elements(ts: TileStructure, tiles: set) -> set:
    out = set()
    for p in tiles:
        anc = set(ts.grid.ancestors(ts.tiles[p].cube))
        above = any(q != p and ts.tiles[q].cube in anc and ts.tile_le(p, q) for q in tiles)
        if not above:
            out.add(p)
    return out


def _strip_layers(ts: TileStructure, tiles: set, rounds: int, minimal: bool) -> tuple[list[list[int]], set]:
    """Remove `rounds` many minimal (or maximal) layers; short-circuit on exhaustion."""
    layers: list[list[int]] = []
    rest = set(tiles)
    for _ in range(rounds):
        if not rest:
            break
        layer = minimal_elements(ts, rest) if minimal else maximal_elements(ts, rest)
        layers.append(sorted(layer))
        rest -= layer
    return layers, rest


def build_layer_table(ts: TileStructure, g_mask: np.ndarray, f_mask: np.ndarray) -> LayerTable:
    """Construct every indexed tile family of the decomposition."""
    grid = ts.grid
    sp = ts.space
    a = sp.a
    Z = grid.profile.Z
    k_of_cube = classify_cubes(ts, g_mask)
    k_of_tile: list[Optional[int]] = [k_of_cube[t.cube] for t in ts.tiles]
    pools: dict[int, set] = {}
    for tid, k in enumerate(k_of_tile):
        if k is not None:
            pools.setdefault(k, set()).add(tid)

    n_of_tile: list[Optional[int]] = [None] * len(ts.tiles)
    dens: list[Fraction] = [ZERO] * len(ts.tiles)
    bands: dict[tuple[int, int], set] = {}
    zero_density: dict[int, set] = {}
    for k, pool in sorted(pools.items()):
        for tid in sorted(pool):
            d = level_density(ts, pool, tid, g_mask)
            dens[tid] = d
            if d == 0:
                zero_density.setdefault(k, set()).add(tid)
                continue
            n = 0
            while not d > Fraction(2 ** (4 * a), 2**n):
                n += 1
            n_of_tile[tid] = n
            bands.setdefault((k, n), set()).add(tid)

    # heavy tiles: maximal elements with mu(E1) > 2^-n mu(cube)
    mu_cube = [int(sp.weight_int[ts.members(t.id)].sum()) for t in ts.tiles]
    mu_e1 = [int(sp.weight_int[ts.tile_g_support(t.id, g_mask)].sum()) for t in ts.tiles]
    n_stab: dict[int, int] = {}
    heavy: dict[tuple[int, int], list[int]] = {}
    for k, pool in sorted(pools.items()):
        pos = [Fraction(mu_e1[t], mu_cube[t]) for t in pool if mu_e1[t] > 0]
        ns = 0
        if pos:
            mn = min(pos)
            while Fraction(1, 2**ns) >= mn:
                ns += 1
        n_stab[k] = ns
        n_hi = max([ns] + [n for (kk, n) in bands if kk == k])
        for n in range(0, n_hi + 1):
            cand = {
                t for t in pool if Fraction(mu_e1[t], mu_cube[t]) > Fraction(1, 2**n)
            }
            heavy[(k, n)] = sorted(maximal_elements(ts, cand))

    cells: dict[tuple[int, int, int], set] = {}
    l0: dict[tuple[int, int], set] = {}
    heavy_reach: dict[tuple[int, int], dict[int, int]] = {}
    for (k, n), band in sorted(bands.items()):
        hv = heavy.get((k, n), [])
        reach: dict[int, int] = {}
        for p in sorted(band):
            cnt = 0
            for m in hv:
                if ts.tile_wiggle_le(Fraction(100), p, Fraction(1), m):
                    cnt += 1
            reach[p] = cnt
            if cnt < 1:
                l0.setdefault((k, n), set()).add(p)
            else:
                j = cnt.bit_length() - 1  # 2^j <= cnt < 2^(j+1)
                cells.setdefault((k, n, j), set()).add(p)
        heavy_reach[(k, n)] = reach

    l1, c2, u1, l2, c3, l3, c4, l4, c5 = {}, {}, {}, {}, {}, {}, {}, {}, {}
    boundary_cubes: dict[tuple[int, int, int], dict[int, list[int]]] = {}
    for (k, n, j), cell in sorted(cells.items()):
        rounds = Z * (n + 1) + 1
        layers, rest = _strip_layers(ts, cell, rounds, minimal=True)
        l1[(k, n, j)] = layers
        c2[(k, n, j)] = rest

        band_cell = cell
        u1set = set()
        for u in band_cell:
            ok = True
            mu_u = ts.cube_metric(ts.tiles[u].cube).row_lt(ts.tiles[u].q, Fraction(100))
            for p in band_cell:
                if ts.tiles[p].cube == ts.tiles[u].cube:
                    continue
                if not ts.grid.cube_le(ts.tiles[u].cube, ts.tiles[p].cube):
                    continue
                mu_p = ts.cube_metric(ts.tiles[p].cube).row_lt(ts.tiles[p].q, Fraction(100))
                if bool(np.any(mu_u & mu_p)):
                    ok = False
                    break
            if ok:
                u1set.add(u)
        u1[(k, n, j)] = u1set

        l2set = set()
        for p in c2[(k, n, j)]:
            reach = any(
                ts.tiles[p].cube != ts.tiles[u].cube
                and ts.tile_wiggle_le(Fraction(2), p, Fraction(1), u)
                for u in u1set
            )
            if not reach:
                l2set.add(p)
        l2[(k, n, j)] = l2set
        c3[(k, n, j)] = c2[(k, n, j)] - l2set

        layers3, rest3 = _strip_layers(ts, c3[(k, n, j)], rounds, minimal=False)
        l3[(k, n, j)] = layers3
        c4[(k, n, j)] = rest3

        # boundary cubes of prospective tops
        bc: dict[int, list[int]] = {}
        for u in u1set:
            cu = ts.tiles[u].cube
            s_target = ts.scale(u) - Z * (n + 1) - 1
            bad = []
            if -grid.S <= s_target <= grid.S:
                for cid in grid.by_scale[s_target]:
                    if cu not in grid.ancestors(cid):
                        continue
                    c = grid.cubes[cid]
                    ball = Ball(c.center, 8 * grid.profile.pow_D(c.scale))
                    inside = set(sp.ball_members(ball).tolist()) <= set(
                        grid.cubes[cu].members.tolist()
                    )
                    if not inside:
                        bad.append(cid)
            bc[u] = bad
        boundary_cubes[(k, n, j)] = bc

        l4set = set()
        union_masks = {}
        for u, bad in bc.items():
            if bad:
                m = np.zeros(sp.n, dtype=bool)
                for cid in bad:
                    m[grid.cubes[cid].members] = True
                union_masks[u] = m
        for p in c4[(k, n, j)]:
            pm = grid.mask(ts.tiles[p].cube)
            if any(bool(np.all(~pm | m)) for m in union_masks.values()):
                l4set.add(p)
        l4[(k, n, j)] = l4set
        c5[(k, n, j)] = c4[(k, n, j)] - l4set

    return LayerTable(
        k_of_cube=k_of_cube,
        k_of_tile=k_of_tile,
        pools=pools,
        n_of_tile=n_of_tile,
        level_density=dens,
        bands=bands,
        heavy=heavy,
        heavy_reach=heavy_reach,
        cells=cells,
        l0=l0,
        l1=l1,
        c2=c2,
        u1=u1,
        l2=l2,
        c3=c3,
        l3=l3,
        c4=c4,
        l4=l4,
        c5=c5,
        boundary_cubes=boundary_cubes,
        n_stab=n_stab,
        zero_density=zero_density,
    )


# ---------------------------------------------------------------------------
# exceptional sets
# ---------------------------------------------------------------------------


def _heavy_stack(ts: TileStructure, heavy_tiles: Sequence[int]) -> np.ndarray:
    out = np.zeros(ts.space.n, dtype=np.int64)
    for m in heavy_tiles:
        out[ts.members(m)] += 1
    return out


def overlap_exceed_mask(ts: TileStructure, heavy_tiles: Sequence[int], lam: int, n: int) -> np.ndarray:
    """Points where the heavy-tile cube stack exceeds lam * 2^(n+1)."""
    return _heavy_stack(ts, heavy_tiles) > lam * 2 ** (n + 1)


def _jn_ranges(ts: TileStructure, table: LayerTable) -> list[tuple[int, int]]:
    out = []
    for k in sorted(table.pools):
        n_hi = max([table.n_stab[k]] + [n for (kk, n) in table.bands if kk == k])
        for n in range(0, n_hi + 1):
            out.append((k, n))
    return out


def exceptional_sets(
    ts: TileStructure,
    f_mask: np.ndarray,
    g_mask: np.ndarray,
    table: LayerTable,
    paper_profile: bool = True,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, CheckReport]:
    """The three exceptional sets, their union, and the measure bounds."""
    report = CheckReport()
    sp = ts.space
    a = sp.a
    mu_g = sp.measure_mask(g_mask)
    if mu_g == 0:
        raise ValueError("empty G")
    mu_f = sp.measure_mask(f_mask)
    thr = Fraction(2 ** (2 * a + 5)) * mu_f / mu_g

    g1 = np.zeros(sp.n, dtype=bool)
    for t in ts.tiles:
        if mass_density(ts, [t.id], f_mask) > thr:
            g1[ts.members(t.id)] = True

    g2 = np.zeros(sp.n, dtype=bool)
    for k, n in _jn_ranges(ts, table):
        if n < k:
            continue
        hv = table.heavy.get((k, n), [])
        if hv:
            g2 |= overlap_exceed_mask(ts, hv, 2 * n + 6, n)

    g3 = np.zeros(sp.n, dtype=bool)
    for (k, n, j), l4set in table.l4.items():
        if n < k or j > 2 * n + 3:
            continue
        for p in l4set:
            g3[ts.members(p)] = True

    gprime = g1 | g2 | g3
    for name, mask, budget in (
        ("g1", g1, Fraction(1, 32)),
        ("g2", g2, Fraction(1, 4)),
        ("g3", g3, Fraction(1, 16)),
    ):
        report.compare(
            f"decompose.exceptional-{name}",
            f"exceptional-set-{name}-bound",
            sp.measure_mask(mask),
            budget * mu_g,
            info=not paper_profile,
        )
    report.compare(
        "decompose.exceptional-total",
        "exceptional-set-total-bound",
        sp.measure_mask(gprime),
        Fraction(1, 2) * mu_g,
        info=not paper_profile,
    )
    report.compare(
        "decompose.exceptional-within-g",
        "exceptional-set-weak-bound",
        sp.measure_mask(gprime),
        mu_g,
    )
    return g1, g2, g3, gprime, report


def check_john_nirenberg(ts: TileStructure, table: LayerTable, g_mask: np.ndarray) -> CheckReport:
    """Stack-measure decay of heavy tiles plus the derived counting bounds."""
    report = CheckReport()
    sp = ts.space
    a = sp.a
    mu_g = sp.measure_mask(g_mask)
    jn_ok, jn_w, jn_cells = True, "", 0
    top_ok, top_w = True, ""
    count_ok, count_w = True, ""
    for k, n in _jn_ranges(ts, table):
        hv = table.heavy.get((k, n), [])
        stack = _heavy_stack(ts, hv)
        lam = 0
        while True:
            mask = stack > lam * 2 ** (n + 1)
            mu = sp.measure_mask(mask)
            bound = Fraction(2 ** (k + 1), 2**lam) * mu_g
            jn_cells += 1
            if mu > bound:
                jn_ok, jn_w = False, f"(lam,k,n)=({lam},{k},{n})"
            if not mask.any():
                break
            lam += 1
        total = sum((sp.measure(ts.members(m)) for m in hv), ZERO)
        if total > Fraction(2 ** (n + k + 3)) * mu_g:
            top_ok, top_w = False, f"(k,n)=({k},{n})"
        for j in range(0, 2 * n + 4):
            u1 = table.u1.get((k, n, j), set())
            if not u1:
                continue
            ustack = np.zeros(sp.n, dtype=np.int64)
            for u in u1:
                ustack[ts.members(u)] += 1
            bound_vec = Fraction(2 ** (9 * a), 2**j)
            lhs = ustack.astype(object)
            rhs = stack.astype(object) * bound_vec
            if np.any(lhs > rhs):
                count_ok, count_w = False, f"(k,n,j)=({k},{n},{j})"
    report.predicate(
        "decompose.john-nirenberg",
        "heavy-stack-decay-bound",
        jn_ok,
        context=jn_w or f"{jn_cells} cells",
    )
    report.predicate("decompose.top-tiles", "heavy-tile-mass-bound", top_ok, context=top_w)
    report.predicate("decompose.tree-count", "top-count-versus-heavy-stack", count_ok, context=count_w)

    # boundary layers of prospective tops
    bd_ok, bd_w = True, ""
    grid = ts.grid
    Z = grid.profile.Z
    kappa = grid.profile.kappa
    D = grid.profile.D
    for (k, n, j), bc in table.boundary_cubes.items():
        for u, bad in bc.items():
            if not bad:
                continue
            m = np.zeros(sp.n, dtype=bool)
            for cid in bad:
                m[grid.cubes[cid].members] = True
            lhs = sp.measure_mask(m)
            if lhs == 0:
                continue
            expo = kappa * Z * (n + 1)
            # bound 2 * D^(-kappa Z (n+1)) * mu(cube(u)): exact comparison in
            # the form lhs^q' <= (2 mu)^q' D^(-p') with rational exponent
            mu_u = sp.measure(ts.members(u))
            ratio = lhs / (2 * mu_u)
            p_, q_ = expo.numerator, expo.denominator
            if ratio > 0 and not (ratio**q_ * Fraction(D) ** p_ <= 1):
                bd_ok, bd_w = False, f"u={u} (k,n,j)=({k},{n},{j})"
    report.predicate("decompose.boundary-exception", "top-boundary-layer-bound", bd_ok, context=bd_w)
    return report


# ---------------------------------------------------------------------------
# forest assembly
# ---------------------------------------------------------------------------


def check_forest(ts: TileStructure, forest: Forest, g_mask: np.ndarray) -> CheckReport:
    """The six defining properties of an n-forest, verified exactly."""
    report = CheckReport()
    sp = ts.space
    a = sp.a
    n = forest.n
    Z = ts.grid.profile.Z
    geom_ok, geom_w = True, ""
    convex_ok, convex_w = True, ""
    sep_ok, sep_w = True, ""
    inner_ok, inner_w = True, ""
    for u in forest.tops:
        tree = forest.trees[u]
        if not tree:
            geom_ok, geom_w = False, f"empty tree at top {u}"
        for p in tree:
            if ts.tiles[p].cube == ts.tiles[u].cube:
                geom_ok, geom_w = False, f"tile {p} shares the top cube {u}"
            if not ts.tile_wiggle_le(Fraction(4), p, Fraction(1), u):
                geom_ok, geom_w = False, f"tile {p} not 4-below top {u}"
            ball = Ball(ts.center(p), 8 * ts.grid.profile.pow_D(ts.scale(p)))
            if not set(sp.ball_members(ball).tolist()) <= set(
                ts.members(u).tolist()
            ):
                inner_ok, inner_w = False, f"tile {p} too close to the edge of top {u}"
        tset = set(tree)
        for p in tree:
            for pp in ts.tiles_on_ancestors(ts.tiles[p].cube):
                if pp in tset or not ts.tile_le(p, pp):
                    continue
                if any(ts.tile_le(pp, p2) for p2 in tree):
                    convex_ok, convex_w = False, f"gap at tile {pp} in tree {u}"
    stack = np.zeros(sp.n, dtype=np.int64)
    for u in forest.tops:
        stack[ts.members(u)] += 1
    report.predicate("forest.reach", "tree-tiles-below-top", geom_ok, context=geom_w)
    report.predicate("forest.convex", "tree-order-convexity", convex_ok, context=convex_w)
    report.compare("forest.stacking", "top-overlap-bound", int(stack.max(initial=0)), 2**n)
    dens_ok, dens_w = True, ""
    for u in forest.tops:
        d = overlap_density(ts, forest.trees[u], g_mask)
        if d > Fraction(2 ** (4 * a + 1), 2**n):
            dens_ok, dens_w = False, f"tree {u}"
    report.predicate("forest.density", "tree-overlap-density-bound", dens_ok, context=dens_w)
    for u in forest.tops:
        for u2 in forest.tops:
            if u == u2:
                continue
            for p in forest.trees[u2]:
                if not ts.grid.cube_le(ts.tiles[p].cube, ts.tiles[u].cube):
                    continue
                d = ts.cube_metric(ts.tiles[p].cube).value(ts.tiles[p].q, ts.tiles[u].q)
                if not d > Fraction(2 ** (Z * (n + 1))):
                    sep_ok, sep_w = False, f"tile {p} of tree {u2} near top {u}"
    report.predicate("forest.separation", "cross-tree-frequency-separation", sep_ok, context=sep_w)
    report.predicate("forest.inner", "tree-tiles-inside-top", inner_ok, context=inner_w)
    return report


def check_antichain(ts: TileStructure, ac: Antichain, g_mask: np.ndarray) -> CheckReport:
    report = CheckReport()
    a = ts.space.a
    inc_ok, inc_w = True, ""
    tset = set(ac.tiles)
    for p in ac.tiles:
        for q in ts.tiles_on_ancestors(ts.tiles[p].cube):
            if q != p and q in tset and ts.tile_le(p, q):
                inc_ok, inc_w = False, f"tiles {p} <= {q}"
    report.predicate("antichain.incomparable", "antichain-incomparability", inc_ok, context=inc_w)
    if ac.tiles:
        report.compare(
            "antichain.density",
            "antichain-overlap-density-bound",
            overlap_density(ts, ac.tiles, g_mask),
            Fraction(2 ** (4 * a + 1), 2**ac.n),
            context=ac.provenance,
        )
    return report


def build_forests(
    ts: TileStructure, table: LayerTable, gprime: np.ndarray
) -> tuple[list[Forest], CheckReport]:
    """Assemble the trees over surviving tiles, grouping tops into forests."""
    report = CheckReport()
    forests: list[Forest] = []
    grid = ts.grid
    sp = ts.space

    def survives(p: int) -> bool:
        return not bool(np.all(gprime[ts.members(p)]))

    for (k, n, j), c5 in sorted(table.c5.items()):
        if n < k or j > 2 * n + 3:
            continue
        c6 = {p for p in c5 if survives(p)}
        if not c6:
            continue
        cell = table.cells[(k, n, j)]
        u1 = table.u1[(k, n, j)]
        t1: dict[int, set] = {}
        for u in u1:
            t1[u] = {
                p
                for p in cell
                if ts.tiles[p].cube != ts.tiles[u].cube
                and ts.tile_wiggle_le(Fraction(2), p, Fraction(1), u)
            }
        u2 = sorted(u for u in u1 if t1[u] & c6)
        # tree-gluing relation: u ~ u' when some tile of t1(u) 10-reaches u'
        rel = {
            (u, v): u == v or any(ts.tile_wiggle_le(Fraction(10), p, Fraction(1), v) for p in t1[u])
            for u in u2
            for v in u2
        }
        sym_ok = all(rel[(u, v)] == rel[(v, u)] for u in u2 for v in u2)
        trans_ok = all(
            (not (rel[(u, v)] and rel[(v, w)])) or rel[(u, w)]
            for u in u2
            for v in u2
            for w in u2
        )
        report.predicate(
            f"decompose.tree-relation[{k},{n},{j}]",
            "tree-gluing-equivalence",
            sym_ok and trans_ok,
            context="" if sym_ok and trans_ok else "closure used for classes",
        )
        # classes via symmetric-transitive closure (equals rel when it holds)
        parent = {u: u for u in u2}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for u in u2:
            for v in u2:
                if rel[(u, v)] or rel[(v, u)]:
                    ru, rv = find(u), find(v)
                    if ru != rv:
                        parent[max(ru, rv)] = min(ru, rv)
        classes: dict[int, list[int]] = {}
        for u in u2:
            classes.setdefault(find(u), []).append(u)
        reps = sorted(classes)  # lowest tile id per class
        trees: dict[int, list[int]] = {}
        for rep in reps:
            merged: set = set()
            for u in classes[rep]:
                merged |= t1[u] & c6
            trees[rep] = sorted(merged)

        # stacking lemma for the chosen representatives
        stack = np.zeros(sp.n, dtype=np.int64)
        for rep in reps:
            stack[ts.members(rep)] += 1
        cap = (4 * n + 12) * 2**n
        report.compare(
            f"decompose.top-stacking[{k},{n},{j}]",
            "representative-top-stacking-bound",
            int(stack.max(initial=0)),
            cap,
        )

        # greedy coloring into at most 4n+12 forests with per-color stack <= 2^n
        colors: list[list[int]] = []
        color_stacks: list[np.ndarray] = []
        for rep in reps:
            placed = False
            for ci, cs in enumerate(color_stacks):
                trial = cs.copy()
                trial[ts.members(rep)] += 1
                if trial.max(initial=0) <= 2**n:
                    colors[ci].append(rep)
                    color_stacks[ci] = trial
                    placed = True
                    break
            if not placed:
                colors.append([rep])
                cs = np.zeros(sp.n, dtype=np.int64)
                cs[ts.members(rep)] += 1
                color_stacks.append(cs)
        if len(colors) > 4 * n + 12:
            raise ValueError(
                f"forest property violated: cell ({k},{n},{j}) needs {len(colors)} > 4n+12 forests"
            )
        for ci, tops in enumerate(colors):
            forests.append(Forest(n=n, tops=tops, trees={u: trees[u] for u in tops}, provenance=(k, n, j, ci)))
    return forests, report


def build_antichains(
    ts: TileStructure, table: LayerTable, gprime: np.ndarray
) -> tuple[list[Antichain], CheckReport]:
    """Layer the leftover families into verified antichains."""
    report = CheckReport()
    out: list[Antichain] = []

    def survives(p: int) -> bool:
        return not bool(np.all(gprime[ts.members(p)]))

    def chain_layers(tiles: set) -> list[list[int]]:
        """Layer by longest chain ending at each tile (exact DAG pass)."""
        order = sorted(tiles, key=lambda t: (ts.scale(t), t))
        depth: dict[int, int] = {}
        for p in order:
            best = 0
            for q in tiles:
                if q != p and ts.tile_le(q, p):
                    best = max(best, depth.get(q, 0))
            depth[p] = best + 1
        layers: dict[int, list[int]] = {}
        for p, d in depth.items():
            layers.setdefault(d, []).append(p)
        return [sorted(layers[d]) for d in sorted(layers)]

    # zero-density leftovers: no operator mass on G, own antichain band
    n_zero = max([n for (_, n) in table.bands] + [0]) + 1
    for k, tiles in sorted(table.zero_density.items()):
        alive = {p for p in tiles if survives(p)}
        for li, layer in enumerate(chain_layers(alive)):
            out.append(Antichain(layer, n_zero, li, provenance=f"zero-density[k={k}]"))

    for (k, n), tiles in sorted(table.l0.items()):
        alive = {p for p in tiles if survives(p)}
        if not alive:
            continue
        layers = chain_layers(alive)
        report.compare(
            f"decompose.chain-depth[{k},{n}]",
            "no-reach-chain-length-bound",
            len(layers),
            n,
        )
        for li, layer in enumerate(layers):
            out.append(Antichain(layer, n, li, provenance=f"no-reach[k={k}]"))

    for (k, n, j), layer_list in sorted(table.l1.items()):
        if n < k or j > 2 * n + 3:
            continue
        for li, layer in enumerate(layer_list):
            alive = sorted(p for p in layer if survives(p))
            if alive:
                out.append(Antichain(alive, n, li, provenance=f"minimal-layer[k={k},j={j}]"))
    for (k, n, j), tiles in sorted(table.l2.items()):
        if n < k or j > 2 * n + 3:
            continue
        alive = sorted(p for p in tiles if survives(p))
        if alive:
            out.append(Antichain(alive, n, 0, provenance=f"out-of-reach[k={k},j={j}]"))
    for (k, n, j), layer_list in sorted(table.l3.items()):
        if n < k or j > 2 * n + 3:
            continue
        for li, layer in enumerate(layer_list):
            alive = sorted(p for p in layer if survives(p))
            if alive:
                out.append(Antichain(alive, n, li, provenance=f"maximal-layer[k={k},j={j}]"))
    # boundary-layer tiles are entirely inside the exceptional set by
    # construction, but the survivor filter keeps the partition honest.
    for (k, n, j), tiles in sorted(table.l4.items()):
        if n < k or j > 2 * n + 3:
            continue
        alive = {p for p in tiles if survives(p)}
        for li, layer in enumerate(chain_layers(alive)):
            out.append(Antichain(layer, n, li, provenance=f"boundary-layer[k={k},j={j}]"))

    # re-index to the per-n scheme and verify the capacity contract
    by_n: dict[int, list[Antichain]] = {}
    for ac in out:
        by_n.setdefault(ac.n, []).append(ac)
    reindexed: list[Antichain] = []
    Z = ts.grid.profile.Z
    for n in sorted(by_n):
        acs = by_n[n]
        cap = Z * (n + 2) ** 3 + 1
        report.compare(
            f"decompose.antichain-count[n={n}]",
            "antichain-capacity-bound",
            len(acs),
            cap,
        )
        for j, ac in enumerate(acs):
            reindexed.append(Antichain(ac.tiles, n, j, ac.provenance))
    return reindexed, report


def decompose(
    ts: TileStructure,
    f_mask: np.ndarray,
    g_mask: np.ndarray,
    paper_profile: Optional[bool] = None,
) -> tuple[Decomposition, CheckReport]:
    """Full pipeline: layers, exceptional sets, forests, antichains, partition."""
    report = CheckReport()
    sp = ts.space
    a = sp.a
    if paper_profile is None:
        paper_profile = ts.grid.profile.name == "paper"
    if sp.measure_mask(g_mask) == 0:
        raise ValueError("empty G")
    table = build_layer_table(ts, g_mask, f_mask)
    g1, g2, g3, gprime, exc_report = exceptional_sets(ts, f_mask, g_mask, table, paper_profile)
    report.extend(exc_report)
    report.extend(check_john_nirenberg(ts, table, g_mask))

    forests, forest_report = build_forests(ts, table, gprime)
    report.extend(forest_report)
    for fi, forest in enumerate(forests):
        rep = check_forest(ts, forest, g_mask)
        for it in rep:
            it.id = f"{it.id}[{fi}]"
        report.extend(rep)
        if not rep.all_passed():
            raise ValueError(f"forest property violated: {rep.failures()[0].id}")

    antichains, anti_report = build_antichains(ts, table, gprime)
    report.extend(anti_report)
    for ai, ac in enumerate(antichains):
        rep = check_antichain(ts, ac, g_mask)
        for it in rep:
            it.id = f"{it.id}[{ai}]"
        report.extend(rep)
        if not rep.all_passed():
            raise ValueError(f"antichain violated: {rep.failures()[0].id}")

    # Exact partition of the surviving tiles
    surviving = sorted(
        t.id for t in ts.tiles if not bool(np.all(gprime[ts.members(t.id)]))
    )
    claimed: list[int] = []
    for forest in forests:
        claimed.extend(forest.all_tiles())
    for ac in antichains:
        claimed.extend(ac.tiles)
    claimed.sort()
    if claimed != surviving:
        from collections import Counter

        cs, cv = Counter(surviving), Counter(claimed)
        missing = sorted((cs - cv).elements())
        doubled = sorted((cv - cs).elements())
        witness = (missing or doubled or ["?"])[0]
        raise ValueError(f"partition failure at tile {witness}")
    report.predicate(
        "decompose.partition",
        "surviving-tile-partition",
        True,
        context=f"{len(surviving)} tiles across {len(forests)} forests, {len(antichains)} antichains",
    )

    # forest capacity and density contracts
    mu_f, mu_g = sp.measure_mask(f_mask), sp.measure_mask(g_mask)
    thr = Fraction(2 ** (2 * a + 5)) * mu_f / mu_g
    by_n: dict[int, int] = {}
    for forest in forests:
        by_n[forest.n] = by_n.get(forest.n, 0) + 1
        report.compare(
            f"decompose.forest-mass-density[{forest.provenance}]",
            "forest-mass-density-bound",
            mass_density(ts, forest.all_tiles(), f_mask),
            thr,
        )
    for n, cnt in sorted(by_n.items()):
        report.compare(
            f"decompose.forest-count[n={n}]",
            "forest-capacity-bound",
            cnt,
            12 * (n + 2) ** 2 + 1,
        )
    for ai, ac in enumerate(antichains):
        if ac.tiles:
            report.compare(
                f"decompose.antichain-mass-density[{ai}]",
                "antichain-mass-density-bound",
                mass_density(ts, ac.tiles, f_mask),
                thr,
            )

    dec = Decomposition(
        gprime=gprime,
        forests=forests,
        antichains=antichains,
        leftovers={
            "zero_density_tiles": sorted(t for s in table.zero_density.values() for t in s),
            "g1": np.nonzero(g1)[0].tolist(),
            "g2": np.nonzero(g2)[0].tolist(),
            "g3": np.nonzero(g3)[0].tolist(),
        },
    )
    return dec, report


# ---------------------------------------------------------------------------
# convexity (instance invariant helper)
# ---------------------------------------------------------------------------


def is_convex(ts: TileStructure, tiles: set) -> bool:
    """p <= p' <= p'' with the ends inside forces the middle inside."""
    for p in tiles:
        for pp in ts.tiles_on_ancestors(ts.tiles[p].cube):
            if pp in tiles or not ts.tile_le(p, pp):
                continue
            if any(pp != q and ts.tile_le(pp, q) for q in tiles):
                return False
    return True


# ---------------------------------------------------------------------------
# synthetic forests (drives the operator suites)
# ---------------------------------------------------------------------------


def synthetic_two_tree_forest(
    ts: TileStructure,
    top_freq_1: int,
    top_freq_2: int,
    n: int = 1,
) -> Forest:
    """A two-tree forest with nested tops, both on the top cube.

    At the scale base of the paper profile every cube below the top is a
    single point, so the only cubes wide enough to margin-contain their
    trees are full-space ones; the two tops therefore share the top cube
    (equal cubes are nested) and are separated purely in frequency.
    Trees collect all deeper tiles at the top frequencies that satisfy
    the reach/margin/separation constraints, then shrink to a convex
    family.  The caller verifies the result through check_forest.
    """
    grid = ts.grid
    sp = ts.space
    Z = grid.profile.Z
    sep = Fraction(2 ** (Z * (n + 1)))

    def top_tile(cid: int, freq: int) -> int:
        for tid in ts.by_cube.get(cid, []):
            if ts.tiles[tid].q == freq:
                return tid
        raise ValueError(f"no tile with frequency {freq} on cube {cid}")

    u1 = top_tile(grid.top, top_freq_1)
    u2 = top_tile(grid.top, top_freq_2)
    tops = [u1, u2]

    def eligible(p: int, u: int, other: int) -> bool:
        t = ts.tiles[p]
        if t.cube == ts.tiles[u].cube:
            return False
        if not ts.tile_wiggle_le(Fraction(4), p, Fraction(1), u):
            return False
        ball = Ball(ts.center(p), 8 * grid.profile.pow_D(ts.scale(p)))
        if not set(sp.ball_members(ball).tolist()) <= set(ts.members(u).tolist()):
            return False
        if ts.grid.cube_le(t.cube, ts.tiles[other].cube):
            d = ts.cube_metric(t.cube).value(t.q, ts.tiles[other].q)
            if not d > sep:
                return False
        return True

    trees: dict[int, list[int]] = {}
    for u, other, freq in ((u1, u2, top_freq_1), (u2, u1, top_freq_2)):
        cand = {
            p
            for p in range(len(ts.tiles))
            if ts.tiles[p].q == freq and p not in tops and eligible(p, u, other)
        }
        # convex shrink: drop down-sets of ineligible middles
        changed = True
        while changed:
            changed = False
            for p in sorted(cand):
                for pp in ts.tiles_on_ancestors(ts.tiles[p].cube):
                    if pp in cand or pp in tops or not ts.tile_le(p, pp):
                        continue
                    if any(ts.tile_le(pp, q) for q in cand):
                        cand.discard(p)
                        changed = True
                        break
        trees[u] = sorted(cand)
        if not trees[u]:
            raise ValueError(f"synthetic tree at top {u} came out empty")
    return Forest(n=n, tops=tops, trees=trees, provenance=("synthetic",))
