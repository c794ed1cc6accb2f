"""Tile construction, axioms, E-sets, orders, densities vs oracles."""
from fractions import Fraction

import numpy as np
import pytest

from carleson_lab.grid import build_grid
from carleson_lab.kernel import Profile
from carleson_lab.phases import linear_phases
from carleson_lab.space import build_space
from carleson_lab.tiles import (
    build_tiles,
    check_tiles,
    check_wiggle_lemmas,
    mass_density,
    mass_density_oracle,
    overlap_density,
    overlap_density_oracle,
    TileError,
)


def scenario_x16(freqs=(-2, -1, 0, 1, 2), D=4, q_const=None):
    sp = build_space({"type": "integer_interval", "n": 16, "a": 4})
    prof = Profile.toy(4, D=D)
    grid = build_grid(sp, prof)
    fam = linear_phases(sp, list(freqs))
    if q_const is not None:
        Q = np.full(16, q_const, dtype=np.int64)
    else:
        Q = np.array([i % len(freqs) for i in range(16)], dtype=np.int64)
    ts = build_tiles(grid, fam, Q)
    return ts


def test_single_phase_one_tile_per_cube():
    ts = scenario_x16(freqs=(0,), q_const=0)
    for cid, tids in ts.by_cube.items():
        assert len(tids) == 1
        assert ts.tiles[tids[0]].omega == frozenset({0})


def test_tiles_built_and_axioms_pass():
    ts = scenario_x16()
    rep = check_tiles(ts)
    assert rep.all_passed(), [(it.id, it.context) for it in rep.failures()]


def test_q_constant_still_covers():
    ts = scenario_x16(q_const=2)
    assert check_tiles(ts).all_passed()
    # only the selected value must be covered per cube
    for cid, tids in ts.by_cube.items():
        assert any(2 in ts.tiles[t].omega for t in tids)


def test_frequency_net_cover_is_exhaustive():
    # maximality consequence: every selection value is 0.7-close to the net
    ts = scenario_x16()
    for cube in ts.grid.cubes:
        m = ts.cube_metric(cube.id)
        zs = [ts.tiles[t].q for t in ts.by_cube[cube.id]]
        for qv in ts.q_range:
            assert any(m.value(z, qv) < Fraction(7, 10) for z in zs)


def test_mutated_omega_detected():
    ts = scenario_x16()
    # force an overlap between two sibling patches
    cid = next(c for c, tids in ts.by_cube.items() if len(tids) >= 2)
    t0, t1 = ts.by_cube[cid][:2]
    ts.tiles[t1] = type(ts.tiles[t1])(
        ts.tiles[t1].id, ts.tiles[t1].cube, ts.tiles[t1].q,
        ts.tiles[t1].omega | ts.tiles[t0].omega,
    )
    rep = check_tiles(ts)
    assert not rep.all_passed()


def test_e_sets_match_oracles():
    ts = scenario_x16()
    n = ts.space.n
    g_mask = np.zeros(n, dtype=bool)
    g_mask[:8] = True
    g_set = set(range(8))
    sigma1 = np.full(n, -3)
    sigma2 = np.full(n, 3)
    for tid in range(len(ts.tiles)):
        assert ts.tile_support(tid, sigma1, sigma2).tolist() == ts.tile_support_oracle(
            tid, sigma1, sigma2
        )
        assert ts.tile_g_support(tid, g_mask).tolist() == ts.tile_g_support_oracle(tid, g_set)
        for lam in [Fraction(1), Fraction(2), Fraction(7, 2), Fraction(100)]:
            assert ts.tile_g_near(tid, lam, g_mask).tolist() == ts.tile_g_near_oracle(
                tid, lam, g_set
            )


def test_e_sets_trivial_cases():
    ts = scenario_x16()
    n = ts.space.n
    empty = np.zeros(n, dtype=bool)
    full = np.ones(n, dtype=bool)
    for tid in [0, len(ts.tiles) // 2]:
        assert ts.tile_g_support(tid, empty).size == 0
        assert ts.tile_g_near(tid, Fraction(10**9), full).tolist() == ts.members(tid).tolist()


def test_e_sets_disjoint_per_cube():
    ts = scenario_x16()
    full = np.ones(ts.space.n, dtype=bool)
    for cid, tids in ts.by_cube.items():
        seen = set()
        for tid in tids:
            pts = set(ts.tile_g_support(tid, full).tolist())
            assert not (pts & seen)
            seen |= pts


def test_tile_order_is_partial_order():
    ts = scenario_x16(freqs=(-1, 0, 1))
    tn = len(ts.tiles)
    for p in range(tn):
        assert ts.tile_le(p, p)
    for p in range(tn):
        for q in range(tn):
            if p != q and ts.tile_le(p, q) and ts.tile_le(q, p):
                raise AssertionError("antisymmetry violated")
    # transitivity on ancestor chains
    for p in range(tn):
        for q in ts.tiles_on_ancestors(ts.tiles[p].cube):
            for r in ts.tiles_on_ancestors(ts.tiles[q].cube):
                if ts.tile_le(p, q) and ts.tile_le(q, r):
                    assert ts.tile_le(p, r)


def test_wiggle_reflexive_like_cases():
    ts = scenario_x16(freqs=(-1, 0, 1))
    for p in range(0, len(ts.tiles), 7):
        assert ts.tile_wiggle_le(Fraction(2), p, Fraction(2), p)


def test_wiggle_lemmas_paper_profile():
    sp = build_space({"type": "integer_interval", "n": 16, "a": 4})
    prof = Profile.paper(4)
    grid = build_grid(sp, prof)
    fam = linear_phases(sp, [-2, -1, 0, 1, 2], metric="linear_radius")
    Q = np.array([i % 5 for i in range(16)], dtype=np.int64)
    ts = build_tiles(grid, fam, Q)
    rep = check_wiggle_lemmas(ts, paper_profile=True)
    assert rep.all_passed(include_info=True), [(it.id, it.context) for it in rep.failures()]


def test_densities_trivial_values():
    ts = scenario_x16()
    n = ts.space.n
    all_tiles = list(range(len(ts.tiles)))
    f_all = np.ones(n, dtype=bool)
    assert mass_density(ts, all_tiles, f_all) == 1
    g_none = np.zeros(n, dtype=bool)
    assert overlap_density(ts, all_tiles, g_none) == 0
    with pytest.raises(ValueError, match="empty"):
        overlap_density(ts, [], f_all)
    with pytest.raises(ValueError, match="empty"):
        mass_density(ts, [], f_all)


def test_density_monotone_under_inclusion():
    ts = scenario_x16()
    n = ts.space.n
    g = np.zeros(n, dtype=bool)
    g[:8] = True
    tiles_small = list(range(0, 10))
    tiles_big = list(range(0, 30))
    assert overlap_density(ts, tiles_small, g) <= overlap_density(ts, tiles_big, g)
    assert mass_density(ts, tiles_small, g) <= mass_density(ts, tiles_big, g)


def test_overlap_density_matches_oracle_x16():
    ts = scenario_x16(freqs=(-1, 0, 1))
    n = ts.space.n
    g = np.zeros(n, dtype=bool)
    g[:8] = True
    rng = np.random.default_rng(2)
    tile_ids = sorted(rng.choice(len(ts.tiles), size=6, replace=False).tolist())
    for sel in [tile_ids[:2], tile_ids[2:5], tile_ids]:
        assert overlap_density(ts, sel, g) == overlap_density_oracle(ts, sel, g)


def test_mass_density_matches_oracle_x16():
    ts = scenario_x16(freqs=(-1, 0, 1))
    n = ts.space.n
    f = np.zeros(n, dtype=bool)
    f[4:12] = True
    rng = np.random.default_rng(3)
    tile_ids = sorted(rng.choice(len(ts.tiles), size=5, replace=False).tolist())
    for sel in [tile_ids[:1], tile_ids]:
        assert mass_density(ts, sel, f) == mass_density_oracle(ts, sel, f)


def test_selection_function_validated():
    sp = build_space({"type": "integer_interval", "n": 16, "a": 4})
    prof = Profile.toy(4, D=4)
    grid = build_grid(sp, prof)
    fam = linear_phases(sp, [-1, 0, 1])
    with pytest.raises(ValueError, match="total"):
        build_tiles(grid, fam, np.zeros(7, dtype=np.int64))
    with pytest.raises(ValueError, match="out of range"):
        build_tiles(grid, fam, np.full(16, 5, dtype=np.int64))
