"""Operator evaluation, adjointness, weak-type checks, lemma suites."""
from fractions import Fraction

import numpy as np
import pytest

from carleson_lab.decompose import Antichain, check_forest, decompose, synthetic_two_tree_forest
from carleson_lab.grid import build_grid
from carleson_lab.kernel import BumpPsi, Profile, hilbert_kernel
from carleson_lab.operators import (
    OperatorContext,
    check_antichain_operator,
    check_forest_operator,
    check_tile_adjointness,
    check_tile_supports,
    check_weak_type,
    collection_apply,
    default_scale_selectors,
    default_selection,
    eval_carleson,
    eval_carleson_linearized,
    eval_max_truncated,
    forest_rows,
    indicator,
    maximal_function,
    modulated_slice_table,
    projection_average,
    tile_apply,
    truncation_sup,
)
from carleson_lab.lemmas import lemma_suite_antichain, lemma_suite_tree
from carleson_lab.phases import linear_phases
from carleson_lab.space import build_space
from carleson_lab.tiles import build_tiles


def build_ctx(
    n=16,
    D=4,
    freqs=(-2, -1, 0, 1, 2),
    metric="canonical_oscillation",
    profile=None,
    f_range=None,
    g_range=None,
    q=Fraction(3, 2),
    q_choice=None,
):
    sp = build_space({"type": "integer_interval", "n": n, "a": 4})
    prof = profile or Profile.toy(4, D=D)
    grid = build_grid(sp, prof)
    fam = linear_phases(sp, list(freqs), metric=metric)
    f_mask = np.zeros(n, dtype=bool)
    f_mask[list(f_range if f_range is not None else range(n))] = True
    g_mask = np.zeros(n, dtype=bool)
    g_mask[list(g_range if g_range is not None else range(n))] = True
    kern = hilbert_kernel(sp)
    f = indicator(sp, f_mask)
    if q_choice is None:
        Q = default_selection(sp, kern, fam, f)
    else:
        Q = np.asarray(q_choice, dtype=np.int64)
    ts = build_tiles(grid, fam, Q)
    bump = BumpPsi(prof.D)
    table = modulated_slice_table(sp, kern, bump, prof, grid.S, fam, Q, f)
    s1, s2 = default_scale_selectors(table)
    ctx = OperatorContext(
        space=sp,
        kernel=kern,
        bump=bump,
        profile=prof,
        ts=ts,
        f_mask=f_mask,
        g_mask=g_mask,
        f=f,
        g=indicator(sp, g_mask),
        sigma1=s1,
        sigma2=s2,
        q=q,
    )
    return ctx


CTX16 = build_ctx()


def test_maximal_function_basics():
    sp = CTX16.space
    h = np.ones(16)
    M = maximal_function(sp, h)
    assert np.allclose(M, 1.0)
    point = np.zeros(16)
    point[0] = 1.0
    Mp = maximal_function(sp, point)
    assert Mp[0] == 1.0
    # M h >= h pointwise
    rng = np.random.default_rng(0)
    h2 = rng.uniform(0, 1, 16)
    assert np.all(maximal_function(sp, h2) >= h2 - 1e-12)
    # hand value: at x=15 the best ball containing 0 averages over all of X
    assert Mp[15] == pytest.approx(1 / 16)


def test_truncation_sup_hand_example():
    # at x = 0 with contributions only from y = 1, 2: windows realize
    # single-point and two-point annuli; the sup picks the best of them.
    sp = CTX16.space
    contrib = np.zeros(16, dtype=np.complex128)
    contrib[1] = 1.0
    contrib[2] = -0.75
    got = truncation_sup(sp, 0, contrib)
    assert got == pytest.approx(1.0)
    contrib[2] = 0.75
    assert truncation_sup(sp, 0, contrib) == pytest.approx(1.75)


def test_operators_zero_function():
    ctx = build_ctx(f_range=[])
    for x in [0, 7, 15]:
        assert eval_carleson(ctx, x) == 0.0
        assert eval_carleson_linearized(ctx, x) == 0.0
        assert eval_max_truncated(ctx, x) == 0.0


def test_sup_dominates_selection_pointwise():
    ctx = CTX16
    for x in range(16):
        assert eval_carleson(ctx, x) >= eval_carleson_linearized(ctx, x) - 1e-12


def test_argmax_selection_achieves_supremum():
    ctx = CTX16
    # Q was chosen as the argmax selector, so the linearized value matches
    # the full supremum at every point.
    for x in range(16):
        assert eval_carleson_linearized(ctx, x) == pytest.approx(eval_carleson(ctx, x))


def test_tile_adjointness():
    rep = check_tile_adjointness(CTX16, pairs=4, seed=3)
    assert rep.all_passed(), [(it.id, it.context) for it in rep.failures()]


def test_tile_supports():
    rep = check_tile_supports(CTX16)
    assert rep.all_passed()


def test_projection_idempotent_and_average():
    ctx = CTX16
    grid = ctx.grid
    part = grid.by_scale[0]
    rng = np.random.default_rng(1)
    h = rng.uniform(-1, 1, 16).astype(np.complex128)
    ph = projection_average(grid, part, h)
    pph = projection_average(grid, part, ph)
    assert np.array_equal(ph, pph)
    const = np.full(16, 2.5 + 0j)
    assert np.array_equal(projection_average(grid, part, const), const)
    # singleton partition = identity
    bottom = grid.by_scale[-grid.S]
    assert np.array_equal(projection_average(grid, bottom, h), h)
    with pytest.raises(ValueError, match="disjoint"):
        projection_average(grid, [grid.top, grid.top], h)


def test_tile_sum_matches_window_sum():
    ctx = CTX16
    from carleson_lab.operators import linearized_window_values

    window = linearized_window_values(ctx)
    tile_sum = np.zeros(16, dtype=np.complex128)
    for tid in range(len(ctx.ts.tiles)):
        tile_sum += tile_apply(ctx, tid, ctx.f)
    assert np.allclose(np.abs(tile_sum), window, atol=1e-9)


def test_check_weak_type_x16():
    ctx = CTX16
    dec, _ = decompose(ctx.ts, ctx.f_mask, ctx.g_mask, paper_profile=False)
    rep = check_weak_type(ctx, dec)
    assert rep.all_passed(), [(it.id, it.context) for it in rep.failures()]


def test_weak_type_rejects_bad_q():
    with pytest.raises(ValueError, match="q must lie"):
        build_ctx(q=Fraction(1))


# ---------------------------------------------------------------------------
# the dedicated two-tree scenario
# ---------------------------------------------------------------------------


def build_two_tree_ctx():
    n = 64
    sp = build_space({"type": "integer_interval", "n": n, "a": 4})
    prof = Profile.from_config({"profile": "paper", "Z": 1}, a=4)
    grid = build_grid(sp, prof)
    freqs = [-9, -6, -3, 0, 3, 6, 9]
    fam = linear_phases(sp, freqs, metric="linear_radius")
    i1, i2 = 0, 6
    Q = np.where(np.arange(n) < 32, i1, i2).astype(np.int64)
    ts = build_tiles(grid, fam, Q)
    f_mask = np.zeros(n, dtype=bool)
    f_mask[:32] = True
    g_mask = np.zeros(n, dtype=bool)
    g_mask[16:48] = True
    kern = hilbert_kernel(sp)
    bump = BumpPsi(prof.D)
    f = indicator(sp, f_mask)
    table = modulated_slice_table(sp, kern, bump, prof, grid.S, fam, Q, f)
    s1, s2 = default_scale_selectors(table)
    ctx = OperatorContext(
        space=sp,
        kernel=kern,
        bump=bump,
        profile=prof,
        ts=ts,
        f_mask=f_mask,
        g_mask=g_mask,
        f=f,
        g=indicator(sp, g_mask),
        sigma1=s1,
        sigma2=s2,
        q=Fraction(3, 2),
    )
    forest = synthetic_two_tree_forest(ts, top_freq_1=i1, top_freq_2=i2, n=1)
    return ctx, forest


CTX2T, FOREST2T = build_two_tree_ctx()


def test_two_tree_forest_axioms():
    rep = check_forest(CTX2T.ts, FOREST2T, CTX2T.g_mask)
    assert rep.all_passed(), [(it.id, it.context) for it in rep.failures()]


def test_two_tree_rows():
    rows = forest_rows(CTX2T.ts, FOREST2T)
    assert len(rows) == 2  # nested tops force separate rows; 2 <= 2^n


def test_forest_operator_two_tree():
    rep = check_forest_operator(CTX2T, FOREST2T)
    assert rep.all_passed(), [(it.id, it.context) for it in rep.failures()]


def test_forest_operator_empty():
    from carleson_lab.decompose import Forest

    rep = check_forest_operator(CTX16, Forest(n=0, tops=[], trees={}))
    assert rep.all_passed()


def test_lemma_suite_tree_two_tree():
    rep = lemma_suite_tree(CTX2T, FOREST2T)
    assert rep.all_passed(), [(it.id, it.context) for it in rep.failures()]
    # pair lemmas must actually have been applicable
    assert any(it.id.startswith("tree.correlation[") for it in rep)


def test_lemma_suite_antichain_two_tree():
    ts = CTX2T.ts
    # one tree's tiles form an antichain (same scale, distinct cubes)
    tiles = FOREST2T.trees[FOREST2T.tops[0]]
    ac = Antichain(tiles, n=1, j=0, provenance="synthetic")
    rep = lemma_suite_antichain(CTX2T, ac)
    assert rep.all_passed(), [(it.id, it.context) for it in rep.failures()]


def test_antichain_operator_two_tree():
    tiles = FOREST2T.trees[FOREST2T.tops[0]]
    ac = Antichain(tiles, n=1, j=0, provenance="synthetic")
    rep = check_antichain_operator(CTX2T, ac)
    assert rep.all_passed(), [(it.id, it.context) for it in rep.failures()]
    empty = Antichain([], n=0, j=0)
    assert check_antichain_operator(CTX16, empty).all_passed()
