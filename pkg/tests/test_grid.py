"""Grid construction and axiom verification."""
from fractions import Fraction

import numpy as np
import pytest

from carleson_lab.grid import GridError, build_grid, check_grid, check_monotone_cube_metrics, cube_core
from carleson_lab.kernel import Profile
from carleson_lab.phases import linear_phases
from carleson_lab.space import build_space


def make(n=16, D=4, a=4, kind="integer_interval", profile=None):
    sp = build_space({"type": kind, "n": n, "a": a})
    prof = profile or Profile.toy(a, D=D)
    return sp, prof, build_grid(sp, prof)


def test_x16_toy_grid_shape():
    sp, prof, grid = make(16, 4)
    assert grid.S == 3
    top = grid.cubes[grid.top]
    assert top.scale == 3 and len(top.members) == 16 and top.center == 0
    # negative scales are singleton layers
    for cid in grid.by_scale[-1]:
        assert len(grid.cubes[cid].members) == 1
    assert len(grid.by_scale[-1]) == 16


def test_one_point_space_grid():
    sp = build_space({"type": "explicit", "dist": [[0]], "weights": [1], "a": 4})
    grid = build_grid(sp, Profile.toy(4, D=4))
    assert check_grid(grid).all_passed()
    assert all(len(grid.cubes[c].members) == 1 for c in range(len(grid.cubes)))


@pytest.mark.parametrize("n", [16, 64, 256])
@pytest.mark.parametrize("D", [4, 16])
def test_grid_axioms_pass_intervals(n, D):
    sp, prof, grid = make(n, D)
    rep = check_grid(grid)
    assert rep.all_passed(), [(it.id, it.context) for it in rep.failures()]


def test_grid_axioms_pass_torus():
    sp, prof, grid = make(16, 4, kind="integer_torus")
    assert check_grid(grid).all_passed()


def test_grid_paper_profile_x16():
    sp = build_space({"type": "integer_interval", "n": 16, "a": 4})
    prof = Profile.paper(4)
    grid = build_grid(sp, prof)
    assert grid.S == 1
    rep = check_grid(grid)
    assert rep.all_passed()
    # the whole space is one cube at scales >= 0
    for k in (0, 1):
        assert len(grid.by_scale[k]) in (1, 16)


def test_scale_surjective_and_partition():
    sp, prof, grid = make(64, 4)
    for k in range(-grid.S, grid.S + 1):
        members = np.concatenate([grid.cubes[c].members for c in grid.by_scale[k]])
        assert sorted(members.tolist()) == list(range(64))


def test_unique_parent_chain():
    sp, prof, grid = make(64, 4)
    for c in grid.cubes:
        chain = grid.ancestors(c.id)
        scales = [grid.cubes[x].scale for x in chain]
        assert scales == list(range(c.scale, grid.S + 1))


def test_cube_le_matches_set_inclusion_oracle():
    sp, prof, grid = make(16, 4)
    for c in grid.cubes[:40]:
        for d in grid.cubes[:40]:
            lit = (
                set(c.members.tolist()) <= set(d.members.tolist())
                and c.scale <= d.scale
            )
            assert grid.cube_le(c.id, d.id) == lit


def test_cube_core_examples():
    sp, prof, grid = make(16, 4)
    top = grid.top
    core = cube_core(grid, top)
    assert core.radius == Fraction(16)
    assert set(sp.ball_members(core).tolist()) == set(range(16))
    # core members always inside the cube
    for c in grid.cubes:
        assert set(grid.core_members(c.id).tolist()) <= set(c.members.tolist())


def test_handmade_non_nested_cubes_fail():
    from carleson_lab.grid import Cube, GridStructure

    sp = build_space({"type": "integer_interval", "n": 4, "a": 4})
    prof = Profile.toy(4, D=4)
    cubes = [
        Cube(0, 1, np.arange(4), 0, None),
        Cube(1, 0, np.array([0, 1, 2]), 1, 0),
        Cube(2, 0, np.array([2, 3]), 2, 0),  # overlaps cube 1 at the same scale
    ]
    grid = GridStructure(sp, prof, 1, cubes)
    rep = check_grid(grid)
    bad = {it.id for it in rep.failures()}
    assert "grid.cover" in bad or "grid.nested" in bad


def test_monotone_cube_metrics_paper_radius():
    sp = build_space({"type": "integer_interval", "n": 16, "a": 4})
    prof = Profile.paper(4)
    grid = build_grid(sp, prof)
    fam = linear_phases(sp, [-2, -1, 0, 1, 2], metric="linear_radius")
    rep = check_monotone_cube_metrics(grid, fam)
    assert rep.all_passed(include_info=True), [(it.id, it.context) for it in rep.failures()]


def test_monotone_cube_metrics_toy_contraction_is_informational():
    sp, prof, grid = make(16, 4)
    fam = linear_phases(sp, [-1, 0, 1])
    rep = check_monotone_cube_metrics(grid, fam)
    by_id = {it.id: it for it in rep}
    assert by_id["grid.metric-monotone"].passed
    assert by_id["grid.metric-contraction"].info  # toy profile: measured only
