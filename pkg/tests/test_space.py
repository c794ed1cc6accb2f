"""Space construction, balls, measure, volume, doubling."""
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carleson_lab.space import Ball, build_space, check_doubling, volume_V


def x16():
    return build_space({"type": "integer_interval", "n": 16, "a": 4})


def test_build_interval_defaults():
    sp = x16()
    assert sp.n == 16
    assert sp.o == 0
    assert sp.distance(3, 11) == 8
    assert sp.weight(5) == 1
    assert sp.total_measure() == 16


def test_one_point_space_valid():
    sp = build_space({"type": "explicit", "dist": [[0]], "weights": [1], "a": 7})
    assert sp.n == 1
    assert sp.total_measure() == 1


def test_a_below_minimum_rejected():
    with pytest.raises(ValueError, match="below paper minimum"):
        build_space({"type": "integer_interval", "n": 16, "a": 3})


def test_nonmetric_rejected():
    bad = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]  # 5 > 1 + 1
    with pytest.raises(ValueError, match="triangle"):
        build_space({"type": "explicit", "dist": bad, "weights": [1, 1, 1], "a": 4})
    asym = [[0, 1], [2, 0]]
    with pytest.raises(ValueError, match="symmetric"):
        build_space({"type": "explicit", "dist": asym, "weights": [1, 1], "a": 4})


def test_nonpositive_weight_rejected():
    with pytest.raises(ValueError, match="positive"):
        build_space({"type": "explicit", "dist": [[0, 1], [1, 0]], "weights": [1, 0], "a": 4})


def test_ball_members_examples():
    sp = x16()
    assert list(sp.ball_members(Ball(8, Fraction(2)))) == [7, 8, 9]
    assert list(sp.ball_members(Ball(0, Fraction(0)))) == []
    assert list(sp.ball_members(Ball(0, Fraction(100)))) == list(range(16))


def test_ball_members_match_oracle():
    sp = x16()
    for c in range(16):
        for r in [Fraction(0), Fraction(1, 2), Fraction(3, 2), Fraction(4), Fraction(7, 3)]:
            assert list(sp.ball_members(Ball(c, r))) == sp.ball_members_oracle(Ball(c, r))


def test_ball_monotone_in_radius():
    sp = x16()
    for c in [0, 7, 15]:
        prev = set()
        for r in sorted([Fraction(k, 2) for k in range(0, 40)]):
            cur = set(sp.ball_members(Ball(c, r)).tolist())
            assert prev <= cur
            prev = cur


def test_measure_examples():
    sp = x16()
    assert sp.measure([]) == 0
    assert sp.measure([7, 8, 9]) == 3
    assert sp.measure(np.arange(16)) == 16


def test_measure_additive_monotone():
    sp = build_space(
        {"type": "integer_interval", "n": 8, "a": 4, "weights": ["1/2", 1, 2, 1, "3/7", 1, 1, 5]}
    )
    a = sp.measure([0, 2, 4])
    b = sp.measure([1, 3])
    assert sp.measure([0, 1, 2, 3, 4]) == a + b
    assert a <= sp.measure([0, 2, 4, 6])


def test_volume_examples():
    sp = x16()
    assert volume_V(sp, 0, 3) == 3
    assert volume_V(sp, 8, 9) == 1  # pair at distance 1: open ball is {8}
    with pytest.raises(ValueError, match="diagonal"):
        volume_V(sp, 5, 5)


def test_volume_lower_bound_by_center_weight():
    sp = build_space(
        {"type": "integer_interval", "n": 8, "a": 4, "weights": [2, 1, 1, 1, 1, 1, 1, 1]}
    )
    for y in range(1, 8):
        assert volume_V(sp, 0, y) >= sp.weight(0)


def test_check_doubling_x16():
    sp = x16()
    rep = check_doubling(sp)
    assert rep.all_passed()
    # the spec's worked cell: mu(B(8,4)) = 7 <= 16 * mu(B(8,2)) = 48
    assert sp.ball_measure(8, Fraction(4)) == 7
    assert 16 * sp.ball_measure(8, Fraction(2)) == 48


def test_check_doubling_one_point():
    sp = build_space({"type": "explicit", "dist": [[0]], "weights": [1], "a": 4})
    assert check_doubling(sp).all_passed()


def test_check_doubling_large_interval():
    sp = build_space({"type": "integer_interval", "n": 1024, "a": 4})
    assert check_doubling(sp).all_passed()


def test_check_doubling_failure_reported_not_raised():
    # Geometric weights break doubling; the report must fail, not raise.
    w = [2**k for k in range(10)]
    sp = build_space({"type": "integer_interval", "n": 10, "a": 4, "weights": w})
    rep = check_doubling(sp)
    assert not rep.all_passed()


def test_torus_distance():
    sp = build_space({"type": "integer_torus", "n": 16, "a": 4})
    assert sp.distance(0, 15) == 1
    assert sp.distance(0, 8) == 8
    assert check_doubling(sp).all_passed()


@settings(max_examples=30, deadline=None)
@given(
    c=st.integers(min_value=0, max_value=15),
    rn=st.integers(min_value=0, max_value=40),
    rd=st.integers(min_value=1, max_value=7),
)
def test_ball_membership_strict_inequality(c, rn, rd):
    sp = x16()
    r = Fraction(rn, rd)
    members = set(sp.ball_members(Ball(c, r)).tolist())
    for y in range(16):
        assert (y in members) == (sp.distance(c, y) < r)
