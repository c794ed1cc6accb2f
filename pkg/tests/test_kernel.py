"""Bump function, kernel slices, profiles, and kernel bound checks."""
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carleson_lab.kernel import (
    BumpPsi,
    Profile,
    build_kernel,
    check_kernel_bounds,
    check_slice_bounds,
    derive_truncation_scale,
    hilbert_kernel,
    kernel_slice,
    realized_slice_scales,
    size_model_kernel,
)
from carleson_lab.space import build_space, volume_V


def x16():
    return build_space({"type": "integer_interval", "n": 16, "a": 4})


def test_profile_paper_constants():
    p = Profile.paper(4)
    assert p.D == 2**1600
    assert p.kappa == Fraction(1, 2**40)
    assert p.Z == 2**48


def test_profile_overrides():
    p = Profile.from_config({"profile": "toy", "D": 4, "Z": 2}, a=4)
    assert (p.D, p.Z) == (4, 2)
    q = Profile.from_config({"profile": "paper", "Z": 1}, a=4)
    assert q.D == 2**1600 and q.Z == 1


def test_truncation_scale_examples():
    sp = x16()
    assert derive_truncation_scale(sp, Profile.toy(4, D=4)) == 3
    assert derive_truncation_scale(sp, Profile.paper(4)) == 1
    sp256 = build_space({"type": "integer_interval", "n": 256, "a": 4})
    assert derive_truncation_scale(sp256, Profile.toy(4, D=4)) == 5
    assert derive_truncation_scale(sp256, Profile.toy(4, D=16)) == 3


def test_psi_examples_toy_d16():
    psi = BumpPsi(16)
    assert psi.value(Fraction(1, 64)) == 0
    assert psi.value(Fraction(1, 32)) == 1
    assert psi.value(Fraction(3, 8)) == Fraction(1, 2)
    assert psi.value(Fraction(0)) == 0
    assert psi.value(Fraction(10)) == 0


def test_psi_steep_edge_slope():
    D = 16
    psi = BumpPsi(D)
    x0, x1 = Fraction(1, 4 * D), Fraction(1, 2 * D)
    mid = (x0 + x1) / 2
    assert (psi.value(mid) - psi.value(x0)) / (mid - x0) == 4 * D


@settings(max_examples=80, deadline=None)
@given(num=st.integers(min_value=1, max_value=10**6), den=st.integers(min_value=1, max_value=10**6))
def test_psi_partition_of_unity_random_rationals(num, den):
    psi = BumpPsi(16)
    prof = Profile.toy(4, D=16)
    x = Fraction(num, den)
    total = sum(psi.value(x / prof.pow_D(s)) for s in psi.active_scales(x, prof))
    assert total == 1


@settings(max_examples=60, deadline=None)
@given(num=st.integers(min_value=1, max_value=10**6), den=st.integers(min_value=1, max_value=10**6))
def test_psi_range_and_continuity_sampled(num, den):
    psi = BumpPsi(4)
    x = Fraction(num, den)
    v = psi.value(x)
    assert 0 <= v <= 1


def test_slice_support_and_plateau():
    sp = x16()
    prof = Profile.toy(4, D=4)
    bump = BumpPsi(4)
    k = hilbert_kernel(sp)
    # distance 8 pair, scale with D^s/2 >= 8 > D^(s-1)/4 -> s = 3 plateau region?
    # plateau: rho in [D^(s-1)/2, D^s/4]; s=3: [8, 16] -> rho = 8 sits on the plateau.
    v = kernel_slice(k, bump, prof, sp, 3, 0, 8)
    assert v == pytest.approx(complex(Fraction(1, -8)))
    # out of support
    assert kernel_slice(k, bump, prof, sp, 1, 0, 8) == 0


def test_slice_reconstruction_sums_to_kernel():
    sp = x16()
    prof = Profile.toy(4, D=4)
    bump = BumpPsi(4)
    k = hilbert_kernel(sp)
    for x, y in [(0, 1), (0, 8), (3, 14), (15, 2)]:
        total = Fraction(0)
        for s in bump.active_scales(sp.distance(x, y), prof):
            total += bump.value(sp.distance(x, y) / prof.pow_D(s))
        assert total == 1
        acc = sum(kernel_slice(k, bump, prof, sp, s, x, y) for s in range(-6, 8))
        assert acc == pytest.approx(k.eval(x, y))


def test_check_kernel_bounds_builtins_pass():
    sp = x16()
    for k in (hilbert_kernel(sp), size_model_kernel(sp)):
        rep = check_kernel_bounds(k, sp)
        assert rep.all_passed(), [it.id for it in rep.failures()]


def test_hilbert_sharper_size_oracle():
    # On integer intervals with unit weights: |K| * V < 2.
    sp = x16()
    for x in range(16):
        for y in range(16):
            if x != y:
                assert volume_V(sp, x, y) * abs(Fraction(1, x - y)) <= 2


def test_forced_violation_reported():
    sp = build_space({"type": "integer_interval", "n": 8, "a": 4})
    bad = [[0 if i == j else (2**64 + 1 if (i, j) == (0, 1) else 0.001) for j in range(8)] for i in range(8)]
    k = build_kernel({"type": "explicit", "values": bad}, sp)
    rep = check_kernel_bounds(k, sp)
    assert not rep.all_passed()


def test_check_slice_bounds_x16():
    sp = x16()
    prof = Profile.toy(4, D=4)
    bump = BumpPsi(4)
    rep = check_slice_bounds(hilbert_kernel(sp), bump, sp, prof)
    assert rep.all_passed(), [it.id for it in rep.failures()]


def test_realized_scales_paper_profile_small():
    sp = x16()
    prof = Profile.paper(4)
    bump = BumpPsi(prof.D)
    scales = realized_slice_scales(sp, prof, bump)
    assert len(scales) <= 3 and scales  # huge D: very few active scales
