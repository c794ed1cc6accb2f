"""Both kernel implementations agree; env flag selects the fallback."""
import os
import subprocess
import sys

import numpy as np
import pytest

from carleson_lab import _accel


def impls():
    out = [("numpy", _accel.implementations(False))]
    if _accel.using_numba():
        out.append(("numba", _accel.implementations(True)))
    return out


def test_kahan_cumsum_matches_reference():
    rng = np.random.default_rng(0)
    vals = (rng.standard_normal(200) + 1j * rng.standard_normal(200)).astype(np.complex128)
    ref = np.concatenate([[0], np.cumsum(vals)])
    for name, impl in impls():
        got = impl["kahan_cumsum"](vals)
        assert np.allclose(got, ref, atol=1e-12), name


def test_window_start_max_matches_bruteforce():
    rng = np.random.default_rng(1)
    prefix = np.cumsum(rng.standard_normal(40) + 1j * rng.standard_normal(40))
    brute = np.array(
        [max(abs(prefix[j] - prefix[i]) for j in range(i + 1, 40)) for i in range(39)]
    )
    for name, impl in impls():
        got = impl["window_start_max"](prefix)
        assert np.allclose(got, brute, atol=1e-12), name
        capped = impl["window_start_max_capped"](prefix, 20)
        brute_c = np.zeros(39)
        for i in range(20):
            brute_c[i] = max(abs(prefix[j] - prefix[i]) for j in range(i + 1, 21))
        assert np.allclose(capped, brute_c, atol=1e-12), name


def test_pair_holder_seminorm_matches_bruteforce():
    rng = np.random.default_rng(2)
    vals = rng.standard_normal(25) + 1j * rng.standard_normal(25)
    dist = np.abs(rng.standard_normal((25, 25)))
    dist = dist + dist.T
    np.fill_diagonal(dist, 0.0)
    brute = max(
        abs(vals[i] - vals[j]) / dist[i, j] ** 0.25
        for i in range(25)
        for j in range(25)
        if i != j and dist[i, j] > 0
    )
    for name, impl in impls():
        assert impl["pair_holder_seminorm"](vals, dist, 0.25) == pytest.approx(brute), name


def test_env_flag_selects_fallback():
    code = (
        "import os; os.environ['CARLESON_LAB_DISABLE_NUMBA']='1';"
        "from carleson_lab import _accel; print(_accel.using_numba())"
    )
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "False"


def test_fallback_pipeline_smoke():
    # the x16 pipeline end-to-end under the fallback path
    code = (
        "import os; os.environ['CARLESON_LAB_DISABLE_NUMBA']='1';"
        "from carleson_lab.cli import run, builtin_scenarios;"
        "p,_,_ = run(builtin_scenarios()['x16-linear-toy'], checks_override=['space.*','grid.*','tiles.*']);"
        "print(p['summary']['failed'])"
    )
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "0"
