"""Hot numeric kernels, JIT-compiled with numba when available.

The exact-rational combinatorial core of the package stays in pure Python
(the profile constants do not fit in any float), but the operator
evaluations reduce to dense float loops: truncation-window maxima over
prefix sums, pairwise Holder quotients, compensated summation.  Those live
here with two interchangeable implementations:

* a numba ``@njit`` build (default), and
* a pure-numpy fallback, selected by setting the environment variable
  ``CARLESON_LAB_DISABLE_NUMBA=1`` before import.

``benchmarks/bench_accel.py`` times one against the other.
"""
from __future__ import annotations

import math
import os

import numpy as np

DISABLE_ENV = "CARLESON_LAB_DISABLE_NUMBA"

_numba_requested = os.environ.get(DISABLE_ENV, "").strip() not in ("1", "true", "yes")
_numba_ok = False
if _numba_requested:
    try:
        from numba import njit

        _numba_ok = True
    except ImportError:
        _numba_ok = False

if not _numba_ok:

    def njit(*args, **kwargs):  # noqa: D103 - decorator stub
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------


def _np_kahan_cumsum(values: np.ndarray) -> np.ndarray:
    """Prefix sums of a complex vector; prefix[0] = 0, prefix[k] = sum(values[:k])."""
    out = np.empty(values.shape[0] + 1, dtype=np.complex128)
    out[0] = 0.0
    np.cumsum(values, out=out[1:])
    return out


def _np_window_start_max(prefix: np.ndarray) -> np.ndarray:
    """W[i] = max_{j > i} |prefix[j] - prefix[i]| for 0 <= i < len(prefix)-1."""
    m = prefix.shape[0]
    if m <= 1:
        return np.zeros(0, dtype=np.float64)
    diff = np.abs(prefix[None, :] - prefix[:, None])
    iu = np.triu(np.ones((m, m), dtype=bool), k=1)
    diff[~iu] = -1.0
    return diff.max(axis=1)[:-1]


def _np_window_start_max_capped(prefix: np.ndarray, jmax: int) -> np.ndarray:
    """Same as window_start_max but windows must end at index <= jmax."""
    m = prefix.shape[0]
    jmax = min(jmax, m - 1)
    out = np.zeros(max(m - 1, 0), dtype=np.float64)
    if jmax < 1:
        return out
    sub = prefix[: jmax + 1]
    diff = np.abs(sub[None, :] - sub[:, None])
    iu = np.triu(np.ones((jmax + 1, jmax + 1), dtype=bool), k=1)
    diff[~iu] = -1.0
    out[:jmax] = diff.max(axis=1)[:-1]
    return out


def _np_pair_holder_seminorm(values: np.ndarray, dist: np.ndarray, tau: float) -> float:
    """max over pairs i != j of |values[i]-values[j]| / dist[i,j]**tau."""
    n = values.shape[0]
    if n <= 1:
        return 0.0
    num = np.abs(values[:, None] - values[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        quot = num / np.power(dist, tau, where=dist > 0, out=np.ones_like(dist))
    quot[dist <= 0] = 0.0
    np.fill_diagonal(quot, 0.0)
    return float(quot.max()) if quot.size else 0.0


# ---------------------------------------------------------------------------
# numba builds of the same loops
# ---------------------------------------------------------------------------


@njit(cache=True)
def _nb_kahan_cumsum(values):  # pragma: no cover - exercised via dispatch
    m = values.shape[0]
    out = np.empty(m + 1, dtype=np.complex128)
    out[0] = 0.0
    sr = 0.0
    si = 0.0
    cr = 0.0
    ci = 0.0
    for k in range(m):
        yr = values[k].real - cr
        tr = sr + yr
        cr = (tr - sr) - yr
        sr = tr
        yi = values[k].imag - ci
        ti = si + yi
        ci = (ti - si) - yi
        si = ti
        out[k + 1] = complex(sr, si)
    return out


@njit(cache=True)
def _nb_window_start_max(prefix):  # pragma: no cover - exercised via dispatch
    m = prefix.shape[0]
    out = np.zeros(max(m - 1, 0), dtype=np.float64)
    for i in range(m - 1):
        best = 0.0
        pr = prefix[i].real
        pi = prefix[i].imag
        for j in range(i + 1, m):
            dr = prefix[j].real - pr
            di = prefix[j].imag - pi
            v = math.sqrt(dr * dr + di * di)
            if v > best:
                best = v
        out[i] = best
    return out


@njit(cache=True)
def _nb_window_start_max_capped(prefix, jmax):  # pragma: no cover
    m = prefix.shape[0]
    out = np.zeros(max(m - 1, 0), dtype=np.float64)
    top = min(jmax, m - 1)
    for i in range(m - 1):
        if i + 1 > top:
            break
        best = 0.0
        pr = prefix[i].real
        pi = prefix[i].imag
        for j in range(i + 1, top + 1):
            dr = prefix[j].real - pr
            di = prefix[j].imag - pi
            v = math.sqrt(dr * dr + di * di)
            if v > best:
                best = v
        out[i] = best
    return out


@njit(cache=True)
def _nb_pair_holder_seminorm(values, dist, tau):  # pragma: no cover
    n = values.shape[0]
    best = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            d = dist[i, j]
            if d <= 0.0:
                continue
            dr = values[i].real - values[j].real
            di = values[i].imag - values[j].imag
            q = math.sqrt(dr * dr + di * di) / d**tau
            if q > best:
                best = q
    return best


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

_IMPL_NUMPY = {
    "kahan_cumsum": _np_kahan_cumsum,
    "window_start_max": _np_window_start_max,
    "window_start_max_capped": _np_window_start_max_capped,
    "pair_holder_seminorm": _np_pair_holder_seminorm,
}

_IMPL_NUMBA = {
    "kahan_cumsum": _nb_kahan_cumsum,
    "window_start_max": _nb_window_start_max,
    "window_start_max_capped": _nb_window_start_max_capped,
    "pair_holder_seminorm": _nb_pair_holder_seminorm,
}


def using_numba() -> bool:
    return _numba_ok


def implementations(numba_path: bool) -> dict:
    """Expose both kernel sets (benchmark helper)."""
    if numba_path and not _numba_ok:
        raise RuntimeError("numba path requested but numba is unavailable/disabled")
    return dict(_IMPL_NUMBA if numba_path else _IMPL_NUMPY)


_ACTIVE = _IMPL_NUMBA if _numba_ok else _IMPL_NUMPY

kahan_cumsum = _ACTIVE["kahan_cumsum"]
window_start_max = _ACTIVE["window_start_max"]
window_start_max_capped = _ACTIVE["window_start_max_capped"]
pair_holder_seminorm = _ACTIVE["pair_holder_seminorm"]
