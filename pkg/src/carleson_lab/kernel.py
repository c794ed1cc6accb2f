"""One-sided Calderon-Zygmund kernels, the scale bump, and kernel slices.

The scale decomposition K = sum_s K_s multiplies the kernel with the
piecewise-linear bump psi evaluated at D^{-s} * dist(x, y).  psi is exact
rational: corners at 1/(4D), 1/(2D), 1/4, 1/2, constant one on the middle
plateau, Lipschitz with constant 4D on the steep edge, and its dilates by
powers of D sum to one on (0, infinity).

Two kernel profiles are supported:

* ``paper``: D = 2^(100 a^2), kappa = 2^(-10a), Z = 2^(12a).  Exact big
  integers throughout; with a = 4 this collapses any desk-size space to a
  couple of active scales.
* ``toy``: small D (default 16) so that several scales are active; kappa
  defaults to the paper value and Z to 1 (both overridable).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .report import CheckItem, CheckReport, le_with_slack, log2_number, ratio_of
from .space import Space, to_fraction, volume_V


@dataclass(frozen=True)
class Profile:
    """Constant profile: scale base D, boundary exponent kappa, separation Z."""

    name: str
    a: int
    D: int
    kappa: Fraction
    Z: int
    s_cap: int = 6

    @classmethod
    def paper(cls, a: int, s_cap: int = 6) -> "Profile":
        return cls("paper", a, 2 ** (100 * a * a), Fraction(1, 2 ** (10 * a)), 2 ** (12 * a), s_cap)

    @classmethod
    def toy(
        cls,
        a: int,
        D: int = 16,
        Z: int = 1,
        kappa: Optional[Fraction] = None,
        s_cap: int = 6,
    ) -> "Profile":
        if not 4 <= D:
            raise ValueError("toy profile needs D >= 4")
        return cls("toy", a, D, kappa if kappa is not None else Fraction(1, 2 ** (10 * a)), Z, s_cap)

    @classmethod
    def from_config(cls, config: dict, a: int) -> "Profile":
        name = config.get("profile", "toy")
        if name == "paper":
            prof = cls.paper(a, s_cap=int(config.get("s_cap", 6)))
        elif name == "toy":
            prof = cls.toy(a, D=int(config.get("D", 16)), s_cap=int(config.get("s_cap", 6)))
        else:
            raise ValueError(f"unknown profile {name!r}")
        if name == "paper" and config.get("D") is not None:
            prof = replace(prof, D=int(config["D"]))
        if config.get("Z") is not None:
            prof = replace(prof, Z=int(config["Z"]))
        if config.get("kappa") is not None:
            prof = replace(prof, kappa=to_fraction(config["kappa"]))
        return prof

    def pow_D(self, s: int) -> Fraction:
        """Exact D^s for integer s of either sign."""
        if s >= 0:
            return Fraction(self.D**s)
        return Fraction(1, self.D ** (-s))


def derive_truncation_scale(space: Space, profile: Profile) -> int:
    """Smallest S >= 1 with X inside B(o, D^S / 4), capped at profile.s_cap.

    The grid carries scales -S..S; taking the whole space (instead of just
    the chosen F, G subsets) keeps every per-scale family a partition of X.
    """
    s = 1
    maxd = space.max_distance_from(space.o)
    while profile.pow_D(s) / 4 <= maxd and s < profile.s_cap:
        s += 1
    return s


class BumpPsi:
    """Piecewise-linear bump with corners at 1/(4D), 1/(2D), 1/4, 1/2."""

    def __init__(self, D: int):
        if D < 2:
            raise ValueError("bump needs D >= 2 for ordered corners")
        self.D = D
        self.c1 = Fraction(1, 4 * D)
        self.c2 = Fraction(1, 2 * D)
        self.c3 = Fraction(1, 4)
        self.c4 = Fraction(1, 2)

    def value(self, x: Fraction) -> Fraction:
        """Exact evaluation; 0 at and left of 1/(4D), 0 at and right of 1/2."""
        if x < 0:
            raise ValueError("psi is evaluated on nonnegative arguments")
        if x <= self.c1 or x >= self.c4:
            return Fraction(0)
        if x < self.c2:
            return 4 * self.D * x - 1
        if x <= self.c3:
            return Fraction(1)
        return 2 - 4 * x

    def active_scales(self, rho: Fraction, profile: Profile) -> range:
        """Integer s with psi(D^-s rho) nonzero: exactly rho in (D^(s-1)/4, D^s/2).

        The regions of consecutive scales overlap, so this is a contiguous
        range of one or two scales.
        """
        if rho <= 0:
            return range(0, 0)
        lo = 0  # smallest s with rho < D^s / 2
        if rho < profile.pow_D(0) / 2:
            while rho < profile.pow_D(lo - 1) / 2:
                lo -= 1
        else:
            while rho >= profile.pow_D(lo) / 2:
                lo += 1
        hi = lo  # largest s with rho > D^(s-1) / 4
        while rho > profile.pow_D(hi) / 4:
            hi += 1
        return range(lo, hi + 1)


class Kernel:
    """Pointwise kernel with complex values off the diagonal.

    ``frac`` returns the exact rational value when the kernel is
    real-rational (builtin kernels); None otherwise.
    """

    def __init__(
        self,
        label: str,
        eval_fn: Callable[[int, int], complex],
        frac_fn: Optional[Callable[[int, int], Fraction]] = None,
    ):
        self.label = label
        self._eval = eval_fn
        self._frac = frac_fn

    def eval(self, x: int, y: int) -> complex:
        return self._eval(x, y)

    def frac(self, x: int, y: int) -> Optional[Fraction]:
        return self._frac(x, y) if self._frac is not None else None

    def matrix(self, space: Space) -> np.ndarray:
        """Dense complex matrix with zero diagonal (cached)."""
        cached = getattr(self, "_matrix", None)
        if cached is not None:
            return cached
        n = space.n
        out = np.zeros((n, n), dtype=np.complex128)
        for x in range(n):
            for y in range(n):
                if x != y:
                    out[x, y] = self._eval(x, y)
        self._matrix = out
        return out


def signed_difference(space: Space, x: int, y: int) -> int:
    """x - y on the interval; wrapped representative in (-n/2, n/2] on the torus."""
    if space.kind == "integer_torus":
        n = space.n
        d = (x - y) % n
        if d > n // 2:
            d -= n
        return d
    return x - y


def hilbert_kernel(space: Space) -> Kernel:
    """Discrete Hilbert-type kernel 1/(x - y) on 1-D builtin spaces."""
    if space.kind not in ("integer_interval", "integer_torus"):
        raise ValueError("hilbert kernel needs a 1-D builtin space")

    def _frac(x: int, y: int) -> Fraction:
        return Fraction(1, signed_difference(space, x, y))

    return Kernel("hilbert", lambda x, y: complex(_frac(x, y)), _frac)


def size_model_kernel(space: Space) -> Kernel:
    """Positive size-extremal kernel 1/V(x, y)."""

    def _frac(x: int, y: int) -> Fraction:
        return 1 / volume_V(space, x, y)

    return Kernel("size_model", lambda x, y: complex(_frac(x, y)), _frac)


def explicit_kernel(values: list[list[complex]]) -> Kernel:
    arr = np.asarray(values, dtype=np.complex128)

    def _eval(x: int, y: int) -> complex:
        return complex(arr[x, y])

    return Kernel("explicit", _eval)


def build_kernel(config: dict, space: Space) -> Kernel:
    """KernelConfig JSON: {"type": "hilbert"|"size_model"|"explicit", "values": [[...]]}."""
    kind = config.get("type", "hilbert")
    if kind == "hilbert":
        return hilbert_kernel(space)
    if kind == "size_model":
        return size_model_kernel(space)
    if kind == "explicit":
        raw = config["values"]
        vals = [[complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v) for v in row] for row in raw]
        return explicit_kernel(vals)
    raise ValueError(f"unknown kernel type {kind!r}")


def kernel_slice(kernel: Kernel, bump: BumpPsi, profile: Profile, space: Space, s: int, x: int, y: int) -> complex:
    """Scale-s slice K(x,y) * psi(D^-s dist(x,y)); zero on the diagonal."""
    rho = space.distance(x, y)
    if rho == 0:
        return 0.0 + 0.0j
    w = bump.value(rho / profile.pow_D(s))
    if w == 0:
        return 0.0 + 0.0j
    return kernel.eval(x, y) * float(w)


def slice_weight_matrix(bump: BumpPsi, profile: Profile, space: Space, s: int) -> np.ndarray:
    """psi(D^-s dist(x,y)) for all pairs, as float64 (exact 0/1 on the plateau)."""
    scale = profile.pow_D(s)
    n = space.n
    out = np.zeros((n, n), dtype=np.float64)
    # psi depends only on the realized distance, so evaluate per distinct value.
    vals = space.distinct_distances()
    lut = {}
    for v in vals:
        if v > 0:
            lut[v] = float(bump.value(v / scale))
    for x in range(n):
        for y in range(n):
            if x != y:
                d = space.distance(x, y)
                w = lut.get(d, 0.0)
                if w:
                    out[x, y] = w
    return out


def realized_slice_scales(space: Space, profile: Profile, bump: BumpPsi) -> list[int]:
    """All integer scales s for which some pair has a nonzero slice."""
    dists = [d for d in space.distinct_distances() if d > 0]
    if not dists:
        return []
    lo_range = bump.active_scales(min(dists), profile)
    hi_range = bump.active_scales(max(dists), profile)
    lo = min(lo_range.start, hi_range.start)
    hi = max(lo_range.stop, hi_range.stop)
    out = []
    for s in range(lo, hi):
        for d in dists:
            if bump.value(d / profile.pow_D(s)) != 0:
                out.append(s)
                break
    return out


# ---------------------------------------------------------------------------
# bound checks
# ---------------------------------------------------------------------------


def _volume_int_matrix(space: Space) -> np.ndarray:
    """Scaled-integer V(x, y) = mu(B(x, dist(x, y))) for all pairs."""
    n = space.n
    out = np.zeros((n, n), dtype=np.int64)
    for x in range(n):
        k = np.searchsorted(space._sorted[x], space.dist_int[x], side="left")
        out[x] = space._wprefix[x][k]
    return out


def check_kernel_bounds(kernel: Kernel, space: Space, detail: bool = False) -> CheckReport:
    """Size bound |K| <= 2^(a^3)/V(x,y) and Holder regularity in y.

    The regularity sweep covers all triples (x, y, y') with
    2 dist(y,y') <= dist(x,y); comparisons run in float with relative
    slack, with an exact rational recheck near the boundary when the
    kernel is rational.
    """
    report = CheckReport()
    n = space.n
    a = space.a
    cz = 2 ** (a**3)
    K = kernel.matrix(space)
    V = _volume_int_matrix(space)
    wden = space.weight_den

    # size bound
    worst = 0.0
    worst_ctx = ""
    ok_all = True
    absK = np.abs(K)
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            lhs = absK[x, y]
            rhs = Fraction(cz * wden, int(V[x, y]))
            ok = le_with_slack(lhs, rhs)
            r = lhs * int(V[x, y]) / (cz * wden)
            if r > worst:
                worst, worst_ctx = r, f"x={x} y={y}"
            if not ok:
                ok_all = False
                if kernel.frac(x, y) is not None:
                    ok_exact = abs(kernel.frac(x, y)) <= rhs
                    if ok_exact:
                        ok_all = True
                        continue
                report.add(
                    CheckItem(
                        f"kernel.size[x={x},y={y}]",
                        "kernel-size-bound",
                        lhs=float(lhs),
                        rhs=rhs,
                        passed=False,
                    )
                )
    report.add(
        CheckItem(
            "kernel.size",
            "kernel-size-bound",
            lhs=worst,
            rhs=1.0,
            passed=ok_all,
            context=f"worst normalized ratio at {worst_ctx}" if worst_ctx else "vacuous",
        )
    )

    # y-regularity bound
    inv_a = 1.0 / a
    df = space.dist_int.astype(np.float64)
    worst = 0.0
    worst_ctx = ""
    ok_all = True
    for x in range(n):
        Kx = K[x]
        for y in range(n):
            if x == y:
                continue
            rho = df[x, y]
            sel = 2.0 * df[y] <= rho
            sel[x] = False
            if not sel.any():
                continue
            lhs = np.abs(Kx[y] - Kx[sel])
            rhs = (df[y][sel] / rho) ** inv_a * (cz * wden / float(V[x, y]))
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(rhs > 0, lhs / np.maximum(rhs, 1e-300), np.where(lhs > 0, np.inf, 0.0))
            m = float(ratios.max())
            if m > worst:
                worst, worst_ctx = m, f"x={x} y={y}"
            if m > 1.0 + 1e-9:
                ok_all = False
    report.add(
        CheckItem(
            "kernel.y-regularity",
            "kernel-smoothness-bound",
            lhs=worst,
            rhs=1.0,
            passed=ok_all,
            context=f"worst normalized ratio at {worst_ctx}" if worst_ctx else "vacuous",
        )
    )
    return report


def check_slice_bounds(
    kernel: Kernel, bump: BumpPsi, space: Space, profile: Profile, detail: bool = False
) -> CheckReport:
    """Slice size/regularity/support bounds plus the exact partition of unity."""
    report = CheckReport()
    n = space.n
    a = space.a
    size_const = 2 ** (102 * a**3)
    smooth_const = 2 ** (127 * a**3)
    scales = realized_slice_scales(space, profile, bump)
    K = kernel.matrix(space)
    df = space.dist_int.astype(np.float64) / space.dist_den

    if not scales:
        report.predicate(
            "kernel.slice-size", "slice-size-bound", True, context="no active scales: vacuous"
        )
    for s in scales:
        Ds = profile.pow_D(s)
        psi_m = slice_weight_matrix(bump, profile, space, s)
        Ks = K * psi_m
        lo, hi = Ds / 4 / profile.D, Ds / 2
        size_ok = True
        smooth_ok = True
        supp_ok = True
        worst_size = 0.0
        worst_smooth = 0.0
        fDs = float(Ds) if Ds < Fraction(10**300) else math.inf
        for x in range(n):
            muB = space.ball_measure(x, Ds)
            size_bound = Fraction(size_const) / muB
            smooth_bound = Fraction(smooth_const) / muB
            nz = np.nonzero(psi_m[x])[0]
            for y in nz.tolist():
                rho = space.distance(x, y)
                if not (lo <= rho <= hi):
                    supp_ok = False
                lhs = abs(Ks[x, y])
                if not le_with_slack(lhs, size_bound):
                    size_ok = False
                worst_size = max(worst_size, ratio_of(lhs, size_bound) or 0.0)
            fb = ratio_of(smooth_bound, 1)
            if nz.size and fDs < math.inf and fb < math.inf and np.isfinite(fb):
                # regularity sweep over all y' for the in-support y
                row = Ks[x]
                for y in nz.tolist():
                    lhs = np.abs(row[y] - row)
                    with np.errstate(divide="ignore"):
                        rhs = fb * (df[y] / fDs) ** (1.0 / a)
                    sel = np.arange(n) != y
                    bad = lhs[sel] > rhs[sel] * (1 + 1e-9) + 1e-300
                    if bad.any():
                        smooth_ok = False
                    with np.errstate(divide="ignore", invalid="ignore"):
                        rr = np.where(rhs[sel] > 0, lhs[sel] / np.maximum(rhs[sel], 1e-300), 0.0)
                    if rr.size:
                        worst_smooth = max(worst_smooth, float(rr.max()))
            elif nz.size and abs(K[x][nz]).max() > 0:
                # bound beyond float range: compare each pair in log2 space
                row = Ks[x]
                blog = log2_number(smooth_bound)
                dlog = log2_number(Ds)
                for y in nz.tolist():
                    for yp in range(n):
                        if yp == y:
                            continue
                        lhs = abs(row[y] - row[yp])
                        if lhs == 0.0:
                            continue
                        rho_p = space.distance(y, yp)
                        rhs_log = blog + (log2_number(rho_p) - dlog) / a
                        if math.log2(lhs) > rhs_log + 1e-9:
                            smooth_ok = False
        report.add(
            CheckItem(
                f"kernel.slice-size[s={s}]",
                "slice-size-bound",
                lhs=worst_size,
                rhs=1.0,
                passed=size_ok,
            )
        )
        report.add(
            CheckItem(
                f"kernel.slice-regularity[s={s}]",
                "slice-smoothness-bound",
                lhs=worst_smooth,
                rhs=1.0,
                passed=smooth_ok,
            )
        )
        report.predicate(f"kernel.slice-support[s={s}]", "slice-support-annulus", supp_ok)

    # exact partition of unity at every realized positive distance
    part_ok = True
    for d in space.distinct_distances():
        if d <= 0:
            continue
        total = Fraction(0)
        for s in bump.active_scales(d, profile):
            total += bump.value(d / profile.pow_D(s))
        if total != 1:
            part_ok = False
            report.predicate(
                f"kernel.psi-partition[d={d}]",
                "bump-partition-of-unity",
                False,
                context=f"sum={total}",
            )
    report.predicate("kernel.psi-partition", "bump-partition-of-unity", part_ok)
    return report
