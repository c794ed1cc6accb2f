"""Finite doubling metric measure spaces with exact rational arithmetic.

A space is a finite point set {0..n-1} with an exact rational metric, a
strictly positive rational weight per point (the measure is the sum of
point masses), a doubling exponent a >= 4 and a base point o.  Distances
and weights are stored as integers over a common denominator, so every
ball-membership and measure comparison is exact while staying vectorized.

Open balls throughout: B(x, R) = {y : dist(x, y) < R}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .report import CheckItem, CheckReport

RationalLike = Union[int, str, float, Fraction]

_INT64_CAP = 2**62


def to_fraction(value: RationalLike) -> Fraction:
    """Exact rational from config input; floats are read as decimal literals."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a rational")


@dataclass(frozen=True)
class Ball:
    """Open ball given by center point id and exact radius."""

    center: int
    radius: Fraction

    def scaled(self, factor: Union[int, Fraction]) -> "Ball":
        return Ball(self.center, self.radius * factor)


def ball_inside(space: "Space", inner: Ball, outer: Ball) -> bool:
    """Center-radius inclusion: dist(c1,c2) + R1 <= R2.

    This is the inclusion notion the ball-doubling axioms are swept over:
    every use of 'B1 subset B2' in the estimates is derived from exactly
    this triangle-inequality arithmetic, and unlike point-set inclusion it
    is stable on a discrete space.  It implies point-set inclusion.
    """
    return space.distance(inner.center, outer.center) + inner.radius <= outer.radius


class Space:
    """Finite doubling metric measure space (points, metric, weights, a, o)."""

    def __init__(
        self,
        dist: Sequence[Sequence[Fraction]],
        weights: Sequence[Fraction],
        a: int,
        o: int = 0,
        kind: str = "explicit",
        validate: bool = True,
        rng_seed: int = 0,
    ):
        self.n = len(weights)
        self.a = int(a)
        self.o = int(o)
        self.kind = kind
        if self.a < 4:
            raise ValueError("a below paper minimum: need integer a >= 4")
        if not (0 <= self.o < self.n):
            raise ValueError("base point out of range")
        if self.n == 0:
            raise ValueError("space needs at least one point")

        # Common-denominator integer encodings.
        dden = 1
        for row in dist:
            for v in row:
                dden = dden * v.denominator // math.gcd(dden, v.denominator)
        wden = 1
        for w in weights:
            wden = wden * w.denominator // math.gcd(wden, w.denominator)
        dmat = [[int(v * dden) for v in row] for row in dist]
        wvec = [int(w * wden) for w in weights]
        if any(w <= 0 for w in wvec):
            raise ValueError("weights must be strictly positive")

        self.dist_den = dden
        self.weight_den = wden
        peak = max((max(row) for row in dmat), default=0)
        if peak >= _INT64_CAP or sum(wvec) >= _INT64_CAP:
            raise ValueError("distance/weight magnitudes exceed the exact int64 budget")
        self.dist_int = np.array(dmat, dtype=np.int64)
        self.weight_int = np.array(wvec, dtype=np.int64)

        if validate:
            self._validate_metric(rng_seed)

        # Per-center sorted distance tables for exact vectorized ball queries.
        self._order = np.argsort(self.dist_int, axis=1, kind="stable")
        self._sorted = np.take_along_axis(self.dist_int, self._order, axis=1)
        w_by_order = self.weight_int[self._order]
        self._wprefix = np.zeros((self.n, self.n + 1), dtype=np.int64)
        np.cumsum(w_by_order, axis=1, out=self._wprefix[:, 1:])

    # -- construction helpers -------------------------------------------------

    def _validate_metric(self, rng_seed: int) -> None:
        d = self.dist_int
        if not np.array_equal(d, d.T):
            raise ValueError("explicit matrix is not a metric: not symmetric")
        if np.any(np.diag(d) != 0):
            raise ValueError("explicit matrix is not a metric: nonzero diagonal")
        off = d + np.eye(self.n, dtype=np.int64) * (1 + d.max(initial=0))
        if np.any(off <= 0):
            raise ValueError("explicit matrix is not a metric: zero/negative off-diagonal")
        if self.n <= 64:
            for k in range(self.n):
                if np.any(d > d[:, [k]] + d[[k], :]):
                    raise ValueError("explicit matrix is not a metric: triangle inequality fails")
        else:
            rng = np.random.default_rng(rng_seed)
            idx = rng.integers(0, self.n, size=(20000, 3))
            i, j, k = idx[:, 0], idx[:, 1], idx[:, 2]
            if np.any(d[i, j] > d[i, k] + d[k, j]):
                raise ValueError("explicit matrix is not a metric: triangle inequality fails")

    # -- exact primitives ------------------------------------------------------

    def distance(self, x: int, y: int) -> Fraction:
        return Fraction(int(self.dist_int[x, y]), self.dist_den)

    def weight(self, x: int) -> Fraction:
        return Fraction(int(self.weight_int[x]), self.weight_den)

    def total_measure(self) -> Fraction:
        return Fraction(int(self.weight_int.sum()), self.weight_den)

    def _scaled_threshold(self, radius: Fraction) -> int:
        """Smallest integer t with: dist_int < t  <=>  dist < radius."""
        scaled = radius * self.dist_den
        if scaled <= 0:
            return 0
        num, den = scaled.numerator, scaled.denominator
        t = num // den if num % den else num // den
        if num % den:
            t += 1
        cap = int(self._sorted[:, -1].max()) + 1 if self.n else 1
        return min(t, cap)

    def ball_mask(self, ball: Ball) -> np.ndarray:
        t = self._scaled_threshold(ball.radius)
        return self.dist_int[ball.center] < t

    def ball_members(self, ball: Ball) -> np.ndarray:
        """Point ids at distance strictly less than the radius, ascending."""
        if not (0 <= ball.center < self.n):
            raise ValueError("ball center out of range")
        return np.nonzero(self.ball_mask(ball))[0]

    def ball_members_oracle(self, ball: Ball) -> list[int]:
        """Independent pure-Fraction membership scan (test oracle)."""
        return [y for y in range(self.n) if self.distance(ball.center, y) < ball.radius]

    def measure_mask(self, mask: np.ndarray) -> Fraction:
        return Fraction(int(self.weight_int[mask].sum()), self.weight_den)

    def measure(self, points: Union[np.ndarray, Iterable[int]]) -> Fraction:
        pts = np.asarray(list(points) if not isinstance(points, np.ndarray) else points)
        if pts.size == 0:
            return Fraction(0)
        if pts.dtype == bool:
            return self.measure_mask(pts)
        return Fraction(int(self.weight_int[pts.astype(np.int64)].sum()), self.weight_den)

    def ball_measure_int(self, center: int, radius: Fraction) -> int:
        """Scaled-integer measure of the open ball (exact, O(log n))."""
        t = self._scaled_threshold(radius)
        k = int(np.searchsorted(self._sorted[center], t, side="left"))
        return int(self._wprefix[center, k])

    def ball_measure(self, center: int, radius: Fraction) -> Fraction:
        return Fraction(self.ball_measure_int(center, radius), self.weight_den)

    def closed_ball_measure_int(self, center: int, radius_scaled: int) -> int:
        """Scaled measure of {dist_int <= radius_scaled}."""
        k = int(np.searchsorted(self._sorted[center], radius_scaled, side="right"))
        return int(self._wprefix[center, k])

    def distinct_distances(self) -> list[Fraction]:
        vals = np.unique(self.dist_int)
        return [Fraction(int(v), self.dist_den) for v in vals]

    def distances_from(self, x: int) -> np.ndarray:
        """Sorted distinct scaled distances from x."""
        return np.unique(self.dist_int[x])

    def max_distance_from(self, x: int) -> Fraction:
        return Fraction(int(self.dist_int[x].max()), self.dist_den)

    def diameter_of(self, points: Union[np.ndarray, Sequence[int]]) -> Fraction:
        pts = np.asarray(points, dtype=np.int64)
        if pts.size <= 1:
            return Fraction(0)
        sub = self.dist_int[np.ix_(pts, pts)]
        return Fraction(int(sub.max()), self.dist_den)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def _interval_space(n: int, a: int, o: int, weights: Optional[Sequence[Fraction]]) -> Space:
    d = [[Fraction(abs(i - j)) for j in range(n)] for i in range(n)]
    w = list(weights) if weights is not None else [Fraction(1)] * n
    return Space(d, w, a, o, kind="integer_interval", validate=False)


def _torus_space(n: int, a: int, o: int, weights: Optional[Sequence[Fraction]]) -> Space:
    d = [[Fraction(min(abs(i - j), n - abs(i - j))) for j in range(n)] for i in range(n)]
    w = list(weights) if weights is not None else [Fraction(1)] * n
    return Space(d, w, a, o, kind="integer_torus", validate=False)


def build_space(config: dict) -> Space:
    """Build a Space from a SpaceConfig JSON object.

    {"type": "integer_interval"|"integer_torus"|"explicit",
     "n": int, "a": int, "o": int (default 0),
     "dist": [[...]], "weights": [...]}        # explicit only / optional
    """
    kind = config.get("type", "integer_interval")
    a = int(config.get("a", 4))
    if a < 4:
        raise ValueError("a below paper minimum: need integer a >= 4")
    o = int(config.get("o", 0))
    weights = None
    if config.get("weights") is not None:
        weights = [to_fraction(w) for w in config["weights"]]

    if kind == "integer_interval":
        n = int(config["n"])
        return _interval_space(n, a, o, weights)
    if kind == "integer_torus":
        n = int(config["n"])
        return _torus_space(n, a, o, weights)
    if kind == "explicit":
        dist = [[to_fraction(v) for v in row] for row in config["dist"]]
        n = len(dist)
        if weights is None:
            weights = [Fraction(1)] * n
        return Space(dist, weights, a, o, kind="explicit", validate=True)
    raise ValueError(f"unknown space type {kind!r}")


# ---------------------------------------------------------------------------
# measure / volume operations
# ---------------------------------------------------------------------------


def volume_V(space: Space, x: int, y: int) -> Fraction:
    """Measure of the open ball at x with radius dist(x, y); x != y required."""
    if x == y:
        raise ValueError("V undefined at diagonal")
    return space.ball_measure(x, space.distance(x, y))


# ---------------------------------------------------------------------------
# doubling verification
# ---------------------------------------------------------------------------


def _doubling_critical_radii(space: Space) -> list[tuple[int, int]]:
    """Scaled critical radii as (2*numerator over 2*dist_den) integer pairs.

    Ball pairs (B(x,R), B(x,2R)) change membership only when R or 2R
    crosses a realized distance, so R sweeps distances and half-distances.
    Returned values are numerators over the doubled denominator, which
    keeps half-distances integral.
    """
    vals = np.unique(space.dist_int)
    vals = vals[vals > 0]
    crit = set()
    for v in vals.tolist():
        crit.add(2 * v)  # R = distance
        crit.add(v)  # R = distance / 2
    return sorted(crit)


def check_doubling(space: Space, detail: bool = False) -> CheckReport:
    """Verify mu(B(x,2R)) <= 2^a mu(B(x,R)) over the exhaustive radius sweep.

    For every center and every critical radius the inequality is evaluated
    both with open balls (R exactly at the critical value) and in the
    one-sided limit just above it (closed balls), which covers all real R.
    All comparisons are exact integer arithmetic on scaled weights.
    """
    report = CheckReport()
    factor = 2**space.a
    if space.n == 1:
        report.predicate(
            "space.doubling",
            "doubling-measure-axiom",
            True,
            context="single point: vacuous",
        )
        return report

    crit = _doubling_critical_radii(space)
    # Work over the doubled denominator so half-distances are integers.
    sorted2 = space._sorted * 2
    worst_num, worst_den, worst_ctx = 0, 1, ""
    ok_all = True
    cells = 0
    for x in range(space.n):
        row = sorted2[x]
        wpre = space._wprefix[x]
        for r2 in crit:
            for side in ("open", "closed"):
                mode = "left" if side == "open" else "right"
                k1 = int(np.searchsorted(row, r2, side=mode))
                k2 = int(np.searchsorted(row, 2 * r2, side=mode))
                mu_r = int(wpre[k1])
                mu_2r = int(wpre[k2])
                if mu_r == 0:
                    continue
                cells += 1
                ok = mu_2r <= factor * mu_r
                if mu_2r * worst_den > worst_num * factor * mu_r:
                    worst_num, worst_den = mu_2r, factor * mu_r
                    worst_ctx = f"x={x} R={Fraction(r2, 2 * space.dist_den)} ({side})"
                if not ok:
                    ok_all = False
                    if detail or len(report.failures()) < 32:
                        report.add(
                            CheckItem(
                                f"space.doubling[x={x},R2={r2},{side}]",
                                "doubling-measure-axiom",
                                lhs=Fraction(mu_2r, space.weight_den),
                                rhs=Fraction(factor * mu_r, space.weight_den),
                                passed=False,
                                context=worst_ctx,
                            )
                        )
                elif detail:
                    report.add(
                        CheckItem(
                            f"space.doubling[x={x},R2={r2},{side}]",
                            "doubling-measure-axiom",
                            lhs=Fraction(mu_2r, space.weight_den),
                            rhs=Fraction(factor * mu_r, space.weight_den),
                            passed=True,
                        )
                    )
    report.add(
        CheckItem(
            "space.doubling",
            "doubling-measure-axiom",
            lhs=Fraction(worst_num, space.weight_den),
            rhs=Fraction(worst_den, space.weight_den),
            passed=ok_all,
            context=f"worst cell {worst_ctx}; {cells} cells swept" if worst_ctx else "vacuous",
        )
    )
    return report
