"""Scenario runner and command-line interface.

Subcommands:
  verify     full pipeline (space -> phases -> kernel -> grid -> tiles ->
             decomposition -> operators) and a machine-readable report
  decompose  stop after the tile partition; optional phase-plane SVG
  evaluate   operator checks only, against a saved decomposition
  oracle     brute-force oracle values and fixture files (including the
             dedicated two-tree forest scenario)

Reports are deterministic for a fixed scenario and seed (timing aside):
items appear in pipeline order, every number is serialized exactly or as
a repr-stable float, and all randomness flows from the scenario seed.
"""
from __future__ import annotations

import argparse
import fnmatch
import json
import sys
import time
from fractions import Fraction
from typing import Optional

import numpy as np

from . import __version__
from .decompose import (
    Antichain,
    Decomposition,
    Forest,
    check_forest,
    decompose,
    synthetic_two_tree_forest,
)
from .grid import build_grid, check_grid, check_monotone_cube_metrics
from .kernel import (
    BumpPsi,
    Profile,
    build_kernel,
    check_kernel_bounds,
    check_slice_bounds,
)
from .lemmas import lemma_suite_antichain, lemma_suite_tree
from .operators import (
    OperatorContext,
    bounded_random,
    check_antichain_operator,
    check_forest_operator,
    check_tile_adjointness,
    check_tile_supports,
    check_weak_type,
    default_scale_selectors,
    default_selection,
    indicator,
    modulated_slice_table,
)
from .phases import (
    build_phase_family,
    check_cancellative,
    check_compatibility,
    check_holder_van_der_corput,
)
from .report import CheckReport
from .space import build_space, check_doubling, to_fraction
from .svg import render_svg
from .tiles import (
    build_tiles,
    check_tiles,
    check_wiggle_lemmas,
    mass_density,
    mass_density_oracle,
    overlap_density,
    overlap_density_oracle,
)


class ScenarioError(ValueError):
    """Configuration validation failure, with a JSON-pointer-style path."""


# ---------------------------------------------------------------------------
# bundled scenarios
# ---------------------------------------------------------------------------


def builtin_scenarios() -> dict:
    base_checks = ["*"]
    return {
        "x16-linear-toy": {
            "name": "x16-linear-toy",
            "space": {"type": "integer_interval", "n": 16, "a": 4},
            "phases": {"type": "linear", "frequencies": [-2, -1, 0, 1, 2], "metric": "canonical"},
            "kernel": {"type": "hilbert"},
            "profile": {"profile": "toy", "D": 4},
            "seed": 7,
            "F": {"range": [0, 8]},
            "G": {"range": [8, 16]},
            "f": {"type": "indicator"},
            "g": {"type": "indicator"},
            "q": "3/2",
            "checks": base_checks,
        },
        "x16-linear-paper": {
            "name": "x16-linear-paper",
            "space": {"type": "integer_interval", "n": 16, "a": 4},
            "phases": {"type": "linear", "frequencies": [-2, -1, 0, 1, 2], "metric": "canonical"},
            "kernel": {"type": "hilbert"},
            "profile": {"profile": "paper"},
            "seed": 7,
            "F": {"range": [0, 8]},
            "G": {"range": [4, 16]},
            "f": {"type": "indicator"},
            "g": {"type": "indicator"},
            "q": "3/2",
            "checks": base_checks,
        },
        "x64-linear-toy-d16": {
            "name": "x64-linear-toy-d16",
            "space": {"type": "integer_interval", "n": 64, "a": 4},
            "phases": {"type": "linear", "frequencies": [-2, -1, 0, 1, 2], "metric": "canonical"},
            "kernel": {"type": "hilbert"},
            "profile": {"profile": "toy", "D": 16},
            "seed": 11,
            "F": {"range": [0, 32]},
            "G": {"range": [16, 64]},
            "f": {"type": "indicator"},
            "g": {"type": "indicator"},
            "q": "3/2",
            "checks": ["space.*", "kernel.*", "grid.*", "tiles.*", "decompose.*", "operators.*"],
        },
        "two-tree": {
            "name": "two-tree",
            "space": {"type": "integer_interval", "n": 64, "a": 4},
            "phases": {
                "type": "linear",
                "frequencies": [-9, -6, -3, 0, 3, 6, 9],
                "metric": "linear_radius",
            },
            "kernel": {"type": "hilbert"},
            "profile": {"profile": "paper", "Z": 1},
            "seed": 3,
            "F": {"range": [0, 32]},
            "G": {"range": [16, 48]},
            "f": {"type": "indicator"},
            "g": {"type": "indicator"},
            "q": "3/2",
            "Q": {"type": "split", "low": 0, "high": 6, "at": 32},
            "two_tree_forest": {"freq1": 0, "freq2": 6, "n": 1},
            "checks": ["space.*", "grid.*", "tiles.*", "operators.*", "tree.*", "antichain.*", "forest.*"],
        },
    }


def load_scenario(name_or_path: str) -> dict:
    builtins = builtin_scenarios()
    if name_or_path in builtins:
        return builtins[name_or_path]
    with open(name_or_path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# scenario validation and assembly
# ---------------------------------------------------------------------------


def _point_set(cfg, n: int, pointer: str, default_all: bool = True) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    if cfg is None:
        if default_all:
            mask[:] = True
        return mask
    if cfg == "all":
        mask[:] = True
        return mask
    if isinstance(cfg, dict) and "range" in cfg:
        a, b = cfg["range"]
        if not (0 <= a <= b <= n):
            raise ScenarioError(f"{pointer}/range: out of bounds for n={n}")
        mask[a:b] = True
        return mask
    if isinstance(cfg, list):
        for p in cfg:
            if not (0 <= int(p) < n):
                raise ScenarioError(f"{pointer}: point {p} outside the space")
            mask[int(p)] = True
        return mask
    raise ScenarioError(f"{pointer}: unrecognized point-set form")


def _test_function(cfg, mask: np.ndarray, space, seed: int, pointer: str) -> np.ndarray:
    kind = (cfg or {"type": "indicator"}).get("type", "indicator")
    if kind == "indicator":
        return indicator(space, mask)
    if kind == "random":
        rng = np.random.default_rng(int(cfg.get("seed", seed)))
        return bounded_random(space, mask, rng)
    if kind == "values":
        vals = np.asarray([complex(v[0], v[1]) if isinstance(v, list) else complex(v) for v in cfg["values"]])
        if vals.shape[0] != space.n:
            raise ScenarioError(f"{pointer}/values: wrong length")
        return vals
    raise ScenarioError(f"{pointer}/type: unknown generator {kind!r}")


class Pipeline:
    """All built objects of one scenario run."""

    def __init__(self, scenario: dict):
        self.scenario = scenario
        seed = int(scenario.get("seed", 0))
        self.seed = seed
        try:
            q = to_fraction(scenario.get("q", "3/2"))
        except (ValueError, TypeError) as e:
            raise ScenarioError(f"/q: {e}")
        if not (1 < q <= 2):
            raise ScenarioError("/q: must satisfy 1 < q <= 2")
        self.q = q
        self.space = build_space(scenario.get("space", {"type": "integer_interval", "n": 16, "a": 4}))
        self.profile = Profile.from_config(scenario.get("profile", {"profile": "toy"}), self.space.a)
        self.family = build_phase_family(scenario.get("phases", {"type": "linear"}), self.space)
        self.kernel = build_kernel(scenario.get("kernel", {"type": "hilbert"}), self.space)
        self.bump = BumpPsi(self.profile.D)
        self.grid = build_grid(self.space, self.profile)
        self.f_mask = _point_set(scenario.get("F"), self.space.n, "/F")
        self.g_mask = _point_set(scenario.get("G"), self.space.n, "/G")
        self.f = _test_function(scenario.get("f"), self.f_mask, self.space, seed, "/f")
        self.g = _test_function(scenario.get("g"), self.g_mask, self.space, seed + 1, "/g")

        qcfg = scenario.get("Q", "argmax")
        if qcfg == "argmax":
            self.Q = default_selection(self.space, self.kernel, self.family, self.f)
        elif isinstance(qcfg, dict) and qcfg.get("type") == "split":
            self.Q = np.where(
                np.arange(self.space.n) < int(qcfg["at"]), int(qcfg["low"]), int(qcfg["high"])
            ).astype(np.int64)
        elif isinstance(qcfg, list):
            self.Q = np.asarray(qcfg, dtype=np.int64)
        else:
            raise ScenarioError("/Q: unrecognized selection form")
        self.ts = build_tiles(self.grid, self.family, self.Q)

        scfg = scenario.get("sigma", "argmax")
        if scfg == "argmax":
            table = modulated_slice_table(
                self.space, self.kernel, self.bump, self.profile, self.grid.S, self.family, self.Q, self.f
            )
            s1, s2 = default_scale_selectors(table)
        else:
            s1 = np.asarray(scfg["s1"], dtype=np.int64)
            s2 = np.asarray(scfg["s2"], dtype=np.int64)
        self.ctx = OperatorContext(
            space=self.space,
            kernel=self.kernel,
            bump=self.bump,
            profile=self.profile,
            ts=self.ts,
            f_mask=self.f_mask,
            g_mask=self.g_mask,
            f=self.f,
            g=self.g,
            sigma1=s1,
            sigma2=s2,
            q=q,
        )


def _selected(patterns: list[str], prefix: str) -> bool:
    return any(fnmatch.fnmatch(prefix, pat) or pat.startswith(prefix.split(".")[0]) or pat == "*" for pat in patterns)


def _filter_report(report: CheckReport, patterns: list[str]) -> CheckReport:
    out = CheckReport()
    for it in report:
        if any(fnmatch.fnmatch(it.id, pat) for pat in patterns):
            out.add(it)
    return out


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def run(scenario: dict, checks_override: Optional[list[str]] = None, stop_after: str = "operators"):
    """Execute the pipeline; returns (report_dict, decomposition, pipeline)."""
    t0 = time.time()
    patterns = checks_override or scenario.get("checks", ["*"])
    if isinstance(patterns, str):
        patterns = [patterns]
    pipe = Pipeline(scenario)
    report = CheckReport()

    if _selected(patterns, "space."):
        report.extend(check_doubling(pipe.space))
    if _selected(patterns, "phases."):
        report.extend(check_compatibility(pipe.family, radius_cap=24))
        report.extend(check_cancellative(pipe.family, sample_count=3, seed=pipe.seed, radius_cap=10))
        report.extend(
            check_holder_van_der_corput(pipe.family, sample_count=2, seed=pipe.seed + 1, radius_cap=6)
        )
    if _selected(patterns, "kernel."):
        report.extend(check_kernel_bounds(pipe.kernel, pipe.space))
        report.extend(check_slice_bounds(pipe.kernel, pipe.bump, pipe.space, pipe.profile))
    if _selected(patterns, "grid."):
        report.extend(check_grid(pipe.grid))
        report.extend(check_monotone_cube_metrics(pipe.grid, pipe.family))
    if _selected(patterns, "tiles."):
        report.extend(check_tiles(pipe.ts))
        report.extend(check_wiggle_lemmas(pipe.ts, paper_profile=pipe.profile.name == "paper"))

    dec = None
    if stop_after in ("decompose", "operators") and _selected(patterns, "decompose."):
        dec, dec_report = decompose(pipe.ts, pipe.f_mask, pipe.g_mask)
        report.extend(dec_report)

    if stop_after == "operators":
        if _selected(patterns, "operators."):
            report.extend(check_tile_adjointness(pipe.ctx, pairs=20, seed=pipe.seed))
            report.extend(check_tile_supports(pipe.ctx, seed=pipe.seed))
            if dec is not None:
                report.extend(check_weak_type(pipe.ctx, dec))
                for forest in dec.forests:
                    report.extend(check_forest_operator(pipe.ctx, forest, seed=pipe.seed))
                for ac in dec.antichains:
                    report.extend(check_antichain_operator(pipe.ctx, ac))
        ttf = scenario.get("two_tree_forest")
        if ttf is not None:
            forest = synthetic_two_tree_forest(
                pipe.ts, int(ttf["freq1"]), int(ttf["freq2"]), n=int(ttf.get("n", 1))
            )
            fr = check_forest(pipe.ts, forest, pipe.g_mask)
            for it in fr:
                it.id = f"{it.id}[synthetic]"
            report.extend(fr)
            report.extend(check_forest_operator(pipe.ctx, forest, seed=pipe.seed))
            if _selected(patterns, "tree."):
                report.extend(lemma_suite_tree(pipe.ctx, forest, seed=pipe.seed))
            if _selected(patterns, "antichain."):
                ac = Antichain(forest.trees[forest.tops[0]], n=forest.n, j=0, provenance="synthetic")
                report.extend(lemma_suite_antichain(pipe.ctx, ac, seed=pipe.seed))

    filtered = _filter_report(report, patterns)
    out = {
        "version": 1,
        "tool": f"carleson-lab {__version__}",
        "scenario": scenario,
        "items": filtered.to_json(),
        "summary": filtered.summary(),
        "timing": {"seconds": round(time.time() - t0, 3)},
    }
    return out, dec, pipe


def report_exit_code(report_dict: dict) -> int:
    return 0 if report_dict["summary"]["failed"] == 0 else 1


# ---------------------------------------------------------------------------
# oracle fixtures
# ---------------------------------------------------------------------------


def oracle_fixture(scenario: dict, two_tree: bool = False) -> dict:
    """Brute-force oracle values for the scenario (expected-value fixture)."""
    pipe = Pipeline(scenario)
    sp, ts = pipe.space, pipe.ts
    rng = np.random.default_rng(pipe.seed)
    tile_ids = sorted(
        rng.choice(len(ts.tiles), size=min(6, len(ts.tiles)), replace=False).tolist()
    )
    from .space import Ball

    balls = [(int(c), str(Fraction(r))) for c in (0, sp.n // 2) for r in (Fraction(2), Fraction(sp.n, 3))]
    fixture = {
        "scenario": scenario,
        "ball_members": {
            f"({c},{r})": sp.ball_members_oracle(Ball(c, Fraction(r))) for c, r in balls
        },
        "overlap_density": {
            str(tid): str(overlap_density_oracle(ts, [tid], pipe.g_mask)) for tid in tile_ids
        },
        "mass_density": {
            str(tid): str(mass_density_oracle(ts, [tid], pipe.f_mask)) for tid in tile_ids
        },
        "e_sets": {
            str(tid): {
                "g_support": ts.tile_g_support_oracle(tid, set(np.nonzero(pipe.g_mask)[0].tolist())),
                "g_near_2": ts.tile_g_near_oracle(
                    tid, Fraction(2), set(np.nonzero(pipe.g_mask)[0].tolist())
                ),
            }
            for tid in tile_ids
        },
    }
    if two_tree:
        ttf = scenario.get("two_tree_forest") or builtin_scenarios()["two-tree"]["two_tree_forest"]
        forest = synthetic_two_tree_forest(pipe.ts, int(ttf["freq1"]), int(ttf["freq2"]), n=int(ttf.get("n", 1)))
        fixture["two_tree_forest"] = {
            "n": forest.n,
            "tops": forest.tops,
            "trees": {str(u): forest.trees[u] for u in forest.tops},
        }
    return fixture


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default="x16-linear-toy", help="scenario path or builtin name")
    p.add_argument("--profile", choices=["toy", "paper"], help="profile override")
    p.add_argument("--d", type=int, help="scale base override")
    p.add_argument("--seed", type=int, help="seed override")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--checks", help="check-id glob filter")


def _apply_overrides(scenario: dict, args) -> dict:
    scenario = json.loads(json.dumps(scenario))  # deep copy, JSON-clean
    if args.profile:
        scenario.setdefault("profile", {})["profile"] = args.profile
    if args.d is not None:
        scenario.setdefault("profile", {})["D"] = args.d
    if args.seed is not None:
        scenario["seed"] = args.seed
    return scenario


def _emit(payload: dict, out: Optional[str]) -> None:
    text = json.dumps(payload, indent=1)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="carleson-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, hlp in (
        ("verify", "full pipeline and verification report"),
        ("decompose", "run up to the tile partition"),
        ("evaluate", "operator checks against a saved decomposition"),
        ("oracle", "write brute-force oracle fixtures"),
    ):
        p = sub.add_parser(name, help=hlp)
        _common_args(p)
        if name == "decompose":
            p.add_argument("--svg", help="write the phase-plane diagram here")
        if name == "evaluate":
            p.add_argument("--decomposition", required=True, help="decomposition JSON path")
        if name == "oracle":
            p.add_argument("--two-tree", action="store_true", help="include the two-tree forest fixture")

    args = parser.parse_args(argv)
    try:
        scenario = _apply_overrides(load_scenario(args.config), args)
        checks = [args.checks] if args.checks else None

        if args.command == "verify":
            payload, dec, pipe = run(scenario, checks_override=checks)
            _emit(payload, args.out)
            return report_exit_code(payload)

        if args.command == "decompose":
            payload, dec, pipe = run(scenario, checks_override=checks, stop_after="decompose")
            body = {
                "version": 1,
                "scenario": scenario,
                "decomposition": dec.to_json() if dec is not None else None,
                "items": payload["items"],
                "summary": payload["summary"],
            }
            _emit(body, args.out)
            if args.svg and dec is not None:
                render_svg(dec, pipe.ts, args.svg)
            return report_exit_code(payload)

        if args.command == "evaluate":
            with open(args.decomposition) as fh:
                saved = json.load(fh)["decomposition"]
            pipe = Pipeline(scenario)
            gmask = np.zeros(pipe.space.n, dtype=bool)
            gmask[saved["gprime"]] = True
            forests = [
                Forest(
                    n=f["n"],
                    tops=[t["u"] for t in f["tops"]],
                    trees={t["u"]: t["tree"] for t in f["tops"]},
                )
                for f in saved["forests"]
            ]
            antichains = [
                Antichain(ac["tiles"], ac["n"], ac["j"], ac.get("source", "")) for ac in saved["antichains"]
            ]
            dec = Decomposition(gprime=gmask, forests=forests, antichains=antichains)
            report = CheckReport()
            report.extend(check_weak_type(pipe.ctx, dec))
            for forest in forests:
                report.extend(check_forest_operator(pipe.ctx, forest, seed=pipe.seed))
            for ac in antichains:
                report.extend(check_antichain_operator(pipe.ctx, ac))
            payload = {
                "version": 1,
                "scenario": scenario,
                "items": report.to_json(),
                "summary": report.summary(),
            }
            _emit(payload, args.out)
            return 0 if report.summary()["failed"] == 0 else 1

        if args.command == "oracle":
            fixture = oracle_fixture(scenario, two_tree=args.two_tree)
            _emit(fixture, args.out)
            return 0
    except (ScenarioError, ValueError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
