"""Batch front-end: scenario files in, CSV sweeps and invariant reports out.

Exit codes: 0 success, 2 malformed scenario file, 3 invariant violation,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import yaml

from . import __version__
from .analysis import compute_r2, output_rates, random_admissible_matrix
from .engine import DEFAULT_C_CB, DEFAULT_C_VOMQ, Scenario, run, run_oq_baseline
from .flow_control import ThresholdConfig
from .metrics import format_row, write_csv
from .queueing import SimulationFault
from .replays import (run_hold_down_walkthrough, run_three_flow_staggered,
                      three_flow_matches_tables)
from .schedule import cim_route, com_route, compound_p1, compound_p2, im_route
from .topology import GeometryError, SwitchGeometry
from .traffic import PATTERNS, TrafficSpec, TrafficSpecError

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_INVARIANT = 3
EXIT_IO = 4


class ScenarioFileError(ValueError):
    """Scenario file failed schema validation."""


@dataclass(frozen=True)
class ScenarioFile:
    """Validated contents of one scenario document."""

    scenario_id: str
    geometry: SwitchGeometry
    pattern: str
    loads: tuple[float, ...]
    base: Scenario            # template; load is substituted per sweep point
    output: str | None


_TOP_KEYS = {
    "scenario_id", "geometry", "pattern", "load", "loads", "burst_mean",
    "unbalance", "hotspot_port", "stress_dest", "thresholds", "capacities",
    "warmup", "measure", "seed", "output", "record_traces",
    "freeze_hold_timers_during_pause",
}
_GEO_KEYS = {"n", "k", "m"}
_THRESHOLD_KEYS = {"t_pv", "t_rv", "t_pc", "t_rc", "d_v", "d_c"}
_CAPACITY_KEYS = {"c_vomq", "c_cb"}


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ScenarioFileError(msg)


def _check_keys(mapping: dict, allowed: set[str], where: str) -> None:
    _require(isinstance(mapping, dict), f"{where} must be a mapping")
    unknown = set(mapping) - allowed
    _require(not unknown, f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _as_int(value, where: str) -> int:
    _require(isinstance(value, int) and not isinstance(value, bool),
             f"{where} must be an integer, got {value!r}")
    return value


def _as_number(value, where: str) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool),
             f"{where} must be a number, got {value!r}")
    return float(value)


def load_scenario_file(path: str, seed_override: int | None = None) -> ScenarioFile:
    """Parse and validate a scenario document; unknown keys are rejected."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError:
        raise
    except yaml.YAMLError as exc:
        raise ScenarioFileError(f"not valid YAML: {exc}") from exc
    _check_keys(doc if doc is not None else {}, _TOP_KEYS, "scenario")
    doc = doc or {}

    geo_doc = doc.get("geometry")
    _require(geo_doc is not None, "scenario must declare a geometry")
    _check_keys(geo_doc, _GEO_KEYS, "geometry")
    _require("k" in geo_doc, "geometry must declare k")
    k = _as_int(geo_doc["k"], "geometry.k")
    n = _as_int(geo_doc.get("n", k), "geometry.n")
    m = _as_int(geo_doc.get("m", k), "geometry.m")
    try:
        geometry = SwitchGeometry(n=n, k=k, m=m)
    except GeometryError as exc:
        raise ScenarioFileError(str(exc)) from exc

    pattern = doc.get("pattern")
    _require(pattern in PATTERNS or pattern == "replay_suite",
             f"pattern must be one of {PATTERNS + ('replay_suite',)}, got {pattern!r}")
    _require(pattern != "replay_suite" or k == 3,
             "the replay suite's frozen timelines are defined for k=3")

    _require(not ("load" in doc and "loads" in doc),
             "declare either load or loads, not both")
    if "loads" in doc:
        raw_loads = doc["loads"]
        _require(isinstance(raw_loads, list) and raw_loads, "loads must be a non-empty list")
        loads = tuple(_as_number(x, "loads[]") for x in raw_loads)
    elif "load" in doc:
        loads = (_as_number(doc["load"], "load"),)
    else:
        _require(pattern == "replay_suite", "scenario must declare load or loads")
        loads = (1.0,)

    thresholds = None
    if "thresholds" in doc:
        _check_keys(doc["thresholds"], _THRESHOLD_KEYS, "thresholds")
        missing = {"t_pv", "t_rv", "t_pc", "t_rc"} - set(doc["thresholds"])
        _require(not missing, f"thresholds missing key(s): {', '.join(sorted(missing))}")
        thresholds = ThresholdConfig(
            **{key: _as_int(val, f"thresholds.{key}") for key, val in doc["thresholds"].items()})

    c_vomq, c_cb = DEFAULT_C_VOMQ, DEFAULT_C_CB
    if "capacities" in doc:
        _check_keys(doc["capacities"], _CAPACITY_KEYS, "capacities")
        c_vomq = _as_int(doc["capacities"].get("c_vomq", c_vomq), "capacities.c_vomq")
        c_cb = _as_int(doc["capacities"].get("c_cb", c_cb), "capacities.c_cb")

    seed = _as_int(doc.get("seed", 0), "seed")
    if seed_override is not None:
        seed = seed_override

    traffic = TrafficSpec(
        pattern=pattern if pattern != "replay_suite" else "bernoulli_uniform",
        load=loads[0],
        burst_mean=_as_number(doc.get("burst_mean", 10.0), "burst_mean"),
        unbalance=_as_number(doc.get("unbalance", 0.0), "unbalance"),
        hotspot_port=_as_int(doc.get("hotspot_port", 0), "hotspot_port"),
        stress_dest=doc.get("stress_dest", "uniform"),
    )
    base = Scenario(
        geometry=geometry,
        traffic=traffic,
        thresholds=thresholds,
        c_vomq=c_vomq,
        c_cb=c_cb,
        warmup=_as_int(doc["warmup"], "warmup") if "warmup" in doc else None,
        measure=_as_int(doc.get("measure", 100_000), "measure"),
        seed=seed,
        record_traces=bool(doc.get("record_traces", False)),
        freeze_hold_timers_during_pause=bool(doc.get("freeze_hold_timers_during_pause", False)),
    )
    if pattern != "replay_suite":
        try:
            for load in loads:
                replace(base, traffic=replace(traffic, load=load)).validate()
        except (TrafficSpecError, ValueError) as exc:
            raise ScenarioFileError(str(exc)) from exc

    scenario_id = str(doc.get("scenario_id",
                              os.path.splitext(os.path.basename(path))[0]))
    output = doc.get("output")
    _require(output is None or isinstance(output, str), "output must be a path string")
    return ScenarioFile(scenario_id=scenario_id, geometry=geometry, pattern=pattern,
                        loads=loads, base=base, output=output)


def _point_scenario(sf: ScenarioFile, load: float) -> Scenario:
    return replace(sf.base, traffic=replace(sf.base.traffic, load=load))


def _run_point(args) -> list[str]:
    sf, load, switch = args
    scenario = _point_scenario(sf, load)
    report = run(scenario) if switch == "lbc" else run_oq_baseline(scenario)
    return format_row(sf.scenario_id, switch, sf.pattern, sf.geometry.N,
                      sf.geometry.k, load, sf.base.traffic.shape_parameter(),
                      report, scenario.seed)


def _sweep(sf: ScenarioFile, switches: tuple[str, ...], workers: int,
           quiet: bool) -> list[list[str]]:
    points = [(sf, load, switch) for load in sf.loads for switch in switches]
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(points))) as pool:
            rows = list(pool.map(_run_point, points))
    else:
        rows = []
        for idx, point in enumerate(points):
            rows.append(_run_point(point))
            if not quiet:
                _, load, switch = point
                print(f"[{idx + 1}/{len(points)}] {sf.pattern} {switch} "
                      f"load={load:g} done", file=sys.stderr)
    return rows


def _cmd_run(args) -> int:
    try:
        sf = load_scenario_file(args.scenario, args.seed)
    except ScenarioFileError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_IO
    out_path = args.output or sf.output
    try:
        if sf.pattern == "replay_suite":
            rows, ok = _run_replay_suite(sf, quiet=args.quiet)
            if not ok:
                return EXIT_INVARIANT
        else:
            rows = _sweep(sf, ("lbc",), args.workers, args.quiet)
    except SimulationFault as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    if out_path:
        try:
            write_csv(out_path, rows, version=__version__)
        except OSError as exc:
            print(f"cannot write {out_path}: {exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


def _run_replay_suite(sf: ScenarioFile, quiet: bool) -> tuple[list[list[str]], bool]:
    """In-sequence replays on the real engine; exact-match report on stdout."""
    ok = True
    produced, expected = run_hold_down_walkthrough()
    match = produced == expected
    ok &= match
    print(f"hold-down walkthrough: {'exact match' if match else 'MISMATCH'} "
          f"(insertion slots {[slot for _, _, slot in produced]})")
    timeline, report = run_three_flow_staggered(k=3, start=20)
    match = three_flow_matches_tables(timeline)
    ok &= match
    print(f"three-flow staggered replay: "
          f"{'exact match, in order' if match and report.in_order_violations == 0 else 'MISMATCH'}")
    rows = [format_row(sf.scenario_id, "lbc", "replay_suite", 9, 3, 1.0, "",
                       report, sf.base.seed)]
    return rows, ok and report.in_order_violations == 0


def _cmd_compare(args) -> int:
    try:
        sf = load_scenario_file(args.scenario, args.seed)
        _require(sf.pattern != "replay_suite", "compare needs a traffic pattern scenario")
    except ScenarioFileError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        rows = _sweep(sf, ("lbc", "oq"), args.workers, args.quiet)
    except SimulationFault as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    out_path = args.output or sf.output
    if out_path:
        try:
            write_csv(out_path, rows, version=__version__)
        except OSError as exc:
            print(f"cannot write {out_path}: {exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


def _print_configuration_period(geometry: SwitchGeometry) -> None:
    k = geometry.k
    print(f"module configuration over one period (k={k}), "
          "shown for IM(0), CIM(0), COM(0):")
    for t in range(k):
        ims = ", ".join(f"IP(0,{s})->L_IM(0,{im_route(s, t, geometry)})"
                        for s in range(geometry.n))
        cims = ", ".join(f"L_IM({i},0)->L_CIM(0,{cim_route(i, t, geometry)})"
                         for i in range(k))
        coms = ", ".join(f"I_C(0,{p})->L_COM(0,{com_route(p, t, geometry)})"
                         for p in range(k))
        print(f"  t={t}:  IM: {ims}")
        print(f"        CIM: {cims}")
        print(f"        COM: {coms}")


def verify_geometry(k: int, quiet: bool = False, rng_seed: int = 1234) -> list[str]:
    """Schedule and analysis property suite; returns a list of failures."""
    failures: list[str] = []
    g = SwitchGeometry.symmetric(k)

    def check(cond: bool, label: str) -> None:
        if not cond:
            failures.append(label)
        elif not quiet:
            print(f"  ok: {label}")

    for t in range(2 * k):
        check(all(im_route(s, t, g) == im_route(s, t + k, g) for s in range(g.n))
              and all(cim_route(i, t, g) == cim_route(i, t + k, g) for i in range(k))
              and all(com_route(p, t, g) == com_route(p, t + k, g) for p in range(k)),
              f"period-{k} configuration repeats at t={t}")
    for t in range(k):
        check(sorted(im_route(s, t, g) for s in range(g.n)) == list(range(g.m)),
              f"IM map is a permutation at t={t}")
        check(sorted(cim_route(i, t, g) for i in range(k)) == list(range(k)),
              f"CIM map is a permutation at t={t}")
        check(sorted(com_route(p, t, g) for p in range(k)) == list(range(k)),
              f"COM map is a permutation at t={t}")
    # composite path lands on the source IM's mirror OM; COM index advances by 1
    sym = True
    for t in range(2 * k):
        for i in range(k):
            for s in range(g.n):
                r = im_route(s, t, g)
                p = cim_route(i, t, g)
                if com_route(p, t, g) != i or r != (s + t) % g.m:
                    sym = False
    check(sym, "staggered symmetry: IP(i,s) reaches OM(i) every slot via COM((s+t) mod m)")
    p1 = None
    try:
        p1 = compound_p1(g)
        compound_p2(g)
        check(True, "compound permutations are disjoint with k ones per row/column")
    except ValueError as exc:
        failures.append(f"compound permutation invalid: {exc}")
    if p1 is not None:
        rng = np.random.default_rng(rng_seed)
        for trial in range(5):
            r1 = random_admissible_matrix(rng, g.N, load=float(rng.uniform(0.2, 1.0)))
            r2 = compute_r2(r1, p1, k)
            ok_rows = np.allclose(r2.sum(axis=1), r1.sum(axis=1), atol=1e-9)
            ok_support = ((r2 > 0) == ((p1.entries > 0) & (r1.sum(axis=1)[:, None] > 0))).all()
            ok_out = np.allclose(output_rates(r1, g), r1.sum(axis=0), atol=1e-9)
            check(ok_rows and ok_support and ok_out,
                  f"stage pipeline conserves admissible traffic (trial {trial})")
    if not quiet:
        _print_configuration_period(g)
    return failures


def _cmd_verify(args) -> int:
    if args.k < 1:
        print("k must be >= 1", file=sys.stderr)
        return EXIT_SCHEMA
    failures = verify_geometry(args.k, quiet=args.quiet)
    if failures:
        for f in failures:
            print(f"FAIL: {f}", file=sys.stderr)
        return EXIT_INVARIANT
    if not args.quiet:
        print(f"all schedule and analysis properties hold for k={args.k}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lbcsim",
        description="Simulator for a split-central-buffered load-balancing "
                    "Clos-network switch.")
    parser.add_argument("--version", action="version", version=f"lbcsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario sweep and write CSV rows")
    p_run.add_argument("scenario", help="scenario file (YAML)")
    p_run.add_argument("-o", "--output", help="CSV output path (overrides the file's)")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--workers", type=int, default=1, help="sweep-point worker processes")
    p_run.add_argument("--quiet", action="store_true", help="suppress progress output")
    p_run.set_defaults(func=_cmd_run)

    p_ver = sub.add_parser("verify", help="check schedule and analysis invariants")
    p_ver.add_argument("-k", type=int, required=True, help="modules per stage")
    p_ver.add_argument("--quiet", action="store_true")
    p_ver.set_defaults(func=_cmd_verify)

    p_cmp = sub.add_parser("compare", help="run the fabric and the OQ reference "
                                           "on identical arrivals")
    p_cmp.add_argument("scenario", help="scenario file (YAML)")
    p_cmp.add_argument("-o", "--output", help="CSV output path (overrides the file's)")
    p_cmp.add_argument("--seed", type=int, default=None)
    p_cmp.add_argument("--workers", type=int, default=1)
    p_cmp.add_argument("--quiet", action="store_true")
    p_cmp.set_defaults(func=_cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioFileError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except SimulationFault as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
