"""Command-line entry point.

Exit codes: 0 success, 2 invalid configuration, 3 simulation aborted,
4 infeasible operation, 5 JSON parse error, 6 schema error, 7 missing file.
Log verbosity comes from the ``DAOCTRL_LOG`` environment variable.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import daoop, io
from .control import Regime
from .engine import SimulationAbort, run_batch, run_simulation
from .scenario import (ScenarioError, ScenarioNotFound, ScenarioParseError, ScenarioSchemaError,
                       load_scenario, paper_scenario_path, scenario_to_dict)
from .topology import Topology, TopologyError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3
EXIT_INFEASIBLE = 4

logger = logging.getLogger("daoctrl")


def resolve_scenario_path(name: str) -> Path:
    """A literal path when it exists; ``paper`` / ``paper.json`` fall back to the shipped file."""
    path = Path(name)
    if not path.exists() and name in ("paper", "paper.json"):
        return paper_scenario_path()
    return path


def parse_seeds(text: str) -> list[int]:
    """``7``, ``1..20`` or ``1,4,9`` (ranges are inclusive)."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds or any(s < 0 for s in seeds):
        raise argparse.ArgumentTypeError(f"invalid seed list {text!r}")
    return seeds


def trace_names(regime: Regime, seed: int) -> dict[str, str]:
    stem = f"{regime.value}_seed{seed}"
    return {"trace": f"trace_{stem}.csv", "summary": f"summary_{stem}.json",
            "plot": f"plot_{stem}.csv", "diagnostics": f"diagnostics_{stem}.json"}


def _single_run(scenario, regime: Regime, seed: int, out: Path) -> int:
    names = trace_names(regime, seed)
    try:
        trace, report = run_simulation(scenario.with_regime(regime), seed)
    except SimulationAbort as exc:
        io.write_trace_csv(exc.trace, out / names["trace"])
        io.dump_json({"regime": regime.value, "seed": seed, "diagnostics": exc.diagnostics},
                     out / names["diagnostics"])
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    io.write_trace_csv(trace, out / names["trace"])
    io.dump_json(io.run_summary(trace, report), out / names["summary"])
    io.write_plot_csv(out / names["plot"], trace.t, {regime.value: report.max_discrepancy})
    print(json.dumps(io.jsonable({"regime": regime.value, "seed": seed, **report.summary(),
                                  "files": [names["trace"], names["summary"], names["plot"]]}), indent=2))
    return EXIT_OK


def _batch(scenario, regimes: list[Regime], seeds: list[int], out: Path, workers: Optional[int]) -> int:
    report = run_batch(scenario, regimes, seeds, workers=workers)
    series = report.pop("_series")
    rows = []
    t = None
    for seed in seeds:
        cols = []
        for reg in regimes:
            entry = series[(reg.value, seed)]
            if entry["aborted"]:
                cols.append(None)
            else:
                t = entry["t"]
                cols.append(entry["max_discrepancy"])
        if t is None:
            continue
        for k in range(len(t)):
            rows.append([float(t[k]), seed,
                         *[float(c[k]) if c is not None else float("nan") for c in cols]])
    io.append_rows(out / "plot_data.csv", ["t", "seed", *[r.value for r in regimes]], rows)
    io.dump_json(report, out / "comparison.json")
    brief = {reg: {m: d["stats"][m]["median"] for m in d["stats"]} for reg, d in report["regimes"].items()}
    print(json.dumps(io.jsonable({"medians": brief, "files": ["comparison.json", "plot_data.csv"]}), indent=2))
    aborted = sum(d["aborted"] for d in report["regimes"].values())
    return EXIT_ABORT if aborted else EXIT_OK


def cmd_run(args) -> int:
    scenario = load_scenario(resolve_scenario_path(args.scenario))
    if args.tau_scaled_consensus:
        from dataclasses import replace
        scenario = replace(scenario, controller=replace(scenario.controller, tau_scaled_consensus=True))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.regime == "all":
        regimes = list(Regime)
    else:
        regimes = [Regime.parse(r) for r in args.regime.split(",")]
    if args.seeds is not None:
        seeds = args.seeds
    elif args.seed is not None:
        seeds = [args.seed]
    else:
        seeds = list(scenario.sim.seeds)
    if len(regimes) == 1 and len(seeds) == 1:
        return _single_run(scenario, regimes[0], seeds[0], out)
    return _batch(scenario, regimes, seeds, out, args.workers)


def load_snapshot(path: Path) -> dict:
    """Snapshot file: ``{"adjacency": [[...]], "r": [...]}`` plus optional phi, psi, seed."""
    if not path.is_file():
        raise ScenarioNotFound(f"snapshot file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}: {exc}") from exc
    if not isinstance(data, dict) or "adjacency" not in data or "r" not in data:
        raise ScenarioSchemaError("$: snapshot needs 'adjacency' and 'r'")
    unknown = set(data) - {"adjacency", "r", "phi", "psi", "seed", "max_outer_iterations"}
    if unknown:
        raise ScenarioSchemaError(f"$: unknown keys {sorted(unknown)}")
    return data


def cmd_operate(args) -> int:
    data = load_snapshot(Path(args.snapshot))
    try:
        topo = Topology(data["adjacency"])
    except TopologyError as exc:
        raise ScenarioError(f"$.adjacency: {exc}") from exc
    r = [float(v) for v in data["r"]]
    if len(r) != topo.n:
        raise ScenarioError(f"$.r: expected {topo.n} values, got {len(r)}")
    phi = args.phi if args.phi is not None else data.get("phi", 4)
    psi = args.psi if args.psi is not None else data.get("psi", 2.0)
    seed = args.seed if args.seed is not None else data.get("seed", 0)
    try:
        params = daoop.OperationParams(phi=phi, psi=psi, rng_seed=seed,
                                       max_outer_iterations=data.get("max_outer_iterations", 200))
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    result = daoop.operate(topo, r, params)
    out = {"heuristic": result.to_dict()}
    if result.found:
        out["validation"] = daoop.validate(topo, result.subgraph, r, params).to_dict()
    if args.oracle:
        best = daoop.brute_force(topo, r, params.phi, params.psi)
        out["oracle"] = {
            "found": best is not None,
            "subgraph": best.to_dict() if best is not None else None,
            "edge_count": len(best.retained_edges) if best is not None else None,
            "validation": daoop.validate(topo, best, r, params).to_dict() if best is not None else None,
        }
        if best is not None and result.found:
            out["edge_count_gap"] = len(result.subgraph.retained_edges) - len(best.retained_edges)
    print(json.dumps(io.jsonable(out), indent=2))
    return EXIT_OK if result.found else EXIT_INFEASIBLE


def cmd_validate(args) -> int:
    scenario = load_scenario(resolve_scenario_path(args.scenario))
    print(f"ok: {scenario.n} agents, {len(scenario.topology.edges)} edges, "
          f"{scenario.sim.n_steps} steps")
    return EXIT_OK


def cmd_show(args) -> int:
    scenario = load_scenario(resolve_scenario_path(args.scenario))
    print(json.dumps(scenario_to_dict(scenario), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="daoctrl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one or more regimes")
    run.add_argument("scenario")
    run.add_argument("--regime", default="proposed",
                     help="fixed-gain, pos, dao, proposed, a comma list, or 'all'")
    seeds = run.add_mutually_exclusive_group()
    seeds.add_argument("--seed", type=int)
    seeds.add_argument("--seeds", type=parse_seeds, help="e.g. 1..20 or 1,2,3")
    run.add_argument("--out", default="out")
    run.add_argument("--tau-scaled-consensus", action="store_true")
    run.add_argument("--workers", type=int, default=None)
    run.set_defaults(func=cmd_run)

    op = sub.add_parser("operate", help="extract a critical-agent subgraph from a snapshot")
    op.add_argument("snapshot")
    op.add_argument("--phi", type=int)
    op.add_argument("--psi", type=float)
    op.add_argument("--seed", type=int)
    op.add_argument("--oracle", action="store_true", help="also run the exhaustive search (n <= 12)")
    op.set_defaults(func=cmd_operate)

    val = sub.add_parser("validate-config", help="check a scenario file")
    val.add_argument("scenario")
    val.set_defaults(func=cmd_validate)

    show = sub.add_parser("show-scenario", help="print the resolved scenario")
    show.add_argument("scenario", nargs="?", default="paper.json")
    show.set_defaults(func=cmd_show)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=os.environ.get("DAOCTRL_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except daoop.CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
