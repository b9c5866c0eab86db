"""Command-line entry point: run one scenario (or a sweep) and write metrics.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime
invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

from .placement import PlacementError
from .scenario import ScenarioError, load_scenario
from .simulator import Architecture, ConfigurationError, MetricsReport, SimulationInvariantError, run

NODE_COLUMNS = ["node_id", "sent", "received", "relayed", "work_units", "final_battery", "failure_tick"]
GLOBAL_COLUMNS = ["mean_hops", "max_load", "total_messages", "consistency_rate", "dr_suppression", "max_hops"]
CSV_HEADER = NODE_COLUMNS + GLOBAL_COLUMNS


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mogmesh", description="Simulate a mobile game deployment and emit metrics.")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--arch", required=True, help="cs | cs-overlay | p2p | hybrid (comma list with --sweep)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--ticks", type=int, default=1000)
    p.add_argument("--allocator", choices=["heuristic", "auction"], help="override the scenario allocator")
    p.add_argument("--out", default="out", help="output directory (default ./out)")
    p.add_argument("--emit", choices=["csv", "json", "both"], default="both")
    p.add_argument("--sweep", metavar="SEEDS", help="seed list such as 1,2,5-8; one run per (arch, seed)")
    p.add_argument("--jobs", type=int, default=None, help="worker processes for --sweep")
    return p


def parse_seeds(text: str) -> list[int]:
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError(f"empty seed range {part!r}")
            seeds.extend(range(lo, hi + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ValueError("no seeds given")
    return seeds


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def global_row(r: MetricsReport) -> dict:
    return {
        "node_id": "GLOBAL",
        "sent": sum(n.sent for n in r.nodes),
        "received": sum(n.received for n in r.nodes),
        "relayed": sum(n.relayed for n in r.nodes),
        "work_units": sum(n.work_units for n in r.nodes),
        "final_battery": None,
        "failure_tick": None,
        "mean_hops": r.mean_hops,
        "max_load": r.max_load,
        "total_messages": r.total_messages,
        "consistency_rate": r.consistency_rate,
        "dr_suppression": r.dr_suppression,
        "max_hops": r.max_hops,
    }


def render_csv(r: MetricsReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for n in r.nodes:
        row = asdict(n)
        w.writerow([_cell(row.get(c)) for c in CSV_HEADER])
    g = global_row(r)
    w.writerow([_cell(g[c]) for c in CSV_HEADER])
    return buf.getvalue()


def render_json(r: MetricsReport, meta: dict) -> str:
    g = global_row(r)
    doc = {
        "run": {
            **meta,
            "in_flight": r.in_flight,
            "dropped": r.dropped,
            "undeliverable": r.undeliverable,
            "reconfigurations": r.reconfigurations,
            "replacements": r.replacements,
        },
        "nodes": [asdict(n) for n in r.nodes],
        "global": {k: g[k] for k in CSV_HEADER if k != "node_id"},
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _run_one(scenario_path: str, arch: str, seed: int, ticks: int, allocator, out: str, emit: str) -> int:
    try:
        scenario = load_scenario(scenario_path)
        if allocator is not None:
            scenario = scenario.model_copy(update={"allocator": allocator})
        report = run(scenario, arch, seed, ticks)
    except (OSError, ScenarioError, ConfigurationError, PlacementError, ValueError) as exc:
        print(f"mogmesh: {arch} seed {seed}: {exc}", file=sys.stderr)
        return 1
    except SimulationInvariantError as exc:
        print(f"mogmesh: invariant violated ({arch} seed {seed}): {exc}", file=sys.stderr)
        return 2
    meta = {
        "seed": seed,
        "arch": arch,
        "ticks": ticks,
        "allocator": scenario.allocator,
        "scenario_digest": scenario.digest(),
    }
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    if emit in ("csv", "both"):
        (outdir / "metrics.csv").write_text(render_csv(report), encoding="utf-8")
    if emit in ("json", "both"):
        (outdir / "metrics.json").write_text(render_json(report, meta), encoding="utf-8")
    return 0


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return int(exc.code or 0)
    archs = [a.strip() for a in args.arch.split(",") if a.strip()]
    valid = {a.value for a in Architecture}
    bad = [a for a in archs if a not in valid]
    if bad or not archs or (len(archs) > 1 and not args.sweep):
        what = bad[0] if bad else args.arch
        print(f"mogmesh: invalid --arch {what!r}; choose from {sorted(valid)}", file=sys.stderr)
        return 1
    if args.ticks < 0 or not 0 <= args.seed < 2**64:
        print("mogmesh: --ticks must be >= 0 and --seed an unsigned 64-bit integer", file=sys.stderr)
        return 1
    if not args.sweep:
        return _run_one(args.scenario, archs[0], args.seed, args.ticks, args.allocator, args.out, args.emit)
    try:
        seeds = parse_seeds(args.sweep)
    except ValueError as exc:
        print(f"mogmesh: invalid --sweep: {exc}", file=sys.stderr)
        return 1
    jobs = [(a, s) for a in archs for s in seeds]
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        futures = [
            pool.submit(
                _run_one,
                args.scenario,
                a,
                s,
                args.ticks,
                args.allocator,
                str(Path(args.out) / f"{a}-seed{s}"),
                args.emit,
            )
            for a, s in jobs
        ]
        codes = [f.result() for f in futures]
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
