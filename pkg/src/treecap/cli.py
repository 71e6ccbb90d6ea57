"""Command-line interface.

Exit codes: 0 on success, 1 when a check fails or traffic is infeasible,
2 on bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from treecap.analysis import Scenario, emit, run_scaling, to_csv, to_json
from treecap.bounds import node_cut_bounds
from treecap.errors import TreecapError
from treecap.geometry import NodePlacement, check_regularity, decompose, place_nodes
from treecap.regions import RegionSpec, membership
from treecap.routing import edge_loads, feasible_on_tree
from treecap.scheme import rate_ledger, simulate_multicast, simulate_unicast
from treecap.traffic import (
    MulticastTraffic,
    gen_broadcast,
    gen_classes,
    gen_distance_rate,
    gen_multi_destination,
    gen_permutation,
    load_traffic,
)
from treecap.treegraph import build_tree

OK, FAILED, BAD_INPUT = 0, 1, 2


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _tree_for(args: argparse.Namespace):
    placement = NodePlacement.load(args.placement)
    g = decompose(placement, levels=args.levels)
    return placement, g


def cmd_place(args: argparse.Namespace) -> int:
    placement = place_nodes(args.n, args.seed)
    _write(json.dumps(placement.to_dict()) + "\n", args.out)
    return OK


def cmd_check(args: argparse.Namespace) -> int:
    placement = NodePlacement.load(args.placement)
    report = check_regularity(placement, decompose(placement))
    if args.json:
        print(json.dumps(report.to_dict()))
    else:
        print(f"overall: {report.overall}")
        print(f"min distance > 1/n: {report.min_dist_ok}")
        print(f"unit cells hold at most log2 n nodes: {report.unit_cell_max_ok}")
        print(f"no empty cell at the coarse level: {report.log_cell_min_ok}")
        print(f"proportional counts by level: {report.proportional_ok}")
        for note in report.notes:
            print(f"note: {note}")
    return OK if report.overall else FAILED


def cmd_build_tree(args: argparse.Namespace) -> int:
    placement, g = _tree_for(args)
    tree = build_tree(placement, g, args.alpha)
    _write(json.dumps(tree.to_dict()) + "\n", args.out)
    return OK


def cmd_traffic(args: argparse.Namespace) -> int:
    placement = NodePlacement.load(args.placement)
    betas = _floats(args.beta) if args.beta else []
    rates = _floats(args.rates) if args.rates else [1.0] * len(betas)
    classes = list(zip(betas, rates))
    kind = args.kind
    if kind == "permutation":
        t = gen_permutation(placement.n, args.seed)
    elif kind == "classes":
        t = gen_classes(placement, classes, args.seed)
    elif kind == "distance":
        t = gen_distance_rate(placement, betas[0] if betas else 0.0, args.rho, args.seed)
    elif kind == "multi":
        t = gen_multi_destination(placement, classes, args.seed)
    else:
        t = gen_broadcast(placement.n, np.ones(placement.n), args.rho)
    _write(t.to_jsonl(), args.out)
    return OK


def cmd_membership(args: argparse.Namespace) -> int:
    placement = NodePlacement.load(args.placement)
    g = decompose(placement, levels=args.levels)
    t = load_traffic(args.traffic)
    kind = "multicast" if isinstance(t, MulticastTraffic) else "unicast"
    spec = RegionSpec(kind=kind, direction=args.direction, alpha=args.alpha)
    report = membership(t, g, spec, placement=placement, slack_limit=args.slack)
    if args.json:
        print(json.dumps(report.to_dict()))
    else:
        print(f"feasible: {report.feasible}")
        print(f"max multiplier: {report.max_multiplier}")
        print(f"binding: {report.binding}")
    return OK if report.feasible else FAILED


def cmd_route(args: argparse.Namespace) -> int:
    placement, g = _tree_for(args)
    tree = build_tree(placement, g, args.alpha)
    t = load_traffic(args.traffic)
    loads = edge_loads(t, tree)
    result = feasible_on_tree(t, tree)
    if args.json:
        print(json.dumps({
            "feasible": result.feasible,
            "max_multiplier": "inf" if result.max_multiplier == float("inf") else result.max_multiplier,
            "binding": list(result.binding) if result.binding else None,
        }))
    else:
        rows = [["level", "cell", "load", "capacity", "utilization"]]
        for edge, load in loads.items():
            cap = tree.capacity(edge)
            rows.append([edge.level, edge.child, repr(load), repr(cap), repr(load / cap)])
        _write(_csv(rows), args.out)
    return OK if result.feasible else FAILED


_ENTRY = re.compile(r"^\s*(\d+)\s*(?:->|→)\s*(?:\{([\d,\s]+)\}|(\d+))\s*$")


def parse_entry(text: str) -> tuple[int, list[int], bool]:
    """Parse ``"u->w"`` or ``"u->{w1,w2}"`` into ``(u, targets, is_multicast)``."""
    m = _ENTRY.match(text)
    if not m:
        raise ValueError(f"cannot parse traffic entry {text!r}; expected 'u->w' or 'u->{{w1,w2}}'")
    u = int(m.group(1))
    if m.group(2) is not None:
        return u, _ints(m.group(2)), True
    return u, [int(m.group(3))], False


def cmd_simulate(args: argparse.Namespace) -> int:
    placement, g = _tree_for(args)
    tree = build_tree(placement, g, args.alpha)
    u, targets, multicast = parse_entry(args.traffic_entry)
    if multicast:
        trace = simulate_multicast(tree, u, targets)
    else:
        if targets[0] == u:
            raise ValueError("source and destination must differ")
        trace = simulate_unicast(tree, u, targets[0])
    out = {"trace": trace.to_dict(), "rate_ledger": rate_ledger(tree).to_dict()}
    _write(json.dumps(out) + "\n", args.out)
    return OK if trace.complete else FAILED


def cmd_bounds(args: argparse.Namespace) -> int:
    placement = NodePlacement.load(args.placement)
    reports = node_cut_bounds(placement, args.alpha)
    rows = [["u", "value", "bound", "satisfied"]]
    for r in reports:
        rows.append([r.u, repr(r.value), repr(r.bound), "" if r.satisfied is None else int(r.satisfied)])
    _write(_csv(rows), args.out)
    return OK if all(r.satisfied is not False for r in reports) else FAILED


def cmd_scaling(args: argparse.Namespace) -> int:
    scenario = Scenario(
        example=args.example,
        betas=tuple(_floats(args.beta)) if args.beta else (),
        rates=tuple(_floats(args.rates)) if args.rates else (),
        rho=args.rho,
    )
    kind = "multicast" if scenario.example == 4 else "unicast"
    spec = RegionSpec(kind=kind, direction=args.direction, alpha=args.alpha)
    seeds = _ints(args.seeds) if args.seeds else [args.seed]
    result = run_scaling(scenario, _ints(args.n_list), args.alpha, seeds, spec)
    fmt = "json" if args.json else args.format
    if args.out:
        emit(result, fmt, args.out)
    else:
        sys.stdout.write(to_json(result) if fmt == "json" else to_csv(result))
    return OK


def _csv(rows: list[list[object]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--alpha", type=float, default=3.0, help="path-loss exponent, > 2 (default 3)")
    common.add_argument("--json", action="store_true", help="machine-readable JSON output")

    parser = argparse.ArgumentParser(prog="treecap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help)
        p.set_defaults(func=func)
        return p

    def placement_arg(p: argparse.ArgumentParser) -> None:
        p.add_argument("--placement", required=True, help="placement JSON file")

    def levels_arg(p: argparse.ArgumentParser) -> None:
        p.add_argument("--levels", type=int, default=None, help="override the tree depth L")

    def out_arg(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", default=None, help="output file (default stdout)")

    p = add("place", cmd_place, "draw a random node placement")
    p.add_argument("--n", type=int, required=True, help="number of nodes")
    out_arg(p)

    p = add("check", cmd_check, "check placement regularity")
    placement_arg(p)

    p = add("build-tree", cmd_build_tree, "build and dump the capacitated tree")
    placement_arg(p)
    levels_arg(p)
    out_arg(p)

    p = add("traffic", cmd_traffic, "generate scenario traffic as JSON lines")
    placement_arg(p)
    p.add_argument("--kind", choices=["permutation", "classes", "distance", "multi", "broadcast"], required=True)
    p.add_argument("--beta", default=None, help="comma-separated class exponents")
    p.add_argument("--rates", default=None, help="comma-separated class rates (default all 1)")
    p.add_argument("--rho", type=float, default=1.0, help="rate scale for distance and broadcast traffic")
    out_arg(p)

    p = add("membership", cmd_membership, "test traffic against the cut region")
    placement_arg(p)
    levels_arg(p)
    p.add_argument("--traffic", required=True, help="traffic JSON-lines file")
    p.add_argument("--direction", choices=["out", "both", "dense"], default="out")
    p.add_argument("--slack", type=int, default=0, help="number of constraints to list in JSON output")

    p = add("route", cmd_route, "per-edge tree loads as CSV")
    placement_arg(p)
    levels_arg(p)
    p.add_argument("--traffic", required=True, help="traffic JSON-lines file")
    out_arg(p)

    p = add("simulate", cmd_simulate, "trace one message through the cooperation layer")
    placement_arg(p)
    levels_arg(p)
    p.add_argument("--traffic-entry", required=True, help="'u->w' or 'u->{w1,w2}'")
    out_arg(p)

    p = add("bounds", cmd_bounds, "single-node cut bounds as CSV")
    placement_arg(p)
    out_arg(p)

    p = add("scaling", cmd_scaling, "sweep n and fit the multiplier exponent")
    p.add_argument("--example", type=int, choices=[0, 1, 2, 3, 4], required=True)
    p.add_argument("--beta", default=None, help="comma-separated class exponents")
    p.add_argument("--rates", default=None, help="comma-separated class rates")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--n-list", default="256,1024,4096,16384", help="comma-separated sizes")
    p.add_argument("--seeds", default=None, help="comma-separated seeds (default: --seed)")
    p.add_argument("--direction", choices=["out", "both", "dense"], default="out")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    out_arg(p)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, IndexError, TreecapError) as exc:
        print(f"treecap {args.command}: {exc}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
