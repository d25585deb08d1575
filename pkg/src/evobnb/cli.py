"""Command-line front end: generate instances, solve, train, and benchmark.

Every subcommand prints its effective configuration (all defaults expanded,
seed included) to stderr before acting, so any run can be reproduced from
its log. Exit codes: 0 success / proven optimum, 2 when a solve stops on a
time or node limit, 3 for usage errors, 1 for runtime errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import gp as gp_mod
from .bnb import BeBfs, BeDfs, LbBfs, ScoreBfs, SolveStatus, Strategy, solve
from .expr import (
    DEFAULT_BIG_M,
    NodeContext,
    evaluate,
    parse as parse_expr,
    read_expr_file,
    to_text,
)
from .milp import (
    Milp,
    gen_er_graph,
    gen_fcmcnf,
    gen_gisp,
    gen_maxsat,
    read_instance,
    write_instance,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_LIMIT = 2
EXIT_USAGE = 3

SEED_ENV_VAR = "GP2S_SEED"

GEN_DEFAULTS = {
    # type: (graph size range, edge probability)
    "gisp": ("15-25", 0.6),
    "maxsat": ("15-25", 0.6),
    "fcmcnf": ("6-8", 0.3),
}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors, which would collide with the
    # "stopped on a limit" exit code of `solve`.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is not None:
        try:
            return int(raw)
        except ValueError:
            raise SystemExit(
                f"error: {SEED_ENV_VAR} must be an integer, got {raw!r}"
            )
    return 0


def _print_config(command: str, options: dict) -> None:
    payload = {"command": command}
    payload.update(options)
    print("config: " + json.dumps(payload, sort_keys=True), file=sys.stderr)


def _parse_size_range(text: str) -> tuple[int, int]:
    parts = text.split("-")
    try:
        if len(parts) == 1:
            lo = hi = int(parts[0])
        elif len(parts) == 2:
            lo, hi = int(parts[0]), int(parts[1])
        else:
            raise ValueError
    except ValueError:
        raise ValueError(f"size must be 'N' or 'LO-HI', got {text!r}") from None
    if lo < 2 or hi < lo:
        raise ValueError(f"bad size range {text!r}")
    return lo, hi


def parse_strategy(spec: str) -> Strategy:
    """Turn a strategy spec (lb-bfs, be-bfs, be-dfs, expr:PATH) into a Strategy."""
    if spec == "lb-bfs":
        return LbBfs()
    if spec == "be-bfs":
        return BeBfs()
    if spec == "be-dfs":
        return BeDfs()
    if spec.startswith("expr:"):
        path = spec[len("expr:"):]
        return ScoreBfs(read_expr_file(path), label=spec)
    raise ValueError(
        f"unknown strategy {spec!r}; use lb-bfs, be-bfs, be-dfs, or expr:<path.ssx>"
    )


def load_instances_dir(path: str | Path) -> list[Milp]:
    folder = Path(path)
    if not folder.is_dir():
        raise ValueError(f"not a directory: {folder}")
    files = sorted(folder.glob("*.milp"))
    if not files:
        raise ValueError(f"no .milp instances in {folder}")
    return [read_instance(f) for f in files]


def _cmd_gen(args) -> int:
    if args.count <= 0:
        raise ValueError("--count must be positive")
    size_default, prob_default = GEN_DEFAULTS[args.type]
    size_range = _parse_size_range(args.nodes_graph or size_default)
    edge_prob = prob_default if args.edge_prob is None else args.edge_prob
    if not 0.0 <= edge_prob <= 1.0:
        raise ValueError("--edge-prob must lie in [0, 1]")
    out_dir = Path(args.out)
    _print_config("gen", {
        "type": args.type, "count": args.count, "nodes_graph": list(size_range),
        "edge_prob": edge_prob, "seed": args.seed, "out": str(out_dir),
        "commodity_factor": args.commodity_factor, "revenue": args.revenue,
        "removal_cost": args.removal_cost, "removable_prob": args.removable_prob,
        "clause_weight": args.clause_weight,
        "fixed_cost_range": [args.fixed_cost_min, args.fixed_cost_max],
        "flow_cost_range": [args.flow_cost_min, args.flow_cost_max],
    })
    out_dir.mkdir(parents=True, exist_ok=True)

    for index in range(args.count):
        rng = np.random.default_rng([args.seed, index])
        n = int(rng.integers(size_range[0], size_range[1] + 1))
        graph_seed = int(rng.integers(1 << 31))
        inner_seed = int(rng.integers(1 << 31))
        name = f"{args.type}_{args.seed}_{index:04d}"
        if args.type == "gisp":
            g = gen_er_graph(n, edge_prob, graph_seed)
            model = gen_gisp(
                g, inner_seed, revenue=args.revenue,
                removal_cost=args.removal_cost,
                removable_prob=args.removable_prob, name=name,
            )
        elif args.type == "maxsat":
            g = gen_er_graph(n, edge_prob, graph_seed)
            model = gen_maxsat(
                n, g, inner_seed, clause_weight=args.clause_weight, name=name
            )
        else:  # fcmcnf
            g = gen_er_graph(n, edge_prob, graph_seed)
            while not g.is_connected():
                graph_seed = (graph_seed + 1) % (1 << 31)
                g = gen_er_graph(n, edge_prob, graph_seed)
            commodities = max(1, round(args.commodity_factor * n))
            model = gen_fcmcnf(
                g, commodities, inner_seed,
                fixed_cost_range=(args.fixed_cost_min, args.fixed_cost_max),
                flow_cost_range=(args.flow_cost_min, args.flow_cost_max),
                name=name,
            )
        write_instance(model, out_dir / f"{name}.milp")
    print(f"wrote {args.count} {args.type} instance(s) to {out_dir}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    strategy = parse_strategy(args.strategy)
    _print_config("solve", {
        "instance": args.instance, "strategy": args.strategy,
        "node_limit": args.node_limit, "time_limit": args.time_limit,
        "big_m": args.big_m,
    })
    model = read_instance(args.instance)
    outcome = solve(
        model, strategy,
        node_limit=args.node_limit, time_limit=args.time_limit, big_m=args.big_m,
    )
    print(outcome.to_json())
    return EXIT_OK if outcome.status is SolveStatus.OPTIMAL else EXIT_LIMIT


def _cmd_train(args) -> int:
    cfg = gp_mod.GpConfig(
        pop_size=args.pop,
        generations=args.gens,
        p_mate=args.p_mate,
        p_mutate=args.p_mutate,
        tournament_size=args.tournament,
        p_size=args.p_size,
        fitness_kind=args.fitness,
        node_limit=args.node_limit,
        time_limit=args.time_limit,
        big_m=args.big_m,
        seed=args.seed,
        jobs=args.jobs,
    )
    node_limit, time_limit = cfg.resolved_limits()
    _print_config("train", {
        "instances": args.instances, "out": args.out,
        "pop": cfg.pop_size, "gens": cfg.generations,
        "p_mate": cfg.p_mate, "p_mutate": cfg.p_mutate,
        "tournament": cfg.tournament_size, "p_size": cfg.p_size,
        "fitness": cfg.fitness_kind, "node_limit": node_limit,
        "time_limit": time_limit, "big_m": cfg.big_m, "seed": cfg.seed,
        "jobs": cfg.jobs,
        "d_init": [cfg.d_init_min, cfg.d_init_max],
        "d_mut": [cfg.d_mut_min, cfg.d_mut_max],
    })
    training = load_instances_dir(args.instances)
    result = gp_mod.evolve(training, cfg, out_dir=args.out)
    print(f"best fitness: {result.best.fitness!r}")
    print(f"best policy:  {to_text(result.best.expr)}")
    print(f"outputs in {args.out}: best.ssx, convergence.csv")
    return EXIT_OK


def _cmd_bench(args) -> int:
    specs = args.strategy or ["lb-bfs", "be-bfs", "be-dfs"]
    strategies = [parse_strategy(s) for s in specs]
    _print_config("bench", {
        "instances": args.instances, "strategies": specs,
        "measure": args.measure, "node_limit": args.node_limit,
        "time_limit": args.time_limit, "big_m": args.big_m,
        "jobs": args.jobs, "out": args.out,
        "omit_wall_time": args.omit_wall_time,
    })
    instances = load_instances_dir(args.instances)
    report = bench_mod.run_bench(
        instances, strategies,
        measure=args.measure, node_limit=args.node_limit,
        time_limit=args.time_limit, big_m=args.big_m, jobs=args.jobs,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report.write_report_csv(out_dir / "report.csv", omit_wall_time=args.omit_wall_time)
    report.write_summary_csv(out_dir / "summary.csv")
    print(report.summary_table())
    print(f"outputs in {out_dir}: report.csv, summary.csv")
    return EXIT_OK


def _cmd_expr(args) -> int:
    if args.file is not None:
        expression = read_expr_file(args.file)
        source = args.file
    elif args.text is not None:
        expression = parse_expr(args.text)
        source = "<arg>"
    else:
        raise ValueError("give an expression or --file")
    _print_config("expr", {"source": source, "eval": args.eval})
    print(f"canonical: {to_text(expression)}")
    print(f"size: {expression.size}")
    print(f"depth: {expression.depth}")
    if args.eval:
        ctx = NodeContext(
            depth=args.depth,
            best_estimate=args.estimate,
            lower_bound=args.lb,
            root_dual_bound=args.rootlb,
            num_constraints=args.ncons,
            num_variables=args.nvars,
            big_m=args.big_m,
        )
        print(f"value: {evaluate(expression, ctx)!r}")
    return EXIT_OK


def _add_limit_flags(p):
    p.add_argument("--node-limit", type=int, default=None,
                   help="stop a solve after this many LP-solved nodes")
    p.add_argument("--time-limit", type=float, default=None,
                   help="stop a solve after this many seconds")
    p.add_argument("--big-m", type=float, default=DEFAULT_BIG_M,
                   help="value of the bigM scoring terminal")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="evobnb",
        description="Branch-and-bound MILP engine with evolvable search policies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[], help="generate instance files",
                       description="Write <type>_<seed>_<index>.milp files.")
    p.add_argument("--type", required=True, choices=sorted(GEN_DEFAULTS))
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--nodes-graph", default=None,
                   help="graph size, 'N' or 'LO-HI' (default per type)")
    p.add_argument("--edge-prob", type=float, default=None,
                   help="edge probability (default per type)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=".")
    p.add_argument("--commodity-factor", type=float, default=1.5,
                   help="fcmcnf commodities per graph node")
    p.add_argument("--revenue", type=float, default=100.0, help="gisp vertex revenue")
    p.add_argument("--removal-cost", type=float, default=1.0, help="gisp edge cost")
    p.add_argument("--removable-prob", type=float, default=0.5,
                   help="gisp removable-edge probability")
    p.add_argument("--clause-weight", type=float, default=1.0, help="maxsat weight")
    p.add_argument("--fixed-cost-min", type=int, default=50)
    p.add_argument("--fixed-cost-max", type=int, default=100)
    p.add_argument("--flow-cost-min", type=int, default=10)
    p.add_argument("--flow-cost-max", type=int, default=20)
    p.set_defaults(func=_cmd_gen, needs_seed=True)

    p = sub.add_parser("solve", help="solve one instance",
                       description="Prints the outcome as JSON on stdout; "
                                   "exit 0 on optimal, 2 on a limit.")
    p.add_argument("instance")
    p.add_argument("--strategy", default="lb-bfs",
                   help="lb-bfs | be-bfs | be-dfs | expr:<path.ssx>")
    _add_limit_flags(p)
    p.set_defaults(func=_cmd_solve, needs_seed=False)

    p = sub.add_parser("train", help="evolve a scoring policy",
                       description="Writes best.ssx and convergence.csv.")
    p.add_argument("instances", help="directory of .milp training instances")
    p.add_argument("--out", default="gp-out")
    p.add_argument("--fitness", choices=gp_mod.FITNESS_KINDS, default="nodes")
    p.add_argument("--pop", type=int, default=50)
    p.add_argument("--gens", type=int, default=50)
    p.add_argument("--tournament", type=int, default=5)
    p.add_argument("--p-mate", type=float, default=0.9)
    p.add_argument("--p-mutate", type=float, default=0.1)
    p.add_argument("--p-size", type=float, default=1.2)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    _add_limit_flags(p)
    p.set_defaults(func=_cmd_train, needs_seed=True)

    p = sub.add_parser("bench", help="compare strategies on an instance set",
                       description="Writes report.csv and summary.csv.")
    p.add_argument("instances", help="directory of .milp instances")
    p.add_argument("--strategy", action="append", default=None,
                   help="repeatable; default lb-bfs, be-bfs, be-dfs")
    p.add_argument("--measure", choices=bench_mod.MEASURES, default="nodes")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="bench-out")
    p.add_argument("--omit-wall-time", action="store_true",
                   help="blank the wall_time_s column for reproducible reports")
    _add_limit_flags(p)
    p.set_defaults(func=_cmd_bench, needs_seed=False)

    p = sub.add_parser("expr", help="inspect a scoring expression",
                       description="Parse, canonicalize, and optionally "
                                   "evaluate an expression.")
    p.add_argument("text", nargs="?", default=None)
    p.add_argument("--file", default=None, help="read the expression from a .ssx file")
    p.add_argument("--eval", action="store_true")
    p.add_argument("--depth", type=int, default=0)
    p.add_argument("--estimate", type=float, default=0.0)
    p.add_argument("--lb", type=float, default=0.0)
    p.add_argument("--rootlb", type=float, default=0.0)
    p.add_argument("--ncons", type=int, default=1)
    p.add_argument("--nvars", type=int, default=1)
    p.add_argument("--big-m", type=float, default=DEFAULT_BIG_M)
    p.set_defaults(func=_cmd_expr, needs_seed=False)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "needs_seed", False) and args.seed is None:
        args.seed = _default_seed()
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
