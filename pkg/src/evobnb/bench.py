"""Benchmark harness: solve strategy x instance grids and aggregate metrics.

The headline average is the 1-shifted geometric mean, which tolerates
zero-valued measurements; spread is the geometric standard deviation of the
shifted values. Gap aggregation counts failures ("no incumbent") separately
per strategy but averages gaps only over instances where every strategy in
the comparison found one, so a single bad cell cannot poison a column.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bnb import GAP_SENTINEL, SolveOutcome, Strategy, solve
from .expr import DEFAULT_BIG_M
from .milp import Milp

INF = float("inf")

MEASURES = ("time", "nodes", "gap")


def shifted_geomean(values) -> float:
    """(prod(v + 1)) ** (1/n) - 1, computed in log space."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("need at least one value")
    if np.any(arr < 0):
        raise ValueError("values must be nonnegative")
    return float(np.expm1(np.mean(np.log1p(arr))))


def geo_stddev(values) -> float:
    """exp of the sample standard deviation of log(v + 1); 1.0 if n == 1."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("need at least one value")
    if arr.size == 1:
        return 1.0
    return float(np.exp(np.std(np.log1p(arr), ddof=1)))


def outcome_measure(outcome: SolveOutcome, measure: str) -> float:
    if measure == "time":
        return outcome.wall_time
    if measure == "nodes":
        return float(outcome.nodes_explored)
    if measure == "gap":
        return GAP_SENTINEL if outcome.objective == INF else outcome.gap
    raise ValueError(f"unknown measure {measure!r}; pick one of {MEASURES}")


@dataclass(frozen=True)
class StrategySummary:
    strategy: str
    measure_geomean: float
    geo_stddev: float
    inf_count: int


@dataclass(frozen=True)
class BenchReport:
    """Complete grid of outcomes plus one aggregate row per strategy."""

    instance_names: tuple[str, ...]
    strategy_labels: tuple[str, ...]
    outcomes: dict[tuple[str, str], SolveOutcome]
    summaries: tuple[StrategySummary, ...]
    measure: str

    def __post_init__(self):
        for inst in self.instance_names:
            for label in self.strategy_labels:
                if (inst, label) not in self.outcomes:
                    raise ValueError(f"missing cell ({inst}, {label})")

    def write_report_csv(self, path, omit_wall_time: bool = False) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(
                ["instance", "strategy", "status", "objective", "best_lb",
                 "gap", "nodes", "wall_time_s"]
            )
            for inst in self.instance_names:
                for label in self.strategy_labels:
                    o = self.outcomes[(inst, label)]
                    w.writerow([
                        inst,
                        label,
                        o.status.value,
                        "" if o.objective == INF else repr(o.objective),
                        "" if not np.isfinite(o.best_lb) else repr(o.best_lb),
                        repr(o.gap),
                        o.nodes_explored,
                        "" if omit_wall_time else repr(o.wall_time),
                    ])

    def write_summary_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["strategy", "measure_geomean", "geo_stddev", "inf_count"])
            for s in self.summaries:
                w.writerow([
                    s.strategy, repr(s.measure_geomean), repr(s.geo_stddev), s.inf_count,
                ])

    def summary_table(self) -> str:
        """Column-aligned text rendering of the aggregate rows."""
        headers = ["strategy", f"{self.measure}_geomean", "geo_stddev", "inf"]
        rows = [
            [s.strategy, f"{s.measure_geomean:.6g}", f"{s.geo_stddev:.6g}",
             str(s.inf_count)]
            for s in self.summaries
        ]
        widths = [
            max(len(headers[k]), *(len(r[k]) for r in rows)) if rows else len(headers[k])
            for k in range(len(headers))
        ]
        lines = ["  ".join(h.ljust(widths[k]) for k, h in enumerate(headers))]
        lines.append("  ".join("-" * widths[k] for k in range(len(headers))))
        for r in rows:
            lines.append("  ".join(r[k].ljust(widths[k]) for k in range(len(headers))))
        return "\n".join(lines)


def _solve_cell(args):
    model, strategy, node_limit, time_limit, big_m = args
    return solve(
        model, strategy, node_limit=node_limit, time_limit=time_limit, big_m=big_m
    )


def run_bench(
    instances: list[Milp],
    strategies: list[Strategy],
    *,
    measure: str = "nodes",
    node_limit: int | None = None,
    time_limit: float | None = None,
    big_m: float = DEFAULT_BIG_M,
    jobs: int = 1,
) -> BenchReport:
    """Solve every (instance, strategy) cell and aggregate per strategy."""
    if not instances or not strategies:
        raise ValueError("need at least one instance and one strategy")
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}; pick one of {MEASURES}")
    names = [m.name for m in instances]
    if len(set(names)) != len(names):
        raise ValueError("instance names must be unique")
    labels = [s.label for s in strategies]
    if len(set(labels)) != len(labels):
        raise ValueError("strategy labels must be unique")

    tasks = [
        (inst, strat, node_limit, time_limit, big_m)
        for inst in instances
        for strat in strategies
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_solve_cell, tasks, chunksize=1))
    else:
        results = [_solve_cell(t) for t in tasks]

    outcomes = {}
    k = 0
    for inst in instances:
        for strat in strategies:
            outcomes[(inst.name, strat.label)] = results[k]
            k += 1

    if measure == "gap":
        included = [
            name for name in names
            if all(outcomes[(name, lab)].objective != INF for lab in labels)
        ]
    else:
        included = names

    summaries = []
    for lab in labels:
        cells = [outcomes[(name, lab)] for name in included]
        values = [outcome_measure(o, measure) for o in cells]
        if values:
            geomean = shifted_geomean(values)
            spread = geo_stddev(values)
        else:
            geomean = float("nan")
            spread = float("nan")
        inf_count = sum(
            1 for name in names if outcomes[(name, lab)].objective == INF
        )
        summaries.append(StrategySummary(lab, geomean, spread, inf_count))

    return BenchReport(
        instance_names=tuple(names),
        strategy_labels=tuple(labels),
        outcomes=outcomes,
        summaries=tuple(summaries),
        measure=measure,
    )
