"""Evolutionary search over scoring expressions.

A generation selects with a double tournament (two fitness tournaments whose
winners then play a size round biased toward the smaller tree), crosses
consecutive selected pairs, and mutates individuals by grafting fresh random
subtrees. Fitness is the 1-shifted geometric mean of a per-instance measure
(wall time, node count, or optimality gap at a limit) over the training set;
smaller is better throughout.

A hall of fame keeps the best individual ever evaluated, so the reported
winner can only improve across generations even though the tournament
itself is not elitist.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bench import outcome_measure, shifted_geomean
from .bnb import ScoreBfs, solve
from .expr import DEFAULT_BIG_M, ScoreExpr, random_tree, replace_at, subtree_at, to_text, write_expr_file
from .milp import Milp

FITNESS_KINDS = ("time", "nodes", "gap")

# Default per-instance budgets during fitness evaluation: a node limit for
# the deterministic kinds, a wall-clock limit for gap-style training.
DEFAULT_NODE_LIMIT = 50_000
DEFAULT_GAP_TIME_LIMIT = 10.0


@dataclass
class Individual:
    expr: ScoreExpr
    fitness: float | None = None

    @property
    def size(self) -> int:
        return self.expr.size


@dataclass
class GpConfig:
    pop_size: int = 50
    generations: int = 50
    p_mate: float = 0.9
    p_mutate: float = 0.1
    d_init_min: int = 1
    d_init_max: int = 17
    d_mut_min: int = 1
    d_mut_max: int = 5
    tournament_size: int = 5
    p_size: float = 1.2
    fitness_kind: str = "nodes"
    node_limit: int | None = None
    time_limit: float | None = None
    big_m: float = DEFAULT_BIG_M
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.pop_size < 1:
            raise ValueError("pop_size must be positive")
        if self.generations < 0:
            raise ValueError("generations must be nonnegative")
        for name in ("p_mate", "p_mutate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not 1.0 <= self.p_size <= 2.0:
            raise ValueError("p_size must lie in [1, 2]")
        if not 0 <= self.d_init_min <= self.d_init_max:
            raise ValueError("bad initialization depth bounds")
        if not 0 <= self.d_mut_min <= self.d_mut_max:
            raise ValueError("bad mutation depth bounds")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be positive")
        if self.fitness_kind not in FITNESS_KINDS:
            raise ValueError(
                f"fitness_kind must be one of {FITNESS_KINDS}, got {self.fitness_kind!r}"
            )

    def resolved_limits(self) -> tuple[int | None, float | None]:
        node_limit, time_limit = self.node_limit, self.time_limit
        if node_limit is None and time_limit is None:
            if self.fitness_kind == "gap":
                time_limit = DEFAULT_GAP_TIME_LIMIT
            else:
                node_limit = DEFAULT_NODE_LIMIT
        return node_limit, time_limit


def _solve_measure(args) -> float:
    expr, instance, kind, node_limit, time_limit, big_m = args
    outcome = solve(
        instance,
        ScoreBfs(expr),
        node_limit=node_limit,
        time_limit=time_limit,
        big_m=big_m,
    )
    return outcome_measure(outcome, kind)


def evaluate_fitness(
    expr: ScoreExpr, training: list[Milp], cfg: GpConfig, _executor=None
) -> float:
    """Shifted geometric mean of the per-instance measure under cfg limits."""
    if not training:
        raise ValueError("training set must be nonempty")
    node_limit, time_limit = cfg.resolved_limits()
    tasks = [
        (expr, inst, cfg.fitness_kind, node_limit, time_limit, cfg.big_m)
        for inst in training
    ]
    if _executor is not None:
        measures = list(_executor.map(_solve_measure, tasks, chunksize=1))
    else:
        measures = [_solve_measure(t) for t in tasks]
    return shifted_geomean(measures)


def size_playoff(
    a: Individual, b: Individual, rng: np.random.Generator, p_size: float
) -> Individual:
    """Pick between two finalists by tree size.

    The smaller tree wins with probability p_size / 2 (always, at
    p_size = 2), otherwise the larger one does.
    """
    if a.size <= b.size:
        smaller, larger = a, b
    else:
        smaller, larger = b, a
    return smaller if rng.random() < p_size / 2.0 else larger


def double_tournament(
    pop: list[Individual],
    rng: np.random.Generator,
    tournament_size: int,
    p_size: float,
) -> Individual:
    """Two fitness tournaments, then a size playoff favoring the smaller tree.

    Each fitness round draws tournament_size individuals uniformly with
    replacement and keeps the fittest; the two round winners then meet in
    :func:`size_playoff`. Returns a copy.
    """
    if not pop:
        raise ValueError("population must be nonempty")

    def fitness_round():
        picks = rng.integers(0, len(pop), size=tournament_size)
        best = pop[picks[0]]
        for k in picks[1:]:
            if pop[k].fitness < best.fitness:
                best = pop[k]
        return best

    winner = size_playoff(fitness_round(), fitness_round(), rng, p_size)
    return Individual(winner.expr, winner.fitness)


def crossover(
    a: Individual, b: Individual, rng: np.random.Generator
) -> tuple[Individual, Individual]:
    """One-point crossover: swap the subtrees rooted at a random node of each."""
    ia = int(rng.integers(a.size))
    ib = int(rng.integers(b.size))
    sub_a = subtree_at(a.expr, ia)
    sub_b = subtree_at(b.expr, ib)
    return (
        Individual(replace_at(a.expr, ia, sub_b)),
        Individual(replace_at(b.expr, ib, sub_a)),
    )


def mutate(
    a: Individual, rng: np.random.Generator, d_mut_min: int, d_mut_max: int
) -> Individual:
    """Uniform mutation: graft a fresh random tree at a random node."""
    index = int(rng.integers(a.size))
    graft = random_tree(rng, d_mut_min, d_mut_max)
    return Individual(replace_at(a.expr, index, graft))


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best_so_far_fitness: float
    population_best_fitness: float
    mean_size: float


@dataclass
class EvolveResult:
    best: Individual
    trace: list[GenerationRecord] = field(default_factory=list)


def write_convergence_csv(trace: list[GenerationRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["generation", "best_so_far_fitness", "population_best_fitness", "mean_size"]
        )
        for rec in trace:
            w.writerow([
                rec.generation,
                repr(rec.best_so_far_fitness),
                repr(rec.population_best_fitness),
                repr(rec.mean_size),
            ])


def evolve(
    training: list[Milp], cfg: GpConfig, out_dir: str | Path | None = None
) -> EvolveResult:
    """Run the generational loop; returns the hall-of-fame best and a trace.

    Deterministic for a fixed cfg.seed whenever the fitness measure itself is
    deterministic (nodes, or gap under a node limit). When ``out_dir`` is
    given, writes ``best.ssx`` and ``convergence.csv`` there.
    """
    if not training:
        raise ValueError("training set must be nonempty")
    rng = np.random.default_rng(cfg.seed)
    cache: dict[str, float] = {}
    executor = ProcessPoolExecutor(max_workers=cfg.jobs) if cfg.jobs > 1 else None

    best: Individual | None = None

    def consider(ind: Individual) -> None:
        nonlocal best
        if (
            best is None
            or ind.fitness < best.fitness
            or (ind.fitness == best.fitness and ind.size < best.size)
        ):
            best = Individual(ind.expr, ind.fitness)

    def evaluate_batch(pop: list[Individual]) -> None:
        pending: dict[str, ScoreExpr] = {}
        for ind in pop:
            if ind.fitness is not None:
                continue
            key = to_text(ind.expr)
            if key not in cache and key not in pending:
                pending[key] = ind.expr
        for key, expr in pending.items():
            cache[key] = evaluate_fitness(expr, training, cfg, _executor=executor)
        for ind in pop:
            if ind.fitness is None:
                ind.fitness = cache[to_text(ind.expr)]
        for ind in pop:
            consider(ind)

    try:
        pop = [
            Individual(random_tree(rng, cfg.d_init_min, cfg.d_init_max))
            for _ in range(cfg.pop_size)
        ]
        evaluate_batch(pop)
        trace = [_record(0, best, pop)]

        for gen in range(1, cfg.generations + 1):
            selected = [
                double_tournament(pop, rng, cfg.tournament_size, cfg.p_size)
                for _ in range(cfg.pop_size)
            ]
            for i in range(0, cfg.pop_size - 1, 2):
                if rng.random() < cfg.p_mate:
                    selected[i], selected[i + 1] = crossover(
                        selected[i], selected[i + 1], rng
                    )
            for i in range(cfg.pop_size):
                if rng.random() < cfg.p_mutate:
                    selected[i] = mutate(
                        selected[i], rng, cfg.d_mut_min, cfg.d_mut_max
                    )
            evaluate_batch(selected)
            pop = selected
            trace.append(_record(gen, best, pop))
    finally:
        if executor is not None:
            executor.shutdown()

    result = EvolveResult(best=best, trace=trace)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_expr_file(result.best.expr, out / "best.ssx")
        write_convergence_csv(result.trace, out / "convergence.csv")
    return result


def _record(gen: int, best: Individual, pop: list[Individual]) -> GenerationRecord:
    return GenerationRecord(
        generation=gen,
        best_so_far_fitness=best.fitness,
        population_best_fitness=min(ind.fitness for ind in pop),
        mean_size=float(np.mean([ind.size for ind in pop])),
    )
