"""The full methodology: train a policy on one family, then measure how it
generalizes to fresh instances of the same size (test) and larger ones
(transfer).

Node counts are deterministic, so this whole comparison reproduces exactly.
Takes around a minute.
"""

import numpy as np

from evobnb import (
    BeBfs,
    BeDfs,
    GpConfig,
    LbBfs,
    ScoreBfs,
    evolve,
    gen_er_graph,
    gen_maxsat,
    geo_stddev,
    shifted_geomean,
    solve,
    to_text,
)


def maxsat_set(count, n_lo, n_hi, base_seed):
    out = []
    states = np.random.SeedSequence(base_seed).generate_state(2 * count)
    for i in range(count):
        rng = np.random.default_rng(int(states[2 * i]))
        n = int(rng.integers(n_lo, n_hi + 1))
        g = gen_er_graph(n, 0.6, int(states[2 * i + 1]))
        out.append(gen_maxsat(n, g, int(states[2 * i + 1])))
    return out


train = maxsat_set(12, 12, 14, base_seed=501)
test = maxsat_set(12, 12, 14, base_seed=502)
transfer = maxsat_set(8, 16, 18, base_seed=503)
print("training on 12 MAXSAT instances (12-14 vars), "
      "evaluating on 12 test + 8 larger transfer instances")

cfg = GpConfig(pop_size=10, generations=6, fitness_kind="nodes",
               node_limit=3000, tournament_size=3, seed=2468)
result = evolve(train, cfg)
print(f"evolved policy: {to_text(result.best.expr)} "
      f"(training fitness {result.best.fitness:.2f})")


def node_geomean(instances, strategy):
    counts = [solve(m, strategy, node_limit=20000).nodes_explored
              for m in instances]
    return shifted_geomean(counts), geo_stddev(counts)


strategies = [
    LbBfs(), BeBfs(), BeDfs(), ScoreBfs(result.best.expr, label="evolved"),
]
print()
print(f"{'strategy':10s} {'train':>16s} {'test':>16s} {'transfer':>16s}")
for strategy in strategies:
    cells = []
    for instances in (train, test, transfer):
        mean, spread = node_geomean(instances, strategy)
        cells.append(f"{mean:9.2f} x/{spread:4.2f}")
    print(f"{strategy.label:10s} {cells[0]:>16s} {cells[1]:>16s} {cells[2]:>16s}")
print()
print("(shifted geometric mean of node counts, with geometric std dev)")
