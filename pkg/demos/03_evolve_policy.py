"""Evolve a node-selection policy on a small training set.

Fitness is the shifted geometric mean of node counts over the training
instances (deterministic, so the whole run reproduces from its seed). The
winner and the per-generation convergence trace land in ./gp-demo-out.
"""

import numpy as np

from evobnb import GpConfig, evolve, gen_er_graph, gen_gisp, to_text

seeds = np.random.SeedSequence(2026).generate_state(12)
training = [gen_gisp(gen_er_graph(12, 0.6, int(s)), int(s)) for s in seeds]
print(f"training set: {len(training)} generalized-independent-set instances")

cfg = GpConfig(
    pop_size=12,
    generations=8,
    fitness_kind="nodes",
    node_limit=500,
    tournament_size=3,
    seed=99,
)
result = evolve(training, cfg, out_dir="gp-demo-out")

print()
print("generation  best-so-far  in-population  mean size")
for rec in result.trace:
    print(f"{rec.generation:10d}  {rec.best_so_far_fitness:11.3f}  "
          f"{rec.population_best_fitness:13.3f}  {rec.mean_size:9.2f}")

print()
print(f"winning policy: {to_text(result.best.expr)}")
print(f"fitness (shifted geomean of node counts): {result.best.fitness:.3f}")
print("artifacts: gp-demo-out/best.ssx, gp-demo-out/convergence.csv")
