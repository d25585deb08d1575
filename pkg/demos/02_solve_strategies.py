"""Solve one instance under several search strategies and compare node counts.

The optimum never changes with the strategy (branch and bound is exact);
what changes is how much of the tree each policy has to look at.
"""

from evobnb import BeBfs, BeDfs, LbBfs, ScoreBfs, gen_er_graph, gen_gisp, parse, solve

graph = gen_er_graph(14, 0.6, seed=5)
model = gen_gisp(graph, seed=5)
print(f"instance: {model.name} with {model.num_vars} binaries, "
      f"{model.num_cons} constraints")
print()

strategies = [
    LbBfs(),
    BeBfs(),
    BeDfs(),
    ScoreBfs(parse("(sub lb (mul bigM depth))"), label="dive-then-bound"),
    ScoreBfs(parse("(div estimate depth)"), label="estimate-over-depth"),
]

print(f"{'strategy':22s} {'objective':>12s} {'nodes':>7s} {'time':>8s}")
for strategy in strategies:
    out = solve(model, strategy)
    print(f"{strategy.label:22s} {out.objective:12.1f} {out.nodes_explored:7d} "
          f"{out.wall_time:7.3f}s")
