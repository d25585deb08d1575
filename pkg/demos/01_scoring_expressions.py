"""Tour of the scoring-expression language.

A node-selection policy is a little arithmetic program over node and model
features. This script builds a few by hand, shows the textual round trip,
and sizes the policy space.
"""

import numpy as np

from evobnb import NodeContext, count_perfect_trees, evaluate, parse, random_tree, to_text

# A context captures what a policy can see when ranking one open node.
ctx = NodeContext(
    depth=4,
    best_estimate=-37.5,
    lower_bound=-42.0,
    root_dual_bound=-55.0,
    num_constraints=40,
    num_variables=28,
    big_m=1e8,
)

print("== classic hand-crafted policies, written as expressions ==")
for text, meaning in [
    ("lb", "plain best-first on the relaxation bound"),
    ("estimate", "best-first on the best estimate"),
    ("(sub lb (mul bigM depth))", "depth-first diving, bound breaks ties"),
    ("(div estimate depth)", "estimate scaled down by depth"),
]:
    e = parse(text)
    print(f"{text:28s} -> score {evaluate(e, ctx):16.6g}   # {meaning}")

print()
print("== protected division keeps every policy total ==")
zero_depth = NodeContext(depth=0, best_estimate=1.0, lower_bound=2.0,
                         root_dual_bound=0.0, num_constraints=1, num_variables=1)
e = parse("(div lb depth)")
print(f"(div lb depth) at depth 0 evaluates to {evaluate(e, zero_depth)} (not an error)")

print()
print("== random policies round-trip through text ==")
rng = np.random.default_rng(7)
for _ in range(3):
    e = random_tree(rng, 1, 4)
    text = to_text(e)
    assert parse(text) == e
    print(f"size {e.size:2d}, depth {e.depth}: {text}")

print()
print("== how big is the space? ==")
for depth in range(4):
    print(f"perfect trees of depth {depth}: {count_perfect_trees(depth):,}")
