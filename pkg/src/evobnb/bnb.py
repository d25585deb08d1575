"""Branch-and-bound engine with pluggable node-selection strategies.

Each node's LP relaxation is solved when the node is created, so every open
node carries its exact lower bound, fractional variables, and best estimate;
selection then ranks fully-informed nodes. Scores are minimized: the open
node with the smallest score is processed next, and ties break on creation
order, which makes every run deterministic under a node limit.

Branching is fixed to the most-fractional variable so that search strategies
are the only moving part when comparing policies.
"""

from __future__ import annotations

import heapq
import json
import math
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .expr import DEFAULT_BIG_M, NodeContext, ScoreExpr, evaluate, to_text
from .lp import LpProblem, LpStatus, solve_lp
from .milp import Milp

INT_TOL = 1e-6
PRUNE_TOL = 1e-9
GAP_SENTINEL = 1e20
INF = float("inf")


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    TIME_LIMIT = "time_limit"
    NODE_LIMIT = "node_limit"


class UnboundedRelaxationError(RuntimeError):
    """The root relaxation is unbounded; the model is outside engine scope."""


@dataclass(frozen=True)
class BnbNode:
    """A live subproblem: the root model plus a chain of bound changes."""

    id: int
    depth: int
    bound_changes: tuple[tuple[int, float, float], ...]
    lower_bound: float
    frac: tuple[tuple[int, float, float], ...]  # (var, floor(x), frac part)
    best_estimate: float
    parent_id: int = -1


class PseudocostTable:
    """Running averages of per-unit bound degradation per variable and side."""

    def __init__(self, num_vars: int):
        self.down_sum = np.zeros(num_vars)
        self.down_count = np.zeros(num_vars, dtype=np.int64)
        self.up_sum = np.zeros(num_vars)
        self.up_count = np.zeros(num_vars, dtype=np.int64)

    def add(self, var: int, direction: str, observation: float) -> None:
        observation = max(0.0, observation)
        if direction == "down":
            self.down_sum[var] += observation
            self.down_count[var] += 1
        elif direction == "up":
            self.up_sum[var] += observation
            self.up_count[var] += 1
        else:
            raise ValueError(f"direction must be 'down' or 'up', got {direction!r}")

    def global_average(self) -> float:
        count = int(self.down_count.sum() + self.up_count.sum())
        if count == 0:
            return 1.0
        return float((self.down_sum.sum() + self.up_sum.sum()) / count)

    def average(self, var: int, direction: str) -> float:
        if direction == "down":
            if self.down_count[var]:
                return float(self.down_sum[var] / self.down_count[var])
        else:
            if self.up_count[var]:
                return float(self.up_sum[var] / self.up_count[var])
        return self.global_average()


def update_pseudocosts(
    table: PseudocostTable,
    var: int,
    parent_bound: float,
    child_bound: float,
    direction: str,
    frac_part: float,
) -> float:
    """Record one observed degradation; returns the unit observation."""
    if not 0.0 < frac_part < 1.0:
        raise ValueError("fractional part must lie strictly between 0 and 1")
    denom = frac_part if direction == "down" else 1.0 - frac_part
    observation = max(0.0, (child_bound - parent_bound) / denom)
    table.add(var, direction, observation)
    return observation


def best_estimate(
    lower_bound: float,
    frac: tuple[tuple[int, float, float], ...],
    table: PseudocostTable,
) -> float:
    """Predicted best objective in the subtree: bound plus minimal degradations."""
    total = lower_bound
    for var, _floor, f in frac:
        down = table.average(var, "down") * f
        up = table.average(var, "up") * (1.0 - f)
        total += min(down, up)
    return total


def compute_gap(incumbent: float, best_lb: float) -> float:
    """Relative gap |z* - lb| / |min(z*, lb)| with the no-incumbent sentinel."""
    if incumbent == INF:
        return GAP_SENTINEL
    if abs(incumbent - best_lb) <= 1e-9:
        return 0.0
    denom = min(incumbent, best_lb)
    if denom == 0.0:
        return GAP_SENTINEL
    return abs((incumbent - best_lb) / denom)


@dataclass(frozen=True)
class ModelInfo:
    """Per-instance constants a scoring policy can reference."""

    root_dual_bound: float
    num_constraints: int
    num_variables: int
    big_m: float = DEFAULT_BIG_M


class Strategy:
    """Base node-selection strategy; lower scores are explored first."""

    label = "strategy"
    dfs_child_first = False

    def score(self, node: BnbNode, info: ModelInfo) -> float:
        raise NotImplementedError


class LbBfs(Strategy):
    """Best-first on the node's own relaxation bound."""

    label = "lb-bfs"

    def score(self, node, info):
        return node.lower_bound


class BeBfs(Strategy):
    """Best-first on the best estimate."""

    label = "be-bfs"

    def score(self, node, info):
        return node.best_estimate

class BeDfs(BeBfs):
    """Dive onto the better child while one is open; best estimate globally
    otherwise."""

    label = "be-dfs"
    dfs_child_first = True


class ScoreBfs(Strategy):
    """Best-first on an arbitrary scoring expression."""

    def __init__(self, expr: ScoreExpr, label: str | None = None):
        self.expr = expr
        self.label = label if label is not None else f"expr:{to_text(expr)}"

    def score(self, node, info):
        ctx = NodeContext(
            depth=node.depth,
            best_estimate=node.best_estimate,
            lower_bound=node.lower_bound,
            root_dual_bound=info.root_dual_bound,
            num_constraints=info.num_constraints,
            num_variables=info.num_variables,
            big_m=info.big_m,
        )
        return evaluate(self.expr, ctx)


class OpenNodes:
    """Priority pool keyed by (score, creation id); supports targeted removal."""

    def __init__(self):
        self._heap: list[tuple[float, int]] = []
        self._alive: dict[int, BnbNode] = {}

    def __len__(self):
        return len(self._alive)

    def push(self, node: BnbNode, score: float) -> None:
        heapq.heappush(self._heap, (score, node.id))
        self._alive[node.id] = node

    def get(self, node_id: int) -> BnbNode | None:
        return self._alive.get(node_id)

    def remove(self, node_id: int) -> BnbNode:
        return self._alive.pop(node_id)

    def pop_min(self) -> BnbNode:
        while self._heap:
            _score, node_id = heapq.heappop(self._heap)
            node = self._alive.pop(node_id, None)
            if node is not None:
                return node
        raise IndexError("pop from an empty node pool")

    def min_lower_bound(self) -> float:
        if not self._alive:
            return INF
        return min(n.lower_bound for n in self._alive.values())


def next_node(
    pool: OpenNodes, strategy: Strategy, last_children: tuple[int, ...] = ()
) -> BnbNode:
    """Pop the node the strategy wants explored next.

    Depth-first variants prefer the better-estimate child of the node just
    processed while one is still open; everything else (and the fallback) is
    a straight pop of the minimum (score, id) key.
    """
    if strategy.dfs_child_first:
        open_children = [
            n for n in (pool.get(cid) for cid in last_children) if n is not None
        ]
        if open_children:
            best = min(open_children, key=lambda n: (n.best_estimate, n.id))
            return pool.remove(best.id)
    return pool.pop_min()


def fractional_parts(x: np.ndarray, int_idx: np.ndarray):
    """(var, floor, frac) for integer variables fractional beyond INT_TOL."""
    out = []
    for j in int_idx:
        fl = math.floor(x[j])
        f = x[j] - fl
        if INT_TOL < f < 1.0 - INT_TOL:
            out.append((int(j), float(fl), float(f)))
    return tuple(out)


def branch_variable(frac: tuple[tuple[int, float, float], ...]) -> int:
    """Most-fractional rule: argmax min(f, 1-f), ties to the smallest index.

    Near-ties (within 1e-12) count as ties so that mathematically equal
    fractionalities are not split by round-off.
    """
    if not frac:
        raise ValueError("no fractional variable to branch on")
    best_var = -1
    best_score = -1.0
    for var, _floor, f in frac:
        score = min(f, 1.0 - f)
        if score > best_score + 1e-12:
            best_score = score
            best_var = var
    return best_var


@dataclass(frozen=True)
class SolveOutcome:
    """Result of one branch-and-bound run."""

    status: SolveStatus
    objective: float  # +inf when no incumbent was found
    best_lb: float
    gap: float
    nodes_explored: int
    wall_time: float
    strategy: str
    solution: np.ndarray | None = None

    def to_json_dict(self) -> dict:
        return {
            "status": self.status.value,
            "objective": None if self.objective == INF else self.objective,
            "best_lb": None if not math.isfinite(self.best_lb) else self.best_lb,
            "gap": self.gap,
            "nodes": self.nodes_explored,
            "wall_time_s": self.wall_time,
            "strategy": self.strategy,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def solve(
    model: Milp,
    strategy: Strategy,
    *,
    node_limit: int | None = None,
    time_limit: float | None = None,
    big_m: float = DEFAULT_BIG_M,
    check_invariants: bool = False,
) -> SolveOutcome:
    """Run branch and bound on ``model`` under the given strategy and limits.

    The node limit counts LP-solved nodes. With no time limit the run is
    fully deterministic: two invocations return identical outcomes.
    """
    t0 = time.perf_counter()
    lp0 = model.lp
    int_idx = np.flatnonzero(model.integer_mask)
    pseudocosts = PseudocostTable(model.num_vars)
    pool = OpenNodes()

    incumbent = INF
    incumbent_x: np.ndarray | None = None
    nodes_solved = 0
    next_id = 0
    last_children: tuple[int, ...] = ()

    def make_outcome(status):
        if status is SolveStatus.OPTIMAL:
            best_lb = incumbent  # search complete: nothing left to close
            gap = 0.0
        else:
            # min over unexplored nodes, capped by the incumbent so nodes a
            # fresh incumbent already dominates cannot raise the bound
            best_lb = min(incumbent, pool.min_lower_bound())
            gap = compute_gap(incumbent, best_lb)
        return SolveOutcome(
            status=status,
            objective=incumbent,
            best_lb=best_lb,
            gap=gap,
            nodes_explored=nodes_solved,
            wall_time=time.perf_counter() - t0,
            strategy=strategy.label,
            solution=incumbent_x,
        )

    root_res = solve_lp(lp0)
    nodes_solved = 1
    if root_res.status is LpStatus.UNBOUNDED:
        raise UnboundedRelaxationError(
            "root relaxation is unbounded; add variable bounds"
        )
    if root_res.status is LpStatus.INFEASIBLE:
        return make_outcome(SolveStatus.OPTIMAL)

    info = ModelInfo(
        root_dual_bound=root_res.objective,
        num_constraints=model.num_cons,
        num_variables=model.num_vars,
        big_m=big_m,
    )

    frac = fractional_parts(root_res.x, int_idx)
    if not frac:
        incumbent = root_res.objective
        incumbent_x = root_res.x
        return make_outcome(SolveStatus.OPTIMAL)
    root = BnbNode(
        id=0,
        depth=0,
        bound_changes=(),
        lower_bound=root_res.objective,
        frac=frac,
        best_estimate=best_estimate(root_res.objective, frac, pseudocosts),
    )
    next_id = 1
    pool.push(root, strategy.score(root, info))

    while True:
        if not len(pool):
            return make_outcome(SolveStatus.OPTIMAL)
        if node_limit is not None and nodes_solved >= node_limit:
            return make_outcome(SolveStatus.NODE_LIMIT)
        if time_limit is not None and time.perf_counter() - t0 >= time_limit:
            return make_outcome(SolveStatus.TIME_LIMIT)

        node = next_node(pool, strategy, last_children)
        last_children = ()
        if node.lower_bound >= incumbent - PRUNE_TOL:
            if check_invariants:
                assert node.lower_bound >= incumbent - PRUNE_TOL
            continue

        var = branch_variable(node.frac)
        floor_val, f = next(
            (fl, fr) for j, fl, fr in node.frac if j == var
        )
        lo = lp0.lower.copy()
        hi = lp0.upper.copy()
        for j, l, h in node.bound_changes:
            lo[j], hi[j] = l, h

        children = []
        for direction in ("down", "up"):
            if direction == "down":
                new_lo, new_hi = lo[var], floor_val
            else:
                new_lo, new_hi = floor_val + 1.0, hi[var]
            if new_lo > new_hi:
                continue  # empty box: infeasible without an LP solve
            child_lo = lo.copy()
            child_hi = hi.copy()
            child_lo[var], child_hi[var] = new_lo, new_hi
            res = solve_lp(
                LpProblem(lp0.objective, lp0.lhs, lp0.rhs, child_lo, child_hi)
            )
            nodes_solved += 1
            child_id = next_id
            next_id += 1
            if res.status is not LpStatus.OPTIMAL:
                continue
            bound = res.objective
            if check_invariants:
                assert bound >= node.lower_bound - 1e-6 * (1 + abs(bound))
            update_pseudocosts(
                pseudocosts, var, node.lower_bound, bound, direction, f
            )
            child_frac = fractional_parts(res.x, int_idx)
            if not child_frac:
                if bound < incumbent:
                    incumbent = bound
                    incumbent_x = res.x
                continue
            if bound >= incumbent - PRUNE_TOL:
                if check_invariants:
                    assert bound >= incumbent - PRUNE_TOL
                continue
            child = BnbNode(
                id=child_id,
                depth=node.depth + 1,
                bound_changes=node.bound_changes + ((var, new_lo, new_hi),),
                lower_bound=bound,
                frac=child_frac,
                best_estimate=best_estimate(bound, child_frac, pseudocosts),
                parent_id=node.id,
            )
            pool.push(child, strategy.score(child, info))
            children.append(child.id)
        last_children = tuple(children)
