"""Scoring expressions over branch-and-bound node features.

A node-selection policy is an expression tree built from four binary
arithmetic operators and seven terminals (three node features, three model
features, one large constant). The engine always *minimizes* scores: the
open node with the smallest value is explored next, so e.g.
``(sub lb (mul bigM depth))`` dives depth-first and breaks ties by lower
bound.

Trees are immutable; evaluation is total (protected division, overflow
clamping) so any tree can rank any node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

OPERATORS = ("add", "sub", "mul", "div")
TERMINALS = ("depth", "estimate", "lb", "rootlb", "ncons", "nvars", "bigM")
SYMBOLS = OPERATORS + TERMINALS

_OPERATOR_SET = frozenset(OPERATORS)
_TERMINAL_SET = frozenset(TERMINALS)

# Non-finite intermediate results are clamped to +/- BIG_SCORE so that every
# score is finite and the open-node queue stays totally ordered.
BIG_SCORE = 1e30

# Default magnitude of the bigM terminal; large enough to dominate any
# desk-scale bound while M * depth still fits comfortably in a double.
DEFAULT_BIG_M = 1e8


class ExprError(ValueError):
    """Base class for expression parsing errors."""


class ExprSyntaxError(ExprError):
    """Malformed expression text (unbalanced parens, trailing tokens, ...)."""


class ExprArityError(ExprError):
    """An operator or terminal applied to the wrong number of arguments."""


class ExprSymbolError(ExprError):
    """A token that is neither an operator nor a terminal."""


@dataclass(frozen=True)
class ScoreExpr:
    """One node of a scoring expression tree.

    Internal nodes carry an operator symbol and exactly two children;
    leaves carry a terminal symbol and no children.
    """

    symbol: str
    children: tuple["ScoreExpr", ...] = ()

    def __post_init__(self):
        if self.symbol in _OPERATOR_SET:
            if len(self.children) != 2:
                raise ExprArityError(
                    f"operator '{self.symbol}' requires 2 children, "
                    f"got {len(self.children)}"
                )
        elif self.symbol in _TERMINAL_SET:
            if self.children:
                raise ExprArityError(
                    f"terminal '{self.symbol}' takes no children"
                )
        else:
            raise ExprSymbolError(f"unknown symbol '{self.symbol}'")

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def size(self) -> int:
        """Total node count."""
        return 1 + sum(c.size for c in self.children)

    @property
    def depth(self) -> int:
        """Longest root-to-leaf edge count; 0 for a single leaf."""
        if not self.children:
            return 0
        return 1 + max(c.depth for c in self.children)

    def __str__(self) -> str:
        return to_text(self)


# Convenience constructors; tests and demos read better with these.
def add(a: ScoreExpr, b: ScoreExpr) -> ScoreExpr:
    return ScoreExpr("add", (a, b))


def sub(a: ScoreExpr, b: ScoreExpr) -> ScoreExpr:
    return ScoreExpr("sub", (a, b))


def mul(a: ScoreExpr, b: ScoreExpr) -> ScoreExpr:
    return ScoreExpr("mul", (a, b))


def div(a: ScoreExpr, b: ScoreExpr) -> ScoreExpr:
    return ScoreExpr("div", (a, b))


DEPTH = ScoreExpr("depth")
ESTIMATE = ScoreExpr("estimate")
LB = ScoreExpr("lb")
ROOTLB = ScoreExpr("rootlb")
NCONS = ScoreExpr("ncons")
NVARS = ScoreExpr("nvars")
BIG_M = ScoreExpr("bigM")


@dataclass(frozen=True)
class NodeContext:
    """Feature values a scoring expression is evaluated against.

    ``depth``, ``best_estimate`` and ``lower_bound`` vary from node to node;
    ``root_dual_bound``, ``num_constraints`` and ``num_variables`` are fixed
    per instance; ``big_m`` is the engine's large constant.
    """

    depth: int
    best_estimate: float
    lower_bound: float
    root_dual_bound: float
    num_constraints: int
    num_variables: int
    big_m: float = DEFAULT_BIG_M

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be nonnegative")
        if self.num_constraints < 0 or self.num_variables < 0:
            raise ValueError("model sizes must be nonnegative")
        for name in ("best_estimate", "lower_bound", "root_dual_bound", "big_m"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.big_m <= 0:
            raise ValueError("big_m must be positive")


_TERMINAL_GETTERS = {
    "depth": lambda ctx: float(ctx.depth),
    "estimate": lambda ctx: ctx.best_estimate,
    "lb": lambda ctx: ctx.lower_bound,
    "rootlb": lambda ctx: ctx.root_dual_bound,
    "ncons": lambda ctx: float(ctx.num_constraints),
    "nvars": lambda ctx: float(ctx.num_variables),
    "bigM": lambda ctx: ctx.big_m,
}


def _clamp(value: float) -> float:
    if math.isfinite(value):
        return value
    if math.isnan(value):
        return BIG_SCORE
    return BIG_SCORE if value > 0 else -BIG_SCORE


def evaluate(expr: ScoreExpr, ctx: NodeContext) -> float:
    """Evaluate ``expr`` against ``ctx``; always returns a finite float.

    Division by exact zero yields 1; any non-finite intermediate is clamped
    to +/- BIG_SCORE.
    """
    symbol = expr.symbol
    if not expr.children:
        return _TERMINAL_GETTERS[symbol](ctx)
    a = evaluate(expr.children[0], ctx)
    b = evaluate(expr.children[1], ctx)
    if symbol == "add":
        value = a + b
    elif symbol == "sub":
        value = a - b
    elif symbol == "mul":
        value = a * b
    else:  # div, protected
        value = 1.0 if b == 0.0 else a / b
    return _clamp(value)


def _tokenize(text: str) -> list[tuple[str, int]]:
    """Split into (token, byte offset) pairs; '#' comments run to end of line."""
    data = text.encode("utf-8")
    tokens = []
    i = 0
    n = len(data)
    while i < n:
        c = data[i]
        if c in b" \t\r\n":
            i += 1
        elif c == ord("#"):
            while i < n and data[i] != ord("\n"):
                i += 1
        elif c in b"()":
            tokens.append((chr(c), i))
            i += 1
        else:
            j = i
            while j < n and data[j] not in b" \t\r\n()#":
                j += 1
            tokens.append((data[i:j].decode("utf-8"), i))
            i = j
    return tokens


def parse(text: str) -> ScoreExpr:
    """Parse prefix s-expression text into a tree.

    Grammar: an expression is either a bare terminal symbol or
    ``(op expr expr)`` with op in {add, sub, mul, div}.
    """
    tokens = _tokenize(text)
    if not tokens:
        raise ExprSyntaxError("empty expression")
    expr, pos = _parse_expr(tokens, 0, len(text.encode("utf-8")))
    if pos != len(tokens):
        tok, off = tokens[pos]
        raise ExprSyntaxError(f"trailing content '{tok}' at byte {off}")
    return expr


def _parse_expr(tokens, pos, end_offset) -> tuple[ScoreExpr, int]:
    if pos >= len(tokens):
        raise ExprSyntaxError(f"unexpected end of input at byte {end_offset}")
    tok, off = tokens[pos]
    if tok == "(":
        if pos + 1 >= len(tokens):
            raise ExprSyntaxError(f"unexpected end of input at byte {end_offset}")
        head, head_off = tokens[pos + 1]
        if head in ("(", ")"):
            raise ExprSyntaxError(f"expected operator at byte {head_off}")
        if head in _TERMINAL_SET:
            raise ExprArityError(
                f"terminal '{head}' takes no arguments (at byte {head_off})"
            )
        if head not in _OPERATOR_SET:
            raise ExprSymbolError(f"unknown symbol '{head}' at byte {head_off}")
        pos += 2
        args = []
        while True:
            if pos >= len(tokens):
                raise ExprSyntaxError(
                    f"missing ')' at byte {end_offset}"
                )
            if tokens[pos][0] == ")":
                break
            child, pos = _parse_expr(tokens, pos, end_offset)
            args.append(child)
        if len(args) != 2:
            raise ExprArityError(
                f"operator '{head}' expects 2 arguments, got {len(args)} "
                f"(at byte {head_off})"
            )
        return ScoreExpr(head, tuple(args)), pos + 1
    if tok == ")":
        raise ExprSyntaxError(f"unexpected ')' at byte {off}")
    if tok in _TERMINAL_SET:
        return ScoreExpr(tok), pos + 1
    if tok in _OPERATOR_SET:
        raise ExprSyntaxError(
            f"operator '{tok}' outside parenthesized form at byte {off}"
        )
    raise ExprSymbolError(f"unknown symbol '{tok}' at byte {off}")


def to_text(expr: ScoreExpr) -> str:
    """Canonical prefix form; ``parse(to_text(e)) == e``."""
    if not expr.children:
        return expr.symbol
    left, right = expr.children
    return f"({expr.symbol} {to_text(left)} {to_text(right)})"


def read_expr_file(path) -> ScoreExpr:
    """Read a single expression from a .ssx file ('#' comments allowed)."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())


def write_expr_file(expr: ScoreExpr, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_text(expr) + "\n")


def random_tree(rng: np.random.Generator, depth_min: int, depth_max: int) -> ScoreExpr:
    """Grow a random tree whose leaves all lie at depth in [depth_min, depth_max].

    Above depth_min only operators are drawn; at depth_max only terminals;
    in between each draw is uniform over the 11 operators and terminals.
    """
    if not 0 <= depth_min <= depth_max:
        raise ValueError("need 0 <= depth_min <= depth_max")
    return _grow(rng, 0, depth_min, depth_max)


def _grow(rng, depth, depth_min, depth_max) -> ScoreExpr:
    if depth < depth_min:
        symbol = OPERATORS[rng.integers(len(OPERATORS))]
    elif depth == depth_max:
        symbol = TERMINALS[rng.integers(len(TERMINALS))]
    else:
        symbol = SYMBOLS[rng.integers(len(SYMBOLS))]
    if symbol in _OPERATOR_SET:
        left = _grow(rng, depth + 1, depth_min, depth_max)
        right = _grow(rng, depth + 1, depth_min, depth_max)
        return ScoreExpr(symbol, (left, right))
    return ScoreExpr(symbol)


def count_perfect_trees(depth: int) -> int:
    """Number of distinct perfect trees of the given depth.

    A perfect tree of depth r has 2**r leaves (7 terminal choices each) and
    2**r - 1 internal nodes (4 operator choices each).
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if depth > 25:
        raise OverflowError("count_perfect_trees only supports depth <= 25")
    leaves = 2 ** depth
    return len(TERMINALS) ** leaves * len(OPERATORS) ** (leaves - 1)


def iter_nodes(expr: ScoreExpr) -> list[ScoreExpr]:
    """All subtrees in preorder; index 0 is the tree itself."""
    out = [expr]
    for child in expr.children:
        out.extend(iter_nodes(child))
    return out


def subtree_at(expr: ScoreExpr, index: int) -> ScoreExpr:
    """Subtree rooted at the given preorder index."""
    nodes = iter_nodes(expr)
    if not 0 <= index < len(nodes):
        raise IndexError(f"node index {index} out of range for size {len(nodes)}")
    return nodes[index]


def replace_at(expr: ScoreExpr, index: int, replacement: ScoreExpr) -> ScoreExpr:
    """Copy of ``expr`` with the subtree at the preorder index swapped out."""
    if not 0 <= index < expr.size:
        raise IndexError(f"node index {index} out of range for size {expr.size}")
    new_expr, consumed = _replace(expr, index, replacement)
    assert consumed < 0
    return new_expr


def _replace(expr, index, replacement):
    # Returns (tree, remaining); remaining < 0 once the swap happened.
    if index == 0:
        return replacement, -1
    remaining = index - 1
    new_children = []
    done = False
    for child in expr.children:
        if done:
            new_children.append(child)
            continue
        size = child.size
        if remaining < size:
            new_child, _ = _replace(child, remaining, replacement)
            new_children.append(new_child)
            done = True
        else:
            new_children.append(child)
            remaining -= size
    if not done:
        return expr, remaining
    return ScoreExpr(expr.symbol, tuple(new_children)), -1
