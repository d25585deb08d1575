"""MILP models, instance file I/O, and synthetic instance generators.

Models are stored in the canonical form min c.x s.t. A x >= b with a
boolean mask marking integer variables; "<=" rows are negated on input and
"=" rows split into a pair of inequalities.

Three generator families produce primal-hard instances on Erdos-Renyi
random graphs:

- :func:`gen_gisp`: generalized independent set (vertex revenues, removable
  edges with removal costs).
- :func:`gen_maxsat`: weighted MAXSAT over 3-literal clauses derived from
  graph edges.
- :func:`gen_fcmcnf`: fixed-charge multicommodity network flow on the
  graph's arcs.

All generators are deterministic per (parameters, seed). Coefficient
schemes (revenues, costs, weights, ranges) are simple fixed defaults and
can be overridden through keyword arguments.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .lp import LpProblem

INF = float("inf")


class MilpFormatError(ValueError):
    """Instance file rejected; message carries the 1-based line number."""


class DisconnectedGraphError(ValueError):
    """The flow generator needs a connected graph."""


@dataclass(frozen=True)
class Milp:
    """An LP plus integrality marks; at least one variable must be integer."""

    lp: LpProblem
    integer_mask: np.ndarray
    name: str = "milp"
    var_names: tuple[str, ...] = ()
    row_names: tuple[str, ...] = ()

    def __post_init__(self):
        mask = np.asarray(self.integer_mask, dtype=bool)
        object.__setattr__(self, "integer_mask", mask)
        n = self.lp.num_vars
        if mask.shape != (n,):
            raise ValueError("integer_mask length must match variable count")
        if not mask.any():
            raise ValueError("model must have at least one integer variable")
        bad = mask & ~(np.isfinite(self.lp.lower) & np.isfinite(self.lp.upper))
        if bad.any():
            j = int(np.flatnonzero(bad)[0])
            raise ValueError(f"integer variable {j} must have finite bounds")
        if not self.var_names:
            object.__setattr__(
                self, "var_names", tuple(f"x{j + 1}" for j in range(n))
            )
        elif len(self.var_names) != n:
            raise ValueError("var_names length must match variable count")
        if not self.row_names:
            object.__setattr__(
                self,
                "row_names",
                tuple(f"c{i + 1}" for i in range(self.lp.num_cons)),
            )
        elif len(self.row_names) != self.lp.num_cons:
            raise ValueError("row_names length must match constraint count")

    @property
    def num_vars(self) -> int:
        return self.lp.num_vars

    @property
    def num_cons(self) -> int:
        return self.lp.num_cons

    @property
    def num_integer(self) -> int:
        return int(self.integer_mask.sum())


@dataclass(frozen=True)
class ErGraph:
    """Undirected simple graph; edges are (u, v) pairs with u < v."""

    node_count: int
    edges: tuple[tuple[int, int], ...]
    seed: int = 0

    def __post_init__(self):
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < v < self.node_count):
                raise ValueError(f"edge ({u}, {v}) out of range or unordered")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def is_connected(self) -> bool:
        if self.node_count <= 1:
            return True
        adj = {v: [] for v in range(self.node_count)}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        seen = {0}
        stack = [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.node_count


def gen_er_graph(n: int, p: float, seed: int) -> ErGraph:
    """Erdos-Renyi graph: each of the n(n-1)/2 pairs kept with probability p."""
    if n < 2:
        raise ValueError("need at least 2 nodes")
    if not 0.0 <= p <= 1.0:
        raise ValueError("edge probability must be in [0, 1]")
    rng = np.random.default_rng(seed)
    edges = tuple(e for e in combinations(range(n), 2) if rng.random() < p)
    return ErGraph(node_count=n, edges=edges, seed=seed)


class _ModelBuilder:
    """Accumulates named columns and rows, normalizing every row to >=."""

    def __init__(self, name):
        self.name = name
        self.var_names = []
        self.obj = []
        self.lo = []
        self.hi = []
        self.integer = []
        self.rows = []  # (name, {col: coeff}, rhs) already in >= form
        self._index = {}

    def add_var(self, name, obj, lo, hi, integer):
        self._index[name] = len(self.var_names)
        self.var_names.append(name)
        self.obj.append(obj)
        self.lo.append(lo)
        self.hi.append(hi)
        self.integer.append(integer)
        return self._index[name]

    def add_row(self, name, coeffs, sense, rhs):
        terms = {self._index[v]: c for v, c in coeffs.items()}
        if sense == ">=":
            self.rows.append((name, terms, rhs))
        elif sense == "<=":
            self.rows.append((name, {j: -c for j, c in terms.items()}, -rhs))
        elif sense == "=":
            self.rows.append((f"{name}_ge", terms, rhs))
            self.rows.append((f"{name}_le", {j: -c for j, c in terms.items()}, -rhs))
        else:
            raise ValueError(f"unknown sense {sense!r}")

    def build(self) -> Milp:
        n = len(self.var_names)
        m = len(self.rows)
        A = np.zeros((m, n))
        b = np.zeros(m)
        row_names = []
        for i, (rname, terms, rhs) in enumerate(self.rows):
            row_names.append(rname)
            for j, c in terms.items():
                A[i, j] = c
            b[i] = rhs
        lp = LpProblem(
            objective=np.array(self.obj, dtype=float),
            lhs=A,
            rhs=b,
            lower=np.array(self.lo, dtype=float),
            upper=np.array(self.hi, dtype=float),
        )
        return Milp(
            lp=lp,
            integer_mask=np.array(self.integer, dtype=bool),
            name=self.name,
            var_names=tuple(self.var_names),
            row_names=tuple(row_names),
        )


def gen_gisp(
    g: ErGraph,
    seed: int,
    revenue: float = 100.0,
    removal_cost: float = 1.0,
    removable_prob: float = 0.5,
    name: str | None = None,
) -> Milp:
    """Generalized independent set on ``g``.

    Binary x_v per vertex earns ``revenue``; each edge drawn removable (with
    probability ``removable_prob``) gets a binary y_e whose activation costs
    ``removal_cost`` and lifts the edge's independence constraint. The
    maximization is stored as a minimization of the negated profit.
    """
    rng = np.random.default_rng(seed)
    removable = [rng.random() < removable_prob for _ in g.edges]
    b = _ModelBuilder(name or f"gisp_n{g.node_count}_s{seed}")
    for v in range(g.node_count):
        b.add_var(f"x{v + 1}", -revenue, 0.0, 1.0, True)
    y_name = {}
    k = 0
    for e, rem in zip(g.edges, removable):
        if rem:
            k += 1
            y_name[e] = f"y{k}"
            b.add_var(y_name[e], removal_cost, 0.0, 1.0, True)
    for i, ((u, v), rem) in enumerate(zip(g.edges, removable)):
        coeffs = {f"x{u + 1}": 1.0, f"x{v + 1}": 1.0}
        if rem:
            coeffs[y_name[(u, v)]] = -1.0
        b.add_row(f"e{i + 1}", coeffs, "<=", 1.0)
    return b.build()


def gen_maxsat(
    n_vars: int,
    g: ErGraph,
    seed: int,
    clause_weight: float = 1.0,
    name: str | None = None,
) -> Milp:
    """Weighted MAXSAT as a MILP.

    One 3-literal clause per edge of ``g``: the edge endpoints (mapped into
    the variable range) plus one extra random variable, each literal negated
    with probability one half. Binary s_c earns ``clause_weight`` when
    clause c is satisfied; stored as a minimization of the negated weight sum.
    """
    if n_vars < 3:
        raise ValueError("need at least 3 variables")
    rng = np.random.default_rng(seed)
    clauses = []
    for u, v in g.edges:
        a, c = u % n_vars, v % n_vars
        while c == a:
            c = int(rng.integers(n_vars))
        third = int(rng.integers(n_vars))
        while third in (a, c):
            third = int(rng.integers(n_vars))
        lits = [(j, bool(rng.random() < 0.5)) for j in (a, c, third)]
        clauses.append(lits)
    return maxsat_from_clauses(
        n_vars,
        clauses,
        [clause_weight] * len(clauses),
        name=name or f"maxsat_n{n_vars}_s{seed}",
    )


def maxsat_from_clauses(n_vars, clauses, weights, name="maxsat") -> Milp:
    """MILP for explicit clauses given as [(var index, is_positive), ...]."""
    b = _ModelBuilder(name)
    for j in range(n_vars):
        b.add_var(f"x{j + 1}", 0.0, 0.0, 1.0, True)
    for c, w in zip(range(len(clauses)), weights):
        b.add_var(f"s{c + 1}", -w, 0.0, 1.0, True)
    for c, lits in enumerate(clauses):
        coeffs = {f"s{c + 1}": -1.0}
        negatives = 0
        for j, positive in lits:
            vname = f"x{j + 1}"
            delta = 1.0 if positive else -1.0
            coeffs[vname] = coeffs.get(vname, 0.0) + delta
            if not positive:
                negatives += 1
        # sum(pos x) + sum(neg (1 - x)) >= s_c
        b.add_row(f"c{c + 1}", coeffs, ">=", float(-negatives))
    return b.build()


def gen_fcmcnf(
    g: ErGraph,
    commodities: int,
    seed: int,
    fixed_cost_range: tuple[int, int] = (50, 100),
    flow_cost_range: tuple[int, int] = (10, 20),
    pairs: list[tuple[int, int]] | None = None,
    name: str | None = None,
) -> Milp:
    """Fixed-charge multicommodity network flow on the arcs of ``g``.

    Both orientations of each edge become arcs. Each commodity routes one
    unit from a sampled origin to a sampled destination (override the
    sampling with ``pairs``); flow on an arc requires paying the arc's fixed
    opening cost, and an open arc carries at most ``commodities`` units in
    total.
    """
    if commodities < 1:
        raise ValueError("need at least one commodity")
    if not g.is_connected():
        raise DisconnectedGraphError(
            f"graph with {g.node_count} nodes and {g.edge_count} edges is disconnected"
        )
    rng = np.random.default_rng(seed)
    arcs = []
    for u, v in g.edges:
        arcs.append((u, v))
        arcs.append((v, u))
    fixed_cost = rng.integers(fixed_cost_range[0], fixed_cost_range[1] + 1, size=len(arcs))
    flow_cost = rng.integers(flow_cost_range[0], flow_cost_range[1] + 1, size=len(arcs))
    if pairs is None:
        pairs = [
            (int(rng.integers(g.node_count)), int(rng.integers(g.node_count)))
            for _ in range(commodities)
        ]
    elif len(pairs) != commodities:
        raise ValueError("pairs must list one (origin, destination) per commodity")

    b = _ModelBuilder(name or f"fcmcnf_n{g.node_count}_q{commodities}_s{seed}")
    for a, (u, v) in enumerate(arcs):
        b.add_var(f"open_{u + 1}_{v + 1}", float(fixed_cost[a]), 0.0, 1.0, True)
    for q in range(commodities):
        for a, (u, v) in enumerate(arcs):
            b.add_var(f"f{q + 1}_{u + 1}_{v + 1}", float(flow_cost[a]), 0.0, INF, False)
    for q, (orig, dest) in enumerate(pairs):
        for v in range(g.node_count):
            coeffs = {}
            for (tail, head) in arcs:
                if tail == v:
                    coeffs[f"f{q + 1}_{tail + 1}_{head + 1}"] = 1.0
                elif head == v:
                    coeffs[f"f{q + 1}_{tail + 1}_{head + 1}"] = -1.0
            demand = 0.0
            if orig != dest:
                if v == orig:
                    demand = 1.0
                elif v == dest:
                    demand = -1.0
            b.add_row(f"flow{q + 1}_{v + 1}", coeffs, "=", demand)
    for a, (u, v) in enumerate(arcs):
        coeffs = {f"open_{u + 1}_{v + 1}": float(commodities)}
        for q in range(commodities):
            coeffs[f"f{q + 1}_{u + 1}_{v + 1}"] = -1.0
        b.add_row(f"cap_{u + 1}_{v + 1}", coeffs, ">=", 0.0)
    return b.build()


# ---------------------------------------------------------------------------
# MILP-TXT v1
#
# Line-oriented UTF-8; '#' starts a comment. Sections appear in the order
# minimize / subject to / bounds / integers / end. Objective and constraint
# lines read "name: coeff var [+|- coeff var ...] [sense rhs]"; bounds lines
# read "lo <= var <= hi" with inf/-inf allowed; the integers section lists
# variable names separated by whitespace.
# ---------------------------------------------------------------------------

_SECTIONS = ("minimize", "subject to", "bounds", "integers", "end")


def _fmt(value: float) -> str:
    if value == INF:
        return "inf"
    if value == -INF:
        return "-inf"
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def _linear_text(terms: list[tuple[float, str]]) -> str:
    parts = []
    for i, (coeff, var) in enumerate(terms):
        if i == 0:
            parts.append(f"{_fmt(coeff)} {var}")
        elif coeff < 0:
            parts.append(f"- {_fmt(-coeff)} {var}")
        else:
            parts.append(f"+ {_fmt(coeff)} {var}")
    return " ".join(parts) if parts else "0 " + "__none__"


def write_instance(m: Milp, path) -> None:
    """Write canonical MILP-TXT v1; deterministic byte-for-byte."""
    lp = m.lp
    lines = ["minimize"]
    terms = [(lp.objective[j], m.var_names[j]) for j in range(m.num_vars)
             if lp.objective[j] != 0.0]
    if not terms:
        terms = [(0.0, m.var_names[0])]
    lines.append(f" obj: {_linear_text(terms)}")
    lines.append("subject to")
    for i in range(m.num_cons):
        row = lp.lhs[i]
        terms = [(row[j], m.var_names[j]) for j in range(m.num_vars) if row[j] != 0.0]
        if not terms:
            terms = [(0.0, m.var_names[0])]
        lines.append(f" {m.row_names[i]}: {_linear_text(terms)} >= {_fmt(lp.rhs[i])}")
    lines.append("bounds")
    for j in range(m.num_vars):
        lines.append(f" {_fmt(lp.lower[j])} <= {m.var_names[j]} <= {_fmt(lp.upper[j])}")
    lines.append("integers")
    names = [m.var_names[j] for j in range(m.num_vars) if m.integer_mask[j]]
    lines.append(" " + " ".join(names))
    lines.append("end")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_number(token: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise MilpFormatError(f"line {lineno}: expected a number, got {token!r}") from None
    return value


def _parse_linear(tokens: list[str], lineno: int):
    """Parse 'coeff var [+|- coeff var ...]'; returns list of (coeff, var)."""
    terms = []
    i = 0
    first = True
    while i < len(tokens):
        sign = 1.0
        if tokens[i] in ("+", "-"):
            if first:
                raise MilpFormatError(
                    f"line {lineno}: expression must not start with a bare sign"
                )
            sign = -1.0 if tokens[i] == "-" else 1.0
            i += 1
        elif not first:
            raise MilpFormatError(
                f"line {lineno}: expected '+' or '-' between terms, got {tokens[i]!r}"
            )
        if i + 1 >= len(tokens):
            raise MilpFormatError(f"line {lineno}: dangling term")
        coeff = sign * _parse_number(tokens[i], lineno)
        var = tokens[i + 1]
        if var in ("+", "-", "<=", ">=", "="):
            raise MilpFormatError(f"line {lineno}: expected a variable name, got {var!r}")
        terms.append((coeff, var))
        i += 2
        first = False
    if not terms:
        raise MilpFormatError(f"line {lineno}: empty linear expression")
    return terms


def read_instance(path) -> Milp:
    """Read a MILP-TXT v1 file; the model name is the file's stem."""
    from pathlib import Path

    text = Path(path).read_text(encoding="utf-8")
    name = Path(path).stem

    var_order: list[str] = []
    var_index: dict[str, int] = {}

    def var_id(v):
        if v not in var_index:
            var_index[v] = len(var_order)
            var_order.append(v)
        return var_index[v]

    objective: dict[int, float] = {}
    rows = []  # (name, {idx: coeff}, rhs) normalized to >=
    bounds: dict[int, tuple[float, float]] = {}
    integers: list[int] = []
    section = None
    saw_end = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if saw_end:
            raise MilpFormatError(f"line {lineno}: content after 'end'")
        low = line.lower()
        if low in _SECTIONS:
            if low == "end":
                saw_end = True
                continue
            expected = _SECTIONS.index(low)
            current = -1 if section is None else _SECTIONS.index(section)
            if expected <= current:
                raise MilpFormatError(f"line {lineno}: section '{low}' out of order")
            section = low
            continue
        if section is None:
            raise MilpFormatError(f"line {lineno}: content before 'minimize'")
        tokens = line.split()
        if section == "minimize":
            if not tokens[0].endswith(":"):
                raise MilpFormatError(f"line {lineno}: objective needs a 'name:' prefix")
            if objective:
                raise MilpFormatError(f"line {lineno}: duplicate objective line")
            for coeff, var in _parse_linear(tokens[1:], lineno):
                j = var_id(var)
                objective[j] = objective.get(j, 0.0) + coeff
        elif section == "subject to":
            if not tokens[0].endswith(":"):
                raise MilpFormatError(f"line {lineno}: constraint needs a 'name:' prefix")
            rname = tokens[0][:-1]
            body = tokens[1:]
            sense_pos = [k for k, t in enumerate(body) if t in ("<=", ">=", "=")]
            if len(sense_pos) != 1:
                raise MilpFormatError(f"line {lineno}: constraint needs exactly one sense")
            k = sense_pos[0]
            if k + 2 != len(body):
                raise MilpFormatError(f"line {lineno}: expected a single rhs after the sense")
            sense = body[k]
            rhs = _parse_number(body[k + 1], lineno)
            terms = {}
            for coeff, var in _parse_linear(body[:k], lineno):
                j = var_id(var)
                terms[j] = terms.get(j, 0.0) + coeff
            if sense == ">=":
                rows.append((rname, terms, rhs))
            elif sense == "<=":
                rows.append((rname, {j: -c for j, c in terms.items()}, -rhs))
            else:
                rows.append((f"{rname}_ge", terms, rhs))
                rows.append((f"{rname}_le", {j: -c for j, c in terms.items()}, -rhs))
        elif section == "bounds":
            if len(tokens) != 5 or tokens[1] != "<=" or tokens[3] != "<=":
                raise MilpFormatError(f"line {lineno}: bounds line must be 'lo <= var <= hi'")
            lo = _parse_number(tokens[0], lineno)
            hi = _parse_number(tokens[4], lineno)
            j = var_id(tokens[2])
            if lo > hi:
                raise MilpFormatError(f"line {lineno}: empty bound interval")
            bounds[j] = (lo, hi)
        elif section == "integers":
            for v in tokens:
                integers.append(var_id(v))

    if not saw_end:
        raise MilpFormatError(f"line {len(text.splitlines()) + 1}: missing 'end'")
    if not var_order:
        raise MilpFormatError("line 1: no variables declared")

    n = len(var_order)
    c = np.zeros(n)
    for j, coeff in objective.items():
        c[j] = coeff
    A = np.zeros((len(rows), n))
    b = np.zeros(len(rows))
    row_names = []
    for i, (rname, terms, rhs) in enumerate(rows):
        row_names.append(rname)
        for j, coeff in terms.items():
            A[i, j] = coeff
        b[i] = rhs
    lo = np.full(n, -INF)
    hi = np.full(n, INF)
    for j, (l, h) in bounds.items():
        lo[j], hi[j] = l, h
    mask = np.zeros(n, dtype=bool)
    mask[integers] = True

    try:
        return Milp(
            lp=LpProblem(objective=c, lhs=A, rhs=b, lower=lo, upper=hi),
            integer_mask=mask,
            name=name,
            var_names=tuple(var_order),
            row_names=tuple(row_names),
        )
    except ValueError as exc:
        raise MilpFormatError(str(exc)) from exc
