import itertools

import numpy as np
import pytest

from evobnb import expr as ex
from evobnb.expr import (
    BIG_SCORE,
    DEPTH,
    ESTIMATE,
    LB,
    BIG_M,
    NodeContext,
    ScoreExpr,
    count_perfect_trees,
    evaluate,
    parse,
    random_tree,
    to_text,
)


def ctx(depth=0, estimate=0.0, lb=0.0, rootlb=0.0, ncons=1, nvars=1, big_m=1e8):
    return NodeContext(
        depth=depth,
        best_estimate=estimate,
        lower_bound=lb,
        root_dual_bound=rootlb,
        num_constraints=ncons,
        num_variables=nvars,
        big_m=big_m,
    )


# Scoring functions an evolved policy can take; together they exercise every
# operator and every terminal of the language.
SAMPLE_POLICIES = [
    "(div estimate depth)",
    "(div ncons (add estimate bigM))",
    "(sub (div depth estimate) depth)",
    "(add lb (div nvars (sub depth nvars)))",
    "(add estimate (add lb ncons))",
    "(add (div lb rootlb) (mul nvars depth))",
    "(mul (add estimate lb) (add estimate lb))",
    "(sub (sub (mul rootlb (sub (add bigM bigM) lb)) estimate) (mul depth lb))",
    "(div lb (div ncons depth))",
    "(div lb (mul depth (add nvars (add estimate depth))))",
    "(mul (mul lb (div (div depth lb) lb)) (sub estimate nvars))",
    "(add lb lb)",
    "(add (sub bigM (mul lb depth)) estimate)",
    "(div (div (sub nvars ncons) bigM) estimate)",
]


class TestEvaluate:
    def test_protected_division_by_zero(self):
        e = ex.div(ex.mul(LB, LB), DEPTH)  # 4 / 0 with lb=2, depth=0
        assert evaluate(e, ctx(depth=0, lb=2.0)) == 1.0

    def test_ordinary_division(self):
        e = ex.div(ESTIMATE, LB)
        assert evaluate(e, ctx(estimate=6.0, lb=3.0)) == 2.0

    def test_layered_dfs_score(self):
        # lb - bigM * depth with lb=5, depth=2, M=1e6
        e = ex.sub(LB, ex.mul(BIG_M, DEPTH))
        assert evaluate(e, ctx(depth=2, lb=5.0, big_m=1e6)) == -1999995.0

    def test_terminals_read_context(self):
        c = ctx(depth=3, estimate=1.5, lb=-2.0, rootlb=-4.0, ncons=7, nvars=9, big_m=11.0)
        values = {
            "depth": 3.0,
            "estimate": 1.5,
            "lb": -2.0,
            "rootlb": -4.0,
            "ncons": 7.0,
            "nvars": 9.0,
            "bigM": 11.0,
        }
        for symbol, want in values.items():
            assert evaluate(ScoreExpr(symbol), c) == want

    def test_overflow_clamps_to_big_score(self):
        # 1e200 * 1e200 overflows a double; the non-finite result is clamped.
        e = ex.mul(BIG_M, BIG_M)
        v = evaluate(e, ctx(big_m=1e200))
        assert v == BIG_SCORE

    def test_negative_overflow_clamps(self):
        e = ex.mul(ex.sub(LB, BIG_M), BIG_M)
        v = evaluate(e, ctx(lb=0.0, big_m=1e200))
        assert v == -BIG_SCORE

    def test_totality_on_random_trees(self):
        rng = np.random.default_rng(7)
        c = ctx(depth=5, estimate=-3.25, lb=-3.5, rootlb=-9.0, ncons=40, nvars=25)
        for _ in range(2000):
            e = random_tree(rng, 0, 17)
            v = evaluate(e, c)
            assert np.isfinite(v)


class TestContextValidation:
    def test_rejects_negative_depth(self):
        with pytest.raises(ValueError):
            ctx(depth=-1)

    def test_rejects_nonfinite_bound(self):
        with pytest.raises(ValueError):
            ctx(lb=float("inf"))

    def test_rejects_nonpositive_big_m(self):
        with pytest.raises(ValueError):
            ctx(big_m=0.0)


class TestParsePrint:
    def test_parse_single_terminal(self):
        assert parse("lb") == LB

    def test_parse_policy_estimate_over_depth(self):
        assert parse("(div estimate depth)") == ex.div(ESTIMATE, DEPTH)

    def test_parse_nested(self):
        want = ex.sub(ex.div(DEPTH, ESTIMATE), DEPTH)
        assert parse("(sub (div depth estimate) depth)") == want

    def test_print_leaf(self):
        assert to_text(LB) == "lb"

    def test_print_doubled_lower_bound(self):
        assert to_text(ex.add(LB, LB)) == "(add lb lb)"

    def test_comments_and_whitespace(self):
        text = "# policy file\n  ( add   lb\n lb )  # trailing\n"
        assert parse(text) == ex.add(LB, LB)

    def test_sample_policies_round_trip_and_evaluate(self):
        c = ctx(depth=4, estimate=-7.5, lb=-8.0, rootlb=-12.0, ncons=30, nvars=20)
        for text in SAMPLE_POLICIES:
            e = parse(text)
            assert to_text(e) == text
            assert parse(to_text(e)) == e
            assert np.isfinite(evaluate(e, c))

    def test_round_trip_random_trees(self):
        rng = np.random.default_rng(123)
        for _ in range(10_000):
            e = random_tree(rng, 0, 17)
            assert parse(to_text(e)) == e

    def test_syntax_error_reports_byte_offset(self):
        with pytest.raises(ex.ExprSyntaxError, match="byte"):
            parse("(add lb")

    def test_unexpected_close_paren(self):
        with pytest.raises(ex.ExprSyntaxError, match="byte 0"):
            parse(")")

    def test_trailing_tokens_rejected(self):
        with pytest.raises(ex.ExprSyntaxError, match="trailing"):
            parse("lb lb")

    def test_arity_error_too_few(self):
        with pytest.raises(ex.ExprArityError, match="expects 2 arguments, got 1"):
            parse("(add lb)")

    def test_arity_error_too_many(self):
        with pytest.raises(ex.ExprArityError, match="got 3"):
            parse("(add lb lb lb)")

    def test_terminal_applied_to_arguments(self):
        with pytest.raises(ex.ExprArityError):
            parse("(lb depth depth)")

    def test_unknown_symbol(self):
        with pytest.raises(ex.ExprSymbolError, match="sqrt"):
            parse("(sqrt lb lb)")

    def test_bare_operator(self):
        with pytest.raises(ex.ExprSyntaxError):
            parse("add")

    def test_ssx_file_round_trip(self, tmp_path):
        path = tmp_path / "policy.ssx"
        e = parse(SAMPLE_POLICIES[0])
        ex.write_expr_file(e, path)
        assert ex.read_expr_file(path) == e


class TestRandomTree:
    def _leaf_depths(self, e, depth=0):
        if e.is_leaf:
            return [depth]
        out = []
        for child in e.children:
            out.extend(self._leaf_depths(child, depth + 1))
        return out

    def test_forced_leaf(self):
        rng = np.random.default_rng(0)
        e = random_tree(rng, 0, 0)
        assert e.is_leaf
        assert e.symbol in ex.TERMINALS

    def test_depth_bounds_respected(self):
        rng = np.random.default_rng(99)
        for dmin, dmax in [(0, 0), (1, 17), (1, 5), (3, 3), (2, 6)]:
            for _ in range(2000):
                e = random_tree(rng, dmin, dmax)
                depths = self._leaf_depths(e)
                assert min(depths) >= dmin
                assert max(depths) <= dmax

    def test_seed_determinism(self):
        a = [random_tree(np.random.default_rng(42), 1, 17) for _ in range(20)]
        b = [random_tree(np.random.default_rng(42), 1, 17) for _ in range(20)]
        # identical per call position only when drawn from fresh generators
        assert random_tree(np.random.default_rng(42), 1, 17) == random_tree(
            np.random.default_rng(42), 1, 17
        )
        rng1, rng2 = np.random.default_rng(42), np.random.default_rng(42)
        for _ in range(50):
            assert random_tree(rng1, 1, 9) == random_tree(rng2, 1, 9)
        assert a[0] == b[0]

    def test_invalid_bounds(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            random_tree(rng, 3, 2)


def _enumerate_perfect(depth):
    """Brute-force generator of all perfect trees of exactly this depth."""
    if depth == 0:
        for t in ex.TERMINALS:
            yield ScoreExpr(t)
        return
    subtrees = list(_enumerate_perfect(depth - 1))
    for op in ex.OPERATORS:
        for left, right in itertools.product(subtrees, repeat=2):
            yield ScoreExpr(op, (left, right))


class TestCountPerfectTrees:
    def test_formula_values(self):
        assert count_perfect_trees(0) == 7
        assert count_perfect_trees(1) == 196
        assert count_perfect_trees(2) == 153_664
        assert count_perfect_trees(3) == 94_450_499_584

    def test_matches_enumeration(self):
        for depth in (0, 1, 2):
            trees = set(_enumerate_perfect(depth))
            assert len(trees) == count_perfect_trees(depth)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            count_perfect_trees(-1)

    def test_overflow_guard(self):
        with pytest.raises(OverflowError):
            count_perfect_trees(26)


class TestTreeSurgery:
    def test_subtree_and_replace(self):
        e = ex.sub(ex.div(DEPTH, ESTIMATE), LB)
        # preorder: sub, div, depth, estimate, lb
        assert ex.subtree_at(e, 0) == e
        assert ex.subtree_at(e, 1) == ex.div(DEPTH, ESTIMATE)
        assert ex.subtree_at(e, 2) == DEPTH
        assert ex.subtree_at(e, 3) == ESTIMATE
        assert ex.subtree_at(e, 4) == LB
        swapped = ex.replace_at(e, 1, BIG_M)
        assert swapped == ex.sub(BIG_M, LB)
        assert e == ex.sub(ex.div(DEPTH, ESTIMATE), LB)  # original untouched

    def test_replace_root(self):
        assert ex.replace_at(LB, 0, DEPTH) == DEPTH

    def test_replace_random_consistency(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            e = random_tree(rng, 1, 6)
            idx = int(rng.integers(e.size))
            graft = random_tree(rng, 0, 3)
            out = ex.replace_at(e, idx, graft)
            assert out.size == e.size - ex.subtree_at(e, idx).size + graft.size
            assert ex.subtree_at(out, idx) == graft

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            ex.subtree_at(LB, 1)
        with pytest.raises(IndexError):
            ex.replace_at(LB, 2, DEPTH)
