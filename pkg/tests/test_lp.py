import numpy as np
import pytest

from evobnb.lp import LpProblem, LpStatus, check_result, solve_lp
from oracles import lp_vertex_oracle, random_box_lp

INF = float("inf")


def lp(c, A, b, lo, hi):
    return LpProblem(objective=c, lhs=A, rhs=b, lower=lo, upper=hi)


class TestExamples:
    def test_two_var_box(self):
        # min -x1-x2 s.t. -2x1-2x2 >= -3, x in [0,1]^2 -> z = -1.5
        p = lp([-1, -1], [[-2, -2]], [-3], [0, 0], [1, 1])
        res = solve_lp(p)
        assert res.status is LpStatus.OPTIMAL
        assert res.objective == pytest.approx(-1.5, abs=1e-9)
        assert check_result(p, res)

    def test_single_active_bound(self):
        p = lp([1.0], [[1.0]], [2.0], [0.0], [10.0])
        res = solve_lp(p)
        assert res.status is LpStatus.OPTIMAL
        assert res.x[0] == pytest.approx(2.0, abs=1e-9)
        assert res.objective == pytest.approx(2.0, abs=1e-9)

    def test_contradictory_constraints_free_var(self):
        # x1 >= 1 and -x1 >= 0 with x1 free
        p = lp([0.0], [[1.0], [-1.0]], [1.0, 0.0], [-INF], [INF])
        assert solve_lp(p).status is LpStatus.INFEASIBLE

    def test_unbounded(self):
        p = lp([-1.0], [[1.0]], [0.0], [0.0], [INF])
        assert solve_lp(p).status is LpStatus.UNBOUNDED

    def test_free_variable_optimum(self):
        # min x s.t. x >= -4, x free
        p = lp([1.0], [[1.0]], [-4.0], [-INF], [INF])
        res = solve_lp(p)
        assert res.status is LpStatus.OPTIMAL
        assert res.objective == pytest.approx(-4.0, abs=1e-9)

    def test_upper_bound_only_variable(self):
        # min -x s.t. x <= 3 encoded as bound, one dummy row
        p = lp([-1.0], [[-1.0]], [-10.0], [-INF], [3.0])
        res = solve_lp(p)
        assert res.status is LpStatus.OPTIMAL
        assert res.objective == pytest.approx(-3.0, abs=1e-9)

    def test_fixed_variable(self):
        p = lp([5.0, 1.0], [[1.0, 1.0]], [1.0], [2.0, 0.0], [2.0, 4.0])
        res = solve_lp(p)
        assert res.status is LpStatus.OPTIMAL
        assert res.x[0] == pytest.approx(2.0, abs=1e-9)
        assert res.objective == pytest.approx(10.0, abs=1e-9)

    def test_equality_via_paired_rows(self):
        # x1 + x2 = 2 expressed as two inequalities, minimize x1
        A = [[1.0, 1.0], [-1.0, -1.0]]
        p = lp([1.0, 0.0], A, [2.0, -2.0], [0.0, 0.0], [5.0, 5.0])
        res = solve_lp(p)
        assert res.status is LpStatus.OPTIMAL
        assert res.objective == pytest.approx(0.0, abs=1e-9)


class TestValidation:
    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            lp([1.0, 2.0], [[1.0]], [0.0], [0.0, 0.0], [1.0, 1.0])

    def test_crossed_bounds(self):
        with pytest.raises(ValueError):
            lp([1.0], [[1.0]], [0.0], [2.0], [1.0])


class TestAgainstOracle:
    def test_random_lps_match_vertex_enumeration(self):
        rng = np.random.default_rng(2024)
        n_feasible = 0
        for _ in range(120):
            c, A, b, lo, hi = random_box_lp(rng)
            status, value = lp_vertex_oracle(c, A, b, lo, hi)
            res = solve_lp(lp(c, A, b, lo, hi))
            if status == "infeasible":
                assert res.status is LpStatus.INFEASIBLE
            else:
                n_feasible += 1
                assert res.status is LpStatus.OPTIMAL
                assert res.objective == pytest.approx(value, abs=1e-6)
                assert check_result(lp(c, A, b, lo, hi), res)
        assert n_feasible >= 60  # the generator must actually exercise both paths


class TestDeterminism:
    def test_bitwise_identical_reruns(self):
        rng = np.random.default_rng(5)
        c, A, b, lo, hi = random_box_lp(rng)
        r1 = solve_lp(lp(c, A, b, lo, hi))
        r2 = solve_lp(lp(c, A, b, lo, hi))
        assert r1.status == r2.status
        if r1.status is LpStatus.OPTIMAL:
            assert r1.objective == r2.objective
            assert np.array_equal(r1.x, r2.x)


class TestDegenerate:
    def test_highly_degenerate_does_not_cycle(self):
        # many redundant rows through the origin force degenerate pivots
        n = 6
        A = np.vstack([np.eye(n), np.ones((4, n)), -np.eye(n)])
        b = np.concatenate([np.zeros(n), np.zeros(4), -np.ones(n)])
        c = -np.ones(n)
        p = lp(c, A, b, np.zeros(n), np.ones(n))
        res = solve_lp(p)
        assert res.status is LpStatus.OPTIMAL
        assert res.objective == pytest.approx(-6.0, abs=1e-7)
