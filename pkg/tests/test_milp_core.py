import math

import numpy as np
import pytest
from scipy.optimize import linprog

from drpsps.milp_core import (INFEASIBLE, OPTIMAL, UNBOUNDED, MilpModel, ModelError,
                              SolveOptions, lp_relaxation, solve, solve_lp, write_mps)
from drpsps.milp_core.mps import _num

from oracles import brute_force_milp

BNB = SolveOptions(backend="bnb")


def random_milp(rng, n_bin, n_cont=0, n_rows=None):
    m = MilpModel("rand")
    b = [m.add_binary(f"b{i}", rng.normal()) for i in range(n_bin)]
    c = [m.add_var(f"c{i}", -3.0, 5.0, obj=rng.normal()) for i in range(n_cont)]
    for r in range(n_rows or int(rng.integers(1, 7))):
        terms = {j: rng.normal() for j in b + c if rng.random() < 0.6}
        m.add_constraint(f"r{r}", terms, rng.choice(["<=", ">="]), rng.normal())
    return m


def brute(m):
    a = m.arrays()
    return brute_force_milp(a.c, a.A, a.row_lb, a.row_ub, a.lb, a.ub, a.integer)


# -- model container --------------------------------------------------------------


def test_model_rejects_bad_input():
    m = MilpModel()
    x = m.add_var("x", 0, 1)
    with pytest.raises(ModelError):
        m.add_var("x")
    with pytest.raises(ModelError):
        m.add_var("y", 2, 1)
    with pytest.raises(ModelError):
        m.add_constraint("r", {x + 5: 1.0}, "<=", 1)
    with pytest.raises(ModelError):
        m.add_constraint("r2", {x: 1.0}, "~", 1)


def test_repeated_terms_are_summed():
    m = MilpModel()
    x = m.add_var("x", 0, 10, obj=-1)
    m.add_constraint("r", [(x, 1.0), (x, 1.0)], "<=", 4)
    idx, val = m.row(0)
    assert idx.tolist() == [x] and val.tolist() == [2.0]
    assert solve(m).objective == pytest.approx(-2.0)


# -- simplex ------------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(40))
def test_simplex_matches_highs_on_random_lps(seed):
    rng = np.random.default_rng(seed)
    n, mrows = int(rng.integers(2, 9)), int(rng.integers(1, 7))
    A = rng.normal(size=(mrows, n))
    x0 = rng.uniform(-1, 1, n)
    slack = rng.uniform(0, 1, mrows)
    row_ub = A @ x0 + slack
    row_lb = np.where(rng.random(mrows) < 0.5, -np.inf, A @ x0 - slack)
    lb, ub = np.full(n, -2.0), np.full(n, 2.0)
    c = rng.normal(size=n)
    ours = solve_lp(c, A, row_lb, row_ub, lb, ub)
    fin = np.isfinite(row_lb)
    ref = linprog(c, A_ub=np.vstack([A, -A[fin]]), b_ub=np.concatenate([row_ub, -row_lb[fin]]),
                  bounds=list(zip(lb, ub)), method="highs")
    assert ours.status == OPTIMAL and ref.status == 0
    assert ours.objective == pytest.approx(ref.fun, rel=1e-7, abs=1e-7)
    assert np.all(A @ ours.x <= row_ub + 1e-7)


def test_simplex_status_detection():
    A = np.array([[1.0, 1.0]])
    inf = solve_lp(np.zeros(2), A, np.array([3.0]), np.array([3.0]), np.zeros(2), np.ones(2))
    assert inf.status == INFEASIBLE
    unb = solve_lp(np.array([-1.0, 0.0]), A, np.array([-np.inf]), np.array([np.inf]),
                   np.zeros(2), np.full(2, np.inf))
    assert unb.status == UNBOUNDED


def test_simplex_survives_a_cycling_example():
    # Beale's example cycles under textbook Dantzig pricing without anti-cycling
    c = np.array([-0.75, 150.0, -0.02, 6.0])
    A = np.array([[0.25, -60.0, -0.04, 9.0], [0.5, -90.0, -0.02, 3.0], [0.0, 0.0, 1.0, 0.0]])
    res = solve_lp(c, A, np.full(3, -np.inf), np.array([0.0, 0.0, 1.0]), np.zeros(4),
                   np.full(4, np.inf))
    assert res.status == OPTIMAL
    assert res.objective == pytest.approx(-0.05)


# -- branch and bound -------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(25))
def test_bnb_and_highs_match_brute_force(seed):
    rng = np.random.default_rng(1000 + seed)
    m = random_milp(rng, int(rng.integers(1, 7)), int(rng.integers(0, 4)))
    bf = brute(m)
    for opts in (BNB, SolveOptions()):
        sol = solve(m, opts)
        if math.isinf(bf):
            assert sol.status == INFEASIBLE
        else:
            assert sol.status == OPTIMAL
            assert sol.objective == pytest.approx(bf, rel=1e-6, abs=1e-6)


def test_incumbents_improve_and_runs_repeat():
    rng = np.random.default_rng(7)
    m = random_milp(rng, 10, 2, n_rows=6)
    a = solve(m, BNB)
    b = solve(m, BNB)
    assert a.incumbents == b.incumbents and np.array_equal(a.x, b.x)
    assert all(x >= y for x, y in zip(a.incumbents, a.incumbents[1:]))


def test_relaxation_bounds_the_optimum():
    rng = np.random.default_rng(3)
    for _ in range(10):
        m = random_milp(rng, 6, 2)
        sol = solve(m, BNB)
        if sol.status != OPTIMAL:
            continue
        rel = lp_relaxation(m, BNB)
        assert rel.objective <= sol.objective + 1e-9


def test_node_limit_reports_gap():
    rng = np.random.default_rng(11)
    m = random_milp(rng, 12, 0, n_rows=5)
    sol = solve(m, SolveOptions(backend="bnb", node_limit=1))
    assert sol.status in ("gap_limit", OPTIMAL, INFEASIBLE)


def test_objective_constant_is_kept():
    m = MilpModel()
    x = m.add_binary("x", 1.0)
    m.obj_constant = 10.0
    m.add_constraint("r", {x: 1.0}, ">=", 1)
    assert solve(m).objective == pytest.approx(11.0)
    assert solve(m, BNB).objective == pytest.approx(11.0)


# -- MPS export ---------------------------------------------------------------------------


@pytest.mark.parametrize("v", [0.0, 1.0, -3.0, 1e-12, 123456.789012345, -9.87654321e-5,
                               5e20, math.pi])
def test_numbers_fit_the_field(v):
    s = _num(v)
    assert len(s) <= 12
    # worst case (sign, two-digit negative exponent) leaves 7 significant digits
    assert float(s) == pytest.approx(v, rel=5e-7, abs=0 if v else 1e-300)


def _highs_objective(path):
    highspy = pytest.importorskip("highspy")
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.readModel(str(path))
    h.run()
    return h.getInfo().objective_function_value, h.getModelStatus()


@pytest.mark.parametrize("seed", range(6))
def test_mps_round_trip_through_highs(tmp_path, seed):
    rng = np.random.default_rng(seed)
    m = random_milp(rng, 5, 3, n_rows=4)
    x = m.add_var("a_long_variable_name", -np.inf, np.inf, obj=0.0)
    m.add_constraint("free_link", {x: 1.0, 0: -1.0}, "==", 0.0)
    m.obj_constant = 2.5
    sol = solve(m)
    path = tmp_path / "m.mps"
    write_mps(m, path)
    obj, status = _highs_objective(path)
    if sol.status == OPTIMAL:
        assert obj == pytest.approx(sol.objective, rel=1e-7, abs=1e-7)


def test_mps_of_a_planning_model(tmp_path, three_bus):
    from drpsps.formulation import make_instance
    from drpsps.planners import build_pattern_model
    inst = make_instance(three_bus.truncated(3), nzr_cap=2)
    m, _, _ = build_pattern_model(inst, np.array([1, 0]), 0.3)
    path = tmp_path / "p.mps"
    write_mps(m, path)
    obj, _ = _highs_objective(path)
    # probabilities lose digits in the fixed-width fields
    assert obj == pytest.approx(solve(m).objective, rel=1e-7)
