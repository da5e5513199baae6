import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drpsps.formulation import make_instance
from drpsps.milp_core import SolveOptions
from drpsps.planners import (AmbiguityConfig, PlanningError, _better, _Candidate, cvar,
                             pareto_front, pareto_sweep, revpi, robust_decomposition,
                             robust_value, solve_dr_psps, solve_risk_neutral, var)

from oracles import brute_force_plan, skyline, sorting_cvar, tv_worst_case

KAPPAS = [0.0, 0.3, 0.75, 0.99]


@st.composite
def priced(draw):
    n = draw(st.integers(1, 8))
    costs = np.array(draw(st.lists(st.floats(0, 1e5), min_size=n, max_size=n)))
    w = np.array(draw(st.lists(st.floats(0, 1), min_size=n, max_size=n)))
    if w.sum() == 0:
        w[0] = 1.0
    return costs, w / w.sum(), draw(st.floats(0, 0.999))


@settings(max_examples=200)
@given(priced())
def test_robust_value_is_the_tv_worst_case(data):
    costs, probs, kappa = data
    scale = max(1.0, costs.max())
    assert robust_value(costs, probs, kappa) == pytest.approx(
        tv_worst_case(costs, probs, kappa), abs=1e-9 * scale)
    assert cvar(costs, probs, kappa) == pytest.approx(sorting_cvar(costs, probs, kappa),
                                                      abs=1e-9 * scale)


@settings(max_examples=100)
@given(priced())
def test_robust_value_sits_between_mean_and_max(data):
    costs, probs, kappa = data
    v = robust_value(costs, probs, kappa)
    tol = 1e-9 * max(1.0, costs.max())
    assert probs @ costs - tol <= v <= costs.max() + tol
    parts = robust_decomposition(costs, probs, kappa)
    assert parts["tau"] >= 0 and parts["below_var"] >= -tol


def test_worked_case():
    p = np.full(3, 1 / 3)
    assert robust_value([10, 20, 30], p, 0.5) == pytest.approx(85 / 3)
    assert var([10, 20, 30], p, 0.5) == 20
    assert robust_value([10, 20, 30], p, 1.0) == 30


def test_robust_value_sees_zero_probability_scenarios():
    # the worst case may move mass onto a scenario the nominal model rules out
    assert robust_value([1.0, 100.0], [1.0, 0.0], 0.1) == pytest.approx(0.9 + 10.0)


def test_risk_measure_input_checks():
    with pytest.raises(ValueError):
        robust_value([], [], 0.1)
    with pytest.raises(ValueError):
        robust_value([1, 2], [0.5, 0.6], 0.1)
    with pytest.raises(ValueError):
        cvar([1, 2], [0.5, 0.5], 1.0)
    with pytest.raises(ValueError):
        AmbiguityConfig(kappa=1.5)
    with pytest.raises(ValueError):
        AmbiguityConfig(strategy="guess")


# -- planners on small instances ----------------------------------------------------


@pytest.fixture(scope="module")
def tiny(three_bus):
    """Three hours, two NZR lines: 6 commitment and 2 shut-off binaries."""
    return make_instance(three_bus.truncated(3), nzr_cap=2)


@pytest.mark.parametrize("kappa", KAPPAS)
def test_planners_match_brute_force(tiny, kappa):
    want, _, _ = brute_force_plan(tiny.net, tiny.nzr_lines, tiny.scenarios.line_wip, tiny.pi1,
                                  kappa, tiny.demand)
    for strategy in ("enum", "milp"):
        plan = solve_dr_psps(tiny, AmbiguityConfig(kappa, strategy))
        assert plan.objective == pytest.approx(want, rel=1e-6)
    for backend in ("bnb",):
        plan = solve_dr_psps(tiny, AmbiguityConfig(kappa, "enum"), SolveOptions(backend=backend))
        assert plan.objective == pytest.approx(want, rel=1e-6)


def test_risk_neutral_matches_brute_force(tiny):
    want, _, _ = brute_force_plan(tiny.net, tiny.nzr_lines, tiny.scenarios.line_wip, tiny.pi1,
                                  0.0, tiny.demand)
    for strategy in ("enum", "milp"):
        assert solve_risk_neutral(tiny, strategy).objective == pytest.approx(want, rel=1e-6)


def test_risk_budget_is_respected(three_bus):
    inst = make_instance(three_bus.truncated(3), nzr_cap=2, mode="unweighted", risk_tolerance=1)
    want, _, pat = brute_force_plan(inst.net, inst.nzr_lines, inst.scenarios.line_wip, inst.pi1,
                                    0.5, inst.demand, inst.risk.risk, 1)
    for strategy in ("enum", "milp"):
        plan = solve_dr_psps(inst, AmbiguityConfig(0.5, strategy))
        assert plan.shutoffs.sum() <= 1
        assert plan.objective == pytest.approx(want, rel=1e-6)


@pytest.fixture(scope="module")
def six_hours(three_bus):
    return make_instance(three_bus.truncated(6), nzr_cap=2)


@pytest.mark.parametrize("kappa", [0.0, 0.5, 0.9])
def test_enum_and_milp_agree(six_hours, kappa):
    a = solve_dr_psps(six_hours, AmbiguityConfig(kappa, "enum"))
    b = solve_dr_psps(six_hours, AmbiguityConfig(kappa, "milp"))
    assert a.objective == pytest.approx(b.objective, rel=1e-6)
    # the solver's own value agrees with the exact re-evaluation
    assert a.stats["solver_objective"] == pytest.approx(a.objective, rel=1e-6)


def test_objective_grows_with_kappa(six_hours):
    vals = [solve_dr_psps(six_hours, AmbiguityConfig(k)).objective
            for k in (0, 0.2, 0.4, 0.6, 0.8, 1.0)]
    assert all(b >= a - 1e-7 * abs(a) for a, b in zip(vals, vals[1:]))


def test_plan_fields(six_hours):
    plan = solve_dr_psps(six_hours, AmbiguityConfig(0.5))
    d = plan.decomposition
    assert plan.probabilities.sum() == pytest.approx(1.0)
    assert plan.objective == pytest.approx(
        d["f_uc"] + robust_value(plan.scenario_costs, plan.probabilities, 0.5))
    assert d["worst_case"] == plan.scenario_costs.max()
    out = plan.to_dict()
    assert "seconds" not in out["stats"]
    assert len(out["commitments"]) == 2 and len(out["commitments"][0]) == 6


def test_revpi_is_nonnegative(tiny):
    base = None
    for kappa in (0.0, 0.25, 0.5, 0.75, 0.99, 0.999):
        r = revpi(tiny, kappa, ws=base)
        base = r["ws"]
        assert r["revpi"] >= -1e-6 * max(1.0, abs(r["rerp"]))


def test_no_admissible_pattern_raises(three_bus):
    inst = make_instance(three_bus.truncated(3), nzr_cap=2, mode="unweighted",
                         risk_tolerance=-1)
    with pytest.raises(PlanningError):
        solve_dr_psps(inst)


# -- ties and Pareto -------------------------------------------------------------------


def test_ties_prefer_more_energized_lines():
    z = np.zeros((1, 1), dtype=np.int8)
    off = _Candidate(100.0, np.array([0, 1]), z, 0, "")
    on = _Candidate(100.0 + 1e-8, np.array([1, 1]), z, 0, "")
    assert _better(on, off) and not _better(off, on)
    cheaper = _Candidate(99.0, np.array([0, 0]), z, 0, "")
    assert _better(cheaper, on)


@settings(max_examples=100)
@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 20)), min_size=1, max_size=12))
def test_pareto_front_matches_skyline(points):
    costs = np.array([p[0] for p in points], dtype=float)
    risks = np.array([p[1] for p in points], dtype=float)
    assert pareto_front(costs, risks).tolist() == skyline(costs, risks).tolist()


def test_pareto_sweep_on_three_bus(three_bus):
    pts = pareto_sweep(three_bus.truncated(3), (1, 2))
    assert [p.pattern for p in pts] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    # LP noise (~1e-10) would split exact ties in the oracle
    costs = np.round([p.cost for p in pts], 6)
    risks = np.round([p.risk for p in pts], 9)
    assert [p.pareto for p in pts] == skyline(costs, risks).tolist()
    # nothing energized: zero risk, so never dominated
    assert pts[0].risk == 0 and pts[0].pareto


@settings(max_examples=100)
@given(priced(), st.floats(-1e4, 1e4))
def test_translation_shifts_the_risk_measures(data, c):
    costs, probs, kappa = data
    tol = 1e-9 * max(1.0, costs.max(), abs(c))
    assert cvar(costs + c, probs, kappa) == pytest.approx(cvar(costs, probs, kappa) + c, abs=tol)
    assert robust_value(costs + c, probs, kappa) == pytest.approx(
        robust_value(costs, probs, kappa) + c, abs=tol)


def test_full_radius_is_min_of_worst_case(tiny):
    from drpsps.planners import build_pattern_model, evaluate_first_stage
    from drpsps.milp_core import solve
    plan = solve_dr_psps(tiny, AmbiguityConfig(1.0))
    best = np.inf
    for pat in tiny.admissible_patterns():
        model, vi, _ = build_pattern_model(tiny, pat, 1.0)
        z = np.round(solve(model).values(vi.uc.z))
        ev = evaluate_first_stage(tiny, z, pat, 1.0)
        best = min(best, ev.commitment_cost + ev.scenario_costs.max())
    assert plan.objective == pytest.approx(best, rel=1e-9)


def test_plan_probabilities_are_the_decision_distribution(six_hours):
    from drpsps.outage_model import decision_probability
    plan = solve_dr_psps(six_hours, AmbiguityConfig(0.3))
    for s, xi in enumerate(six_hours.scenarios.xi):
        want = decision_probability(plan.shutoffs, xi, six_hours.scenarios.line_wip,
                                    six_hours.pi1)
        assert abs(plan.probabilities[s] - want) <= 1e-8
