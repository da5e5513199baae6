import math

import numpy as np
import pytest

from drpsps.formulation import commitment_cost
from drpsps.oos_sim import (OosError, evaluate_plan, exact_expected_cost, plan_wip,
                            sample_outages)
from drpsps.planners import AmbiguityConfig, PlanResult, solve_dr_psps


@pytest.fixture(scope="module")
def plan(three_inst):
    return solve_dr_psps(three_inst, AmbiguityConfig(0.5))


def test_sampling_extremes():
    s = sample_outages([0.0, 1.0], 50, seed=3)
    assert (s.samples[:, 0] == 1).all() and (s.samples[:, 1] == 0).all()
    assert s.failure_rate().tolist() == [0.0, 1.0]


def test_sampling_rate():
    s = sample_outages([0.5, 0.1], 4000, seed=11)
    assert abs(s.failure_rate()[0] - 0.5) < 0.02
    assert abs(s.failure_rate()[1] - 0.1) < 0.02
    assert s.probabilities.sum() == pytest.approx(1.0)


def test_sampling_is_reproducible_and_prefix_stable():
    a = sample_outages([0.3, 0.2, 0.6], 200, seed=5)
    b = sample_outages([0.3, 0.2, 0.6], 200, seed=5)
    c = sample_outages([0.3, 0.2, 0.6], 50, seed=5)
    d = sample_outages([0.3, 0.2, 0.6], 200, seed=6)
    assert np.array_equal(a.samples, b.samples)
    # sample i only depends on (seed, i)
    assert np.array_equal(a.samples[:50], c.samples)
    assert not np.array_equal(a.samples, d.samples)


@pytest.mark.parametrize("wip, n", [([1.2], 10), ([-0.1], 10), ([math.nan], 10), ([0.1], 0)])
def test_sampling_rejects_bad_input(wip, n):
    with pytest.raises(OosError):
        sample_outages(wip, n, seed=0)


def test_lines_must_match_the_plan(three_bus, plan):
    s = sample_outages([0.1], 5, seed=0, line_ids=(3,))
    with pytest.raises(OosError):
        evaluate_plan(three_bus, plan, s)


def test_reports_are_byte_identical(three_bus, plan):
    wip = plan_wip(three_bus, plan)
    a = evaluate_plan(three_bus, plan, sample_outages(wip, 300, seed=42))
    b = evaluate_plan(three_bus, plan, sample_outages(wip, 300, seed=42), jobs=2)
    assert a.to_csv() == b.to_csv() and a.to_json() == b.to_json()
    assert a.fingerprint() == b.fingerprint()
    c = evaluate_plan(three_bus, plan, sample_outages(wip, 300, seed=43))
    assert c.to_csv() != a.to_csv()


def test_report_statistics(three_bus, plan):
    wip = plan_wip(three_bus, plan)
    rep = evaluate_plan(three_bus, plan, sample_outages(wip, 500, seed=1))
    totals = np.array([r.total for r in rep.samples])
    assert rep.excluded == 0
    assert rep.expected_cost == pytest.approx(totals.mean())
    assert rep.standard_error == pytest.approx(totals.std(ddof=1) / math.sqrt(500))
    assert rep.quantiles["q05"] <= rep.quantiles["q50"] <= rep.quantiles["q95"]
    assert rep.commitment_cost == pytest.approx(commitment_cost(three_bus, plan.commitments))
    for r in rep.samples:
        assert r.total == pytest.approx(rep.commitment_cost + r.dispatch_cost + r.voll_cost)


def test_monte_carlo_converges_to_enumeration(three_bus, plan):
    wip = plan_wip(three_bus, plan)
    exact = exact_expected_cost(three_bus, plan, wip)
    errors = []
    for n in (100, 1000, 10000):
        rep = evaluate_plan(three_bus, plan, sample_outages(wip, n, seed=2024))
        assert abs(rep.expected_cost - exact) <= 3 * rep.standard_error + 1e-9 * exact
        errors.append(rep.standard_error)
    assert errors[0] > errors[1] > errors[2]


def test_no_sample_costs_more_than_losing_every_line(three_bus, plan):
    # shedding is the only recourse here, so losing every NZR line is the worst case
    wip = plan_wip(three_bus, plan)
    all_fail = exact_expected_cost(three_bus, plan, np.ones_like(wip))
    rep = evaluate_plan(three_bus, plan, sample_outages(wip, 500, seed=8))
    assert max(r.total for r in rep.samples) <= all_fail * (1 + 1e-12)
    assert rep.expected_cost <= all_fail


def test_certain_outage_sheds_load(three_bus, plan):
    # both NZR lines always lost: bus 2 is fed through line 3 alone
    wip = np.ones(len(plan.nzr_lines))
    rep = evaluate_plan(three_bus, plan, sample_outages(wip, 5, seed=0))
    exact = exact_expected_cost(three_bus, plan, wip)
    assert rep.expected_cost == pytest.approx(exact)
    assert rep.standard_error == 0.0
    assert all(r.shed_mwh > 0 and r.voll_cost > 0 for r in rep.samples)


def _handmade_plan(net, nzr_lines, commitments):
    L = len(nzr_lines)
    return PlanResult(np.asarray(commitments, dtype=np.int8), np.ones(L, dtype=np.int8),
                      np.zeros(1), np.ones(1), 0.0, {}, 0.5, "enum", tuple(nzr_lines))


def test_infeasible_samples_are_excluded_and_counted(three_bus):
    # g2 starts at hour 6, and the ramp rule forces it to >= 50 MW; with lines 2
    # and 3 both lost its island holds only 34.8 MW of load
    commit = np.ones((2, 24), dtype=int)
    commit[1, :5] = 0
    plan = _handmade_plan(three_bus, (2, 3), commit)
    samples = sample_outages([0.5, 0.5], 400, seed=9, line_ids=(2, 3))
    rep = evaluate_plan(three_bus, plan, samples)
    both_lost = int(((samples.samples[:, 0] == 0) & (samples.samples[:, 1] == 0)).sum())
    assert both_lost > 0
    assert rep.excluded == both_lost
    assert sum(not r.feasible for r in rep.samples) == both_lost
    ok = [r.total for r in rep.samples if r.feasible]
    assert rep.expected_cost == pytest.approx(np.mean(ok))
    with pytest.raises(OosError):
        exact_expected_cost(three_bus, plan, [0.5, 0.5])
