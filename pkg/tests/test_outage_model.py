import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drpsps.outage_model import (OutageModelError, binary_vectors, decision_distribution,
                                 decision_probability, enumerate_scenarios, fire_instances,
                                 line_risk, pattern_id, risk_profile, select_nzr_lines,
                                 shaping_coefficients, tv_distance, tv_matrix)

from oracles import product_probability

# rows 1..8 of the published table, xi ordered (2-4, 7-8, 10-12), 1 = survives
PUBLISHED_PROBS = [5.54e-6, 2.44e-4, 3.01e-4, 1.33e-2, 3.95e-4, 1.74e-2, 2.15e-2, 0.947]

probs = st.floats(0.001, 0.999)


@st.composite
def line_data(draw, max_lines=5):
    n = draw(st.integers(1, max_lines))
    pi0 = np.array(draw(st.lists(probs, min_size=n, max_size=n)))
    bump = np.array(draw(st.lists(st.floats(0, 1), min_size=n, max_size=n)))
    pi1 = pi0 + (1 - pi0) * bump
    z = np.array(draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)))
    return pi0, pi1, z


def test_binary_vectors_order():
    v = binary_vectors(3)
    assert v.shape == (8, 3)
    assert [pattern_id(r) for r in v] == list(range(8))
    assert binary_vectors(0).shape == (1, 0)


def test_published_scenario_probabilities():
    scen = enumerate_scenarios((4, 11, 17), [0.01383, 0.01807, 0.0222])
    # row k of the table is scenario id k-1 (big-endian survival bits)
    for row, p in enumerate(PUBLISHED_PROBS):
        assert scen.pi0[row] == pytest.approx(p, rel=1e-2)


@given(line_data())
def test_decision_distribution_sums_to_one(data):
    pi0, pi1, z = data
    scen = enumerate_scenarios(range(1, len(pi0) + 1), pi0)
    dist = decision_distribution(z, scen, pi1)
    assert dist.sum() == pytest.approx(1.0, abs=1e-12)
    assert (dist >= 0).all()


@given(line_data())
def test_decision_probability_matches_loop(data):
    pi0, pi1, z = data
    for xi in binary_vectors(len(pi0)):
        assert decision_probability(z, xi, pi0, pi1) == pytest.approx(
            product_probability(xi, z, pi0, pi1), rel=1e-12, abs=1e-300)


@given(line_data())
def test_all_energized_is_baseline(data):
    pi0, pi1, _ = data
    scen = enumerate_scenarios(range(1, len(pi0) + 1), pi0)
    dist = decision_distribution(np.ones(len(pi0), int), scen, pi1)
    assert np.allclose(dist, scen.pi0, rtol=1e-12, atol=0)


def test_switched_off_line_with_certain_ignition_always_fails():
    scen = enumerate_scenarios((1, 2), [0.1, 0.2])
    dist = decision_distribution([0, 1], scen, [1.0, 1.0])
    # line 1 off and sure to be lost: only scenarios with xi_1 = 0 remain
    assert dist[scen.xi[:, 0] == 1].sum() == 0.0
    assert dist.sum() == pytest.approx(1.0)


@given(line_data())
def test_bayes_ratios_rescale_marginals(data):
    pi0, pi1, _ = data
    c = shaping_coefficients(pi0, pi1)
    assert np.allclose(pi0 * c.up, pi1)
    assert np.allclose((1 - pi0) * c.down, 1 - pi1)


def test_shaping_rejects_degenerate_lines():
    with pytest.raises(OutageModelError):
        shaping_coefficients([0.0, 0.5], [1.0, 1.0])
    with pytest.raises(OutageModelError):
        shaping_coefficients([1.0], [1.0])
    with pytest.raises(OutageModelError):
        shaping_coefficients([0.5], [0.2])


def test_scenario_cap():
    with pytest.raises(OutageModelError, match="cap"):
        enumerate_scenarios(range(13), [0.1] * 13)


def test_risk_modes(three_bus):
    ln = three_bus.line(1)
    assert line_risk(ln, "svi") == pytest.approx(0.05 * 0.5 * 1000)
    assert line_risk(ln, "acres") == pytest.approx(0.05 * 1000)
    assert line_risk(ln, "unweighted") == 1.0
    with pytest.raises(OutageModelError):
        line_risk(ln, "bogus")


def test_nzr_selection(three_bus, rts24):
    assert select_nzr_lines(three_bus, cap=2) == (1, 2)
    assert select_nzr_lines(three_bus, cap=None) == (1, 2, 3)
    assert select_nzr_lines(rts24, cap=3) == (4, 11, 17)
    # unweighted mode ranks by the weighted risk so the line set does not move
    assert select_nzr_lines(rts24, cap=3, mode="unweighted") == (4, 11, 17)
    prof = risk_profile(three_bus, (1, 2), "unweighted", 1)
    assert prof.risk.tolist() == [1.0, 1.0] and prof.tolerance == 1


def test_tv_distance_and_fires():
    assert tv_distance([1, 0, 1], [1, 0, 1]) == 0
    assert tv_distance([1, 0, 1], [1, 1, 1]) == 1
    scen = enumerate_scenarios((1, 2), [0.1, 0.2])
    m = tv_matrix(scen)
    assert m.shape == (4, 4) and m.trace() == 0 and m.sum() == 12
    # energized and failed; switched-off lines never count as fires
    assert fire_instances([1, 0], [0, 0]).tolist() == [1, 0]
    with pytest.raises(OutageModelError):
        tv_distance([1, 0], [1, 0, 1])


@settings(max_examples=25)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_enumeration_is_product_form(n, seed):
    rng = np.random.default_rng(seed)
    pi0 = rng.uniform(0.001, 0.5, n)
    scen = enumerate_scenarios(range(1, n + 1), pi0)
    for s, xi in enumerate(scen.xi):
        assert scen.pi0[s] == pytest.approx(product_probability(xi, np.ones(n), pi0, pi0))
