"""Walk through one planning day on the bundled 3-bus network.

    python demos/three_bus_walkthrough.py

Prints the outage scenarios, the plans at a few radii, what the robust plan
gives up against perfect information, and a short Monte Carlo check.
"""

import warnings

import numpy as np

from drpsps.cli import resolve_network
from drpsps.formulation import make_instance
from drpsps.grid_model import load_network
from drpsps.oos_sim import evaluate_plan, exact_expected_cost, plan_wip, sample_outages
from drpsps.planners import AmbiguityConfig, revpi, solve_dr_psps, solve_risk_neutral

warnings.filterwarnings("ignore", message="Unrecognized options")

net = load_network(resolve_network("three_bus"))
inst = make_instance(net, nzr_cap=2)
print(f"NZR lines {inst.nzr_lines}, ignition probabilities {inst.scenarios.line_wip}")

print("\nscenario  xi   baseline prob")
for s, xi in enumerate(inst.scenarios.xi):
    print(f"{s:>8}  {''.join(map(str, xi))}   {inst.scenarios.pi0[s]:.4g}")

rn = solve_risk_neutral(inst)
print(f"\nrisk-neutral plan: shutoffs {rn.shutoffs.tolist()}, cost {rn.objective:,.2f}")

# widening the ball moves weight onto the costliest scenario
for kappa in (0.0, 0.25, 0.5, 0.9):
    plan = solve_dr_psps(inst, AmbiguityConfig(kappa))
    d = plan.decomposition
    print(f"kappa={kappa:<4} shutoffs={plan.shutoffs.tolist()} objective={plan.objective:>14,.2f}"
          f"  commitment={d['f_uc']:,.0f}  worst scenario={d['worst_case']:,.0f}")

print("\nvalue of perfect information under the same ball")
ws = None
for kappa in (0.0, 0.5, 0.99):
    r = revpi(inst, kappa, ws=ws)
    ws = r["ws"]
    print(f"kappa={kappa:<5} RERP={r['rerp']:>14,.2f} REWS={r['rews']:>14,.2f} "
          f"REVPI={r['revpi']:>12,.2f}")

plan = solve_dr_psps(inst, AmbiguityConfig(0.5))
wip = plan_wip(net, plan)
exact = exact_expected_cost(net, plan, wip)
for n in (100, 1000, 10000):
    rep = evaluate_plan(net, plan, sample_outages(wip, n, seed=7))
    print(f"n={n:>6}: mean {rep.expected_cost:>14,.2f} +/- {rep.standard_error:,.2f}"
          f"   (exact {exact:,.2f})")
print(f"share of samples with load shed: "
      f"{np.mean([r.shed_mwh > 1e-9 for r in rep.samples]):.3f}")
