"""Regenerate the network fixtures shipped in ``src/drpsps/data``.

Two networks come out of this script:

three_bus.json
    A triangle with a cheap unit at bus 1, an expensive one at bus 3 and loads
    at buses 2 and 3.  All three lines carry wildfire risk; the two riskiest
    (lines 1-2 and 1-3) are the NZR lines under the default cap of 2.

rts24_reduced.json
    The 24-bus reliability test system topology (38 branches, 17 loads) with
    aggregated generators and synthetic costs.  Ignition probabilities are
    stored unscaled and multiplied by ``wip_scale = 1e4`` on load; their
    expectation over the five demand scenarios puts lines (2,4), (7,8) and
    (10,12) at 0.01383, 0.01807 and 0.0222.
"""

from __future__ import annotations

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "drpsps" / "data"

# hourly shape of a summer weekday, peak = 1
SHAPE = [0.64, 0.60, 0.58, 0.56, 0.56, 0.58, 0.64, 0.76, 0.87, 0.95, 0.99, 1.00,
         0.99, 1.00, 1.00, 0.97, 0.96, 0.96, 0.93, 0.92, 0.92, 0.93, 0.87, 0.72]


def profile(peak: float, mults: list[float]) -> list[list[float]]:
    return [[round(peak * m * s, 4) for s in SHAPE] for m in mults]


def three_bus() -> dict:
    mults = [0.9, 1.1]
    lines = [
        dict(id=1, from_bus=1, to_bus=2, susceptance=10.0, flow_min=-100.0, flow_max=100.0,
             wip_base=0.05, wip_deenergized=1.0, svi=0.5, impact=1000.0),
        dict(id=2, from_bus=1, to_bus=3, susceptance=10.0, flow_min=-100.0, flow_max=100.0,
             wip_base=0.1, wip_deenergized=1.0, svi=0.4, impact=1000.0),
        dict(id=3, from_bus=2, to_bus=3, susceptance=10.0, flow_min=-60.0, flow_max=60.0,
             wip_base=0.02, wip_deenergized=1.0, svi=0.5, impact=100.0),
    ]
    gens = [
        dict(id=1, bus=1, p_min=0.0, p_max=250.0, ramp_min=-250.0, ramp_max=250.0,
             cost_marginal=20.0, cost_up=500.0, cost_dn=100.0, min_up=2, min_dn=2,
             initial_status=True),
        dict(id=2, bus=3, p_min=0.0, p_max=150.0, ramp_min=-100.0, ramp_max=100.0,
             cost_marginal=50.0, cost_up=200.0, cost_dn=50.0, min_up=1, min_dn=1,
             initial_status=False),
    ]
    demands = [
        dict(id=1, bus=2, voll=5000.0, profile=profile(90.0, mults)),
        dict(id=2, bus=3, voll=5000.0, profile=profile(60.0, mults)),
    ]
    return dict(
        meta=dict(name="three_bus", horizon=24, mva_base=100.0, theta_max=0.6, wip_scale=1.0),
        buses=[dict(id=1, name="north", is_reference=True), dict(id=2, name="east"),
               dict(id=3, name="south")],
        lines=lines, generators=gens, demands=demands,
        demand_scenarios=[dict(id=1, probability=0.5), dict(id=2, probability=0.5)],
    )


RTS_BRANCHES = [  # from, to, reactance p.u., rating MW
    (1, 2, 0.0139, 175), (1, 3, 0.2112, 175), (1, 5, 0.0845, 175), (2, 4, 0.1267, 175),
    (2, 6, 0.1920, 175), (3, 9, 0.1190, 175), (3, 24, 0.0839, 400), (4, 9, 0.1037, 175),
    (5, 10, 0.0883, 175), (6, 10, 0.0605, 175), (7, 8, 0.0614, 175), (8, 9, 0.1651, 175),
    (8, 10, 0.1651, 175), (9, 11, 0.0839, 400), (9, 12, 0.0839, 400), (10, 11, 0.0839, 400),
    (10, 12, 0.0839, 400), (11, 13, 0.0476, 500), (11, 14, 0.0418, 500), (12, 13, 0.0476, 500),
    (12, 23, 0.0966, 500), (13, 23, 0.0865, 500), (14, 16, 0.0389, 500), (15, 16, 0.0173, 500),
    (15, 21, 0.0490, 500), (15, 21, 0.0490, 500), (15, 24, 0.0519, 500), (16, 17, 0.0259, 500),
    (16, 19, 0.0231, 500), (17, 18, 0.0144, 500), (17, 22, 0.1053, 500), (18, 21, 0.0259, 500),
    (18, 21, 0.0259, 500), (19, 20, 0.0396, 500), (19, 20, 0.0396, 500), (20, 23, 0.0216, 500),
    (20, 23, 0.0216, 500), (21, 22, 0.0678, 500),
]

RTS_LOADS = {1: 108, 2: 97, 3: 180, 4: 74, 5: 71, 6: 136, 7: 125, 8: 171, 9: 175, 10: 195,
             13: 265, 14: 194, 15: 317, 16: 100, 18: 333, 19: 181, 20: 128}

# Only the bus-7 unit and the two must-run units keep a minimum output; with
# a floor on every unit each pattern MILP takes minutes instead of seconds.
# bus, p_min, p_max, marginal $/MWh, start $, stop $, min up, min down, initially on
RTS_UNITS = [
    (1, 0, 152, 14.0, 1500, 200, 4, 4, True),
    (1, 0, 40, 70.0, 100, 0, 1, 1, False),
    (2, 0, 152, 14.5, 1500, 200, 4, 4, True),
    (2, 0, 40, 72.0, 100, 0, 1, 1, False),
    (7, 30, 300, 45.0, 2000, 300, 3, 3, True),
    (13, 0, 591, 40.0, 4000, 500, 4, 4, True),
    (15, 0, 215, 16.0, 1800, 200, 4, 4, True),
    (16, 0, 155, 15.0, 1500, 200, 4, 4, True),
    (18, 300, 400, 6.0, 20000, 2000, 24, 24, True),
    (21, 300, 400, 6.0, 20000, 2000, 24, 24, True),
    (22, 0, 300, 2.0, 0, 0, 1, 1, True),
    (23, 0, 660, 13.0, 5000, 600, 6, 6, True),
]

# line index (1-based) -> (unscaled base ignition probability, svi, burned acres)
RTS_RISK = {
    4: (1.383e-6, 0.6, 2000.0),
    11: (1.807e-6, 0.7, 1800.0),
    17: (2.22e-6, 0.5, 2500.0),
    3: (0.6e-6, 0.4, 1500.0),
    6: (0.8e-6, 0.5, 1200.0),
    12: (0.9e-6, 0.3, 1600.0),
}
SCEN_PROBS = [0.1, 0.2, 0.4, 0.2, 0.1]
SCEN_MULTS = [0.85, 0.93, 1.0, 1.07, 1.15]
WIP_MULTS = [0.8, 0.9, 1.0, 1.1, 1.2]  # expectation under SCEN_PROBS is exactly 1


def rts24() -> dict:
    lines = []
    for k, (f, t, x, rate) in enumerate(RTS_BRANCHES, start=1):
        wip, svi, acres = RTS_RISK.get(k, (0.0, 0.0, 0.0))
        lines.append(dict(id=k, from_bus=f, to_bus=t, susceptance=round(1.0 / x, 6),
                          flow_min=-float(rate), flow_max=float(rate), wip_base=wip,
                          wip_deenergized=1.0, svi=svi, impact=acres))
    gens = []
    for k, (bus, pmin, pmax, c, cu, cd, mu, md, on) in enumerate(RTS_UNITS, start=1):
        gens.append(dict(id=k, bus=bus, p_min=float(pmin), p_max=float(pmax),
                         ramp_min=-float(pmax), ramp_max=float(pmax), cost_marginal=c,
                         cost_up=float(cu), cost_dn=float(cd), min_up=mu, min_dn=md,
                         initial_status=on))
    demands = [dict(id=k, bus=bus, voll=5000.0, profile=profile(0.9 * peak, SCEN_MULTS))
               for k, (bus, peak) in enumerate(sorted(RTS_LOADS.items()), start=1)]
    scenarios = []
    for k, (p, wm) in enumerate(zip(SCEN_PROBS, WIP_MULTS), start=1):
        scenarios.append(dict(id=k, probability=p,
                              wip={str(i): v[0] * wm for i, v in sorted(RTS_RISK.items())}))
    return dict(
        meta=dict(name="rts24_reduced", horizon=24, mva_base=100.0, theta_max=0.6,
                  wip_scale=1e4),
        buses=[dict(id=i, name=f"bus{i}", is_reference=(i == 13)) for i in range(1, 25)],
        lines=lines, generators=gens, demands=demands, demand_scenarios=scenarios,
    )


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, doc in (("three_bus", three_bus()), ("rts24_reduced", rts24())):
        (OUT / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")
        print(f"wrote {OUT / name}.json")


if __name__ == "__main__":
    main()
