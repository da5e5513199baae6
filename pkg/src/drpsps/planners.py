"""Solve strategies and the metrics built on them.

``solve_dr_psps`` minimises commitment cost plus the worst-case expected
scenario cost over a total-variation ball of radius ``kappa`` around the
decision-dependent outage distribution.  Two strategies are available:

enumeration (default)
    loop over every admissible shut-off pattern.  With the pattern fixed the
    scenario probabilities are constants, the robust term has a linear dual and
    each subproblem is an ordinary UC MILP.  Best pattern wins; ties go to the
    pattern with more energized lines, then the larger pattern id.
milp
    one MILP with pattern-selector binaries, the distribution-shaping block and
    the McCormick encoding of the robust term.

After either solve the scenario costs are recomputed by re-solving each
scenario's dispatch LP with the first-stage decisions fixed, so reported costs
do not inherit solver slack.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid_model import Network, expected_demand, expected_wip
from .milp_core import MilpModel, SolveOptions, SolverError, solve
from .outage_model import (binary_vectors, decision_distribution, line_risk, pattern_id,
                           shaping_coefficients)
from .formulation import (FormulationError, PlanningInstance, UcVars, VariableIndex,
                          build_dispatch_block, build_dro_dual_block, build_dro_milp_block,
                          build_expectation, build_expectation_milp, build_pattern_selectors,
                          build_risk_budget, build_shaping_block, build_uc_block,
                          commitment_cost, cost_upper_bound, pattern_probabilities,
                          solve_dispatch)

STRATEGIES = ("enum", "milp")
OBJECTIVES = ("dro", "expectation")
PROB_EPS = 1e-12


class PlanningError(RuntimeError):
    pass


@dataclass(frozen=True)
class AmbiguityConfig:
    kappa: float = 0.0
    strategy: str = "enum"
    distance: str = "binary-tv"

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError(f"kappa {self.kappa} outside [0, 1]")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")


@dataclass
class PlanResult:
    commitments: np.ndarray
    shutoffs: np.ndarray
    scenario_costs: np.ndarray
    probabilities: np.ndarray
    objective: float
    decomposition: dict
    kappa: float = 0.0
    strategy: str = "enum"
    nzr_lines: tuple = ()
    energy_costs: np.ndarray | None = None
    shed_costs: np.ndarray | None = None
    stats: dict = field(default_factory=dict)

    @property
    def commitment_cost(self) -> float:
        return float(self.decomposition["f_uc"])

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "strategy": self.strategy,
            "objective": self.objective,
            "decomposition": self.decomposition,
            "nzr_lines": list(self.nzr_lines),
            "shutoffs": [int(v) for v in self.shutoffs],
            # one string per unit, hour by hour
            "commitments": ["".join(str(int(v)) for v in row) for row in self.commitments],
            "scenario_costs": self.scenario_costs.tolist(),
            "probabilities": self.probabilities.tolist(),
            # wall-clock time would make otherwise identical runs differ
            "stats": {k: v for k, v in self.stats.items() if k != "seconds"},
        }


# -- risk measures -------------------------------------------------------------


def _validate(costs, probs) -> tuple[np.ndarray, np.ndarray]:
    costs = np.asarray(costs, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if costs.size == 0:
        raise ValueError("empty cost vector")
    if costs.shape != probs.shape:
        raise ValueError("costs and probabilities differ in shape")
    if np.any(probs < -PROB_EPS) or abs(probs.sum() - 1.0) > 1e-8:
        raise ValueError("probabilities must be nonnegative and sum to 1")
    return costs, np.clip(probs, 0.0, None)


def var(costs, probs, kappa: float) -> float:
    """Upper ``kappa``-quantile: the smallest cost whose cumulative probability
    exceeds ``kappa``; ties go to the larger cost."""
    costs, probs = _validate(costs, probs)
    order = np.argsort(costs, kind="stable")
    cum = np.cumsum(probs[order])
    hit = np.flatnonzero(cum > kappa + 1e-12)
    if hit.size == 0:
        return float(costs.max())
    return float(costs[order][hit[0]])


def cvar(costs, probs, kappa: float) -> float:
    """Mean of the costliest ``1 - kappa`` probability mass."""
    if not 0.0 <= kappa < 1.0:
        raise ValueError("kappa must lie in [0, 1) for CVaR")
    costs, probs = _validate(costs, probs)
    v = var(costs, probs, kappa)
    return v + float(probs @ np.maximum(costs - v, 0.0)) / (1.0 - kappa)


def robust_value(costs, probs, kappa: float) -> float:
    """Worst-case expectation over the TV ball: ``kappa*max + (1-kappa)*CVaR``.
    The max runs over every scenario, including zero-probability ones."""
    costs, probs = _validate(costs, probs)
    if kappa >= 1.0:
        return float(costs.max())
    return kappa * float(costs.max()) + (1.0 - kappa) * cvar(costs, probs, kappa)


def robust_decomposition(costs, probs, kappa: float) -> dict:
    """Split the robust value into the expectation, the ``kappa*tau`` premium and
    the expected shortfall below VaR (the optimal dual ``v - phi``)."""
    costs, probs = _validate(costs, probs)
    v = var(costs, probs, kappa) if kappa < 1 else float(costs.max())
    tau = float(costs.max()) - v
    return {"expected": float(probs @ costs), "tau": tau, "tau_kappa": kappa * tau,
            "below_var": float(probs @ np.maximum(v - costs, 0.0)), "var": v}


# -- enumeration ---------------------------------------------------------------


def _block_plan(inst: PlanningInstance, pattern: np.ndarray, keep: np.ndarray):
    """Distinct effective statuses among the kept scenarios and the map to them."""
    keys: dict[tuple, int] = {}
    block_of = np.empty(len(keep), dtype=np.int64)
    statuses = []
    for k, s in enumerate(keep):
        st = tuple(int(v) for v in inst.effective_status(pattern, inst.scenarios.xi[s]))
        if st not in keys:
            keys[st] = len(statuses)
            statuses.append(st)
        block_of[k] = keys[st]
    return statuses, block_of


def build_pattern_model(inst: PlanningInstance, pattern: np.ndarray, kappa: float,
                        phi_ub: float | None = None, objective: str = "dro"
                        ) -> tuple[MilpModel, VariableIndex, np.ndarray]:
    """UC plus dispatch blocks with the shut-off pattern fixed.  Returns the model,
    its handles and the (constant) scenario probabilities.

    ``objective="dro"`` prices the scenarios with the TV-ball dual block, at any
    kappa including 0.  ``"expectation"`` is the plain risk-neutral sum and
    ignores ``kappa``.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    probs = decision_distribution(pattern, inst.scenarios, inst.pi1)
    S = len(probs)
    # zero-probability scenarios cannot move an expectation
    keep = np.arange(S) if objective == "dro" else np.flatnonzero(probs > 0)
    model = MilpModel(f"pattern{pattern_id(pattern)}")
    uc = build_uc_block(model, inst.net)
    statuses, block_of = _block_plan(inst, pattern, keep)
    ub = cost_upper_bound(inst.net, inst.demand) if phi_ub is None else phi_ub
    blocks = [build_dispatch_block(model, inst.net, inst.demand, uc, st, f"b{b}.", ub)
              for b, st in enumerate(statuses)]
    vi = VariableIndex(uc=uc, blocks=blocks, block_of=block_of)
    phi = vi.phi()
    if objective == "dro":
        vi.dro = build_dro_dual_block(model, probs[keep], phi, kappa)
    else:
        build_expectation(model, probs[keep], phi)
    vi.dro["scenarios"] = keep
    return model, vi, probs


@dataclass
class _Candidate:
    objective: float
    pattern: np.ndarray
    commitments: np.ndarray
    nodes: int
    backend: str


def _better(a: _Candidate, b: _Candidate | None) -> bool:
    if b is None:
        return True
    tol = 1e-9 * max(1.0, abs(b.objective))
    if a.objective < b.objective - tol:
        return True
    if a.objective > b.objective + tol:
        return False
    ka = (int(a.pattern.sum()), pattern_id(a.pattern))
    kb = (int(b.pattern.sum()), pattern_id(b.pattern))
    return ka > kb


def _solve_enum(inst: PlanningInstance, kappa: float, opts: SolveOptions,
                objective: str = "dro") -> _Candidate:
    best = None
    patterns = inst.admissible_patterns()
    if len(patterns) == 0:
        raise PlanningError("no shut-off pattern satisfies the risk budget")
    for pat in patterns:
        model, vi, _ = build_pattern_model(inst, pat, kappa, objective=objective)
        sol = solve(model, opts)
        if not sol.ok:
            continue
        z = np.round(sol.values(vi.uc.z)).astype(np.int8)
        cand = _Candidate(sol.objective, pat.copy(), z, sol.nodes, sol.backend)
        if _better(cand, best):
            best = cand
    if best is None:
        raise PlanningError("every shut-off pattern is infeasible")
    return best


# -- single-shot MILP ------------------------------------------------------------


def build_oneshot_model(inst: PlanningInstance, kappa: float, objective: str = "dro"
                        ) -> tuple[MilpModel, VariableIndex, np.ndarray]:
    """The whole robust problem as one MILP (pattern selectors, shaping, McCormick)."""
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    net = inst.net
    S, L = len(inst.scenarios), inst.n_nzr
    patterns = inst.admissible_patterns()
    if len(patterns) == 0:
        raise PlanningError("no shut-off pattern satisfies the risk budget")
    model = MilpModel("oneshot")
    uc = build_uc_block(model, net)
    zm = np.array([model.add_binary(f"zminus[{lid}]") for lid in inst.nzr_lines], dtype=np.int64)
    build_risk_budget(model, zm, inst.risk)
    big_m = cost_upper_bound(net, inst.demand)
    blocks = []
    for s in range(S):
        status = list(inst.base_status())
        for k, lid in enumerate(inst.nzr_lines):
            status[lid - 1] = ("var", int(zm[k])) if inst.scenarios.xi[s, k] else 0
        blocks.append(build_dispatch_block(model, net, inst.demand, uc, status, f"s{s}.", big_m))
    vi = VariableIndex(uc=uc, z_minus=zm, blocks=blocks, block_of=np.arange(S))
    phi = vi.phi()
    pprobs = pattern_probabilities(inst, patterns)
    y = build_pattern_selectors(model, patterns, zm)
    if L:
        coeffs = shaping_coefficients(inst.scenarios.line_wip, inst.pi1)
        vi.shaping = build_shaping_block(model, inst.scenarios, coeffs, zm)
        pi_final = vi.shaping[-1]
    else:
        pi_final = np.array([model.add_var("shape[0,0]", 1.0, 1.0)], dtype=np.int64)
    if objective == "dro":
        vi.dro = build_dro_milp_block(model, pprobs, y, pi_final, phi, kappa, big_m)
    else:
        vi.dro = {"u": build_expectation_milp(model, pprobs, y, phi, big_m)}
    vi.dro["y"] = y
    vi.dro["patterns"] = patterns
    vi.dro["pi"] = pi_final
    return model, vi, pprobs


def _solve_milp(inst: PlanningInstance, kappa: float, opts: SolveOptions,
                objective: str = "dro") -> _Candidate:
    model, vi, _ = build_oneshot_model(inst, kappa, objective)
    sol = solve(model, opts)
    if not sol.ok:
        raise PlanningError(f"single-shot MILP ended with status {sol.status}")
    z = np.round(sol.values(vi.uc.z)).astype(np.int8)
    pat = (np.round(sol.values(vi.z_minus)).astype(np.int8) if inst.n_nzr
           else np.zeros(0, dtype=np.int8))
    return _Candidate(sol.objective, pat, z, sol.nodes, sol.backend)


# -- evaluation of a first-stage decision ----------------------------------------


def scenario_costs(inst: PlanningInstance, commitments: np.ndarray, shutoffs: np.ndarray,
                   opts: SolveOptions | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact dispatch cost (total, energy, shedding) of every outage scenario."""
    S = len(inst.scenarios)
    total, energy, shed = np.empty(S), np.empty(S), np.empty(S)
    cache: dict[tuple, tuple] = {}
    for s in range(S):
        st = tuple(int(v) for v in inst.effective_status(shutoffs, inst.scenarios.xi[s]))
        if st not in cache:
            out = solve_dispatch(inst.net, commitments, st, inst.demand, opts)
            if not out.feasible:
                raise PlanningError(f"dispatch infeasible in scenario {s} for the chosen plan")
            cache[st] = (out.phi, out.energy_cost, out.shed_cost)
        total[s], energy[s], shed[s] = cache[st]
    return total, energy, shed


def evaluate_first_stage(inst: PlanningInstance, commitments: np.ndarray, shutoffs: np.ndarray,
                         kappa: float, strategy: str = "enum",
                         opts: SolveOptions | None = None) -> PlanResult:
    commitments = np.asarray(commitments, dtype=np.int8)
    shutoffs = np.asarray(shutoffs, dtype=np.int8)
    probs = decision_distribution(shutoffs, inst.scenarios, inst.pi1)
    total, energy, shed = scenario_costs(inst, commitments, shutoffs, opts)
    f_uc = commitment_cost(inst.net, commitments)
    parts = robust_decomposition(total, probs, kappa)
    inner = robust_value(total, probs, kappa)
    decomposition = {
        "f_uc": f_uc,
        "expected_energy": float(probs @ energy),
        "expected_shed": float(probs @ shed),
        "tau_kappa": parts["tau_kappa"],
        "below_var": parts["below_var"],
        "var": parts["var"],
        "worst_case": float(total.max()),
    }
    return PlanResult(commitments, shutoffs, total, probs, f_uc + inner, decomposition, kappa,
                      strategy, inst.nzr_lines, energy, shed)


# -- public planners --------------------------------------------------------------


def _plan(inst: PlanningInstance, kappa: float, strategy: str, objective: str,
          opts: SolveOptions | None) -> PlanResult:
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}")
    opts = opts or SolveOptions()
    t0 = time.perf_counter()
    try:
        if strategy == "enum":
            cand = _solve_enum(inst, kappa, opts, objective)
        else:
            cand = _solve_milp(inst, kappa, opts, objective)
    except (SolverError, FormulationError) as exc:
        raise PlanningError(str(exc)) from exc
    plan = evaluate_first_stage(inst, cand.commitments, cand.pattern, kappa, strategy, opts)
    plan.stats = {"solver_objective": cand.objective, "nodes": cand.nodes,
                  "backend": cand.backend, "seconds": round(time.perf_counter() - t0, 3),
                  "patterns": int(len(inst.admissible_patterns())), "objective": objective}
    return plan


def solve_dr_psps(inst: PlanningInstance, amb: AmbiguityConfig | None = None,
                  opts: SolveOptions | None = None) -> PlanResult:
    """Robust plan for radius ``amb.kappa``.  The TV-ball encoding is used at
    every radius, so ``kappa = 0`` exercises the same model as ``kappa > 0``."""
    amb = amb or AmbiguityConfig()
    return _plan(inst, amb.kappa, amb.strategy, "dro", opts)


def solve_risk_neutral(inst: PlanningInstance, strategy: str = "enum",
                       opts: SolveOptions | None = None) -> PlanResult:
    """Minimise commitment cost plus the plain expected scenario cost."""
    return _plan(inst, 0.0, strategy, "expectation", opts)


def solve_deterministic(net: Network, status: Sequence[int], demand: np.ndarray,
                        opts: SolveOptions | None = None) -> tuple[float, np.ndarray]:
    """UC with every line status known in advance.  Returns (total cost, commitments)."""
    model = MilpModel("deterministic")
    uc = build_uc_block(model, net)
    d = build_dispatch_block(model, net, demand, uc, [int(s) for s in status], "",
                             cost_upper_bound(net, demand))
    model.add_obj(d.phi, 1.0)
    sol = solve(model, opts or SolveOptions())
    if not sol.ok:
        raise PlanningError(f"deterministic UC ended with status {sol.status}")
    return sol.objective, np.round(sol.values(uc.z)).astype(np.int8)


@dataclass
class WaitAndSee:
    scenario: int
    cost: float
    shutoffs: np.ndarray
    commitments: np.ndarray


def solve_wait_and_see(inst: PlanningInstance, opts: SolveOptions | None = None
                       ) -> list[WaitAndSee]:
    """Per-scenario optimum when the outage is known before committing units.

    The shut-off vector is still chosen (within the risk budget), but an
    energized line's fate is known, so only the effective status matters and
    each distinct status is solved once.
    """
    patterns = inst.admissible_patterns()
    if len(patterns) == 0:
        raise PlanningError("no shut-off pattern satisfies the risk budget")
    cache: dict[tuple, tuple[float, np.ndarray]] = {}
    out = []
    for s, xi in enumerate(inst.scenarios.xi):
        best = None
        for pat in patterns:
            st = tuple(int(v) for v in inst.effective_status(pat, xi))
            if st not in cache:
                cache[st] = solve_deterministic(inst.net, st, inst.demand, opts)
            cost, z = cache[st]
            cand = _Candidate(cost, pat, z, 0, "")
            if _better(cand, best):
                best = cand
        out.append(WaitAndSee(s, best.objective, best.pattern.copy(), best.commitments))
    return out


def revpi(inst: PlanningInstance, kappa: float, strategy: str = "enum",
          opts: SolveOptions | None = None, plan: PlanResult | None = None,
          ws: list[WaitAndSee] | None = None) -> dict:
    """Robustified value of perfect information.

    The wait-and-see costs are weighed with the robust plan's own scenario
    distribution, which keeps the difference nonnegative: the plan's scenario
    costs dominate the wait-and-see costs pointwise and the robust value is
    monotone.
    """
    plan = plan or solve_dr_psps(inst, AmbiguityConfig(kappa, strategy), opts)
    ws = ws or solve_wait_and_see(inst, opts)
    ws_costs = np.array([w.cost for w in ws])
    rews = robust_value(ws_costs, plan.probabilities, kappa)
    rerp = plan.objective
    return {"kappa": kappa, "rews": rews, "rerp": rerp, "revpi": rerp - rews, "plan": plan,
            "ws": ws}


# -- Pareto sweep -------------------------------------------------------------------


@dataclass
class ParetoPoint:
    pattern: tuple[int, ...]
    cost: float
    risk: float
    pareto: bool = False


def pareto_front(costs: np.ndarray, risks: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Flags of points not dominated in (cost, risk), both minimised."""
    n = len(costs)
    flags = np.ones(n, dtype=bool)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            ct = tol * max(1.0, abs(costs[i]))
            rt = tol * max(1.0, abs(risks[i]))
            no_worse = costs[j] <= costs[i] + ct and risks[j] <= risks[i] + rt
            better = costs[j] < costs[i] - ct or risks[j] < risks[i] - rt
            if no_worse and better:
                flags[i] = False
                break
    return flags


MAX_PARETO_LINES = 6


def pareto_sweep(net: Network, lines: Sequence[int], mode: str = "svi",
                 demand: np.ndarray | None = None,
                 opts: SolveOptions | None = None) -> list[ParetoPoint]:
    """Deterministic UC cost and energized risk for every on/off pattern of ``lines``.

    Lines outside ``lines`` stay in service.  The risk budget is not applied:
    the sweep is what an operator would use to pick one.
    """
    lines = tuple(int(i) for i in lines)
    if len(lines) > MAX_PARETO_LINES:
        raise PlanningError(f"at most {MAX_PARETO_LINES} lines in a Pareto sweep")
    demand = expected_demand(net) if demand is None else demand
    wip = expected_wip(net)
    risk = np.array([line_risk(net.line(i), mode, wip[i - 1]) for i in lines])
    points = []
    for pat in binary_vectors(len(lines)):
        status = np.where(wip >= 1.0, 0, 1).astype(np.int8)
        for k, lid in enumerate(lines):
            status[lid - 1] = pat[k]
        cost, _ = solve_deterministic(net, status, demand, opts)
        points.append(ParetoPoint(tuple(int(v) for v in pat), cost, float(pat @ risk)))
    flags = pareto_front(np.array([p.cost for p in points]), np.array([p.risk for p in points]))
    for p, f in zip(points, flags):
        p.pareto = bool(f)
    return points
