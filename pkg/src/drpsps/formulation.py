"""Constraint blocks that turn a network and its outage scenarios into MILPs.

Blocks write into a shared :class:`~drpsps.milp_core.MilpModel` and return
handles (integer variable indices) so later blocks can refer to them:

* unit commitment (on/off, start and stop binaries, minimum up and down times)
* per-scenario dispatch: generation, ramping, DC power flow with switchable
  lines, bus balance with load shedding, and the scenario cost variable
* the daily risk budget on energized NZR lines
* distribution shaping, which reproduces the decision-dependent scenario
  probabilities with linear constraints
* the two robust encodings: the linear dual used when probabilities are fixed,
  and the single-shot MILP with pattern selectors.

Line flow runs from ``from_bus`` to ``to_bus``: it leaves the balance of the
sending bus and enters that of the receiving bus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid_model import Network, expected_demand, expected_wip
from .milp_core import MilpModel, SolveOptions, SolverError, solve
from .outage_model import (DEFAULT_SCENARIO_CAP, OutageScenarioSet, RiskProfile,
                           ShapingCoefficients, binary_vectors, decision_distribution,
                           enumerate_scenarios, risk_profile, select_nzr_lines)

MAX_PATTERN_SCENARIO_PAIRS = 1 << 16


class FormulationError(ValueError):
    pass


# -- problem instance --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PlanningInstance:
    """Everything a planner needs: the grid, the NZR outage scenarios and the
    risk budget.  ``demand`` is the expected demand used by the dispatch blocks."""

    net: Network
    scenarios: OutageScenarioSet
    pi1: np.ndarray
    risk: RiskProfile
    demand: np.ndarray
    mode: str = "svi"

    @property
    def nzr_lines(self) -> tuple[int, ...]:
        return self.scenarios.nzr_lines

    @property
    def n_nzr(self) -> int:
        return len(self.scenarios.nzr_lines)

    def base_status(self) -> np.ndarray:
        """Status of every line before NZR outcomes are applied: lines certain to
        ignite when energized are treated as out of service."""
        wip = expected_wip(self.net)
        return np.where(wip >= 1.0, 0, 1).astype(np.int8)

    def effective_status(self, z_minus, xi) -> np.ndarray:
        status = self.base_status()
        if self.n_nzr:
            idx = np.array(self.nzr_lines) - 1
            status[idx] = np.asarray(z_minus, dtype=np.int8) * np.asarray(xi, dtype=np.int8)
        return status

    def admissible_patterns(self) -> np.ndarray:
        """Shut-off vectors (1 = keep energized) that respect the risk budget."""
        pats = binary_vectors(self.n_nzr)
        used = pats @ self.risk.risk if self.n_nzr else np.zeros(1)
        tol = 1e-9 * max(1.0, abs(self.risk.tolerance)) if math.isfinite(self.risk.tolerance) else 0
        return pats[used <= self.risk.tolerance + tol]

    def with_tolerance(self, tolerance: float, mode: str | None = None) -> "PlanningInstance":
        mode = mode or self.mode
        risk = risk_profile(self.net, self.nzr_lines, mode, tolerance)
        return PlanningInstance(self.net, self.scenarios, self.pi1, risk, self.demand, mode)


def make_instance(net: Network, nzr_lines: Sequence[int] | None = None, nzr_cap: int | None = 3,
                  mode: str = "svi", risk_tolerance: float = math.inf,
                  scenario_cap: int = DEFAULT_SCENARIO_CAP) -> PlanningInstance:
    if nzr_lines is None:
        nzr_lines = select_nzr_lines(net, nzr_cap, mode)
    nzr_lines = tuple(sorted(int(i) for i in nzr_lines))
    wip = expected_wip(net)
    pi0 = np.array([wip[i - 1] for i in nzr_lines])
    scen = enumerate_scenarios(nzr_lines, pi0, cap=scenario_cap)
    pi1 = np.array([net.line(i).wip_deenergized for i in nzr_lines])
    risk = risk_profile(net, nzr_lines, mode, risk_tolerance)
    return PlanningInstance(net, scen, pi1, risk, expected_demand(net), mode)


def cost_upper_bound(net: Network, demand: np.ndarray) -> float:
    """A valid bound on any single scenario's dispatch plus shedding cost."""
    voll = np.array([d.voll for d in net.demands])
    shed = float((voll[:, None] * demand).sum()) if len(voll) else 0.0
    gen = sum(g.cost_marginal * g.p_max for g in net.generators) * net.horizon
    return shed + gen


# -- handles -----------------------------------------------------------------


@dataclass
class UcVars:
    z: np.ndarray
    up: np.ndarray
    dn: np.ndarray


@dataclass
class DispatchVars:
    p: np.ndarray
    p_aux: np.ndarray
    theta: np.ndarray
    flow: np.ndarray
    served: np.ndarray
    phi: int


@dataclass
class VariableIndex:
    uc: UcVars | np.ndarray
    z_minus: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    blocks: list[DispatchVars] = field(default_factory=list)
    block_of: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    shaping: np.ndarray | None = None
    dro: dict = field(default_factory=dict)

    def phi(self) -> np.ndarray:
        """Scenario cost handle for every scenario (shared when blocks coincide)."""
        return np.array([self.blocks[b].phi for b in self.block_of], dtype=np.int64)


# -- unit commitment ---------------------------------------------------------


def build_uc_block(model: MilpModel, net: Network, prefix: str = "") -> UcVars:
    G, H = len(net.generators), net.horizon
    z = np.empty((G, H), dtype=np.int64)
    up = np.empty((G, H), dtype=np.int64)
    dn = np.empty((G, H), dtype=np.int64)
    for gi, g in enumerate(net.generators):
        for t in range(H):
            z[gi, t] = model.add_binary(f"{prefix}z[{g.id},{t + 1}]")
            up[gi, t] = model.add_binary(f"{prefix}zup[{g.id},{t + 1}]", obj=g.cost_up)
            dn[gi, t] = model.add_binary(f"{prefix}zdn[{g.id},{t + 1}]", obj=g.cost_dn)
    for gi, g in enumerate(net.generators):
        for t in range(H):
            # on-off transition bookkeeping, anchored on the initial status
            terms = {z[gi, t]: 1.0, up[gi, t]: -1.0, dn[gi, t]: 1.0}
            rhs = 0.0
            if t == 0:
                rhs = float(g.initial_status)
            else:
                terms[z[gi, t - 1]] = -1.0
            model.add_constraint(f"{prefix}uc_link[{g.id},{t + 1}]", terms, "==", rhs)
            # a start at any step in the last min_up steps keeps the unit on now
            win = range(max(0, t - g.min_up + 1), t + 1)
            terms = {z[gi, t]: 1.0}
            for k in win:
                terms[up[gi, k]] = terms.get(up[gi, k], 0.0) - 1.0
            model.add_constraint(f"{prefix}uc_minup[{g.id},{t + 1}]", terms, ">=", 0.0)
            win = range(max(0, t - g.min_dn + 1), t + 1)
            terms = {z[gi, t]: 1.0}
            for k in win:
                terms[dn[gi, k]] = terms.get(dn[gi, k], 0.0) + 1.0
            model.add_constraint(f"{prefix}uc_mindn[{g.id},{t + 1}]", terms, "<=", 1.0)
    return UcVars(z, up, dn)


def commitment_cost(net: Network, z: np.ndarray) -> float:
    """Start-up plus shut-down cost of a fixed 0/1 schedule of shape (G, H)."""
    z = np.asarray(z, dtype=float)
    init = np.array([float(g.initial_status) for g in net.generators])
    prev = np.column_stack([init, z[:, :-1]]) if z.size else z
    ups = np.maximum(z - prev, 0.0)
    dns = np.maximum(prev - z, 0.0)
    cu = np.array([g.cost_up for g in net.generators])
    cd = np.array([g.cost_dn for g in net.generators])
    return float(cu @ ups.sum(axis=1) + cd @ dns.sum(axis=1))


def schedule_is_valid(net: Network, z: np.ndarray) -> bool:
    """Direct check of the minimum up/down rules for a fixed schedule."""
    z = np.asarray(z, dtype=int)
    for gi, g in enumerate(net.generators):
        prev = int(g.initial_status)
        for t in range(net.horizon):
            cur = int(z[gi, t])
            if cur > prev:
                if np.any(z[gi, t:t + g.min_up] == 0):
                    return False
            elif cur < prev:
                if np.any(z[gi, t:t + g.min_dn] == 1):
                    return False
            prev = cur
    return True


# -- dispatch ----------------------------------------------------------------


def build_dispatch_block(model: MilpModel, net: Network, demand: np.ndarray,
                         commit: UcVars | np.ndarray, status: Sequence, name: str,
                         phi_ub: float = math.inf) -> DispatchVars:
    """Second-stage operation for one scenario.

    ``commit`` is either the UC handles or a fixed (G, H) 0/1 schedule.
    ``status`` has one entry per line: ``0`` or ``1`` for a fixed status, or
    ``("var", j)`` when the line is available exactly when binary ``j`` is 1.
    """
    G, H = len(net.generators), net.horizon
    nb, nl, nd = len(net.buses), len(net.lines), len(net.demands)
    fixed = not isinstance(commit, UcVars)
    if fixed:
        commit = np.asarray(commit, dtype=float)
    base = net.mva_base
    p = np.empty((G, H), dtype=np.int64)
    p_aux = np.empty((G, H), dtype=np.int64)
    theta = np.empty((nb, H), dtype=np.int64)
    flow = np.empty((nl, H), dtype=np.int64)
    served = np.empty((nd, H), dtype=np.int64)
    ref = net.reference_bus.id

    for gi, g in enumerate(net.generators):
        for t in range(H):
            if fixed:
                on = commit[gi, t]
                p[gi, t] = model.add_var(f"{name}p[{g.id},{t + 1}]", on * g.p_min, on * g.p_max,
                                         obj=0.0)
            else:
                p[gi, t] = model.add_var(f"{name}p[{g.id},{t + 1}]", 0.0, g.p_max)
                zt = commit.z[gi, t]
                model.add_constraint(f"{name}pmax[{g.id},{t + 1}]", {p[gi, t]: 1.0, zt: -g.p_max},
                                     "<=", 0.0)
                if g.p_min > 0:
                    model.add_constraint(f"{name}pmin[{g.id},{t + 1}]",
                                         {p[gi, t]: 1.0, zt: -g.p_min}, ">=", 0.0)
            p_aux[gi, t] = model.add_var(f"{name}paux[{g.id},{t + 1}]", -g.p_max, g.p_max)
            terms = {p_aux[gi, t]: 1.0, p[gi, t]: -1.0}
            if fixed:
                model.add_constraint(f"{name}pauxdef[{g.id},{t + 1}]", terms, "==",
                                     -g.p_max * commit[gi, t])
            else:
                terms[commit.z[gi, t]] = g.p_max
                model.add_constraint(f"{name}pauxdef[{g.id},{t + 1}]", terms, "==", 0.0)
        # ramping of the shifted output; the step before the horizon is anchored at 0
        for t in range(H):
            terms = {p_aux[gi, t]: 1.0}
            if t > 0:
                terms[p_aux[gi, t - 1]] = -1.0
            if math.isfinite(g.ramp_max):
                model.add_constraint(f"{name}rampup[{g.id},{t + 1}]", terms, "<=", g.ramp_max)
            if math.isfinite(g.ramp_min):
                model.add_constraint(f"{name}rampdn[{g.id},{t + 1}]", terms, ">=", g.ramp_min)

    for bi, b in enumerate(net.buses):
        for t in range(H):
            if b.id == ref:
                theta[bi, t] = model.add_var(f"{name}theta[{b.id},{t + 1}]", 0.0, 0.0)
            else:
                theta[bi, t] = model.add_var(f"{name}theta[{b.id},{t + 1}]", net.theta_min,
                                             net.theta_max)

    for li, ln in enumerate(net.lines):
        st = status[li]
        is_var = isinstance(st, tuple)
        bmw = base * ln.susceptance
        big_m = bmw * (net.theta_max - net.theta_min)
        for t in range(H):
            if not is_var and int(st) == 0:
                flow[li, t] = model.add_var(f"{name}flow[{ln.id},{t + 1}]", 0.0, 0.0)
                continue
            flow[li, t] = model.add_var(f"{name}flow[{ln.id},{t + 1}]", ln.flow_min, ln.flow_max)
            ti, tj = theta[ln.from_bus - 1, t], theta[ln.to_bus - 1, t]
            terms = {flow[li, t]: 1.0, ti: -bmw, tj: bmw}
            if not is_var:
                model.add_constraint(f"{name}dcpf[{ln.id},{t + 1}]", terms, "==", 0.0)
                continue
            a = st[1]
            # flow equals the DC estimate when available, otherwise decoupled
            model.add_constraint(f"{name}dcpf_hi[{ln.id},{t + 1}]", {**terms, a: big_m}, "<=",
                                 big_m)
            model.add_constraint(f"{name}dcpf_lo[{ln.id},{t + 1}]", {**terms, a: -big_m}, ">=",
                                 -big_m)
            model.add_constraint(f"{name}thermal_hi[{ln.id},{t + 1}]",
                                 {flow[li, t]: 1.0, a: -ln.flow_max}, "<=", 0.0)
            model.add_constraint(f"{name}thermal_lo[{ln.id},{t + 1}]",
                                 {flow[li, t]: 1.0, a: -ln.flow_min}, ">=", 0.0)

    for di, d in enumerate(net.demands):
        for t in range(H):
            served[di, t] = model.add_var(f"{name}x[{d.id},{t + 1}]", 0.0, 1.0)

    gens_at = {b.id: [] for b in net.buses}
    for gi, g in enumerate(net.generators):
        gens_at[g.bus].append(gi)
    loads_at = {b.id: [] for b in net.buses}
    for di, d in enumerate(net.demands):
        loads_at[d.bus].append(di)
    lines_in = {b.id: [] for b in net.buses}
    lines_out = {b.id: [] for b in net.buses}
    for li, ln in enumerate(net.lines):
        lines_in[ln.to_bus].append(li)
        lines_out[ln.from_bus].append(li)
    for b in net.buses:
        for t in range(H):
            terms: dict[int, float] = {}
            for gi in gens_at[b.id]:
                terms[p[gi, t]] = 1.0
            for li in lines_in[b.id]:
                terms[flow[li, t]] = terms.get(flow[li, t], 0.0) + 1.0
            for li in lines_out[b.id]:
                terms[flow[li, t]] = terms.get(flow[li, t], 0.0) - 1.0
            for di in loads_at[b.id]:
                terms[served[di, t]] = -float(demand[di, t])
            model.add_constraint(f"{name}balance[{b.id},{t + 1}]", terms, "==", 0.0)

    # scenario cost: energy cost plus value of lost load
    phi = model.add_var(f"{name}phi", 0.0, phi_ub)
    terms = {phi: 1.0}
    for gi, g in enumerate(net.generators):
        for t in range(H):
            if g.cost_marginal:
                terms[p[gi, t]] = -g.cost_marginal
    shed_total = 0.0
    for di, d in enumerate(net.demands):
        for t in range(H):
            w = d.voll * float(demand[di, t])
            if w:
                terms[served[di, t]] = w
                shed_total += w
    model.add_constraint(f"{name}phidef", terms, "==", shed_total)
    return DispatchVars(p, p_aux, theta, flow, served, phi)


# -- risk budget and distribution shaping ------------------------------------


def build_risk_budget(model: MilpModel, z_minus: np.ndarray, risk: RiskProfile,
                      name: str = "risk_budget") -> int | None:
    if not math.isfinite(risk.tolerance) or len(z_minus) == 0:
        return None
    terms = {int(j): float(r) for j, r in zip(z_minus, risk.risk)}
    return model.add_constraint(name, terms, "<=", risk.tolerance)


def build_shaping_block(model: MilpModel, scen: OutageScenarioSet, coeffs: ShapingCoefficients,
                        z_minus: np.ndarray, prefix: str = "") -> np.ndarray:
    """Linear encoding of the decision-dependent distribution.

    Level ``k`` holds the distribution obtained when only the first ``k`` NZR
    lines follow ``z_minus`` and the rest stay energized.  Going from level
    ``k-1`` to ``k`` either leaves the distribution unchanged (line energized)
    or rescales it by the Bayes ratios of line ``k`` (line switched off); the
    normalization row makes these upper bounds tight.  Returns handles of
    shape (L, S); the last row is the decision-dependent distribution.
    """
    L, S = scen.n_lines, len(scen)
    levels = np.empty((L, S), dtype=np.int64)
    for k in range(L):
        for s in range(S):
            levels[k, s] = model.add_var(f"{prefix}shape[{k + 1},{s}]", 0.0, 1.0)
    for k in range(L):
        zk = int(z_minus[k])
        for s in range(S):
            cur = levels[k, s]
            ratio = coeffs.up[k] if scen.xi[s, k] == 0 else coeffs.down[k]
            if k == 0:
                prev_const = float(scen.pi0[s])
                model.add_constraint(f"{prefix}shape_scale[{k + 1},{s}]", {cur: 1.0, zk: -1.0},
                                     "<=", ratio * prev_const)
                model.add_constraint(f"{prefix}shape_keep[{k + 1},{s}]", {cur: 1.0, zk: 1.0},
                                     "<=", prev_const + 1.0)
            else:
                prev = levels[k - 1, s]
                model.add_constraint(f"{prefix}shape_scale[{k + 1},{s}]",
                                     {cur: 1.0, prev: -ratio, zk: -1.0}, "<=", 0.0)
                model.add_constraint(f"{prefix}shape_keep[{k + 1},{s}]",
                                     {cur: 1.0, prev: -1.0, zk: 1.0}, "<=", 1.0)
        model.add_constraint(f"{prefix}shape_sum[{k + 1}]", {int(j): 1.0 for j in levels[k]},
                             "==", 1.0)
    return levels


# -- robust objective encodings ----------------------------------------------


def _check_kappa(kappa: float) -> None:
    if not 0.0 <= kappa <= 1.0:
        raise FormulationError(f"kappa {kappa} outside [0, 1]")


def build_dro_dual_block(model: MilpModel, probs: np.ndarray, phi: np.ndarray, kappa: float,
                         distance: np.ndarray | None = None, prefix: str = "") -> dict:
    """Worst-case expectation over the TV ball of radius ``kappa`` around fixed
    ``probs``, written as its linear dual: ``kappa*tau + sum(probs*v)`` with
    ``v_s + tau*distance[s, m] >= phi_m``.  Repeated handles in ``phi`` are fine."""
    _check_kappa(kappa)
    S = len(probs)
    if distance is None:
        distance = 1 - np.eye(S, dtype=int)
    tau = model.add_var(f"{prefix}tau", 0.0, math.inf, obj=kappa)
    v = np.array([model.add_var(f"{prefix}v[{s}]", -math.inf, math.inf, obj=float(probs[s]))
                  for s in range(S)], dtype=np.int64)
    for s in range(S):
        for m in range(S):
            terms = {int(v[s]): 1.0}
            if distance[s, m]:
                terms[tau] = float(distance[s, m])
            terms[int(phi[m])] = terms.get(int(phi[m]), 0.0) - 1.0
            model.add_constraint(f"{prefix}dual[{s},{m}]", terms, ">=", 0.0)
    return {"tau": tau, "v": v}


def build_expectation(model: MilpModel, probs: np.ndarray, phi: np.ndarray) -> None:
    for s, j in enumerate(phi):
        if probs[s]:
            model.add_obj(int(j), float(probs[s]))


def pattern_probabilities(inst: PlanningInstance, patterns: np.ndarray) -> np.ndarray:
    return np.array([decision_distribution(p, inst.scenarios, inst.pi1) for p in patterns])


def build_pattern_selectors(model: MilpModel, patterns: np.ndarray, z_minus: np.ndarray,
                            prefix: str = "") -> np.ndarray:
    """One binary per admissible shut-off pattern, tied to the shut-off vector."""
    y = np.array([model.add_binary(f"{prefix}y[{i}]") for i in range(len(patterns))],
                 dtype=np.int64)
    model.add_constraint(f"{prefix}y_one", {int(j): 1.0 for j in y}, "==", 1.0)
    for k, zk in enumerate(z_minus):
        terms = {int(zk): 1.0}
        for i, pat in enumerate(patterns):
            if pat[k]:
                terms[int(y[i])] = -1.0
        model.add_constraint(f"{prefix}y_link[{k}]", terms, "==", 0.0)
    return y


def build_dro_milp_block(model: MilpModel, pattern_probs: np.ndarray, y: np.ndarray,
                         pi_final: np.ndarray, phi: np.ndarray, kappa: float, big_m: float,
                         prefix: str = "") -> dict:
    """Single-shot encoding of ``kappa*max(phi) + (1-kappa)*CVaR`` under the
    decision-dependent probabilities.

    ``beta`` selects the value-at-risk scenario.  The products of scenario
    probabilities and ``beta`` are McCormick-linearized in ``w``.  Each pattern
    fixes the probabilities, so ``E[p, j]`` is the expected shortfall cost for
    pattern ``p`` with VaR scenario ``j``, switched on by big-M only when both
    selectors are 1.  ``M`` bounds every scenario cost from above and ``q``
    picks out the cost of the VaR scenario.
    """
    _check_kappa(kappa)
    P, S = pattern_probs.shape
    if P * S > MAX_PATTERN_SCENARIO_PAIRS:
        raise FormulationError(f"{P} patterns x {S} scenarios exceeds the model-size cap")
    if len(phi) != S or len(pi_final) != S or len(y) != P:
        raise FormulationError("handle arrays do not match the pattern/scenario counts")

    # the decision-dependent distribution equals the selected pattern's constants
    for s in range(S):
        terms = {int(pi_final[s]): 1.0}
        for p in range(P):
            if pattern_probs[p, s]:
                terms[int(y[p])] = terms.get(int(y[p]), 0.0) - float(pattern_probs[p, s])
        model.add_constraint(f"{prefix}pi_link[{s}]", terms, "==", 0.0)

    beta = np.array([model.add_binary(f"{prefix}beta[{j}]") for j in range(S)], dtype=np.int64)
    model.add_constraint(f"{prefix}beta_one", {int(b): 1.0 for b in beta}, "==", 1.0)
    w = np.empty((S, S), dtype=np.int64)
    for s in range(S):
        for j in range(S):
            w[s, j] = model.add_var(f"{prefix}w[{s},{j}]", 0.0, 1.0)
            model.add_constraint(f"{prefix}w_pi[{s},{j}]", {int(w[s, j]): 1.0, int(pi_final[s]): -1.0},
                                 "<=", 0.0)
            model.add_constraint(f"{prefix}w_beta[{s},{j}]", {int(w[s, j]): 1.0, int(beta[j]): -1.0},
                                 "<=", 0.0)
            model.add_constraint(f"{prefix}w_both[{s},{j}]",
                                 {int(w[s, j]): 1.0, int(pi_final[s]): -1.0, int(beta[j]): -1.0},
                                 ">=", -1.0)

    top = model.add_var(f"{prefix}max_phi", 0.0, big_m, obj=kappa)
    for s in range(S):
        model.add_constraint(f"{prefix}max_phi[{s}]", {top: 1.0, int(phi[s]): -1.0}, ">=", 0.0)

    q = np.empty(S, dtype=np.int64)
    for j in range(S):
        q[j] = model.add_var(f"{prefix}q[{j}]", 0.0, big_m, obj=-kappa)
        model.add_constraint(f"{prefix}q_phi[{j}]", {int(q[j]): 1.0, int(phi[j]): -1.0}, "<=", 0.0)
        model.add_constraint(f"{prefix}q_beta[{j}]", {int(q[j]): 1.0, int(beta[j]): -big_m},
                             "<=", 0.0)
    # only one q is nonzero in an integer solution; the relaxation would otherwise
    # subtract every scenario cost at once
    terms = {int(v): 1.0 for v in q}
    terms[top] = -1.0
    model.add_constraint(f"{prefix}q_sum", terms, "<=", 0.0)

    pair_max = np.empty((S, S), dtype=np.int64)
    for s in range(S):
        for j in range(S):
            pair_max[s, j] = model.add_var(f"{prefix}pmax[{s},{j}]", 0.0, big_m)
            model.add_constraint(f"{prefix}pmax_s[{s},{j}]",
                                 {int(pair_max[s, j]): 1.0, int(phi[s]): -1.0}, ">=", 0.0)
            if j != s:
                model.add_constraint(f"{prefix}pmax_j[{s},{j}]",
                                     {int(pair_max[s, j]): 1.0, int(phi[j]): -1.0}, ">=", 0.0)

    shortfall = np.empty((P, S), dtype=np.int64)
    for p in range(P):
        for j in range(S):
            shortfall[p, j] = model.add_var(f"{prefix}E[{p},{j}]", 0.0, big_m, obj=1.0)
            terms = {int(shortfall[p, j]): 1.0, int(y[p]): -big_m, int(beta[j]): -big_m}
            for s in range(S):
                c = float(pattern_probs[p, s])
                if c:
                    terms[int(pair_max[s, j])] = terms.get(int(pair_max[s, j]), 0.0) - c
            model.add_constraint(f"{prefix}E_act[{p},{j}]", terms, ">=", -2.0 * big_m)
    # the selected shortfall term is a probability-weighted mean of costs no
    # smaller than the VaR cost, so it dominates q; this gives the relaxation a
    # bound of at least kappa * max(phi)
    terms = {int(v): 1.0 for v in shortfall.ravel()}
    for v in q:
        terms[int(v)] = -1.0
    model.add_constraint(f"{prefix}E_covers_q", terms, ">=", 0.0)
    return {"beta": beta, "w": w, "max_phi": top, "q": q, "pair_max": pair_max,
            "shortfall": shortfall}


def build_expectation_milp(model: MilpModel, pattern_probs: np.ndarray, y: np.ndarray,
                           phi: np.ndarray, big_m: float, prefix: str = "") -> np.ndarray:
    """Risk-neutral counterpart of :func:`build_dro_milp_block`: one epigraph
    variable per pattern carries that pattern's expected cost when selected."""
    P, S = pattern_probs.shape
    u = np.empty(P, dtype=np.int64)
    for p in range(P):
        u[p] = model.add_var(f"{prefix}u[{p}]", 0.0, big_m, obj=1.0)
        terms = {int(u[p]): 1.0, int(y[p]): -big_m}
        for s in range(S):
            c = float(pattern_probs[p, s])
            if c:
                terms[int(phi[s])] = terms.get(int(phi[s]), 0.0) - c
        model.add_constraint(f"{prefix}u_act[{p}]", terms, ">=", -big_m)
    return u


# -- standalone dispatch evaluation ------------------------------------------


@dataclass
class DispatchOutcome:
    feasible: bool
    phi: float = math.nan
    energy_cost: float = math.nan
    shed_cost: float = math.nan
    shed_mwh: float = math.nan
    generation: np.ndarray | None = None
    flows: np.ndarray | None = None


def solve_dispatch(net: Network, commit: np.ndarray, status: Sequence[int],
                   demand: np.ndarray | None = None,
                   opts: SolveOptions | None = None) -> DispatchOutcome:
    """Solve the dispatch LP for a fixed commitment and fixed line statuses."""
    demand = expected_demand(net) if demand is None else np.asarray(demand, dtype=float)
    model = MilpModel("dispatch")
    d = build_dispatch_block(model, net, demand, np.asarray(commit), [int(s) for s in status], "")
    model.add_obj(d.phi, 1.0)
    try:
        sol = solve(model, opts or SolveOptions())
    except SolverError:
        return DispatchOutcome(False)
    if sol.status != "optimal":
        return DispatchOutcome(False)
    x = sol.x
    gen = x[d.p]
    served = x[d.served]
    energy = float(sum(g.cost_marginal * gen[gi].sum() for gi, g in enumerate(net.generators)))
    voll = np.array([dd.voll for dd in net.demands])
    unserved = (1.0 - served) * demand
    shed_cost = float((voll[:, None] * unserved).sum()) if len(voll) else 0.0
    return DispatchOutcome(True, float(x[d.phi]), energy, shed_cost, float(unserved.sum()),
                           gen, x[d.flow])
