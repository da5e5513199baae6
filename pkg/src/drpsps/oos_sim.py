"""Out-of-sample Monte Carlo evaluation of a day-ahead plan.

The first-stage decision (commitments and shut-offs) is frozen.  Wildfire
outages of the NZR lines are sampled independently, and each sample is priced
by the real-time dispatch LP with the realized demand.  Samples that share an
effective line status share one LP solve, so a 3-line plan costs at most eight
solves regardless of ``n``.

Randomness: sample ``i`` draws from ``PCG64(SeedSequence(seed, spawn_key=(i,)))``.
That rule is portable and lets any single sample be regenerated on its own.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .formulation import DispatchOutcome, commitment_cost, solve_dispatch
from .grid_model import Network, expected_demand, expected_wip
from .milp_core import SolveOptions
from .outage_model import binary_vectors
from .planners import PlanResult

QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


class OosError(ValueError):
    """Bad sampling input or samples that do not fit the plan."""


@dataclass(frozen=True, eq=False)
class OutageSampleSet:
    seed: int
    line_ids: tuple[int, ...]
    samples: np.ndarray  # (n, L), 1 = line survives

    @property
    def n_samples(self) -> int:
        return int(self.samples.shape[0])

    @property
    def probabilities(self) -> np.ndarray:
        return np.full(self.n_samples, 1.0 / self.n_samples)

    def failure_rate(self) -> np.ndarray:
        return 1.0 - self.samples.mean(axis=0)


@dataclass(frozen=True)
class SampleResult:
    index: int
    xi: tuple[int, ...]
    feasible: bool
    dispatch_cost: float
    voll_cost: float
    shed_mwh: float
    total: float  # commitment cost + dispatch + shedding


@dataclass
class OosReport:
    seed: int
    n_samples: int
    line_ids: tuple[int, ...]
    shutoffs: tuple[int, ...]
    commitment_cost: float
    samples: list[SampleResult]
    excluded: int
    expected_cost: float
    standard_error: float
    quantiles: dict[str, float]
    kappa: float | None = None
    meta: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "seed": self.seed,
            "n_samples": self.n_samples,
            "excluded": self.excluded,
            "kappa": self.kappa,
            "nzr_lines": list(self.line_ids),
            "shutoffs": list(self.shutoffs),
            "commitment_cost": self.commitment_cost,
            "expected_cost": self.expected_cost,
            "standard_error": self.standard_error,
            "quantiles": self.quantiles,
            "mean_shed_mwh": _mean([s.shed_mwh for s in self.samples if s.feasible]),
            "meta": self.meta,
        }

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_csv().encode()).hexdigest()

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=1, sort_keys=True) + "\n"

    def to_csv(self, header: str | None = None) -> str:
        buf = io.StringIO()
        if header:
            buf.write(f"# {header}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample", "xi", "feasible", "dispatch_cost", "voll_cost", "shed_mwh",
                    "total_cost"])
        for s in self.samples:
            w.writerow([s.index, "".join(map(str, s.xi)), int(s.feasible), repr(s.dispatch_cost),
                        repr(s.voll_cost), repr(s.shed_mwh), repr(s.total)])
        return buf.getvalue()


def _mean(v: Sequence[float]) -> float:
    return float(np.mean(v)) if len(v) else math.nan


def sample_generator(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def sample_outages(wip_rt: Sequence[float], n: int, seed: int,
                   line_ids: Sequence[int] | None = None) -> OutageSampleSet:
    """Draw ``n`` independent outage vectors; line ``l`` fails when ``u < wip_rt[l]``."""
    wip = np.asarray(wip_rt, dtype=float).reshape(-1)
    if np.any(~np.isfinite(wip)) or np.any(wip < 0) or np.any(wip > 1):
        raise OosError("ignition probabilities must lie in [0, 1]")
    if int(n) < 1:
        raise OosError("need at least one sample")
    if line_ids is None:
        line_ids = tuple(range(1, wip.size + 1))
    if len(line_ids) != wip.size:
        raise OosError("line_ids and wip_rt differ in length")
    samples = np.empty((int(n), wip.size), dtype=np.int8)
    for i in range(int(n)):
        u = sample_generator(seed, i).random(wip.size)
        samples[i] = u >= wip
    return OutageSampleSet(int(seed), tuple(int(i) for i in line_ids), samples)


def plan_wip(net: Network, plan: PlanResult) -> np.ndarray:
    """Expected ignition probability of each NZR line of ``plan`` when energized."""
    wip = expected_wip(net)
    return np.array([wip[i - 1] for i in plan.nzr_lines])


def _status(net: Network, plan: PlanResult, xi: np.ndarray) -> tuple[int, ...]:
    status = np.where(expected_wip(net) >= 1.0, 0, 1).astype(np.int8)
    if len(plan.nzr_lines):
        status[np.array(plan.nzr_lines) - 1] = np.asarray(plan.shutoffs) * xi
    return tuple(int(v) for v in status)


def _dispatch(args) -> DispatchOutcome:
    net, commit, status, demand, opts = args
    out = solve_dispatch(net, commit, status, demand, opts)
    # drop the arrays so worker results stay small
    return DispatchOutcome(out.feasible, out.phi, out.energy_cost, out.shed_cost, out.shed_mwh)


def evaluate_plan(net: Network, plan: PlanResult, samples: OutageSampleSet,
                  demand_rt: np.ndarray | None = None, opts: SolveOptions | None = None,
                  jobs: int = 1) -> OosReport:
    """Price ``plan`` on every sample with uniform weights.

    A sample whose dispatch LP fails is kept in the per-sample table with
    ``feasible = False`` and left out of the mean; ``excluded`` counts them.
    """
    if tuple(samples.line_ids) != tuple(plan.nzr_lines):
        raise OosError(f"samples cover lines {samples.line_ids}, plan has {plan.nzr_lines}")
    demand = expected_demand(net) if demand_rt is None else np.asarray(demand_rt, dtype=float)
    f_uc = commitment_cost(net, plan.commitments)

    statuses = [_status(net, plan, xi) for xi in samples.samples]
    distinct = sorted(set(statuses))
    work = [(net, plan.commitments, st, demand, opts) for st in distinct]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            outcomes = list(ex.map(_dispatch, work))
    else:
        outcomes = [_dispatch(w) for w in work]
    by_status = dict(zip(distinct, outcomes))

    rows: list[SampleResult] = []
    for i, (xi, st) in enumerate(zip(samples.samples, statuses)):
        out = by_status[st]
        if out.feasible:
            rows.append(SampleResult(i, tuple(int(v) for v in xi), True, out.energy_cost,
                                     out.shed_cost, out.shed_mwh, f_uc + out.phi))
        else:
            rows.append(SampleResult(i, tuple(int(v) for v in xi), False, math.nan, math.nan,
                                     math.nan, math.nan))
    totals = np.array([r.total for r in rows if r.feasible])
    excluded = len(rows) - totals.size
    if totals.size:
        mean = float(totals.mean())
        se = float(totals.std(ddof=1) / math.sqrt(totals.size)) if totals.size > 1 else 0.0
        qs = {f"q{int(q * 100):02d}": float(v) for q, v in zip(QUANTILES,
                                                              np.quantile(totals, QUANTILES))}
    else:
        mean, se, qs = math.nan, math.nan, {}
    return OosReport(samples.seed, samples.n_samples, tuple(plan.nzr_lines),
                     tuple(int(v) for v in plan.shutoffs), f_uc, rows, excluded, mean, se, qs,
                     plan.kappa)


def exact_expected_cost(net: Network, plan: PlanResult, wip_rt: Sequence[float],
                        demand_rt: np.ndarray | None = None,
                        opts: SolveOptions | None = None) -> float:
    """The value Monte Carlo estimates: enumerate all ``2^L`` outage vectors."""
    wip = np.asarray(wip_rt, dtype=float)
    demand = expected_demand(net) if demand_rt is None else np.asarray(demand_rt, dtype=float)
    f_uc = commitment_cost(net, plan.commitments)
    total = 0.0
    for xi in binary_vectors(len(plan.nzr_lines)):
        p = float(np.prod(np.where(xi == 1, 1.0 - wip, wip)))
        if p == 0.0:
            continue
        out = solve_dispatch(net, plan.commitments, _status(net, plan, xi), demand, opts)
        if not out.feasible:
            raise OosError(f"dispatch infeasible for outage vector {xi.tolist()}")
        total += p * (f_uc + out.phi)
    return total
