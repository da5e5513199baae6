"""Line-survival scenarios and their (decision-dependent) probabilities.

A scenario is a binary survival vector over the non-zero-risk (NZR) lines, with
1 meaning the line survives and 0 meaning it was damaged by fire.  Scenario ids
read the vector as a big-endian binary number, so id 0 is "everything fails" and
id ``2**L - 1`` is "everything survives".

An energized line fails with its baseline ignition probability.  A
de-energized line fails with its de-energized probability, which is 1 for a
perfect shutoff (the line is simply out of service).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .grid_model import Line, Network, expected_wip

DEFAULT_SCENARIO_CAP = 12
RISK_MODES = ("svi", "acres", "unweighted")


class OutageModelError(ValueError):
    pass


@dataclass(frozen=True)
class OutageScenario:
    id: int
    xi: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class OutageScenarioSet:
    nzr_lines: tuple[int, ...]
    line_wip: np.ndarray  # baseline ignition probability per NZR line
    xi: np.ndarray  # (S, L) int8 survival matrix
    pi0: np.ndarray  # baseline probability per scenario

    def __len__(self) -> int:
        return len(self.pi0)

    @property
    def scenarios(self) -> list[OutageScenario]:
        return [OutageScenario(s, tuple(int(v) for v in row)) for s, row in enumerate(self.xi)]

    @property
    def n_lines(self) -> int:
        return len(self.nzr_lines)


@dataclass(frozen=True)
class ShapingCoefficients:
    up: np.ndarray
    down: np.ndarray


@dataclass(frozen=True, eq=False)
class RiskProfile:
    line_ids: tuple[int, ...]
    risk: np.ndarray
    tolerance: float = np.inf


def binary_vectors(n: int) -> np.ndarray:
    """All 0/1 vectors of length ``n`` in big-endian id order, shape (2**n, n)."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int8)
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int8)


def pattern_id(bits: Sequence[int]) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def enumerate_scenarios(nzr_lines: Sequence[int], pi0: Sequence[float],
                        cap: int = DEFAULT_SCENARIO_CAP) -> OutageScenarioSet:
    """Every survival vector with its baseline probability (independent lines)."""
    pi0 = np.asarray(pi0, dtype=float)
    if len(nzr_lines) != len(pi0):
        raise OutageModelError("nzr_lines and pi0 differ in length")
    if len(nzr_lines) > cap:
        raise OutageModelError(f"{len(nzr_lines)} NZR lines exceed the scenario cap of {cap}")
    xi = binary_vectors(len(nzr_lines))
    probs = np.where(xi == 0, pi0, 1.0 - pi0).prod(axis=1)
    return OutageScenarioSet(tuple(int(i) for i in nzr_lines), pi0, xi, probs)


def _aligned(a, b, what: str) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-1] != b.shape[-1]:
        raise OutageModelError(f"{what}: length mismatch ({a.shape[-1]} vs {b.shape[-1]})")
    return a, b


def decision_probability(z_minus, scen, pi0, pi1) -> float:
    """Probability of ``scen`` when lines are energized according to ``z_minus``."""
    xi = scen.xi if isinstance(scen, OutageScenario) else scen
    z, xi = _aligned(z_minus, xi, "decision_probability")
    pi0, pi1 = np.asarray(pi0, float), np.asarray(pi1, float)
    _aligned(z, pi0, "decision_probability")
    _aligned(z, pi1, "decision_probability")
    fail = z * pi0 + (1 - z) * pi1
    return float(np.where(xi == 0, fail, 1.0 - fail).prod())


def decision_distribution(z_minus, scenarios: OutageScenarioSet, pi1) -> np.ndarray:
    """Vectorised :func:`decision_probability` over a whole scenario set."""
    z, _ = _aligned(z_minus, scenarios.line_wip, "decision_distribution")
    fail = z * scenarios.line_wip + (1 - z) * np.asarray(pi1, float)
    return np.where(scenarios.xi == 0, fail, 1.0 - fail).prod(axis=1)


def shaping_coefficients(pi0, pi1) -> ShapingCoefficients:
    """Bayes ratios used when a line is switched off: failure odds scale by ``up``,
    survival odds by ``down``."""
    pi0, pi1 = np.asarray(pi0, float), np.asarray(pi1, float)
    if np.any((pi0 <= 0) | (pi0 >= 1)):
        raise OutageModelError("baseline probabilities must lie strictly in (0, 1); "
                               "exclude degenerate lines from the NZR set")
    if np.any(pi1 < pi0) or np.any(pi1 > 1):
        raise OutageModelError("need baseline <= de-energized probability <= 1")
    return ShapingCoefficients(up=pi1 / pi0, down=(1.0 - pi1) / (1.0 - pi0))


def line_risk(line: Line, mode: str = "svi", wip: float | None = None) -> float:
    """Worst-case fire risk of keeping ``line`` energized.

    ``svi`` weights the burned acres by social vulnerability, ``acres`` drops
    that weight and ``unweighted`` counts every risky line as 1 (an N-k style
    count of energized risky lines).
    """
    p = line.wip_base if wip is None else float(wip)
    if mode == "svi":
        return p * line.svi * line.impact
    if mode == "acres":
        return p * line.impact
    if mode == "unweighted":
        return 1.0 if p > 0 else 0.0
    raise OutageModelError(f"unknown risk mode {mode!r}; expected one of {RISK_MODES}")


def network_risk(net: Network, mode: str = "svi") -> np.ndarray:
    wip = expected_wip(net)
    return np.array([line_risk(ln, mode, wip[ln.id - 1]) for ln in net.lines])


def select_nzr_lines(net: Network, cap: int | None = 3, mode: str = "svi") -> tuple[int, ...]:
    """Risky lines kept for scenario enumeration, returned in line-id order.

    Lines with positive risk are ranked by risk, then baseline probability, then
    id; the top ``cap`` are kept.  Lines certain to ignite when energized are
    excluded because the Bayes ratios are undefined for them.
    """
    wip = expected_wip(net)
    risk = network_risk(net, "svi" if mode == "unweighted" else mode)
    cands = [ln.id for ln in net.lines if risk[ln.id - 1] > 0 and 0 < wip[ln.id - 1] < 1]
    cands.sort(key=lambda i: (-risk[i - 1], -wip[i - 1], i))
    if cap is not None:
        cands = cands[:cap]
    return tuple(sorted(cands))


def risk_profile(net: Network, lines: Iterable[int], mode: str = "svi",
                 tolerance: float = np.inf) -> RiskProfile:
    lines = tuple(lines)
    wip = expected_wip(net)
    risk = np.array([line_risk(net.line(i), mode, wip[i - 1]) for i in lines])
    return RiskProfile(lines, risk, float(tolerance))


def tv_distance(a, b) -> int:
    xa = a.xi if isinstance(a, OutageScenario) else a
    xb = b.xi if isinstance(b, OutageScenario) else b
    xa, xb = _aligned(xa, xb, "tv_distance")
    return 0 if np.array_equal(xa, xb) else 1


def tv_matrix(scenarios: OutageScenarioSet) -> np.ndarray:
    n = len(scenarios)
    return 1 - np.eye(n, dtype=int)


def fire_instances(z_minus, scen) -> np.ndarray:
    """1 where a line was left energized and then failed."""
    xi = scen.xi if isinstance(scen, OutageScenario) else scen
    z, xi = _aligned(z_minus, xi, "fire_instances")
    return (z * (1 - xi)).astype(np.int8)
