"""Typed grid data: buses, lines, generators, demands and demand scenarios.

Networks are read from a JSON document with the sections ``meta``, ``buses``,
``lines``, ``generators``, ``demands`` and ``demand_scenarios``.  Everything is
validated on load and the resulting :class:`Network` is treated as immutable.

Units: powers in MW, costs in $, probabilities as decimals.  Line susceptance is
per unit on ``meta.mva_base``, so the MW flow across a line is
``mva_base * susceptance * (theta_from - theta_to)``.  Each time step is one hour.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

DEFAULT_THETA_MAX = 0.6
PROB_TOL = 1e-9


class NetworkError(ValueError):
    """Base class for everything the loader can reject."""


class NetworkParseError(NetworkError):
    """The document is not valid JSON or is missing a required section."""


class NetworkValidationError(NetworkError):
    """A field violates an invariant.  ``field`` names the offending entry."""

    def __init__(self, field_name: str, reason: str):
        super().__init__(f"{field_name}: {reason}")
        self.field = field_name
        self.reason = reason


class DuplicateIdError(NetworkValidationError):
    pass


@dataclass(frozen=True)
class Bus:
    id: int
    name: str
    is_reference: bool = False


@dataclass(frozen=True)
class Line:
    id: int
    from_bus: int
    to_bus: int
    susceptance: float
    flow_min: float
    flow_max: float
    wip_base: float = 0.0
    wip_deenergized: float = 1.0
    svi: float = 0.0
    impact: float = 0.0


@dataclass(frozen=True)
class Generator:
    id: int
    bus: int
    p_min: float
    p_max: float
    ramp_min: float
    ramp_max: float
    cost_marginal: float
    cost_up: float
    cost_dn: float
    min_up: int = 1
    min_dn: int = 1
    initial_status: bool = False


@dataclass(frozen=True, eq=False)
class Demand:
    """Load at one bus.  ``profile`` has shape (n_demand_scenarios, horizon)."""

    id: int
    bus: int
    voll: float
    profile: np.ndarray

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Demand):
            return NotImplemented
        return (
            (self.id, self.bus, self.voll) == (other.id, other.bus, other.voll)
            and self.profile.shape == other.profile.shape
            and bool(np.array_equal(self.profile, other.profile))
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class DemandScenario:
    id: int
    probability: float
    wip: dict[int, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Network:
    horizon: int
    mva_base: float
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    demands: tuple[Demand, ...]
    demand_scenarios: tuple[DemandScenario, ...]
    theta_min: float = -DEFAULT_THETA_MAX
    theta_max: float = DEFAULT_THETA_MAX
    name: str = ""

    @property
    def reference_bus(self) -> Bus:
        return next(b for b in self.buses if b.is_reference)

    def line(self, line_id: int) -> Line:
        return self.lines[line_id - 1]

    def truncated(self, horizon: int) -> "Network":
        """Copy of the network keeping only the first ``horizon`` steps."""
        if not 1 <= horizon <= self.horizon:
            raise NetworkValidationError("meta.horizon", f"cannot truncate to {horizon}")
        demands = tuple(replace(d, profile=d.profile[:, :horizon].copy()) for d in self.demands)
        return replace(self, horizon=horizon, demands=demands)


# -- loading -----------------------------------------------------------------


def load_network(path: str | Path) -> Network:
    """Read and validate a network file."""
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkParseError(f"{path}: {exc}") from exc
    try:
        net = network_from_dict(doc)
    except NetworkError:
        raise
    except (TypeError, ValueError, AttributeError) as exc:
        raise NetworkParseError(f"{path}: malformed entry ({exc})") from exc
    if not net.name:
        net = replace(net, name=path.stem)
    return net


def network_from_dict(doc: Any) -> Network:
    if not isinstance(doc, dict):
        raise NetworkParseError("top level must be an object")
    for section in ("meta", "buses", "lines", "generators", "demands", "demand_scenarios"):
        if section not in doc:
            raise NetworkParseError(f"missing section '{section}'")

    meta = doc["meta"]
    horizon = int(_get(meta, "horizon", "meta"))
    mva_base = float(meta.get("mva_base", 100.0))
    theta_max = float(meta.get("theta_max", DEFAULT_THETA_MAX))
    theta_min = float(meta.get("theta_min", -theta_max))
    wip_scale = float(meta.get("wip_scale", 1.0))
    if horizon < 1:
        raise NetworkValidationError("meta.horizon", "must be at least 1")
    if mva_base <= 0:
        raise NetworkValidationError("meta.mva_base", "must be positive")
    if not theta_min < theta_max:
        raise NetworkValidationError("meta.theta_max", "theta bounds are empty")
    if wip_scale < 0:
        raise NetworkValidationError("meta.wip_scale", "must be nonnegative")

    buses = tuple(
        Bus(id=int(_get(b, "id", "buses")), name=str(b.get("name", "")),
            is_reference=bool(b.get("is_reference", False)))
        for b in doc["buses"]
    )
    lines = tuple(
        Line(
            id=int(_get(r, "id", "lines")),
            from_bus=int(_get(r, "from_bus", "lines")),
            to_bus=int(_get(r, "to_bus", "lines")),
            susceptance=float(_get(r, "susceptance", "lines")),
            flow_min=float(_get(r, "flow_min", "lines")),
            flow_max=float(_get(r, "flow_max", "lines")),
            wip_base=float(r.get("wip_base", 0.0)) * wip_scale,
            wip_deenergized=float(r.get("wip_deenergized", 1.0)),
            svi=float(r.get("svi", 0.0)),
            impact=float(r.get("impact", 0.0)),
        )
        for r in doc["lines"]
    )
    generators = tuple(
        Generator(
            id=int(_get(g, "id", "generators")),
            bus=int(_get(g, "bus", "generators")),
            p_min=float(g.get("p_min", 0.0)),
            p_max=float(_get(g, "p_max", "generators")),
            ramp_min=float(g.get("ramp_min", -math.inf)),
            ramp_max=float(g.get("ramp_max", math.inf)),
            cost_marginal=float(g.get("cost_marginal", 0.0)),
            cost_up=float(g.get("cost_up", 0.0)),
            cost_dn=float(g.get("cost_dn", 0.0)),
            min_up=int(g.get("min_up", 1)),
            min_dn=int(g.get("min_dn", 1)),
            initial_status=bool(g.get("initial_status", False)),
        )
        for g in doc["generators"]
    )
    scenarios = tuple(
        DemandScenario(
            id=int(_get(s, "id", "demand_scenarios")),
            probability=float(_get(s, "probability", "demand_scenarios")),
            wip={int(k): float(v) * wip_scale for k, v in (s.get("wip") or {}).items()},
        )
        for s in doc["demand_scenarios"]
    )
    demands = []
    for d in doc["demands"]:
        try:
            profile = np.array(_get(d, "profile", "demands"), dtype=float)
        except (TypeError, ValueError) as exc:
            raise NetworkParseError(f"demands[{d.get('id')}].profile: {exc}") from exc
        if profile.ndim == 1:
            profile = profile[None, :]
        demands.append(Demand(id=int(_get(d, "id", "demands")), bus=int(_get(d, "bus", "demands")),
                              voll=float(d.get("voll", 5000.0)), profile=profile))

    net = Network(
        horizon=horizon, mva_base=mva_base, buses=buses, lines=lines,
        generators=generators, demands=tuple(demands), demand_scenarios=scenarios,
        theta_min=theta_min, theta_max=theta_max, name=str(meta.get("name", "")),
    )
    validate_network(net)
    return net


def _get(obj: Any, key: str, where: str) -> Any:
    if not isinstance(obj, dict):
        raise NetworkParseError(f"{where}: entries must be objects")
    if key not in obj:
        raise NetworkParseError(f"{where}: entry is missing '{key}'")
    return obj[key]


# -- validation --------------------------------------------------------------


def _check_ids(items, section: str) -> None:
    ids = [it.id for it in items]
    seen = set()
    for i in ids:
        if i in seen:
            raise DuplicateIdError(f"{section}[{i}]", "duplicate id")
        seen.add(i)
    if sorted(ids) != list(range(1, len(ids) + 1)):
        raise NetworkValidationError(section, "ids must be contiguous from 1")
    if ids != sorted(ids):
        raise NetworkValidationError(section, "entries must be listed in id order")


def _check_prob(value: float, name: str) -> None:
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise NetworkValidationError(name, f"probability {value} outside [0, 1]")


def validate_network(net: Network) -> None:
    """Raise :class:`NetworkValidationError` on the first violated invariant."""
    for section, items in (("buses", net.buses), ("lines", net.lines),
                           ("generators", net.generators), ("demands", net.demands),
                           ("demand_scenarios", net.demand_scenarios)):
        _check_ids(items, section)
    if not net.buses:
        raise NetworkValidationError("buses", "network has no buses")
    n_ref = sum(b.is_reference for b in net.buses)
    if n_ref != 1:
        raise NetworkValidationError("buses", f"expected exactly one reference bus, found {n_ref}")
    bus_ids = {b.id for b in net.buses}

    for ln in net.lines:
        tag = f"lines[{ln.id}]"
        if ln.from_bus not in bus_ids or ln.to_bus not in bus_ids:
            raise NetworkValidationError(tag, "references an unknown bus")
        if ln.from_bus == ln.to_bus:
            raise NetworkValidationError(tag, "from_bus equals to_bus")
        if not ln.susceptance > 0:
            raise NetworkValidationError(f"{tag}.susceptance", "must be positive")
        if not ln.flow_min <= 0 <= ln.flow_max:
            raise NetworkValidationError(f"{tag}.flow_min", "need flow_min <= 0 <= flow_max")
        _check_prob(ln.wip_base, f"{tag}.wip_base")
        _check_prob(ln.wip_deenergized, f"{tag}.wip_deenergized")
        if ln.wip_base > ln.wip_deenergized:
            raise NetworkValidationError(f"{tag}.wip_base", "exceeds wip_deenergized")
        if not 0 <= ln.svi <= 1:
            raise NetworkValidationError(f"{tag}.svi", "must lie in [0, 1]")
        if ln.impact < 0:
            raise NetworkValidationError(f"{tag}.impact", "must be nonnegative")

    for g in net.generators:
        tag = f"generators[{g.id}]"
        if g.bus not in bus_ids:
            raise NetworkValidationError(tag, "references an unknown bus")
        if not 0 <= g.p_min <= g.p_max:
            raise NetworkValidationError(f"{tag}.p_min", "need 0 <= p_min <= p_max")
        if not g.ramp_min <= 0 <= g.ramp_max:
            raise NetworkValidationError(f"{tag}.ramp_min", "need ramp_min <= 0 <= ramp_max")
        if g.min_up < 1 or g.min_dn < 1:
            raise NetworkValidationError(f"{tag}.min_up", "min_up and min_dn must be >= 1")
        if min(g.cost_marginal, g.cost_up, g.cost_dn) < 0:
            raise NetworkValidationError(f"{tag}.cost_marginal", "costs must be nonnegative")

    n_omega = len(net.demand_scenarios)
    if n_omega == 0:
        raise NetworkValidationError("demand_scenarios", "at least one scenario is required")
    for d in net.demands:
        tag = f"demands[{d.id}]"
        if d.bus not in bus_ids:
            raise NetworkValidationError(tag, "references an unknown bus")
        if d.profile.shape != (n_omega, net.horizon):
            raise NetworkValidationError(
                f"{tag}.profile", f"shape {d.profile.shape}, expected ({n_omega}, {net.horizon})")
        if not np.all(np.isfinite(d.profile)) or np.any(d.profile < 0):
            raise NetworkValidationError(f"{tag}.profile", "entries must be finite and >= 0")
        if d.voll < 0:
            raise NetworkValidationError(f"{tag}.voll", "must be nonnegative")

    total = 0.0
    for s in net.demand_scenarios:
        tag = f"demand_scenarios[{s.id}]"
        if s.probability < 0:
            raise NetworkValidationError(f"{tag}.probability", "must be nonnegative")
        total += s.probability
        line_ids = {ln.id for ln in net.lines}
        for lid, p in s.wip.items():
            if lid not in line_ids:
                raise NetworkValidationError(f"{tag}.wip", f"unknown line {lid}")
            _check_prob(p, f"{tag}.wip[{lid}]")
            if p > net.line(lid).wip_deenergized:
                raise NetworkValidationError(f"{tag}.wip[{lid}]", "exceeds wip_deenergized")
    if abs(total - 1.0) > PROB_TOL:
        raise NetworkValidationError("demand_scenarios", f"probabilities sum to {total!r}, not 1")

    if not _connected(net):
        raise NetworkValidationError("lines", "graph is not connected with all lines energized")


def _connected(net: Network) -> bool:
    adj: dict[int, list[int]] = {b.id: [] for b in net.buses}
    for ln in net.lines:
        adj[ln.from_bus].append(ln.to_bus)
        adj[ln.to_bus].append(ln.from_bus)
    start = net.buses[0].id
    seen = {start}
    queue = deque([start])
    while queue:
        for nb in adj[queue.popleft()]:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return len(seen) == len(net.buses)


# -- derived quantities ------------------------------------------------------


def scenario_probabilities(net: Network) -> np.ndarray:
    return np.array([s.probability for s in net.demand_scenarios])


def expected_demand(net: Network) -> np.ndarray:
    """Probability-weighted demand, shape (n_demands, horizon)."""
    probs = scenario_probabilities(net)
    if not net.demands:
        return np.zeros((0, net.horizon))
    profiles = np.stack([d.profile for d in net.demands])  # (D, Ω, H)
    return np.einsum("w,dwh->dh", probs, profiles)


def expected_wip(net: Network) -> np.ndarray:
    """Probability-weighted baseline ignition probability for every line.

    Scenarios without an override for a line fall back to its ``wip_base``.
    """
    probs = scenario_probabilities(net)
    out = np.zeros(len(net.lines))
    for ln in net.lines:
        vals = np.array([s.wip.get(ln.id, ln.wip_base) for s in net.demand_scenarios])
        out[ln.id - 1] = float(probs @ vals)
    if np.any(out < -PROB_TOL) or np.any(out > 1 + PROB_TOL):
        raise NetworkValidationError("lines", "expected ignition probability outside [0, 1]")
    return np.clip(out, 0.0, 1.0)


# -- serialization -----------------------------------------------------------


def network_to_dict(net: Network) -> dict:
    """Inverse of :func:`network_from_dict`.  Probabilities are written already scaled."""
    return {
        "meta": {"name": net.name, "horizon": net.horizon, "mva_base": net.mva_base,
                 "theta_min": net.theta_min, "theta_max": net.theta_max, "wip_scale": 1.0},
        "buses": [{"id": b.id, "name": b.name, "is_reference": b.is_reference} for b in net.buses],
        "lines": [vars(ln).copy() for ln in net.lines],
        "generators": [vars(g).copy() for g in net.generators],
        "demands": [{"id": d.id, "bus": d.bus, "voll": d.voll, "profile": d.profile.tolist()}
                    for d in net.demands],
        "demand_scenarios": [{"id": s.id, "probability": s.probability,
                              "wip": {str(k): v for k, v in sorted(s.wip.items())}}
                             for s in net.demand_scenarios],
    }


def save_network(net: Network, path: str | Path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net), indent=1) + "\n")
