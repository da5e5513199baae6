"""Command-line entry point.

    drpsps validate --network rts24_reduced
    drpsps solve    --network three_bus --kappa 0 --kappa 0.5 --out runs/
    drpsps revpi    --network three_bus --out runs/
    drpsps pareto   --network rts24_reduced --nzr-cap 3 --out runs/
    drpsps oos      --network three_bus --kappa 0.25 --samples 200 --seed 7 --out runs/
    drpsps export-mps --network three_bus --kappa 0.5 --out runs/

``--network`` takes a file path or the name of a bundled fixture.  Every output
file starts with (CSV) or contains (JSON) a fingerprint of the inputs that
produced it, so two runs can be compared without diffing the numbers.

Exit codes: 0 success, 1 bad input, 2 solver failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from .formulation import FormulationError, PlanningInstance, make_instance
from .grid_model import NetworkError, load_network
from .milp_core import SolverError, write_mps
from .oos_sim import OosError, evaluate_plan, plan_wip, sample_outages
from .outage_model import OutageModelError, line_risk
from .planners import (AmbiguityConfig, PlanningError, build_oneshot_model, build_pattern_model,
                       pareto_sweep, revpi, solve_dr_psps, solve_wait_and_see)

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3
REVPI_KAPPAS = (0.0, 0.25, 0.5, 0.75, 0.99, 0.999)
FIXTURES = ("three_bus", "rts24_reduced")


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which is our solver code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def resolve_network(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    if name in FIXTURES:
        return Path(str(resources.files("drpsps") / "data" / f"{name}.json"))
    raise FileNotFoundError(f"no network file {name!r} (bundled fixtures: {', '.join(FIXTURES)})")


def fingerprint(command: str, args: argparse.Namespace, path: Path) -> str:
    """sha256 over the network bytes and every flag that can change an output."""
    cfg = {k: v for k, v in sorted(vars(args).items())
           if k not in ("out", "jobs", "func", "network")}
    cfg["command"] = command
    cfg["network_sha256"] = hashlib.sha256(path.read_bytes()).hexdigest()
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()


def _kappas(args, default=(0.0,)) -> list[float]:
    ks = args.kappa if args.kappa else list(default)
    for k in ks:
        if not 0.0 <= k <= 1.0 or math.isnan(k):
            raise InputError(f"kappa {k} outside [0, 1]")
    return ks


def _instance(args, net, rtol: float = math.inf, mode: str | None = None) -> PlanningInstance:
    return make_instance(net, nzr_cap=args.nzr_cap, mode=mode or args.mode, risk_tolerance=rtol)


def _tag(k: float) -> str:
    return f"k{k:g}".replace(".", "p")


def _csv_text(header: str, rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(f"# {header}\n")
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _rtols(args) -> list[float]:
    return [float(r) for r in args.rtol] if args.rtol else [math.inf]


# -- commands ---------------------------------------------------------------------


def cmd_validate(args, net, fp) -> int:
    inst = _instance(args, net)
    print(f"network {net.name}: {len(net.buses)} buses, {len(net.lines)} lines, "
          f"{len(net.generators)} generators, {len(net.demands)} demands, "
          f"{len(net.demand_scenarios)} demand scenarios, horizon {net.horizon}")
    print(f"NZR lines (cap {args.nzr_cap}, mode {args.mode}):")
    print(f"{'line':>5} {'from':>5} {'to':>5} {'wip':>12} {'svi':>6} {'impact':>10} {'risk':>12}")
    for k, lid in enumerate(inst.nzr_lines):
        ln = net.line(lid)
        wip = inst.scenarios.line_wip[k]
        print(f"{lid:>5} {ln.from_bus:>5} {ln.to_bus:>5} {wip:>12.6g} {ln.svi:>6.3g} "
              f"{ln.impact:>10.6g} {line_risk(ln, args.mode, wip):>12.6g}")
    print(f"fingerprint {fp}")
    return EXIT_OK


def _solve_one(payload):
    path, nzr_cap, mode, rtol, kappa, strategy = payload
    net = load_network(path)
    inst = make_instance(net, nzr_cap=nzr_cap, mode=mode, risk_tolerance=rtol)
    return solve_dr_psps(inst, AmbiguityConfig(kappa, strategy))


def _map(fn, items, jobs: int) -> list:
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def _plans(args, path, kappas, rtol=math.inf):
    work = [(str(path), args.nzr_cap, args.mode, rtol, k, args.strategy) for k in kappas]
    return _map(_solve_one, work, args.jobs)


def cmd_solve(args, net, fp) -> int:
    kappas = _kappas(args)
    out = Path(args.out)
    rtol = _rtols(args)[0]
    plans = _plans(args, args.network_path, kappas, rtol)
    for k, plan in zip(kappas, plans):
        doc = plan.to_dict()
        doc["fingerprint"] = fp
        _write(out, f"plan_{_tag(k)}.json", json.dumps(doc, indent=1, sort_keys=True) + "\n")
        rows = [["scenario", "xi", "probability", "scenario_cost", "energy_cost", "shed_cost"]]
        inst = _instance(args, net, rtol)
        for s, xi in enumerate(inst.scenarios.xi):
            rows.append([s + 1, "".join(map(str, xi)), repr(float(plan.probabilities[s])),
                         repr(float(plan.scenario_costs[s])), repr(float(plan.energy_costs[s])),
                         repr(float(plan.shed_costs[s]))])
        _write(out, f"scenarios_{_tag(k)}.csv", _csv_text(f"drpsps solve fingerprint={fp}", rows))
        if args.export_mps:
            _export(inst, plan.kappa, plan.shutoffs if args.strategy == "enum" else None,
                    out / f"model_{_tag(k)}.mps")
        print(f"kappa={k:g} objective={plan.objective:.6f} shutoffs={plan.shutoffs.tolist()}")
    return EXIT_OK


def cmd_revpi(args, net, fp) -> int:
    kappas = _kappas(args, REVPI_KAPPAS)
    base = _instance(args, net)
    # active-line caps: unweighted risk counts energized NZR lines
    caps = [float(r) for r in args.rtol] if args.rtol else list(range(base.n_nzr + 1))
    rows = [["kappa", "max_active_lines", "rerp", "rews", "revpi"]]
    for cap in caps:
        inst = base.with_tolerance(cap, "unweighted")
        ws = solve_wait_and_see(inst)
        for k in kappas:
            r = revpi(inst, k, args.strategy, ws=ws)
            rows.append([f"{k:g}", f"{cap:g}", repr(r["rerp"]), repr(r["rews"]),
                         repr(r["revpi"])])
            print(f"kappa={k:g} cap={cap:g} revpi={r['revpi']:.6f}")
    _write(Path(args.out), "revpi.csv", _csv_text(f"drpsps revpi fingerprint={fp}", rows))
    return EXIT_OK


def cmd_pareto(args, net, fp) -> int:
    inst = _instance(args, net)
    points = pareto_sweep(net, inst.nzr_lines, args.mode)
    rows = [["pattern", "cost", "risk", "pareto"]]
    for p in points:
        rows.append(["".join(map(str, p.pattern)), repr(p.cost), repr(p.risk), int(p.pareto)])
    _write(Path(args.out), "pareto.csv", _csv_text(
        f"drpsps pareto lines={','.join(map(str, inst.nzr_lines))} fingerprint={fp}", rows))
    print(f"{len(points)} patterns, {sum(p.pareto for p in points)} on the frontier")
    return EXIT_OK


def _demand_rt(args, net) -> np.ndarray | None:
    if args.demand == "expected":
        return None
    try:
        sid = int(args.demand)
    except ValueError:
        raise InputError(f"--demand must be 'expected' or a demand scenario id, got {args.demand!r}")
    ids = [s.id for s in net.demand_scenarios]
    if sid not in ids:
        raise InputError(f"demand scenario {sid} not in {ids}")
    w = ids.index(sid)
    return np.array([d.profile[w] for d in net.demands])


def cmd_oos(args, net, fp) -> int:
    if args.samples < 1:
        raise InputError("--samples must be at least 1")
    kappas = _kappas(args)
    demand = _demand_rt(args, net)
    out = Path(args.out)
    summary = [["kappa", "shutoffs", "day_ahead_objective", "expected_oos_cost",
                "standard_error", "excluded"]]
    for k, plan in zip(kappas, _plans(args, args.network_path, kappas)):
        samples = sample_outages(plan_wip(net, plan), args.samples, args.seed, plan.nzr_lines)
        rep = evaluate_plan(net, plan, samples, demand, jobs=args.jobs)
        header = f"drpsps oos kappa={k:g} seed={args.seed} fingerprint={fp}"
        _write(out, f"oos_{_tag(k)}.csv", rep.to_csv(header))
        doc = rep.summary()
        doc["fingerprint"] = fp
        _write(out, f"oos_{_tag(k)}.json", json.dumps(doc, indent=1, sort_keys=True) + "\n")
        summary.append([f"{k:g}", "".join(map(str, plan.shutoffs)), repr(plan.objective),
                        repr(rep.expected_cost), repr(rep.standard_error), rep.excluded])
        print(f"kappa={k:g} expected={rep.expected_cost:.6f} se={rep.standard_error:.6f} "
              f"excluded={rep.excluded}")
    _write(out, "oos_summary.csv", _csv_text(f"drpsps oos fingerprint={fp}", summary))
    return EXIT_OK


def _export(inst, kappa, pattern, path: Path) -> None:
    if pattern is None:
        model, _, _ = build_oneshot_model(inst, kappa)
    else:
        model, _, _ = build_pattern_model(inst, np.asarray(pattern), kappa)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_mps(model, path)


def cmd_export_mps(args, net, fp) -> int:
    inst = _instance(args, net, _rtols(args)[0])
    out = Path(args.out)
    for k in _kappas(args):
        pattern = None
        if args.pattern is not None:
            pattern = [int(c) for c in args.pattern]
            if len(pattern) != inst.n_nzr or any(v not in (0, 1) for v in pattern):
                raise InputError(f"--pattern needs {inst.n_nzr} binary digits")
        path = out / f"model_{_tag(k)}.mps"
        _export(inst, k, pattern, path)
        print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "solve": cmd_solve, "revpi": cmd_revpi,
            "pareto": cmd_pareto, "oos": cmd_oos, "export-mps": cmd_export_mps}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--network", required=True, help="network JSON or fixture name")
    common.add_argument("--kappa", type=float, action="append", help="TV radius (repeatable)")
    common.add_argument("--rtol", type=float, action="append",
                        help="risk budget (repeatable; for revpi: max active lines)")
    common.add_argument("--strategy", choices=("enum", "milp"), default="enum")
    common.add_argument("--mode", choices=("svi", "acres", "unweighted"), default="svi")
    common.add_argument("--nzr-cap", type=int, default=3)
    common.add_argument("--samples", type=int, default=200)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--demand", default="expected",
                        help="real-time demand for oos: 'expected' or a scenario id")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--out", default=".")
    parser = _Parser(prog="drpsps", description="Distributionally robust PSPS planning.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "solve":
            p.add_argument("--export-mps", action="store_true")
        if name == "export-mps":
            p.add_argument("--pattern", help="fix the shut-off pattern, e.g. 101")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        path = resolve_network(args.network)
        net = load_network(path)
        fp = fingerprint(args.command, args, path)
        args.network_path = str(path)
        return COMMANDS[args.command](args, net, fp)
    except (NetworkError, InputError, OutageModelError, OosError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (PlanningError, SolverError, FormulationError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
