"""Command-line front end: solve, allocate, compare, weights, validate, gen.

Exit codes are part of the interface:
  0  success
  2  scenario or argument validation failure (nothing is written)
  3  infeasible scenario
  4  solver or consensus did not converge (artifacts are still written)
  5  bargaining failed: cooperation does not beat standing alone
  6  compare: cost gap above tolerance

All files go through a temp-and-rename so readers never see a half-written
artifact.  CSV outputs are bit-identical across re-runs on the same input;
the JSON run report is not, because it records wall time.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from .allocation import BargainingError, allocate_centralized, allocate_distributed
from .centralized import (
    InfeasibleScenarioError,
    check_schedule,
    schedule_field_names,
    solve_social,
    stored_energy,
)
from .codes import CodesConfig, run_codes
from .generate import GRAPH_FAMILIES, GenSpec, gen_scenario
from .graph import GraphError
from .lp import LpError
from .scenario import (
    Scenario,
    ScenarioFormatError,
    ScenarioValidationError,
    dump_scenario,
    load_scenario,
    scenario_digest,
)
from .selfish import disagreement_point

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_NO_CONVERGENCE = 4
EXIT_BARGAINING = 5
EXIT_GAP = 6

TRACE_FIELDS = ("iter", "J_est", "max_imbalance_kw",
                "consensus_disagreement", "primal_step_norm")


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def schedule_csv_text(scenario: Scenario, schedule) -> str:
    ids = [a.id for a in scenario.active_users]
    energies = {i: stored_energy(scenario.agent(i).desd, schedule.desd_power_kw[i],
                                 schedule.dt_hours) for i in ids}
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(schedule_field_names(scenario))
    for t in range(schedule.horizon):
        row = [t, repr(float(schedule.grid_buy_kw[t])), repr(float(schedule.grid_sell_kw[t]))]
        row += [repr(float(schedule.desd_power_kw[i][t])) for i in ids]
        row += [repr(float(energies[i][t])) for i in ids]
        writer.writerow(row)
    return out.getvalue()


def trace_csv_text(trace) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(TRACE_FIELDS)
    for k, j, imb, dis, step in trace.rows():
        writer.writerow([k, repr(j), repr(imb), repr(dis), repr(step)])
    return out.getvalue()


def cost_csv_text(report) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["agent", "D", "J_alloc", "consumption", "epsilon"])
    for k, agent_id in enumerate(report.agent_ids):
        consumption = "" if report.consumption is None else repr(float(report.consumption[k]))
        writer.writerow([agent_id, repr(float(report.selfish[k])),
                         repr(float(report.allocated[k])), consumption,
                         repr(report.epsilon)])
    return out.getvalue()


def run_report(scenario_path: Path, scenario: Scenario, command: str, started: float,
               **extra) -> dict:
    report = {
        "command": command,
        "scenario": str(scenario_path),
        "scenario_digest": scenario_digest(scenario),
        "wall_time_s": time.perf_counter() - started,
    }
    report.update(extra)
    return report


def _load(path_str: str) -> Scenario:
    path = Path(path_str)
    if not path.is_file():
        raise ScenarioValidationError(f"scenario file not found: {path}")
    return load_scenario(path)


def cmd_solve(args) -> int:
    started = time.perf_counter()
    sc = _load(args.scenario)
    out_dir = Path(args.out_dir)
    method = "codes" if args.codes else "centralized"
    exit_code = EXIT_OK
    if method == "centralized":
        schedule, j = solve_social(sc)
        files = {"schedule": out_dir / "schedule_centralized.csv"}
        write_atomic(files["schedule"], schedule_csv_text(sc, schedule))
        extra = {"j": j, "config": {}, "iterations": 0, "converged": True}
        print(f"centralized optimum J = {j:.6f}")
    else:
        config = CodesConfig.from_scenario(sc)
        result = run_codes(sc, config)
        files = {"schedule": out_dir / "schedule_codes.csv",
                 "trace": out_dir / "trace_codes.csv"}
        write_atomic(files["schedule"], schedule_csv_text(sc, result.schedule))
        write_atomic(files["trace"], trace_csv_text(result.trace))
        extra = {"j": result.j, "config": dataclasses.asdict(config),
                 "iterations": result.iterations, "converged": result.converged}
        print(f"distributed schedule J = {result.j:.6f} "
              f"after {result.iterations} iterations")
        if not result.converged:
            print("warning: stopped at the iteration cap before the "
                  "convergence test fired", file=sys.stderr)
            exit_code = EXIT_NO_CONVERGENCE
    extra["schedule_files"] = sorted(str(p) for p in files.values())
    write_atomic(out_dir / "report.json",
                 json.dumps(run_report(Path(args.scenario), sc, "solve", started,
                                       method=method, **extra), indent=2) + "\n")
    return exit_code


def cmd_allocate(args) -> int:
    started = time.perf_counter()
    sc = _load(args.scenario)
    out_dir = Path(args.out_dir)
    selfish = disagreement_point(sc)
    convergence_ok = True
    if args.social_method == "codes":
        result = run_codes(sc)
        schedule, j = result.schedule, result.j
        convergence_ok = result.converged
    else:
        schedule, j = solve_social(sc)
    if args.distributed:
        try:
            report = allocate_distributed(sc, j, selfish, tol=args.graph_tol,
                                          schedule=schedule)
        except GraphError as exc:
            # the graph itself was validated at load time, so this is the
            # consensus loop running out of rounds
            return _fail(EXIT_NO_CONVERGENCE, str(exc))
    else:
        report = allocate_centralized(sc, j, selfish, schedule=schedule)
    write_atomic(out_dir / "costs.csv", cost_csv_text(report))
    table = run_report(
        Path(args.scenario), sc, "allocate", started,
        method=report.method, social_method=args.social_method, j=j,
        epsilon=report.epsilon, rounds=report.rounds,
        netting_residual=report.netting_residual,
        schedule_files=[str(out_dir / "costs.csv")],
        cost_table=[{"agent": int(a), "D": float(d), "J_alloc": float(x),
                     "consumption": float(c)}
                    for a, d, x, c in zip(report.agent_ids, report.selfish,
                                          report.allocated, report.consumption)],
        config={"graph_tol": args.graph_tol},
    )
    write_atomic(out_dir / "report.json", json.dumps(table, indent=2) + "\n")
    print(f"{'agent':>6} {'D':>12} {'J_alloc':>12} {'consumption':>12}")
    for row in table["cost_table"]:
        print(f"{row['agent']:>6} {row['D']:>12.6f} {row['J_alloc']:>12.6f} "
              f"{row['consumption']:>12.6f}")
    print(f"social cost J = {j:.6f}, per-user saving epsilon = {report.epsilon:.6f}")
    if not convergence_ok:
        print("warning: social cost comes from a non-converged run", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_compare(args) -> int:
    started = time.perf_counter()
    sc = _load(args.scenario)
    out_dir = Path(args.out_dir)
    oracle_schedule, j_oracle = solve_social(sc)
    config = CodesConfig.from_scenario(sc)
    result = run_codes(sc, config)
    gap = abs(result.j - j_oracle) / abs(j_oracle) if j_oracle != 0 else abs(result.j)

    ids = [a.id for a in sc.active_users]
    deviations = [np.abs(result.schedule.grid_buy_kw - oracle_schedule.grid_buy_kw).max(),
                  np.abs(result.schedule.grid_sell_kw - oracle_schedule.grid_sell_kw).max()]
    deviations += [np.abs(result.schedule.desd_power_kw[i]
                          - oracle_schedule.desd_power_kw[i]).max() for i in ids]
    max_dev = float(max(deviations))

    write_atomic(out_dir / "schedule_centralized.csv",
                 schedule_csv_text(sc, oracle_schedule))
    write_atomic(out_dir / "schedule_codes.csv", schedule_csv_text(sc, result.schedule))
    write_atomic(out_dir / "trace_codes.csv", trace_csv_text(result.trace))
    report = run_report(
        Path(args.scenario), sc, "compare", started,
        j_codes=result.j, j_oracle=j_oracle, rel_gap=gap, tol=args.tol,
        max_schedule_deviation_kw=max_dev, iterations=result.iterations,
        converged=result.converged, config=dataclasses.asdict(config),
        schedule_files=[str(out_dir / "schedule_centralized.csv"),
                        str(out_dir / "schedule_codes.csv")],
    )
    write_atomic(out_dir / "report.json", json.dumps(report, indent=2) + "\n")
    print(f"J_codes = {result.j:.6f}  J_oracle = {j_oracle:.6f}  "
          f"rel_gap = {gap:.3e} (tol {args.tol:g})")
    print(f"max schedule deviation = {max_dev:.4f} kW "
          f"(per-agent splits may differ at equal cost)")
    print(f"iterations = {result.iterations}  converged = {result.converged}")
    if gap > args.tol:
        if not result.converged:
            return _fail(EXIT_NO_CONVERGENCE,
                         f"no convergence and cost gap {gap:.3e} above {args.tol:g}")
        return _fail(EXIT_GAP, f"cost gap {gap:.3e} above tolerance {args.tol:g}")
    return EXIT_OK


def cmd_weights(args) -> int:
    sc = _load(args.scenario)
    out = io.StringIO()
    writer = csv.writer(out)
    ids = sc.graph.node_ids
    writer.writerow(["node"] + [str(i) for i in ids])
    for k, i in enumerate(ids):
        writer.writerow([i] + [repr(float(w)) for w in sc.graph.weights[k]])
    text = out.getvalue()
    write_atomic(Path(args.out_dir) / "weights.csv", text)
    print(text, end="")
    return EXIT_OK


def cmd_validate(args) -> int:
    sc = _load(args.scenario)
    print(f"OK {scenario_digest(sc)}")
    return EXIT_OK


def cmd_gen(args) -> int:
    spec = GenSpec(users=tuple(args.users), active=tuple(args.active),
                   horizon=tuple(args.horizon), graph=args.graph)
    sc = gen_scenario(spec, args.seed)
    out = Path(args.out) if args.out else Path(args.out_dir) / f"scenario_{args.seed}.json"
    write_atomic(out, dump_scenario(sc))
    print(f"wrote {out} ({sc.n_users} users, T={sc.horizon}, digest {scenario_digest(sc)})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    # allow_abbrev=False everywhere: a mistyped flag should error, not
    # silently match a prefix of --out-dir and scatter artifacts.
    parser = argparse.ArgumentParser(
        prog="coopgrid",
        description="Day-ahead microgrid scheduling: distributed solver, "
                    "LP oracle, and bargaining-based cost allocation.",
        allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario JSON file")
    common.add_argument("--out-dir", default=".", help="directory for artifacts")

    p = sub.add_parser("solve", parents=[common], allow_abbrev=False,
                       help="schedule the microgrid and write schedule CSV + report")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--centralized", action="store_true",
                      help="exact LP solve (default)")
    mode.add_argument("--codes", action="store_true",
                      help="distributed solver; also writes an iteration trace")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("allocate", parents=[common], allow_abbrev=False,
                       help="split the cooperative bill so every user saves equally")
    p.add_argument("--distributed", action="store_true",
                   help="compute the split by consensus on the scenario graph")
    p.add_argument("--graph-tol", type=float, default=1e-6,
                   help="consensus tolerance for --distributed")
    p.add_argument("--social-method", choices=("centralized", "codes"),
                   default="centralized", help="where the social cost J comes from")
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("compare", parents=[common], allow_abbrev=False,
                       help="run both solvers and report the relative cost gap")
    p.add_argument("--tol", type=float, default=0.005,
                   help="relative cost gap that still counts as agreement")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("weights", parents=[common], allow_abbrev=False,
                       help="dump the consensus weight matrix as CSV")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("validate", parents=[common], allow_abbrev=False,
                       help="check a scenario file and print its digest")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gen", allow_abbrev=False, help="write a randomized but valid scenario")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path (default scenario_<seed>.json)")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--users", type=int, nargs=2, default=[2, 5], metavar=("LO", "HI"))
    p.add_argument("--active", type=int, nargs=2, default=[0, 3], metavar=("LO", "HI"))
    p.add_argument("--horizon", type=int, nargs=2, default=[4, 24], metavar=("LO", "HI"))
    p.add_argument("--graph", choices=GRAPH_FAMILIES, default="random")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioFormatError, ScenarioValidationError, GraphError,
            json.JSONDecodeError, ValueError) as exc:
        return _fail(EXIT_VALIDATION, str(exc))
    except InfeasibleScenarioError as exc:
        return _fail(EXIT_INFEASIBLE, str(exc))
    except BargainingError as exc:
        return _fail(EXIT_BARGAINING, str(exc))
    except LpError as exc:
        return _fail(EXIT_INFEASIBLE, f"LP solve failed: {exc}")


if __name__ == "__main__":
    sys.exit(main())
