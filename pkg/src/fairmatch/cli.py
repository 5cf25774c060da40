"""Command line front end.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
inconsistent inputs), 3 internal error.
"""
from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime

from . import bounds as _bounds
from .attenuation import plan, read_table, write_table
from .errors import DataError
from .harness import TrialReport, run_experiment, sweep
from .ingest import (instance_digest, read_edge_list, read_instance,
                     solution_digest, solution_from_json, solution_to_json,
                     trips_to_instance, write_instance)
from .instance import canonicalize, generate_synthetic, validate
from .lp import OBJECTIVES, SolverConfig, build_lp, normalize_ifm, solve, \
    to_lp_text

USAGE_EXIT = 1
DATA_EXIT = 2
INTERNAL_EXIT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fairmatch",
                description="LP-guided online matching for fairness objectives")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic or adversarial instance")
    g.add_argument("--kind", default="synthetic",
                   choices=("synthetic", "example1", "example-worst"))
    g.add_argument("--n-offline", type=int, default=100)
    g.add_argument("--horizon", "-T", type=int, default=100)
    g.add_argument("--degree", type=int, default=3)
    g.add_argument("--weight-mode", default="unit", choices=("unit", "uniform"))
    g.add_argument("--group-mode", default="singletons",
                   choices=("singletons", "partition"))
    g.add_argument("--n-groups", type=int, default=None)
    g.add_argument("--n", type=int, default=10,
                   help="size parameter for the adversarial families")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    ing = sub.add_parser("ingest", help="build an instance from raw data")
    ing_sub = ing.add_subparsers(dest="source", required=True)
    tr = ing_sub.add_parser("trips", help="ride-hailing trip CSV")
    tr.add_argument("--csv", required=True)
    tr.add_argument("--window-start", required=True,
                    help="ISO timestamp, inclusive")
    tr.add_argument("--window-end", required=True, help="ISO timestamp, exclusive")
    tr.add_argument("--horizon", "-T", type=int, required=True)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--column", action="append", default=[],
                    metavar="FIELD=HEADER",
                    help="override a column mapping (start_time, pickup_area, "
                         "dropoff_area)")
    tr.add_argument("--out", required=True)
    gr = ing_sub.add_parser("graph", help="undirected edge list")
    gr.add_argument("--edges", required=True)
    gr.add_argument("--seed", type=int, default=0)
    gr.add_argument("--weight-seed", type=int, default=1)
    gr.add_argument("--downsample", type=int, default=None)
    gr.add_argument("--out", required=True)

    s = sub.add_parser("solve-lp", help="solve the benchmark LP")
    s.add_argument("--instance", required=True)
    s.add_argument("--objective", required=True, choices=OBJECTIVES)
    s.add_argument("--k-cap", type=int, default=None)
    s.add_argument("--keep-isolated", action="store_true",
                   help="keep isolated agents in the min-agent objective")
    s.add_argument("--normalize", action="store_true",
                   help="equalize per-agent masses (min-agent objective only)")
    s.add_argument("--export-lp", default=None,
                   help="also write the cut model in LP text format")
    s.add_argument("--out", required=True)

    pa = sub.add_parser("plan-attenuation", help="precompute muting table")
    pa.add_argument("--instance", required=True)
    pa.add_argument("--solution", required=True)
    pa.add_argument("--sim-count", type=int, default=100)
    pa.add_argument("--stride", type=int, default=1)
    pa.add_argument("--seed", type=int, default=0)
    pa.add_argument("--out", required=True)

    r = sub.add_parser("run", help="evaluate policies on one instance")
    r.add_argument("--instance", required=True)
    r.add_argument("--objective", required=True, choices=OBJECTIVES)
    r.add_argument("--policy", action="append", required=True,
                   help="repeatable: samp-b, samp-ab, greedy, ranking, mgs-lite")
    r.add_argument("--trials", type=int, required=True)
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--k-cap", type=int, default=None)
    r.add_argument("--sim-count", type=int, default=100)
    r.add_argument("--solution", default=None,
                   help="reuse a solved LP instead of solving")
    r.add_argument("--attenuation", default=None,
                   help="reuse a planned table instead of planning")
    r.add_argument("--parallelism", type=int, default=1)
    r.add_argument("--out", required=True, help="report path (.json or .csv)")

    sw = sub.add_parser("sweep", help="run a config-driven grid of cells")
    sw.add_argument("--config", required=True, help="JSON sweep config")
    sw.add_argument("--out", required=True, help="CSV output path")

    b = sub.add_parser("bound", help="evaluate the theory bounds")
    b_sub = b.add_subparsers(dest="which", required=True)
    bb = b_sub.add_parser("sampb")
    bb.add_argument("--tau", type=float, default=1.0)
    ba = b_sub.add_parser("sampab")
    ba.add_argument("--x-star", type=float, default=None)
    ba.add_argument("--kappa", type=float, default=1.0)
    ba.add_argument("--grid", action="store_true",
                    help="grid-minimize F(x, kappa)/x instead")
    ba.add_argument("--grid-size", type=int, default=400)
    bm = b_sub.add_parser("minimizer-set")
    bm.add_argument("--tau", type=float, required=True)

    rp = sub.add_parser("report", help="pretty-print a saved run report")
    rp.add_argument("--in", dest="path", required=True)
    return p


def _cmd_generate(args):
    if args.kind == "synthetic":
        inst = generate_synthetic(args.n_offline, args.horizon, args.degree,
                                  weight_mode=args.weight_mode,
                                  group_mode=args.group_mode,
                                  n_groups=args.n_groups, seed=args.seed)
    elif args.kind == "example1":
        inst = _bounds.make_example1(args.n)
    else:
        inst = _bounds.make_example_worst(args.n)
    problems = validate(inst)
    if problems:
        raise DataError("; ".join(problems))
    write_instance(inst, args.out)
    print(f"wrote {args.out} ({inst.n_offline} offline, {inst.n_online} online, "
          f"{len(inst.edges)} edges, digest {instance_digest(inst)[:12]})")


def _cmd_ingest(args):
    if args.source == "trips":
        columns = {}
        for spec in args.column:
            if "=" not in spec:
                raise DataError(f"bad --column {spec!r}, expected FIELD=HEADER")
            k, v = spec.split("=", 1)
            columns[k] = v
        window = (datetime.fromisoformat(args.window_start),
                  datetime.fromisoformat(args.window_end))
        inst = trips_to_instance(args.csv, window, args.horizon, args.seed,
                                 columns or None)
    else:
        graph = read_edge_list(args.edges)
        from .ingest import balanced_partition
        inst = balanced_partition(graph, args.seed, args.weight_seed,
                                  downsample_to=args.downsample)
    problems = validate(inst)
    if problems:
        raise DataError("; ".join(problems))
    write_instance(inst, args.out)
    print(f"wrote {args.out} ({inst.n_offline} offline, {inst.n_online} online, "
          f"{len(inst.edges)} edges)")


def _load_instance_checked(path):
    inst = read_instance(path)
    problems = validate(inst)
    if problems:
        raise DataError(f"{path}: " + "; ".join(problems))
    return inst


def _cmd_solve_lp(args):
    inst = _load_instance_checked(args.instance)
    inst = canonicalize(inst)
    model = build_lp(inst, args.objective, k_cap=args.k_cap,
                     drop_isolated=not args.keep_isolated)
    sol = solve(model, inst, SolverConfig())
    if args.normalize:
        sol = normalize_ifm(sol, inst)
    with open(args.out, "w") as fh:
        fh.write(solution_to_json(sol))
    if args.export_lp:
        with open(args.export_lp, "w") as fh:
            fh.write(to_lp_text(model))
    print(f"objective={sol.objective_value!r} cuts={sol.cut_count} "
          f"status={sol.status}")


def _cmd_plan_attenuation(args):
    inst = _load_instance_checked(args.instance)
    inst = canonicalize(inst)
    with open(args.solution) as fh:
        sol = solution_from_json(fh.read(), inst)
    inst_dig = instance_digest(inst)
    sol_dig = solution_digest(sol)
    try:
        cached, ci, cs = read_table(args.out)
        if (ci == inst_dig and cs == sol_dig
                and cached.sim_count == args.sim_count
                and cached.seed == args.seed):
            print(f"cached table at {args.out} is current, leaving it")
            return
    except (OSError, ValueError, KeyError):
        pass
    table = plan(inst, sol, sim_count=args.sim_count, seed=args.seed,
                 stride=args.stride)
    write_table(table, args.out, inst_dig, sol_dig)
    print(f"wrote {args.out} (T={inst.horizon}, sim_count={args.sim_count})")


def _cmd_run(args):
    inst = _load_instance_checked(args.instance)
    inst = canonicalize(inst)
    sol = None
    if args.solution:
        with open(args.solution) as fh:
            sol = solution_from_json(fh.read(), inst)
    table = None
    if args.attenuation:
        table, _ci, _cs = read_table(args.attenuation)
    reports = run_experiment(inst, args.policy, args.objective, args.trials,
                             args.seed, parallelism=args.parallelism,
                             k_cap=args.k_cap, sim_count=args.sim_count,
                             lp_solution=sol, attenuation=table)
    if args.out.endswith(".csv"):
        import csv as _csv
        with open(args.out, "w", newline="") as fh:
            w = _csv.writer(fh)
            w.writerow(["policy", "objective", "trials", "objective_estimate",
                        "objective_half_width", "lp_value", "cr1",
                        "cr1_excluded", "cr2"])
            for name in args.policy:
                rep = reports[name]
                w.writerow([rep.policy, rep.objective, rep.trials,
                            repr(rep.objective_estimate),
                            repr(rep.objective_half_width),
                            repr(rep.lp_value), repr(rep.cr1),
                            rep.cr1_excluded, repr(rep.cr2)])
    else:
        doc = {name: reports[name].to_dict() for name in args.policy}
        with open(args.out, "w") as fh:
            json.dump(doc, fh, sort_keys=True, indent=1)
            fh.write("\n")
    for name in args.policy:
        rep = reports[name]
        print(f"{name}: objective={rep.objective_estimate:.6f} "
              f"cr1={rep.cr1:.4f} cr2={rep.cr2:.4f} lp={rep.lp_value:.6f}")


def _cmd_sweep(args):
    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read sweep config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"sweep config is not valid JSON: {exc}") from None
    rows = sweep(config, args.out)
    print(f"wrote {args.out} ({len(rows)} rows)")


def _cmd_bound(args):
    if args.which == "sampb":
        ev = _bounds.minimize_sampb_bound([args.tau])
        print(f"tau={args.tau!r} bound={ev.value!r} pieces={len(ev.pieces)}")
    elif args.which == "sampab":
        if args.grid:
            ev = _bounds.minimize_sampab_bound(grid=args.grid_size)
            print(f"min F/x = {ev.value!r} at x_star={ev.x_star!r} "
                  f"kappa={ev.kappa!r}")
        else:
            if args.x_star is None:
                raise DataError("sampab needs --x-star (or --grid)")
            v = _bounds.sampab_bound(args.x_star, args.kappa)
            print(f"F({args.x_star!r}, {args.kappa!r}) = {v!r} "
                  f"ratio={v / args.x_star!r}")
    else:
        pieces = _bounds.minimizer_set(args.tau)
        print(f"tau={args.tau!r} pieces={[round(p, 12) for p in pieces]} "
              f"sum={sum(pieces)!r}")


def _cmd_report(args):
    try:
        with open(args.path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read report: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"report is not valid JSON: {exc}") from None
    header = f"{'policy':<10} {'trials':>7} {'objective':>12} {'+/-':>10} " \
             f"{'cr1':>8} {'cr2':>8} {'excl':>5}"
    print(header)
    print("-" * len(header))
    for name in sorted(doc):
        rep = TrialReport.from_dict(doc[name])
        print(f"{rep.policy:<10} {rep.trials:>7} {rep.objective_estimate:>12.6f} "
              f"{rep.objective_half_width:>10.6f} {rep.cr1:>8.4f} "
              f"{rep.cr2:>8.4f} {rep.cr1_excluded:>5}")


_COMMANDS = {
    "generate": _cmd_generate,
    "ingest": _cmd_ingest,
    "solve-lp": _cmd_solve_lp,
    "plan-attenuation": _cmd_plan_attenuation,
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "bound": _cmd_bound,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse raises SystemExit for both --help (code 0) and usage errors.
        return int(exc.code or 0)
    try:
        _COMMANDS[args.command](args)
        return 0
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except Exception as exc:   # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return INTERNAL_EXIT


if __name__ == "__main__":
    sys.exit(main())
