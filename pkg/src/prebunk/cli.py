"""Command-line entry point: ``prebunk <subcommand> [options]``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .cascade import write_trace
from .config import load_config
from .cost import ActionLog, cost_series, feasibility_check, write_cost_csv
from .experiment import (
    build_graph,
    derive_seed,
    emit_comparison_csv,
    emit_inoculation_csv,
    pick_center,
    run_comparison,
    run_guarded,
    run_inoculation,
)
from .netgraph import read_edgelist, write_edgelist
from .schedule import (
    LpInstance,
    RelaxedInstance,
    schedule_cost,
    solve_equidistant_lp,
    relaxed_minimax_solve,
)


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="prebunk", description="Prebunk scheduling simulator.")
    p.add_argument("--config", help="YAML file of config overrides")
    p.add_argument("--seed", type=int, help="master seed (overrides config)")
    p.add_argument("--out-dir", default=".", help="directory for output files")
    p.add_argument("--jobs", type=int, help="worker processes for replicates")
    p.add_argument("--strict", action="store_true", help="exit 1 if any run is infeasible")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a Chung-Lu graph as an edge list")
    g.add_argument("--output", default="graph.txt")

    s = sub.add_parser("simulate", help="one guarded run under every configured policy")
    s.add_argument("--graph", help="edge-list file (default: generate from config)")
    s.add_argument("--center", type=int, help="guarded user (default: random)")
    s.add_argument("--m", type=int, default=2, help="neighborhood radius")
    s.add_argument("--trace-out", help="write the event trace to this file")

    c = sub.add_parser("compare", help="policy cost comparison across replicates")
    c.add_argument("--output", default="comparison.csv")

    i = sub.add_parser("inoculate", help="spread curves under top-degree inoculation")
    i.add_argument("--ratios", type=_floats, help="comma-separated ratios in [0, 1)")
    i.add_argument("--output", default="inoculation.csv")

    sc = sub.add_parser("schedule", help="solve a scheduling instance and print CSV")
    sc.add_argument("--deadlines", type=_floats, help="comma-separated sorted deadlines")
    sc.add_argument("--t0", type=float, default=0.0, help="last delivery time for the LP")
    sc.add_argument("--eps", type=float)
    sc.add_argument("--horizon", type=float)
    sc.add_argument("--beta", type=float)
    return p


def _cmd_generate(args, cfg, out: Path) -> int:
    g = build_graph(cfg, derive_seed(cfg.seed, 0))
    path = out / args.output
    write_edgelist(g, path)
    print(f"wrote {g.num_edges} edges on {g.n} nodes to {path}")
    return 0


def _cmd_simulate(args, cfg, out: Path) -> int:
    seed = derive_seed(cfg.seed, 0)
    g = read_edgelist(args.graph) if args.graph else build_graph(cfg, seed)
    center = args.center if args.center is not None else pick_center(g, seed)
    g.check_node(center)
    trace, logs, nb = run_guarded(cfg, g, center, args.m, derive_seed(seed, args.m))
    if args.trace_out:
        write_trace(trace, out / args.trace_out)
    w = csv.writer(sys.stdout)
    w.writerow(["policy", "C_A", "feasible", "count"])
    ok = True
    for name, alog in logs.items():
        series = cost_series(alog, cfg.guard.beta)
        feasible = feasibility_check(trace, alog).all_feasible
        ok &= feasible
        write_cost_csv(series, out / f"cost_{name}.csv", beta=cfg.guard.beta)
        w.writerow([name, float(series.max()) if series.size else 0.0, feasible, len(alog.delivery_time())])
    return 0 if ok or not args.strict else 1


def _cmd_compare(args, cfg, out: Path) -> int:
    result = run_comparison(cfg, jobs=args.jobs)
    path = out / args.output
    emit_comparison_csv(result, path)
    for a in result.aggregates():
        print(f"{a.policy:12s} m={a.m}  mean C(A)={a.mean_C_A:.4f}  sd={a.std_C_A:.4f}  n={a.n}")
    print(f"wrote {path}")
    infeasible = [r for r in result.rows if not r.feasible]
    if infeasible:
        print(f"{len(infeasible)} infeasible runs", file=sys.stderr)
    return 1 if infeasible and args.strict else 0


def _cmd_inoculate(args, cfg, out: Path) -> int:
    result = run_inoculation(cfg, args.ratios)
    path = out / args.output
    emit_inoculation_csv(result, path)
    for r in result.ratios:
        t50 = result.time_to_percent(r)
        print(f"ratio={r:g}  mean time-to-50%={t50.mean():.2f}  var={t50.var(ddof=1) if t50.size > 1 else 0.0:.2f}")
    print(f"wrote {path}")
    return 0


def _cmd_schedule(args, cfg) -> int:
    w = csv.writer(sys.stdout)
    if args.deadlines:
        sol = solve_equidistant_lp(LpInstance(args.t0, args.t0, tuple(args.deadlines)))
        beta = args.beta if args.beta is not None else cfg.guard.beta
        costs, _ = schedule_cost(sol.times, beta) if sol.feasible else ([], 0.0)
        w.writerow(["i", "t_i", "deadline", "cost"])
        for i, (t, d) in enumerate(zip(sol.times, args.deadlines), start=1):
            w.writerow([i, t, d, costs[i - 1] if len(costs) else ""])
        w.writerow(["u", sol.u, "", ""])
        w.writerow(["feasible", sol.feasible, "", ""])
        return 0 if sol.feasible or not args.strict else 1
    if None in (args.eps, args.horizon, args.beta):
        print("schedule needs --deadlines or all of --eps, --horizon, --beta", file=sys.stderr)
        return 2
    sol = relaxed_minimax_solve(RelaxedInstance(args.horizon, args.eps, args.beta))
    w.writerow(["n", "t_n", "cost"])
    for n, (t, c) in enumerate(zip(sol.times, sol.costs)):
        w.writerow([n, t, c])
    w.writerow(["alpha", sol.alpha, ""])
    w.writerow(["h", sol.h, ""])
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.jobs is not None:
            cfg.jobs = args.jobs
        cfg.validate()
        if args.command == "schedule":
            return _cmd_schedule(args, cfg)
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        handler = {
            "generate": _cmd_generate,
            "simulate": _cmd_simulate,
            "compare": _cmd_compare,
            "inoculate": _cmd_inoculate,
        }[args.command]
        return handler(args, cfg, out)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
