"""Command-line harness: sample, metrics, explore, gw, verify, scaling.

Exit codes: 0 all checks passed, 1 usage error, 2 verification or
acceptance failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import experiment, explore, gw, oracle, quotient, sample
from .core import MarkedTree, QuotientGraph

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _genus_for(args, n: int) -> int:
    if args.genus is not None:
        return args.genus
    if args.theta is not None:
        return round(args.theta * n)
    raise SystemExit(1)


# -- sample ---------------------------------------------------------------------

def _cmd_sample(args) -> int:
    rng = np.random.default_rng(args.seed)
    g = _genus_for(args, args.n)
    blocks = []
    for _ in range(args.count):
        gq, info = sample.sample_unicellular_graph(args.n, g, rng)
        if args.emit == "graph":
            blocks.append(gq.to_text())
        elif args.emit == "marked-tree":
            blocks.append(info["marked_tree"].to_text())
        else:
            blocks.append(" ".join(str(p) for p in info["lambda"].parts))
    _write(args.out, "\n\n".join(blocks) + "\n")
    return 0


# -- metrics --------------------------------------------------------------------

def _inj_str(val) -> str:
    if val is None:
        return "undef"
    if math.isinf(val):
        return "inf"
    return str(int(val))


def _cmd_metrics(args) -> int:
    with open(args.infile) as fh:
        blocks = [b for b in fh.read().split("\n\n") if b.strip()]
    rng = np.random.default_rng(args.seed)
    reports = []
    for block in blocks:
        gq = QuotientGraph.from_text(block)
        reports.append(quotient.metric_report(gq, rng))
    if args.report == "json":
        out = [{"v": r.v, "n": r.n, "g": r.g,
                "typical_distance": r.typical_distance,
                "diameter": r.diameter, "diameter_exact": r.diameter_exact,
                "injectivity_radius": _inj_str(r.injectivity_radius)}
               for r in reports]
        _write(args.out, json.dumps(out, indent=2) + "\n")
    else:
        lines = ["v,n,g,typical_distance,diameter,injectivity_radius"]
        lines += [f"{r.v},{r.n},{r.g},{r.typical_distance},{r.diameter},"
                  f"{_inj_str(r.injectivity_radius)}" for r in reports]
        _write(args.out, "\n".join(lines) + "\n")
    return 0


# -- explore --------------------------------------------------------------------

def _cmd_explore(args) -> int:
    rng = np.random.default_rng(args.seed)
    n = args.n
    g = round(args.theta * n)
    N = n + 1 - 2 * g
    traces = []
    collisions = 0
    disasters = 0
    steps_taken = []
    rounds_done = []
    for trial in range(args.trials):
        lam, _ = sample.sample_odd_composition(n, N, rng)
        tree = sample.sample_plane_tree(n, rng)
        mt = sample.sample_marking(tree, lam, rng)
        if args.process == "one":
            tr = explore.explore_one(mt, rng)
            steps_taken.append(len(tr.steps) - 1)
            rounds_done.append(len(tr.rounds) - 1)
            traces.append({"trial": trial, "terminal": tr.terminal,
                           "steps": len(tr.steps) - 1,
                           "rounds": len(tr.rounds) - 1,
                           "revealed": len(tr.revealed)})
        else:
            s1, s2, ev = explore.explore_two(mt, rng)
            collisions += ev.termination == "collision"
            disasters += len(ev.disasters) > 0
            steps_taken.append(len(s1.steps) + len(s2.steps) - 2)
            rounds_done.append(len(s1.rounds) + len(s2.rounds) - 2)
            traces.append({"trial": trial, "stage1": s1.terminal,
                           "stage2": s2.terminal,
                           "collision_step": ev.collision_step,
                           "disasters": len(ev.disasters),
                           "revealed": len(s1.revealed) + len(s2.revealed)})
    if args.trace_out:
        _write(args.trace_out, "\n".join(json.dumps(t) for t in traces) + "\n")
    lines = ["metric,value", f"trials,{args.trials}",
             f"mean_steps,{np.mean(steps_taken):.6g}",
             f"mean_rounds,{np.mean(rounds_done):.6g}"]
    if args.process == "two":
        lines += [f"collision_rate,{collisions / args.trials:.6g}",
                  f"disaster_rate,{disasters / args.trials:.6g}"]
    _write(args.summary_out or args.out, "\n".join(lines) + "\n")
    return 0


# -- gw ---------------------------------------------------------------------------

def _parse_spec(text: str) -> gw.OffspringSpec:
    if text.strip() in ("geometric", "geom", "geometric(1/2)"):
        return gw.geometric_half()
    pmf = {}
    for item in text.split(","):
        k, p = item.split(":")
        pmf[int(k)] = float(p)
    return gw.OffspringSpec(pmf=pmf)


def _cmd_gw(args) -> int:
    rng = np.random.default_rng(args.seed)
    spec = _parse_spec(args.spec)
    levels = gw.simulate_gw_many(spec, args.generations, args.trials, rng)
    gamma = args.gamma
    if gamma is None and spec.mean > 1:
        gamma = (1 + spec.mean) / 2
    lines = ["r,mean,p_below_gamma_r,crit_tail_bound"]
    for r in range(args.generations + 1):
        mean = levels[r].mean()
        if gamma is not None and gamma > 1:
            p = float((levels[r] <= gamma ** r).mean())
            ps = f"{p:.6g}"
        else:
            ps = ""
        bound = ""
        if r >= 1:
            k = max(int(math.ceil(gamma ** r)) if gamma else 1, 1)
            bound = f"{gw.critical_geometric_tail_bound(r, k):.6g}"
        lines.append(f"{r},{mean:.6g},{ps},{bound}")
    _write(args.out, "\n".join(lines) + "\n")
    return 0


# -- verify ------------------------------------------------------------------------

def _cmd_verify(args) -> int:
    checks = []

    def check(name, fn):
        try:
            ok = fn()
            checks.append((name, bool(ok), ""))
        except Exception as exc:   # surface the failure in the table
            checks.append((name, False, f"{type(exc).__name__}: {exc}"))

    max_n = args.max_n
    for n in range(1, max_n + 1):
        for g in range(0, n // 2 + 1):
            check(f"bijection n={n} g={g}",
                  lambda n=n, g=g: oracle.count_c_decorated(n, g)
                  == 2 ** (n + 1) * oracle.count_unicellular_maps(n, g)[0])
    for n in range(2, min(max_n, 5) + 1):
        for g in range(0, n // 2 + 1):
            check(f"distribution n={n} g={g}",
                  lambda n=n, g=g: oracle.marked_tree_distribution(n, g)
                  == oracle.uniform_unicellular_graph_distribution(n, g))
    check("forest formula 2e+s<=14",
          lambda: all(oracle.count_forests(s, e) == oracle.forests_by_generation(s, e)
                      for s in range(1, 15) for e in range(0, (14 - s) // 2 + 1)))
    check("root degree bounds",
          lambda: all(oracle.check_degree_bounds(s, e)
                      for s in range(1, 15) for e in range(0, (14 - s) // 2 + 1)))
    check("degree pmf sums to 1",
          lambda: all(sum(oracle.root_degree_pmf(s, e).values()) == 1
                      for s in range(1, 15) for e in range(0, (14 - s) // 2 + 1)))

    width = max(len(name) for name, _, _ in checks)
    failed = 0
    for name, ok, note in checks:
        status = "PASS" if ok else "FAIL"
        failed += not ok
        print(f"{name:<{width}}  {status}  {note}")
    print(f"{len(checks) - failed}/{len(checks)} oracle checks passed")
    if args.emit_counts:
        lines = ["n,g,unicellular,c_decorated"]
        for n in range(1, max_n + 1):
            for g in range(0, n // 2 + 1):
                cu, _ = oracle.count_unicellular_maps(n, g)
                lines.append(f"{n},{g},{cu},{oracle.count_c_decorated(n, g)}")
        _write(args.emit_counts, "\n".join(lines) + "\n")
    return 2 if failed else 0


# -- scaling -----------------------------------------------------------------------

def _cmd_scaling(args) -> int:
    if args.config:
        cfg = experiment.ExperimentConfig.from_json(args.config)
        if args.theta is not None:
            cfg.theta = args.theta
        if args.n_grid:
            cfg.n_grid = args.n_grid
        if args.trials is not None:
            cfg.trials = args.trials
        if args.seed is not None:
            cfg.master_seed = args.seed
        if args.threads is not None:
            cfg.threads = args.threads
    else:
        if args.theta is None or not args.n_grid or args.trials is None:
            print("error: need --config or all of --theta/--n-grid/--trials",
                  file=sys.stderr)
            return 1
        cfg = experiment.ExperimentConfig(
            theta=args.theta, n_grid=args.n_grid, trials=args.trials,
            master_seed=args.seed or 0, genus_zero=args.genus_zero,
            threads=args.threads or 1)
    try:
        rows = experiment.run_scaling_experiment(cfg)
    except experiment.EulerViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    summary = experiment.aggregate(rows)
    base = args.out or "scaling"
    _write(base + "_rows.csv", experiment.rows_to_csv(rows))
    _write(base + "_summary.csv", experiment.summary_to_csv(summary))
    _write(base + ".gp", experiment.gnuplot_script(base + "_summary.csv"))
    fit = experiment.fit_log_scaling([s["n"] for s in summary],
                                     [s["mean_typical"] for s in summary]) \
        if len(summary) >= 3 else None
    if fit:
        print(f"typical-distance fit: slope {fit.slope:.3f}, "
              f"spread {fit.successive_spread:.3%}, stable={fit.stable}")
    print(f"wrote {base}_rows.csv, {base}_summary.csv, {base}.gp")
    return 0


# -- parser ------------------------------------------------------------------------

def _build_parser() -> _Parser:
    p = _Parser(prog="unicell",
                description="random unicellular maps of high genus: samplers, "
                            "metrics, exploration processes and oracles")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("sample", help="sample underlying graphs")
    ps.add_argument("--n", type=int, required=True)
    ps.add_argument("--genus", type=int)
    ps.add_argument("--theta", type=float)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--count", type=int, default=1)
    ps.add_argument("--out", default="-")
    ps.add_argument("--emit", choices=("graph", "marked-tree", "lambda"),
                    default="graph")
    ps.set_defaults(fn=_cmd_sample)

    pm = sub.add_parser("metrics", help="metric report for serialized graphs")
    pm.add_argument("--in", dest="infile", required=True)
    pm.add_argument("--seed", type=int, default=0)
    pm.add_argument("--report", choices=("json", "csv"), default="csv")
    pm.add_argument("--out", default="-")
    pm.set_defaults(fn=_cmd_metrics)

    pe = sub.add_parser("explore", help="run exploration processes")
    pe.add_argument("--n", type=int, required=True)
    pe.add_argument("--theta", type=float, required=True)
    pe.add_argument("--seed", type=int, default=0)
    pe.add_argument("--process", choices=("one", "two"), default="one")
    pe.add_argument("--trials", type=int, default=1)
    pe.add_argument("--trace-out", dest="trace_out")
    pe.add_argument("--summary-out", dest="summary_out")
    pe.add_argument("--out", default="-")
    pe.set_defaults(fn=_cmd_explore)

    pg = sub.add_parser("gw", help="branching-process simulations")
    pg.add_argument("--spec", required=True,
                    help='inline pmf "1:0.95,2:0.05" or "geometric"')
    pg.add_argument("--generations", type=int, default=20)
    pg.add_argument("--trials", type=int, default=10000)
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--gamma", type=float)
    pg.add_argument("--out", default="-")
    pg.set_defaults(fn=_cmd_gw)

    pv = sub.add_parser("verify", help="exhaustive small-case oracle suite")
    pv.add_argument("--max-n", type=int, default=5)
    pv.add_argument("--emit-counts")
    pv.set_defaults(fn=_cmd_verify)

    pc = sub.add_parser("scaling", help="scaling experiment over an n grid")
    pc.add_argument("--config")
    pc.add_argument("--theta", type=float)
    pc.add_argument("--n-grid", dest="n_grid", type=int, nargs="*")
    pc.add_argument("--trials", type=int)
    pc.add_argument("--seed", type=int)
    pc.add_argument("--threads", type=int)
    pc.add_argument("--genus-zero", action="store_true")
    pc.add_argument("--out")
    pc.set_defaults(fn=_cmd_scaling)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except (ValueError, OSError, sample.SampleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
