"""Command-line harness: gen | run | verify | ratio | embed.

Every command is a deterministic function of its inputs and --seed; reports
carry no timestamps so repeated runs are byte-identical (also under --jobs).

Exit codes: 0 ok; 2 schema/usage error; 3 infeasible run; 4 bound or embedding
violation; 5 offline-oracle cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from .errors import OndesignError, SchemaError, TooLarge
from .generators import gen_diamond_lb, gen_euclidean, gen_graph_metric, gen_requests
from .metric import (
    RunTrace,
    check_feasible,
    instance_to_dict,
    load_instance,
    solution_cost,
)
from .verify import embed_report, exact_optimum, run_problem, tree_points, verify_run


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _json(doc):
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def cmd_gen(args) -> int:
    if args.family == "euclidean":
        m, pts = gen_euclidean(args.n, seed=args.seed)
        seq = gen_requests(
            args.problem, m, args.count, args.seed,
            {"M": args.M, "R_max": args.rmax, "n_facilities": args.facilities},
        )
        doc = instance_to_dict(m, seq)
    elif args.family == "graph":
        m = gen_graph_metric(args.n, density=args.density, seed=args.seed)
        seq = gen_requests(
            args.problem, m, args.count, args.seed,
            {"M": args.M, "R_max": args.rmax, "n_facilities": args.facilities},
        )
        doc = instance_to_dict(m, seq)
    else:
        m, seq, _ = gen_diamond_lb(args.depth)
        doc = instance_to_dict(m, seq)
    _write(args.out, _json(doc))
    return 0


def cmd_run(args) -> int:
    try:
        m, seq = load_instance(args.instance)
    except (OndesignError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.algo != seq.problem:
        print(f"error: algo {args.algo} does not match instance problem {seq.problem}", file=sys.stderr)
        return 2
    sol, trace = run_problem(m, seq)
    cost = solution_cost(sol, seq, m)
    feas = check_feasible(sol, seq, m)
    prefix_ok = all(rec.feasible_now for rec in trace.records) and all(feas)
    trace_path = None
    if args.out not in (None, "-"):
        trace_path = args.out + ".trace.jsonl"
        trace.to_jsonl(trace_path)
    doc = {
        "problem": seq.problem,
        "cost": {
            "buy": cost.buy,
            "rent": cost.rent,
            "penalty": cost.penalty,
            "opening": cost.opening,
            "total": cost.total,
        },
        "feasible_per_request": feas,
        "feasible": prefix_ok,
        "trace": trace_path,
        "seed": args.seed,
    }
    _write(args.out, _json(doc))
    return 0 if prefix_ok else 3


def cmd_verify(args) -> int:
    try:
        m, seq = load_instance(args.instance)
    except (OndesignError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.algo is not None and args.algo != seq.problem:
        print(f"error: algo {args.algo} does not match instance problem {seq.problem}", file=sys.stderr)
        return 2
    forged = None
    if args.trace:
        forged = RunTrace.from_jsonl(args.trace, problem=seq.problem, root=seq.root, M=seq.M)
    report = verify_run(m, seq, trials=args.trials, seed=args.seed, jobs=args.jobs, forged_trace=forged)
    _write(args.out, _json(report))
    return 4 if report["violations"] else 0


def _fit_log_constant(rows):
    num = sum(r["ratio"] * math.log2(r["k"]) for r in rows if r["k"] > 1)
    den = sum(math.log2(r["k"]) ** 2 for r in rows if r["k"] > 1)
    return num / den if den else 0.0


def cmd_ratio(args) -> int:
    rows = []
    try:
        if args.family == "diamond":
            for depth in args.sizes:
                m, seq, info = gen_diamond_lb(depth)
                sol, trace = run_problem(m, seq)
                cost = solution_cost(sol, seq, m).total
                rows.append(
                    {
                        "problem": "SteinerTree",
                        "k": info["k"],
                        "n": m.n,
                        "M": "",
                        "alg_cost": cost,
                        "opt_cost": info["opt"],
                        "ratio": cost / info["opt"],
                        "seed": depth,
                    }
                )
        else:
            for k in args.sizes:
                for trial in range(args.trials):
                    seed = args.seed * 100003 + k * 1009 + trial
                    count = k if args.problem not in ("SteinerForest", "SteinerNetwork", "MROB") else max(1, k // 2)
                    n = max(k + 1, args.n)
                    m, _ = gen_euclidean(n, seed=seed)
                    seq = gen_requests(
                        args.problem, m, count, seed,
                        {"M": args.M, "R_max": args.rmax, "n_facilities": args.facilities},
                    )
                    sol, trace = run_problem(m, seq)
                    cost = solution_cost(sol, seq, m).total
                    opt = exact_optimum(m, seq)
                    rows.append(
                        {
                            "problem": args.problem,
                            "k": seq.k,
                            "n": m.n,
                            "M": seq.M if seq.M is not None else "",
                            "alg_cost": cost,
                            "opt_cost": opt,
                            "ratio": cost / opt if opt > 0 else (0.0 if cost <= 1e-12 else math.inf),
                            "seed": seed,
                        }
                    )
    except TooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["problem", "k", "n", "M", "alg_cost", "opt_cost", "ratio", "seed"])
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    per_size = {}
    for row in rows:
        per_size[row["k"]] = max(per_size.get(row["k"], 0.0), row["ratio"])
    summary = {
        "per_size_max": {str(k): v for k, v in sorted(per_size.items())},
        "fitted_c": _fit_log_constant(rows),
    }
    buf.write("# summary " + json.dumps(summary, sort_keys=True) + "\n")
    _write(args.out, buf.getvalue())
    return 0


def cmd_embed(args) -> int:
    try:
        m, seq = load_instance(args.instance)
    except (OndesignError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    reps, _, _ = tree_points(m, seq)
    if not reps:
        reps = list(range(m.n))
    report = embed_report(m, reps, trials=args.trials, seed=args.seed, jobs=args.jobs)
    _write(args.out, _json(report))
    return 4 if report["invalid_trees"] else 0


def build_parser():
    ap = argparse.ArgumentParser(prog="ondesign", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None)
        p.add_argument("--trials", type=int, default=20)
        p.add_argument("--jobs", type=int, default=1)

    g = sub.add_parser("gen", help="generate an instance JSON")
    common(g)
    g.add_argument("--family", choices=["euclidean", "graph", "diamond"], default="euclidean")
    g.add_argument("--problem", default="SteinerTree")
    g.add_argument("--n", type=int, default=16)
    g.add_argument("--count", type=int, default=8)
    g.add_argument("--density", type=float, default=0.3)
    g.add_argument("--depth", type=int, default=3)
    g.add_argument("--M", type=float, default=2.0)
    g.add_argument("--rmax", type=int, default=8)
    g.add_argument("--facilities", type=int, default=4)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run an algorithm on an instance")
    common(r)
    r.add_argument("instance")
    r.add_argument("--algo", required=True)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="verify every charging bound on sampled HSTs")
    common(v)
    v.add_argument("instance")
    v.add_argument("--algo", default=None)
    v.add_argument("--trace", default=None, help="replay a (possibly forged) trace file")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("ratio", help="empirical competitive ratios vs exact optima")
    common(c)
    c.add_argument("--family", choices=["euclidean", "diamond"], default="euclidean")
    c.add_argument("--problem", default="SteinerTree")
    c.add_argument("--sizes", type=lambda s: [int(x) for x in s.split(",")], default=[4, 6, 8, 10])
    c.add_argument("--n", type=int, default=0)
    c.add_argument("--M", type=float, default=2.0)
    c.add_argument("--rmax", type=int, default=3)
    c.add_argument("--facilities", type=int, default=4)
    c.set_defaults(func=cmd_ratio)

    e = sub.add_parser("embed", help="HST sampling distortion report")
    common(e)
    e.add_argument("instance")
    e.set_defaults(func=cmd_embed)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
