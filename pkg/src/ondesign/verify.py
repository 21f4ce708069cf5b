"""Runs algorithms, samples HSTs, and evaluates every charging-scheme
guarantee as an executable check.

Per-tree constants (per run, against the matching tree oracle):
  Steiner tree 4, Steiner forest 4, Steiner network 16;
  SROB cost 16 and share 8; MROB cost 32 and share 16;
  PCST cost 16 and sum(rho) 8; CFL buy+rent 48 via share 16 and the
  3x per-run bound.  Shares are sums of 2^(j+1) over rent terminals
  (rho for PCST).

Trees are sampled over the distinct positions of the arrived terminals
(coincident request points collapse onto a representative; oracles see their
request multiplicities) and extended with singleton levels down to -2 for the
rent-or-buy style checks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

from .errors import OndesignError
from .cfl import (
    cfl_buy_rent_cost,
    check_cfl_cost_split,
    check_cfl_invariants,
    run_cfl,
)
from .hst import extend_singleton_levels, sample_frt, tree_distance, validate_hst
from .metric import MetricSpace, RequestSequence, check_feasible, solution_cost
from .prize import check_pcst_invariants, positive_share_rows, run_pcst, total_share
from .rentorbuy import (
    check_cut_capacity,
    check_greedy_replay,
    check_witness_disjointness,
    cost_share,
    run_mrob,
    run_srob,
)
from .steiner import (
    check_bc_edge_property,
    check_class_separation,
    check_metagraph_acyclic,
    check_sn_decomposition,
    covers_from_tree,
    run_bc_sf,
    run_greedy_st,
    run_sn,
)
from .tree_opt import (
    opt_tree_pcst,
    opt_tree_rob_multi,
    opt_tree_rob_single,
    opt_tree_steiner_forest,
    opt_tree_steiner_network,
    opt_tree_steiner_tree,
    pcst_cut_lower_bound,
)

_RTOL = 1e-9

PER_TREE_CONSTANTS = {
    "SteinerTree": {"cost_vs_tree": 4.0},
    "SteinerForest": {"cost_vs_tree": 4.0},
    "SteinerNetwork": {"cost_vs_tree": 16.0},
    "SROB": {"cost_vs_tree": 16.0, "share_vs_tree": 8.0},
    "MROB": {"cost_vs_tree": 32.0, "share_vs_tree": 16.0},
    "PCST": {"cost_vs_tree": 16.0, "share_vs_tree": 8.0},
    "CFL": {"buyrent_vs_tree": 48.0, "share_vs_tree": 16.0},
}


def run_problem(m: MetricSpace, seq: RequestSequence):
    p = seq.problem
    if p == "SteinerTree":
        return run_greedy_st(m, seq.root, seq.requests)
    if p == "SteinerForest":
        return run_bc_sf(m, seq.requests)
    if p == "SteinerNetwork":
        return run_sn(m, seq.requests)
    if p == "SROB":
        return run_srob(m, seq.root, seq.requests, seq.M)
    if p == "MROB":
        return run_mrob(m, seq.requests, seq.M)
    if p == "CFL":
        return run_cfl(m, list(seq.facilities), seq.root, seq.requests, seq.M)
    if p == "PCST":
        return run_pcst(m, seq.root, seq.requests)
    raise ValueError(f"no algorithm for problem {p!r}")


def position_reps(m: MetricSpace, points):
    """Collapse coincident positions: point -> lowest-index representative."""
    pts = sorted(set(points))
    rep = {}
    for p in pts:
        for q in pts:
            if m.dist(p, q) == 0.0:
                rep[p] = q
                break
    return rep


def tree_points(m: MetricSpace, seq: RequestSequence):
    """(representatives, rep map, per-rep request multiplicities)."""
    pts = []
    for idx in range(len(seq.requests)):
        pts.extend(seq.request_points(idx))
    base = list(pts)
    if seq.root is not None:
        base.append(seq.root)
    rep = position_reps(m, base)
    weights = {}
    for p in pts:
        weights[rep[p]] = weights.get(rep[p], 0) + 1
    return sorted(set(rep.values())), rep, weights


def _bounded(name, lhs, factor, rhs, violations, ratios):
    ratios[name] = max(ratios.get(name, 0.0), 0.0 if rhs == 0 else lhs / rhs)
    if lhs > factor * rhs * (1 + _RTOL) + 1e-12:
        violations.append(f"{name}: {lhs:g} > {factor:g} * {rhs:g}")


def check_tree_bounds(m, seq, trace, tree_seed):
    """Sample one HST (and its extension) and run every per-tree check.

    Returns (violations, flags, ratios) for this tree.
    """
    problem = seq.problem
    reps, rep, weights = tree_points(m, seq)
    out, flags, ratios = [], [], {}
    if not reps:
        return out, flags, ratios
    t = sample_frt(m, reps, tree_seed)
    bad = validate_hst(t, m)
    if bad:
        return [f"invalid tree: {bad[0]}"] + bad[1:], flags, ratios
    rfun = rep.get

    if problem == "SteinerTree":
        _bounded("cost_vs_tree", trace.total_cost(), 4.0, opt_tree_steiner_tree(t), out, ratios)
    elif problem in ("SteinerForest", "SteinerNetwork"):
        pairs = [(rfun(s), rfun(u)) for s, u in (r.points for r in trace.records)]
        if problem == "SteinerForest":
            opt = opt_tree_steiner_forest(t, pairs)
            _bounded("cost_vs_tree", trace.total_cost(), 4.0, opt, out, ratios)
        else:
            reqs = [seq.requests[r.idx][2] for r in trace.records]
            opt = opt_tree_steiner_network(t, pairs, reqs)
            _bounded("cost_vs_tree", trace.total_cost(), 16.0, opt, out, ratios)
        covers = covers_from_tree(t, trace, rfun)
        out += check_metagraph_acyclic(trace, covers, m, rfun)
    elif problem == "SROB":
        t_ext = extend_singleton_levels(t, -2)
        opt = opt_tree_rob_single(t_ext, rfun(seq.root), seq.M, weights)
        share = cost_share(trace)
        _bounded("share_vs_tree", share, 8.0, opt, out, ratios)
        _bounded("cost_vs_tree", trace.total_cost(), 16.0, opt, out, ratios)
        out += check_cut_capacity(trace, t_ext, root=seq.root, point_rep=rfun)
    elif problem == "MROB":
        t_ext = extend_singleton_levels(t, -2)
        pairs = [(rfun(s), rfun(u)) for s, u in (r.points for r in trace.records)]
        opt = opt_tree_rob_multi(t_ext, pairs, seq.M)
        share = cost_share(trace)
        _bounded("share_vs_tree", share, 16.0, opt, out, ratios)
        _bounded("cost_vs_tree", trace.total_cost(), 32.0, opt, out, ratios)
        out += check_cut_capacity(trace, t_ext, point_rep=rfun)
        covers = covers_from_tree(t_ext, trace, rfun)
        out += check_metagraph_acyclic(trace, covers, m, rfun)
    elif problem == "PCST":
        t_ext = extend_singleton_levels(t, -2)
        tree_viol, tree_flags = check_pcst_invariants(trace, m, t_ext, rfun)
        out += tree_viol
        flags += tree_flags
        rows = {
            c: [(rfun(p), rho, pi) for p, rho, pi in lst]
            for c, lst in positive_share_rows(trace).items()
        }
        share = total_share(trace)
        lb = pcst_cut_lower_bound(t_ext, rfun(seq.root), rows)
        opt = opt_tree_pcst(
            t_ext,
            rfun(seq.root),
            [(rfun(p), pi) for p, pi in seq.requests],
        )
        _bounded("share_vs_cut_lb", share, 8.0, lb, out, ratios)
        _bounded("share_vs_tree", share, 8.0, opt, out, ratios)
        _bounded("cost_vs_tree", trace.total_cost(), 16.0, opt, out, ratios)
    elif problem == "CFL":
        t_ext = extend_singleton_levels(t, -2)
        opt = opt_tree_rob_single(t_ext, rfun(seq.root), seq.M, weights)
        share = sum(
            math.ldexp(1.0, rec.klass + 1)
            for rec in trace.records
            if rec.decision == "rent"
        )
        buyrent = cfl_buy_rent_cost(trace, m)
        _bounded("share_vs_tree", share, 16.0, opt, out, ratios)
        _bounded("buyrent_vs_tree", buyrent, 48.0, opt, out, ratios)
        out += check_cut_capacity(trace, t_ext, root=seq.root, point_rep=rfun)
    return out, flags, ratios


def per_run_checks(m, seq, sol, trace):
    """Each entry: (check name, list of violations)."""
    checks = []
    problem = seq.problem
    breakdown = solution_cost(sol, seq, m)

    def near(a, b):
        return abs(a - b) <= _RTOL * max(1.0, abs(a), abs(b))

    if problem == "CFL":
        costs = dict(seq.facilities)
        derived = (
            trace.total_cost()
            + (seq.M or 0.0) * sol.bought_cost(m)
            + sum(costs[x] for x in sol.opened)
        )
    else:
        derived = trace.total_cost()
    checks.append(
        ("cost_consistency", [] if near(breakdown.total, derived) else
         [f"solution cost {breakdown.total:g} != trace cost {derived:g}"])
    )
    feas = check_feasible(sol, seq, m)
    prefix_bad = [
        f"request {rec.idx} infeasible at arrival" for rec in trace.records if not rec.feasible_now
    ] + [f"request {i} infeasible in final state" for i, ok in enumerate(feas) if not ok]
    checks.append(("online_feasibility", prefix_bad))

    if problem == "SteinerTree":
        checks.append(("class_separation", check_class_separation(trace, m)))
        lhs = trace.total_cost()
        rhs = sum(math.ldexp(1.0, r.klass + 1) for r in trace.records if r.klass is not None)
        checks.append(("share_identity", [] if lhs <= rhs * (1 + _RTOL) else
                       [f"sum a_i = {lhs:g} > share {rhs:g}"]))
    elif problem in ("SteinerForest", "SteinerNetwork"):
        checks.append(("bc_edge_property", check_bc_edge_property(trace, m)))
        if problem == "SteinerNetwork":
            checks.append(("sn_decomposition", check_sn_decomposition(trace, sol)))
    elif problem in ("SROB", "MROB"):
        share = cost_share(trace)
        lhs = trace.total_cost()
        checks.append(("cost_vs_share", [] if lhs <= 2 * share * (1 + _RTOL) + 1e-12 else
                       [f"cost {lhs:g} > 2 * share {share:g}"]))
        checks.append(("witness_disjointness", check_witness_disjointness(trace, m)))
        if problem == "SROB":
            checks.append(("class_separation", check_class_separation(trace, m)))
            checks.append(("greedy_replay", check_greedy_replay(trace, m, sol)))
        else:
            checks.append(("bc_edge_property", check_bc_edge_property(trace, m)))
    elif problem == "PCST":
        viol, _ = check_pcst_invariants(trace, m)
        checks.append(("pcst_run_invariants", viol))
        checks.append(("greedy_replay", check_greedy_replay(trace, m, sol)))
    elif problem == "CFL":
        checks.append(("cfl_invariants", check_cfl_invariants(trace, m)))
        checks.append(("cfl_cost_split", check_cfl_cost_split(trace, m)))
        share = sum(
            math.ldexp(1.0, rec.klass + 1)
            for rec in trace.records
            if rec.decision == "rent"
        )
        buyrent = cfl_buy_rent_cost(trace, m)
        checks.append(("buyrent_vs_share", [] if buyrent <= 3 * share * (1 + _RTOL) + 1e-12 else
                       [f"M c(H) + rents = {buyrent:g} > 3 * share {share:g}"]))
    return checks


def verify_run(m, seq, trials=20, seed=0, jobs=1, forged_trace=None):
    """Full verification of one instance: run, per-run checks, per-tree checks.

    Returns a deterministic report dict; `violations` empty iff everything
    passed.  A forged trace replaces the algorithm's own run (solution-level
    checks are skipped for it).
    """
    if forged_trace is None:
        sol, trace = run_problem(m, seq)
        checks = per_run_checks(m, seq, sol, trace)
        cost = solution_cost(sol, seq, m)
        cost_doc = {
            "buy": cost.buy,
            "rent": cost.rent,
            "penalty": cost.penalty,
            "opening": cost.opening,
            "total": cost.total,
        }
    else:
        trace = forged_trace
        checks = [("class_separation", check_class_separation(trace, m))]
        if trace.problem in ("SROB", "MROB"):
            checks.append(("witness_disjointness", check_witness_disjointness(trace, m)))
        if trace.problem == "PCST":
            viol, _ = check_pcst_invariants(trace, m)
            checks.append(("pcst_run_invariants", viol))
        if trace.problem == "CFL":
            checks.append(("cfl_invariants", check_cfl_invariants(trace, m)))
        cost_doc = {"total": trace.total_cost()}

    def one_trial(trial):
        try:
            return check_tree_bounds(m, seq, trace, _tree_seed(seed, trial))
        except (OndesignError, ValueError) as exc:
            # malformed (e.g. forged) traces surface as violations, not crashes
            return [f"check error: {exc}"], [], {}

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            trial_results = list(pool.map(one_trial, range(trials)))
    else:
        trial_results = [one_trial(tr) for tr in range(trials)]

    ratios = {}
    flags = []
    tree_violations = []
    witness_seed = None
    for trial, (viol, fl, rat) in enumerate(trial_results):
        for name, value in rat.items():
            ratios[name] = max(ratios.get(name, 0.0), value)
        flags += [f"trial {trial}: {f}" for f in fl]
        if viol and witness_seed is None:
            witness_seed = _tree_seed(seed, trial)
        tree_violations += [f"trial {trial}: {v}" for v in viol]

    report = {
        "problem": seq.problem,
        "k": seq.k,
        "n": m.n,
        "seed": seed,
        "trials": trials,
        "constants": PER_TREE_CONSTANTS[seq.problem],
        "cost": cost_doc,
        "checks": {
            name: {"fail": len(viol), "violations": viol[:10]} for name, viol in checks
        },
        "tree_checks": {"fail": len(tree_violations), "violations": tree_violations[:10]},
        "max_ratios": {k: round(v, 12) for k, v in sorted(ratios.items())},
        "flags": flags[:20],
        "witness_seed": witness_seed,
    }
    report["violations"] = sum(c["fail"] for c in report["checks"].values()) + len(tree_violations)
    return report


def _tree_seed(seed, trial):
    return (int(seed) * 0x9E3779B97F4A7C15 + trial * 0xBF58476D1CE4E5B9 + 1) % (2**63)


def embed_report(m, terminals, trials=200, seed=0, jobs=1):
    """Sample `trials` HSTs; report validity rate and per-pair mean stretch."""
    reps = sorted(set(terminals))

    def one(trial):
        t = sample_frt(m, reps, _tree_seed(seed, trial))
        bad = validate_hst(t, m)
        stretch = {}
        for i, u in enumerate(reps):
            for v in reps[i + 1:]:
                d = m.dist(u, v)
                if d > 0:
                    stretch[(u, v)] = tree_distance(t, u, v) / d
        return bad, stretch

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, range(trials)))
    else:
        results = [one(tr) for tr in range(trials)]

    invalid = sum(1 for bad, _ in results if bad)
    sums = {}
    for _, stretch in results:
        for key, val in stretch.items():
            sums[key] = sums.get(key, 0.0) + val
    means = {key: val / trials for key, val in sums.items()}
    return {
        "k": len(reps),
        "trials": trials,
        "seed": seed,
        "invalid_trees": invalid,
        "valid_rate": 1.0 - (invalid / trials if trials else 0.0),
        "max_mean_stretch": max(means.values()) if means else 0.0,
        "mean_stretch": (sum(means.values()) / len(means)) if means else 0.0,
        "pairs": len(means),
    }


def exact_optimum(m, seq):
    """Dispatch to the matching offline oracle (raises TooLarge beyond caps)."""
    from . import exact

    p = seq.problem
    if p == "SteinerTree":
        return exact.dreyfus_wagner_st(m, set(seq.requests) | {seq.root})
    if p == "SteinerForest":
        return exact.exact_sf(m, seq.requests)
    if p == "SteinerNetwork":
        pairs = [(s, t) for s, t, _ in seq.requests]
        reqs = [r for _, _, r in seq.requests]
        return exact.exact_sn_tiny(m, pairs, reqs)
    if p == "SROB":
        return exact.exact_srob(m, seq.root, seq.requests, seq.M)
    if p == "MROB":
        return exact.exact_mrob(m, seq.requests, seq.M)
    if p == "PCST":
        return exact.exact_pcst(m, seq.root, seq.requests)
    if p == "CFL":
        return exact.exact_cfl(m, list(seq.facilities), seq.requests, seq.M, seq.root)
    raise ValueError(p)
