"""Single-source and multi-source rent-or-buy.

Both algorithms rent a direct edge unless enough same-class rent terminals sit
nearby to witness that buying pays for itself.  Witness counts compare against
the real parameter M literally (|W| >= M), so M = 0 means always buy.

Single-source: the nearest buy terminal z (Z starts at the root) defines
a_i = d(i, z) and class j; witnesses are class-j rent terminals within
2^(j-1).  Buys add (i, z) to H, so H is exactly the greedy Steiner tree over
the buy subsequence.

Multi-source: the pair distance defines the class; witnesses live within
2^(j-2) of an endpoint; a pair whose endpoints both have M witnesses is passed
to an embedded Berman-Coulston forest instance, whose edges are bought.
"""

from __future__ import annotations

import math

from .hst import Hst, check_levels, cuts_at_level
from .metric import (
    MetricSpace,
    MultiGraphSolution,
    RequestRecord,
    RunTrace,
    floor_log2,
    pow2,
)
from .steiner import BcForest, _nearest


def run_srob(m: MetricSpace, root: int, terminals, M) -> tuple:
    sol = MultiGraphSolution()
    trace = RunTrace(problem="SROB", root=root, M=M)
    buys = [root]                 # Z, arrival order, root first
    rents = {}                    # class j -> [(request idx, point)]
    for idx, i in enumerate(terminals):
        z, a = _nearest(m, i, buys)
        if a == 0.0:
            if i != z:
                sol.buy(i, z)
            trace.add(RequestRecord(idx=idx, decision="auto", points=(i,), a=0.0, attach=z))
            continue
        j = floor_log2(a)
        radius = pow2(j - 1)
        witnesses = tuple(ridx for ridx, p in rents.get(j, ()) if m.dist(i, p) < radius)
        if len(witnesses) >= M:
            sol.buy(i, z)
            buys.append(i)
            decision, cost = "buy", M * a
        else:
            sol.rent(idx, i, z)
            rents.setdefault(j, []).append((idx, i))
            decision, cost = "rent", a
        trace.add(
            RequestRecord(
                idx=idx,
                decision=decision,
                points=(i,),
                a=a,
                klass=j,
                cost=cost,
                witnesses=witnesses,
                attach=z,
                edges=((i, z, None),) if decision == "buy" else (),
            )
        )
    return sol, trace


def run_mrob(m: MetricSpace, pairs, M) -> tuple:
    sol = MultiGraphSolution()
    trace = RunTrace(problem="MROB", M=M)
    bc = BcForest(m)
    rents = {}  # class j -> [(request idx, point)]
    for idx, (s, t) in enumerate(pairs):
        d = m.dist(s, t)
        if d == 0.0:
            trace.add(RequestRecord(idx=idx, decision="auto", points=(s, t), a=0.0))
            continue
        j = floor_log2(d)
        radius = pow2(j - 2)
        pool = rents.get(j, ())
        ws = tuple(ridx for ridx, p in pool if m.dist(s, p) < radius)
        wt = tuple(ridx for ridx, p in pool if m.dist(t, p) < radius)
        if len(ws) < M or len(wt) < M:
            endpoint = "s" if len(ws) < M else "t"
            rents.setdefault(j, []).append((idx, s if endpoint == "s" else t))
            sol.rent(idx, s, t)
            trace.add(
                RequestRecord(
                    idx=idx,
                    decision="rent",
                    points=(s, t),
                    a=d,
                    klass=j,
                    cost=d,
                    witnesses=ws,
                    witnesses_t=wt,
                    rent_endpoint=endpoint,
                    feasible_now=True,
                )
            )
            continue
        _, added = bc.add_pair(s, t)
        cost = 0.0
        for u, v, _ in added:
            sol.buy(u, v)
            cost += M * m.dist(u, v)
        trace.add(
            RequestRecord(
                idx=idx,
                decision="buy",
                points=(s, t),
                a=d,
                klass=j,
                cost=cost,
                witnesses=ws,
                witnesses_t=wt,
                edges=tuple(e for e in added if e[2] is not None),
                feasible_now=bc.uf.connected(s, t),
            )
        )
    trace.summary = {"bc": bc.summary()}
    return sol, trace


# ---------------------------------------------------------------------------
# Guarantee checks
# ---------------------------------------------------------------------------

def cost_share(trace: RunTrace) -> float:
    """Total rent-or-buy cost share: sum over classes of 2^(j+1) |R_j|."""
    total = 0.0
    for rec in trace.records:
        if rec.decision == "rent" and rec.klass is not None:
            total += pow2(rec.klass + 1)
    return total


def check_witness_disjointness(trace: RunTrace, m: MetricSpace):
    """Buy terminals' recorded witness sets must be disjoint subsets of R_j.

    SROB: class-j buy terminals are pairwise >= 2^j apart (greedy separation)
    and their witness sets are disjoint with |W| >= M.  MROB: per class j, the
    greedy maximal 2^(j-1)-separated subset Z'_j of the class-j buy endpoints
    (arrival order, s before t) must have disjoint witness sets, each a size->=M
    subset of R_j.
    """
    out = []
    M = trace.M if trace.M is not None else 0.0
    rent_class = {
        rec.idx: rec.klass for rec in trace.records if rec.decision == "rent"
    }
    if trace.problem == "SROB":
        groups = {}
        for rec in trace.records:
            if rec.decision == "buy":
                groups.setdefault(rec.klass, []).append(
                    (rec.idx, rec.points[0], set(rec.witnesses))
                )
        for j, rows in sorted(groups.items()):
            out += _witness_rows(rows, j, pow2(j), M, rent_class, m)
    elif trace.problem == "MROB":
        groups = {}
        for rec in trace.records:
            if rec.decision == "buy":
                s, t = rec.points
                groups.setdefault(rec.klass, []).append((rec.idx, s, set(rec.witnesses)))
                groups.setdefault(rec.klass, []).append((rec.idx, t, set(rec.witnesses_t)))
        for j, rows in sorted(groups.items()):
            sep = pow2(j - 1)
            kept = []
            for row in rows:
                if all(m.dist(row[1], prev[1]) >= sep for prev in kept):
                    kept.append(row)
            out += _witness_rows(kept, j, None, M, rent_class, m)
    return out


def _witness_rows(rows, j, pairwise_bound, M, rent_class, m):
    out = []
    for idx, p, wit in rows:
        if len(wit) < M:
            out.append(f"class {j}: buy request {idx} has |W|={len(wit)} < M={M}")
        for w in wit:
            if rent_class.get(w) != j:
                out.append(f"class {j}: witness {w} of request {idx} is not a class-{j} rent")
    for i, (idx_a, pa, wa) in enumerate(rows):
        for idx_b, pb, wb in rows[i + 1:]:
            if pairwise_bound is not None and m.dist(pa, pb) < pairwise_bound:
                out.append(f"class {j}: buys {idx_a},{idx_b} at distance {m.dist(pa, pb):g} < {pairwise_bound:g}")
            shared = wa & wb
            if shared:
                out.append(f"class {j}: buys {idx_a},{idx_b} share witnesses {sorted(shared)}")
    return out


def check_cut_capacity(trace: RunTrace, t: Hst, root=None, point_rep=None):
    """Per-level rent caps on an extended tree's cuts.

    For a level-j cut C: SROB/CFL rents of class j+1 / j+2 containing the root
    must be absent, otherwise at most ceil(M) rent occurrences and at most |C|
    distinct rent points; MROB rents of class j+2 are capped by ceil(M) and by
    the number of separated pairs |D(C)|.  Occurrence counts handle coincident
    repeats; cuts at conventional level 0 (terminal singletons) participate.
    """
    rep = point_rep or (lambda p: p)
    M = trace.M if trace.M is not None else 0.0
    cap_m = math.ceil(M)
    shift = 1 if trace.problem == "SROB" else 2
    rents = {}
    for rec in trace.records:
        if rec.decision != "rent" or rec.klass is None:
            continue
        if trace.problem == "MROB":
            p = rec.points[0] if rec.rent_endpoint == "s" else rec.points[1]
        else:
            p = rec.points[0]
        rents.setdefault(rec.klass, []).append((rec.idx, rep(p)))
    pairs = None
    if trace.problem == "MROB":
        pairs = [
            (rep(rec.points[0]), rep(rec.points[1]))
            for rec in trace.records
            if rec.klass is not None
        ]
    out = []
    root_rep = rep(root) if root is not None else None
    for j in check_levels(t):
        rows = rents.get(j + shift)
        if not rows:
            continue
        for cut in cuts_at_level(t, j):
            inside = [(ridx, p) for ridx, p in rows if p in cut]
            if not inside:
                continue
            if root_rep is not None and root_rep in cut:
                out.append(
                    f"level {j}: cut with root holds class-{j + shift} rents {sorted(r for r, _ in inside)}"
                )
                continue
            if len(inside) > cap_m:
                out.append(f"level {j}: {len(inside)} class-{j + shift} rent occurrences > ceil(M)={cap_m}")
            if pairs is None:
                if len({p for _, p in inside}) > len(cut):
                    out.append(f"level {j}: more rent points than |C|={len(cut)}")
            else:
                crossing = sum(1 for s, t_ in pairs if (s in cut) != (t_ in cut))
                if len(inside) > crossing:
                    out.append(f"level {j}: {len(inside)} rents > |D(C)|={crossing}")
    return out


def check_greedy_replay(trace: RunTrace, m: MetricSpace, sol: MultiGraphSolution):
    """H must equal the greedy Steiner tree replayed on the buy subsequence.

    Zero-length edges (coincident auto-connects) are excluded on both sides;
    they carry no cost and their attachment point is representation detail.
    """
    from .steiner import run_greedy_st

    if trace.problem not in ("SROB", "PCST"):
        return []
    buy_points = [rec.points[0] for rec in trace.records if rec.decision == "buy"]
    replay_sol, _ = run_greedy_st(m, trace.root, buy_points)

    def positive(bought):
        return {e: c for e, c in bought.items() if m.dist(*e) > 0}

    if positive(replay_sol.bought) != positive(sol.bought):
        return [
            f"bought subgraph {sorted(positive(sol.bought))} != greedy replay "
            f"{sorted(positive(replay_sol.bought))}"
        ]
    return []
