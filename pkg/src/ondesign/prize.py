"""Online prize-collecting Steiner tree with cost-share bookkeeping.

Each arriving terminal i gets a_i = distance to the nearest buy terminal
(Z starts at the root), class j = floor(log2 a_i), and joins X_j.  Its cost
share rises until the class-j shares within radius 2^(j-1) of i (i included)
reach 2^(j+1), or until it hits pi_i; the closed form is
rho_i = min(pi_i, max(0, 2^(j+1) - sum of nearby shares)).  Reaching the
threshold buys (i, z); falling short pays the penalty.  The bought subgraph is
the greedy Steiner tree over the buy subsequence.
"""

from __future__ import annotations

from .hst import Hst, check_levels, cuts_at_level
from .metric import (
    MetricSpace,
    MultiGraphSolution,
    RequestRecord,
    RunTrace,
    floor_log2,
    pow2,
)
from .steiner import _nearest

_RTOL = 1e-9


def run_pcst(m: MetricSpace, root: int, requests) -> tuple:
    """`requests` is a sequence of (terminal point, penalty >= 0)."""
    sol = MultiGraphSolution()
    trace = RunTrace(problem="PCST", root=root)
    buys = [root]
    classes = {}  # class j -> [(request idx, point, rho)]
    for idx, (i, pi) in enumerate(requests):
        if pi < 0:
            raise ValueError(f"request {idx}: penalty {pi} < 0")
        z, a = _nearest(m, i, buys)
        if a == 0.0:
            if i != z:
                sol.buy(i, z)
            trace.add(
                RequestRecord(idx=idx, decision="auto", points=(i,), a=0.0, attach=z, pi=pi, rho=0.0)
            )
            continue
        j = floor_log2(a)
        radius = pow2(j - 1)
        pool = classes.setdefault(j, [])
        near = [(ridx, p, rho) for ridx, p, rho in pool if m.dist(i, p) < radius]
        have = sum(rho for _, _, rho in near)
        deficit = pow2(j + 1) - have
        if deficit <= 0:
            rho = 0.0
            buying = True
        elif pi >= deficit:
            rho = deficit
            buying = True
        else:
            rho = pi
            buying = False
        pool.append((idx, i, rho))
        witnesses = tuple(ridx for ridx, _, _ in near) + (idx,)
        if buying:
            sol.buy(i, z)
            buys.append(i)
            trace.add(
                RequestRecord(
                    idx=idx,
                    decision="buy",
                    points=(i,),
                    a=a,
                    klass=j,
                    cost=a,
                    witnesses=witnesses,
                    attach=z,
                    rho=rho,
                    pi=pi,
                    edges=((i, z, None),),
                )
            )
        else:
            sol.penalties_paid.add(idx)
            trace.add(
                RequestRecord(
                    idx=idx,
                    decision="penalty",
                    points=(i,),
                    a=a,
                    klass=j,
                    cost=pi,
                    witnesses=witnesses,
                    attach=z,
                    rho=rho,
                    pi=pi,
                )
            )
    return sol, trace


def total_share(trace: RunTrace) -> float:
    return sum(rec.rho or 0.0 for rec in trace.records)


def positive_share_rows(trace: RunTrace) -> dict:
    """Class c -> [(point, rho, pi)] over terminals with rho > 0."""
    rows = {}
    for rec in trace.records:
        if rec.klass is not None and (rec.rho or 0.0) > 0:
            rows.setdefault(rec.klass, []).append((rec.points[0], rec.rho, rec.pi))
    return rows


def check_pcst_invariants(trace: RunTrace, m: MetricSpace, t_ext: Hst = None, point_rep=None):
    """Returns (violations, flags).

    Violations: total cost > 2 * sum(rho); same-class buys closer than 2^j;
    rho > pi; on the extended tree, a level-j cut whose class-(j+1) share sum
    exceeds 2^(j+2) or is nonzero in the root's cut.  Flags (non-fatal): cut
    sums in (2^(j+1), 2^(j+2)], recorded for inspection.
    """
    out, flags = [], []
    shares = total_share(trace)
    total = trace.total_cost()
    if total > 2 * shares * (1 + _RTOL) + 1e-12:
        out.append(f"total cost {total:g} > 2 * sum(rho) = {2 * shares:g}")
    for rec in trace.records:
        if rec.rho is not None and rec.pi is not None and rec.rho > rec.pi:
            out.append(f"request {rec.idx}: rho {rec.rho:g} > pi {rec.pi:g}")
    from .steiner import check_class_separation

    out += check_class_separation(trace, m)

    if t_ext is not None:
        rep = point_rep or (lambda p: p)
        root_rep = rep(trace.root)
        rows_by_class = {}
        for rec in trace.records:
            if rec.klass is not None and (rec.rho or 0.0) > 0:
                rows_by_class.setdefault(rec.klass, []).append((rep(rec.points[0]), rec.rho))
        for j in check_levels(t_ext):
            rows = rows_by_class.get(j + 1)
            if not rows:
                continue
            soft, hard = pow2(j + 1), pow2(j + 2)
            for cut in cuts_at_level(t_ext, j):
                inside = sum(rho for p, rho in rows if p in cut)
                if inside <= 0:
                    continue
                if root_rep in cut:
                    out.append(f"level {j}: root cut carries class-{j + 1} share {inside:g}")
                elif inside > hard * (1 + _RTOL):
                    out.append(f"level {j}: cut share sum {inside:g} > 2^{j + 2}")
                elif inside > soft * (1 + _RTOL):
                    flags.append(f"level {j}: cut share sum {inside:g} in (2^{j + 1}, 2^{j + 2}]")
    return out, flags
