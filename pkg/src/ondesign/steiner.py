"""Online Steiner tree (greedy), Steiner forest (Berman-Coulston), and the
Steiner network wrapper that runs one forest instance per requirement scale.

The forest algorithm classifies both endpoints of an arriving pair at
floor(log2 d(s,t)) and then walks levels j = 0..class, connecting the pair's
endpoints to every previously classified terminal of class >= j within
distance < 2^(j+1).  "Connecting" adds the edge only when the endpoints are in
different components of H; the level loop still continues after the pair
itself is connected, so later levels may merge further components.  Candidate
terminals are scanned in arrival order, s_i's sweep before t_i's.

A pair with coincident endpoints is vacuous: it gets no class and adds nothing.
Zero-length edges (distinct indices, same position) are bought only when they
change connectivity and stay out of the per-level edge sets A_j.
"""

from __future__ import annotations

from .errors import InvalidCover, InvalidRequirement
from .hst import Hst, cuts_at_level
from .metric import (
    MetricSpace,
    MultiGraphSolution,
    RequestRecord,
    RunTrace,
    UnionFind,
    floor_log2,
    max_flow,
    pow2,
)


class BcForest:
    """Incremental Berman-Coulston state; reused by MROB and the SN wrapper."""

    def __init__(self, m: MetricSpace):
        self.m = m
        self.uf = UnionFind(m.n)
        self.occ = []      # (point, class) per classified endpoint, arrival order
        self.levels = {}   # j -> [(u, v)] positive-length edges added at level j
        self.zero_merges = []

    def add_pair(self, s: int, t: int):
        """Process one pair.

        Returns (class, added) where added lists (u, v, level) edges bought in
        order; zero-length connectivity merges carry level None.
        """
        added = []
        if self.m.dist(s, t) == 0.0:
            if s != t and self.uf.union(s, t):
                self.zero_merges.append((s, t))
                added.append((s, t, None))
            return None, added
        klass = floor_log2(self.m.dist(s, t))
        self.occ.append((s, klass))
        self.occ.append((t, klass))
        for level in range(0, klass + 1):
            reach = pow2(level + 1)
            for x in (s, t):
                for v, cv in self.occ:
                    if cv < level or v == x:
                        continue
                    dv = self.m.dist(x, v)
                    if dv < reach and self.uf.union(x, v):
                        if dv > 0.0:
                            added.append((x, v, level))
                            self.levels.setdefault(level, []).append((x, v))
                        else:
                            self.zero_merges.append((x, v))
                            added.append((x, v, None))
        return klass, added

    def summary(self) -> dict:
        return {
            "A": {j: list(edges) for j, edges in sorted(self.levels.items())},
            "occ": list(self.occ),
            "zero_merges": list(self.zero_merges),
        }


def _nearest(m: MetricSpace, i: int, candidates):
    """Nearest candidate point; ties to the earliest list position."""
    best, best_d = None, None
    for p in candidates:
        d = m.dist(i, p)
        if best_d is None or d < best_d:
            best, best_d = p, d
    return best, best_d


def run_greedy_st(m: MetricSpace, root: int, terminals) -> tuple:
    """Connect each arrival to the nearest previously-arrived terminal.

    Ties go to the earliest arrival (the root counts as arrival -1).  A
    terminal coincident with an earlier one auto-connects at cost zero.
    """
    sol = MultiGraphSolution()
    trace = RunTrace(problem="SteinerTree", root=root)
    arrived = [root]
    for idx, i in enumerate(terminals):
        z, a = _nearest(m, i, arrived)
        arrived.append(i)
        if a == 0.0:
            if i != z:
                sol.buy(i, z)
            trace.add(RequestRecord(idx=idx, decision="auto", points=(i,), a=0.0, attach=z))
            continue
        sol.buy(i, z)
        trace.add(
            RequestRecord(
                idx=idx,
                decision="buy",
                points=(i,),
                a=a,
                klass=floor_log2(a),
                cost=a,
                attach=z,
                edges=((i, z, None),),
            )
        )
    return sol, trace


def run_bc_sf(m: MetricSpace, pairs) -> tuple:
    sol = MultiGraphSolution()
    trace = RunTrace(problem="SteinerForest")
    bc = BcForest(m)
    for idx, (s, t) in enumerate(pairs):
        klass, added = bc.add_pair(s, t)
        cost = 0.0
        for u, v, _ in added:
            sol.buy(u, v)
            cost += m.dist(u, v)
        if klass is None:
            trace.add(RequestRecord(idx=idx, decision="auto", points=(s, t), a=0.0))
            continue
        trace.add(
            RequestRecord(
                idx=idx,
                decision="bc",
                points=(s, t),
                a=m.dist(s, t),
                klass=klass,
                cost=cost,
                edges=tuple(e for e in added if e[2] is not None),
                feasible_now=bc.uf.connected(s, t),
            )
        )
    trace.summary = bc.summary()
    return sol, trace


def run_sn(m: MetricSpace, requests) -> tuple:
    """One Berman-Coulston instance per requirement scale l = floor(log2 R).

    The wrapper buys 2^(l+1) copies of every edge instance l buys; instances
    are created lazily on the first requirement in [2^l, 2^(l+1)).
    """
    sol = MultiGraphSolution()
    trace = RunTrace(problem="SteinerNetwork")
    instances = {}
    for idx, (s, t, req) in enumerate(requests):
        if int(req) != req or req < 1:
            raise InvalidRequirement(f"request {idx}: R={req!r}")
        req = int(req)
        if m.dist(s, t) == 0.0:
            trace.add(RequestRecord(idx=idx, decision="auto", points=(s, t), a=0.0))
            continue
        lev = floor_log2(float(req))
        copies = 2 ** (lev + 1)
        bc = instances.setdefault(lev, BcForest(m))
        klass, added = bc.add_pair(s, t)
        cost = 0.0
        for u, v, _ in added:
            sol.buy(u, v, copies=copies)
            cost += copies * m.dist(u, v)
        cap = {}
        for (u, v), mult in sol.bought.items():
            cap.setdefault(u, {})[v] = cap.get(u, {}).get(v, 0) + mult
            cap.setdefault(v, {})[u] = cap.get(v, {}).get(u, 0) + mult
        trace.add(
            RequestRecord(
                idx=idx,
                decision="bc",
                points=(s, t),
                a=m.dist(s, t),
                klass=klass,
                cost=cost,
                edges=tuple(e for e in added if e[2] is not None),
                level=lev,
                copies=copies,
                feasible_now=max_flow(cap, s, t, limit=req) >= req,
            )
        )
    trace.summary = {
        "instances": {lev: bc.summary() for lev, bc in sorted(instances.items())}
    }
    return sol, trace


# ---------------------------------------------------------------------------
# Structural guarantee checks
# ---------------------------------------------------------------------------

def check_class_separation(trace: RunTrace, m: MetricSpace):
    """Same-class terminals of a greedy run must be >= 2^j apart.

    Applies to every classified arrival for Steiner tree traces and to the buy
    subsequence for SROB/PCST traces (their bought subgraph is a greedy run).
    """
    if trace.problem in ("SROB", "PCST"):
        entries = [r for r in trace.records if r.decision == "buy" and r.klass is not None]
    else:
        entries = [r for r in trace.records if r.klass is not None]
    by_class = {}
    for rec in entries:
        by_class.setdefault(rec.klass, []).append(rec)
    out = []
    for j, recs in sorted(by_class.items()):
        bound = pow2(j)
        for i, a in enumerate(recs):
            for b in recs[i + 1:]:
                d = m.dist(a.points[0], b.points[0])
                if d < bound:
                    out.append(f"class {j}: requests {a.idx},{b.idx} at distance {d:g} < 2^{j}")
    return out


def _bc_summaries(trace: RunTrace):
    if trace.problem == "SteinerNetwork":
        return list(trace.summary.get("instances", {}).values())
    if trace.problem == "MROB":
        return [trace.summary["bc"]] if "bc" in trace.summary else []
    return [trace.summary] if trace.summary else []


def check_metagraph_acyclic(trace: RunTrace, covers: dict, m: MetricSpace, point_rep=None):
    """Meta-graph acyclicity per level: |A_j| <= |S_j| for any eligible cover.

    `covers` maps level j to a family of disjoint terminal-point sets covering
    the class->=j terminals, each of metric diameter < 2^j.  Raises
    InvalidCover when that precondition fails; returns cycle violations.
    """
    rep = point_rep or (lambda p: p)
    out = []
    for summ in _bc_summaries(trace):
        occ = summ.get("occ", [])
        for j, edges in sorted(summ.get("A", {}).items()):
            family = covers.get(j)
            if family is None:
                raise InvalidCover(f"no cover supplied for level {j}")
            xj = {rep(p) for p, c in occ if c >= j}
            _validate_cover(family, xj, j, m)
            where = {}
            for si, members in enumerate(family):
                for p in members:
                    where.setdefault(p, si)
            uf = UnionFind(len(family))
            for u, v in edges:
                su, sv = where.get(rep(u)), where.get(rep(v))
                if su is None or sv is None:
                    raise InvalidCover(f"level {j}: edge endpoint outside the cover")
                if su == sv or not uf.union(su, sv):
                    out.append(f"level {j}: meta-cycle via edge ({u},{v})")
    return out


def _validate_cover(family, xj, j, m: MetricSpace):
    seen = set()
    for members in family:
        mm = list(members)
        for i, u in enumerate(mm):
            if u in seen:
                raise InvalidCover(f"level {j}: cover sets are not disjoint at {u}")
            seen.add(u)
            for v in mm[i + 1:]:
                if m.dist(u, v) >= pow2(j):
                    raise InvalidCover(f"level {j}: cover set diameter >= 2^{j}")
    if not xj <= seen:
        raise InvalidCover(f"level {j}: cover misses {sorted(xj - seen)}")


def covers_from_tree(t: Hst, trace: RunTrace, point_rep=None):
    """Level-j covers from an HST's cuts, filtered to cuts meeting X_j."""
    rep = point_rep or (lambda p: p)
    occs = [o for s in _bc_summaries(trace) for o in s.get("occ", [])]
    out = {}
    levels = {j for s in _bc_summaries(trace) for j in s.get("A", {})}
    for j in sorted(levels):
        xj = {rep(p) for p, c in occs if c >= j}
        out[j] = [set(c) for c in cuts_at_level(t, j) if set(c) & xj]
    return out


def check_sn_decomposition(trace: RunTrace, sol: MultiGraphSolution):
    """Every bought multiplicity must be exactly sum of 2^(l+1) over instances."""
    expect = {}
    for lev, summ in trace.summary.get("instances", {}).items():
        copies = 2 ** (int(lev) + 1)
        edges = [e for lst in summ["A"].values() for e in lst]
        edges += list(summ.get("zero_merges", []))
        for u, v in edges:
            key = (u, v) if u <= v else (v, u)
            expect[key] = expect.get(key, 0) + copies
    out = []
    for key, mult in sol.bought.items():
        if expect.get(key) != mult:
            out.append(f"edge {key}: multiplicity {mult} != decomposition {expect.get(key)}")
    for key in expect:
        if key not in sol.bought:
            out.append(f"edge {key}: in decomposition but not bought")
    return out


def check_bc_edge_property(trace: RunTrace, m: MetricSpace):
    """A_j edges have length < 2^(j+1) and endpoint classes >= j."""
    out = []
    for summ in _bc_summaries(trace):
        best = {}
        for p, c in summ.get("occ", []):
            best[p] = max(best.get(p, c), c)
        for j, edges in summ.get("A", {}).items():
            for u, v in edges:
                if m.dist(u, v) >= pow2(j + 1):
                    out.append(f"level {j}: edge ({u},{v}) too long")
                if best.get(u, -1) < j or best.get(v, -1) < j:
                    out.append(f"level {j}: edge ({u},{v}) endpoint class below {j}")
    return out
