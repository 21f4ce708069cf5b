"""Online connected facility location with a virtual facility-location layer.

A deterministic primal-dual potential rule plays the online facility location
black box: every arriving client gets budget b_i = d(i, open virtual
facilities); a closed facility x opens once the accumulated surplus
sum_v max(0, b_v - d(v, x)) covers f_x, consuming the used budgets
(b_v := min(b_v, d(v, x))).  Clients virtually assign to the nearest open
virtual facility.  Any substitute meeting the O(log k) contract can be dropped
in behind `run_ofl`'s interface.

The connected layer only ever opens a facility the virtual layer has already
opened.  With x the nearest open facility and a_i = d(i, x): a client is
virtual when a_i <= 4 d(i, sigma_hat(i)) (assign to x, charge the virtual
solution later); otherwise it buys when M same-class rent clients sit within
2^(j-2) (open sigma_hat(i), buy the edge to x) and rents otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NoFacilities
from .metric import (
    MetricSpace,
    MultiGraphSolution,
    RequestRecord,
    RunTrace,
    floor_log2,
    pow2,
)

_RTOL = 1e-9


class OflState:
    """Potential-based online facility location; facilities open monotonically."""

    def __init__(self, m: MetricSpace, facilities, root: int):
        costs = dict(facilities)
        if not facilities:
            raise NoFacilities("need at least one facility")
        if root not in costs or costs[root] != 0:
            raise NoFacilities("root facility must be present with cost 0")
        self.m = m
        self.points = [p for p, _ in facilities]
        self.costs = costs
        self.open_order = [root]
        self.is_open = {root}
        self.clients = []   # client points in arrival order
        self.budgets = []
        self.assign = []    # virtual assignment per client

    def _nearest_open(self, i: int):
        best, best_d = None, None
        for p in self.points:
            if p in self.is_open:
                d = self.m.dist(i, p)
                if best_d is None or d < best_d:
                    best, best_d = p, d
        return best, best_d

    def arrive(self, i: int) -> int:
        _, b = self._nearest_open(i)
        self.clients.append(i)
        self.budgets.append(b)
        while True:
            opened = None
            for x in self.points:
                if x in self.is_open:
                    continue
                surplus = sum(
                    max(0.0, bv - self.m.dist(v, x))
                    for v, bv in zip(self.clients, self.budgets)
                )
                if surplus >= self.costs[x]:
                    opened = x
                    break
            if opened is None:
                break
            self.is_open.add(opened)
            self.open_order.append(opened)
            self.budgets = [
                min(bv, self.m.dist(v, opened))
                for v, bv in zip(self.clients, self.budgets)
            ]
        sigma, _ = self._nearest_open(i)
        self.assign.append(sigma)
        return sigma

    def cost(self) -> float:
        opening = sum(self.costs[x] for x in self.is_open)
        service = sum(self.m.dist(v, s) for v, s in zip(self.clients, self.assign))
        return opening + service


@dataclass
class VirtualSolution:
    opened: tuple
    assignments: tuple
    cost: float


def run_ofl(m: MetricSpace, facilities, clients, root: int) -> VirtualSolution:
    state = OflState(m, facilities, root)
    for i in clients:
        state.arrive(i)
    return VirtualSolution(
        opened=tuple(state.open_order),
        assignments=tuple(state.assign),
        cost=state.cost(),
    )


def run_cfl(m: MetricSpace, facilities, root: int, clients, M) -> tuple:
    sol = MultiGraphSolution()
    trace = RunTrace(problem="CFL", root=root, M=M)
    ofl = OflState(m, facilities, root)
    facility_order = {p: k for k, (p, _) in enumerate(facilities)}
    open_set = [root]
    sol.opened.add(root)
    rents = {}  # class j -> [(request idx, point)]
    for idx, i in enumerate(clients):
        sigma_hat = ofl.arrive(i)
        x, a = min(
            ((p, m.dist(i, p)) for p in open_set),
            key=lambda pd: (pd[1], facility_order[pd[0]]),
        )
        d_hat = m.dist(i, sigma_hat)
        if a <= 4 * d_hat:
            sol.assignments[idx] = x
            trace.add(
                RequestRecord(
                    idx=idx,
                    decision="virtual",
                    points=(i,),
                    a=a,
                    klass=floor_log2(a) if a > 0 else None,
                    cost=a,
                    attach=x,
                    sigma_hat=sigma_hat,
                    sigma=x,
                )
            )
            continue
        j = floor_log2(a)
        radius = pow2(j - 2)
        witnesses = tuple(
            ridx for ridx, p in rents.get(j, ()) if m.dist(i, p) < radius
        )
        if len(witnesses) >= M:
            opened = None
            if sigma_hat not in sol.opened:
                sol.opened.add(sigma_hat)
                open_set.append(sigma_hat)
                sol.buy(sigma_hat, x)
                opened = sigma_hat
            sol.assignments[idx] = sigma_hat
            trace.add(
                RequestRecord(
                    idx=idx,
                    decision="buy",
                    points=(i,),
                    a=a,
                    klass=j,
                    cost=d_hat,
                    witnesses=witnesses,
                    attach=x,
                    sigma_hat=sigma_hat,
                    sigma=sigma_hat,
                    opened=opened,
                    edges=((sigma_hat, x, None),) if opened is not None else (),
                )
            )
        else:
            rents.setdefault(j, []).append((idx, i))
            sol.assignments[idx] = x
            trace.add(
                RequestRecord(
                    idx=idx,
                    decision="rent",
                    points=(i,),
                    a=a,
                    klass=j,
                    cost=a,
                    witnesses=witnesses,
                    attach=x,
                    sigma_hat=sigma_hat,
                    sigma=x,
                )
            )
    trace.summary = {
        "f_hat": list(ofl.open_order),
        "virtual_assign": list(ofl.assign),
        "virtual_cost": ofl.cost(),
        "facility_costs": {p: c for p, c in facilities},
    }
    return sol, trace


# ---------------------------------------------------------------------------
# Guarantee checks
# ---------------------------------------------------------------------------

def check_cfl_invariants(trace: RunTrace, m: MetricSpace):
    """The five per-run facts of the buy/rent layer.

    (1) class-j buy clients pairwise >= 2^(j-1) apart; (2) c(H) <= sum 2 a_z;
    (3) sum M a_z <= sum_j 2^(j+1) |R_j|; (4) F' subset of F_hat; (5) every buy
    client z has d(z, sigma_hat(z)) < a_z / 4.
    """
    out = []
    buys = [r for r in trace.records if r.decision == "buy"]
    by_class = {}
    for rec in buys:
        by_class.setdefault(rec.klass, []).append(rec)
    for j, recs in sorted(by_class.items()):
        bound = pow2(j - 1)
        for i, ra in enumerate(recs):
            for rb in recs[i + 1:]:
                d = m.dist(ra.points[0], rb.points[0])
                if d < bound:
                    out.append(f"class {j}: buy clients {ra.idx},{rb.idx} at {d:g} < 2^{j - 1}")
    c_h = sum(m.dist(rec.edges[0][0], rec.edges[0][1]) for rec in buys if rec.edges)
    budget = sum(2 * rec.a for rec in buys)
    if c_h > budget * (1 + _RTOL) + 1e-12:
        out.append(f"c(H)={c_h:g} > sum 2 a_z = {budget:g}")
    M = trace.M or 0.0
    share = sum(
        pow2(rec.klass + 1) for rec in trace.records if rec.decision == "rent"
    )
    buy_mass = sum(M * rec.a for rec in buys)
    if buy_mass > share * (1 + _RTOL) + 1e-12:
        out.append(f"sum M a_z = {buy_mass:g} > share {share:g}")
    f_hat = set(trace.summary.get("f_hat", ()))
    opened = {trace.root} | {rec.opened for rec in buys if rec.opened is not None}
    if not opened <= f_hat:
        out.append(f"opened facilities {sorted(opened - f_hat)} outside F_hat")
    for rec in buys:
        d_hat = m.dist(rec.points[0], rec.sigma_hat)
        if not d_hat < rec.a / 4:
            out.append(f"buy client {rec.idx}: d(z, sigma_hat)={d_hat:g} >= a/4={rec.a / 4:g}")
    return out


def check_cfl_cost_split(trace: RunTrace, m: MetricSpace):
    """Opening + virtual/buy assignment cost is covered by the virtual solution."""
    costs = trace.summary.get("facility_costs", {})
    f_hat = trace.summary.get("f_hat", ())
    opened = {trace.root} | {
        rec.opened for rec in trace.records if rec.decision == "buy" and rec.opened is not None
    }
    lhs = sum(costs.get(x, 0.0) for x in opened)
    lhs += sum(rec.cost for rec in trace.records if rec.decision == "virtual")
    lhs += sum(
        m.dist(rec.points[0], rec.sigma_hat)
        for rec in trace.records
        if rec.decision == "buy"
    )
    rhs = sum(costs.get(x, 0.0) for x in f_hat)
    rhs += 4 * sum(
        m.dist(rec.points[0], rec.sigma_hat)
        for rec in trace.records
        if rec.sigma_hat is not None
    )
    if lhs > rhs * (1 + _RTOL) + 1e-12:
        return [f"cost split: {lhs:g} > virtual budget {rhs:g}"]
    return []


def cfl_buy_rent_cost(trace: RunTrace, m: MetricSpace) -> float:
    """M c(H) + rent assignment costs: the part charged to the tree optimum."""
    M = trace.M or 0.0
    c_h = sum(
        m.dist(rec.edges[0][0], rec.edges[0][1])
        for rec in trace.records
        if rec.decision == "buy" and rec.edges
    )
    rents = sum(rec.cost for rec in trace.records if rec.decision == "rent")
    return M * c_h + rents
