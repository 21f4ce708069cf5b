"""Metric spaces, request sequences, solutions and run traces.

Everything downstream works on a finite metric (symmetric distance matrix with
zero diagonal, triangle inequality, minimum distance between distinct positions
normalized to 1).  Algorithms never look at the whole matrix online; they read
rows of arrived requests only, but the adversary's full metric is materialized
up front for generators and oracles.

Distance classes are computed with exact binary thresholds: ``class(x) = j``
iff ``2^j <= x < 2^(j+1)``, via ``math.frexp`` (powers of two are exactly
representable, so no epsilon is involved).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AsymmetricInput,
    NegativeDistance,
    SchemaError,
    TriangleViolation,
)

PROBLEMS = ("SteinerTree", "SteinerForest", "SteinerNetwork", "SROB", "MROB", "CFL", "PCST")
ROOTED = frozenset({"SteinerTree", "SROB", "CFL", "PCST"})
PAIRED = frozenset({"SteinerForest", "SteinerNetwork", "MROB"})

_TRI_RTOL = 1e-9


def floor_log2(x: float) -> int:
    """Exact floor(log2 x) for x > 0 (frexp gives x = m * 2^e, m in [0.5, 1))."""
    if x <= 0:
        raise ValueError("floor_log2 needs a positive argument")
    return math.frexp(x)[1] - 1


def pow2(j: int) -> float:
    return math.ldexp(1.0, j)


class UnionFind:
    """Array-based union-find with path halving; used by every online run."""

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, x: int, y: int) -> bool:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        self.parent[ry] = rx
        return True

    def connected(self, x: int, y: int) -> bool:
        return self.find(x) == self.find(y)


def max_flow(capacity: dict, s: int, t: int, limit: float = math.inf) -> float:
    """Edmonds-Karp max flow on a symmetric capacity dict {u: {v: cap}}.

    Capacities are edge multiplicities here, so integer arithmetic throughout.
    Stops early once `limit` is reached (feasibility checks only need >= R_i).
    """
    if s == t:
        return math.inf
    cap = {u: dict(nbrs) for u, nbrs in capacity.items()}
    flow = 0
    while flow < limit:
        # BFS for an augmenting path
        pred = {s: None}
        queue = [s]
        while queue and t not in pred:
            u = queue.pop(0)
            for v, c in cap.get(u, {}).items():
                if c > 0 and v not in pred:
                    pred[v] = u
                    queue.append(v)
        if t not in pred:
            break
        # bottleneck
        aug = math.inf
        v = t
        while pred[v] is not None:
            u = pred[v]
            aug = min(aug, cap[u][v])
            v = u
        v = t
        while pred[v] is not None:
            u = pred[v]
            cap[u][v] -= aug
            cap.setdefault(v, {}).setdefault(u, 0)
            cap[v][u] += aug
            v = u
        flow += aug
    return flow


@dataclass(frozen=True)
class MetricSpace:
    """Finite point set with a normalized distance matrix.

    `scale` is the factor the raw input was multiplied by, so raw distances are
    `d / scale`.  Coincident points (d = 0) are allowed; the min-distance-1
    guarantee holds over distinct-position pairs only.
    """

    d: np.ndarray
    scale: float = 1.0
    labels: Optional[tuple] = None

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def dist(self, u: int, v: int) -> float:
        return float(self.d[u, v])

    def diameter(self) -> float:
        return float(self.d.max()) if self.n else 0.0

    def coincident(self, u: int, v: int) -> bool:
        return self.d[u, v] == 0.0


def _validate_matrix(d: np.ndarray) -> None:
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise SchemaError("distance matrix must be square")
    if np.any(d < 0):
        u, v = map(int, np.argwhere(d < 0)[0])
        raise NegativeDistance(f"d({u},{v}) < 0")
    if np.any(np.diag(d) != 0):
        raise SchemaError("nonzero diagonal entry")
    if not np.array_equal(d, d.T):
        u, v = map(int, np.argwhere(d != d.T)[0])
        raise AsymmetricInput(f"d({u},{v}) != d({v},{u})")
    n = d.shape[0]
    tol = _TRI_RTOL * max(1.0, float(d.max(initial=0.0)))
    # O(n^3) scan with a reused buffer; instances are desk scale.
    buf = np.empty_like(d)
    for v in range(n):
        np.add.outer(d[:, v], d[v, :], out=buf)
        np.subtract(d, buf, out=buf)
        if buf.max() > tol:
            u, w = map(int, np.argwhere(buf > tol)[0])
            raise TriangleViolation(u, v, w, float(buf[u, w]))


def build_metric(raw, labels=None) -> MetricSpace:
    """Build a MetricSpace from a square distance matrix or a 2-D point list.

    Square symmetric nonnegative zero-diagonal input is taken as a matrix;
    anything else is a point list inducing Euclidean distances.  Distances are
    divided by the minimum distinct-pair distance so that it becomes exactly 1
    (coincident points stay at 0).  Idempotent on already-normalized input.
    """
    arr = np.asarray(raw, dtype=float)
    # Square input with a zero diagonal is taken as a matrix; asymmetry or
    # negative entries in that shape are input errors, not point coordinates.
    as_matrix = (
        arr.ndim == 2 and arr.shape[0] == arr.shape[1] and not np.any(np.diag(arr))
    )
    if as_matrix:
        d = arr.copy()
    else:
        if arr.ndim != 2:
            raise SchemaError("points must be a 2-D array")
        diff = arr[:, None, :] - arr[None, :, :]
        d = np.sqrt((diff * diff).sum(axis=-1))
        d = (d + d.T) / 2.0  # force exact symmetry
    _validate_matrix(d)
    positive = d[d > 0]
    if positive.size:
        mind = float(positive.min())
        d = d / mind
        scale = 1.0 / mind
    else:
        scale = 1.0
    d.setflags(write=False)
    return MetricSpace(d=d, scale=scale, labels=tuple(labels) if labels else None)


@dataclass(frozen=True)
class RequestSequence:
    """Problem-tagged ordered requests plus per-sequence parameters.

    Request shapes by problem:
      SteinerTree / SROB      -> int terminal
      SteinerForest / MROB    -> (s, t)
      SteinerNetwork          -> (s, t, R)  with integer R >= 1
      CFL                     -> int client
      PCST                    -> (i, pi)    with pi >= 0
    """

    problem: str
    requests: tuple
    root: Optional[int] = None
    M: Optional[float] = None
    facilities: Optional[tuple] = None  # ((point, cost), ...)

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise SchemaError(f"unknown problem {self.problem!r}")
        if (self.root is not None) != (self.problem in ROOTED):
            raise SchemaError(f"root must be present exactly for {sorted(ROOTED)}")
        if self.problem in ("SROB", "MROB", "CFL"):
            if self.M is None or self.M < 0:
                raise SchemaError("M must be a nonnegative real for ROB/CFL")
        if self.problem == "CFL":
            if not self.facilities:
                raise SchemaError("CFL needs a facilities list")
            costs = dict(self.facilities)
            if self.root not in costs or costs[self.root] != 0:
                raise SchemaError("CFL root facility must be present with cost 0")
            if any(c < 0 for _, c in self.facilities):
                raise SchemaError("facility costs must be >= 0")

    def validate_points(self, n: int) -> None:
        for idx, req in enumerate(self.requests):
            for p in self.request_points(idx):
                if not (0 <= p < n):
                    raise SchemaError(f"request {idx} references point {p} >= n={n}")
        if self.root is not None and not (0 <= self.root < n):
            raise SchemaError("root index out of range")
        if self.facilities:
            for p, _ in self.facilities:
                if not (0 <= p < n):
                    raise SchemaError(f"facility point {p} >= n={n}")
        if self.problem == "SteinerNetwork":
            for idx, (_, _, r) in enumerate(self.requests):
                if int(r) != r or r < 1:
                    raise SchemaError(f"request {idx}: R must be an integer >= 1")

    def request_points(self, idx: int):
        req = self.requests[idx]
        if self.problem in ("SteinerTree", "SROB", "CFL"):
            return (req,)
        if self.problem in ("SteinerForest", "MROB"):
            return (req[0], req[1])
        if self.problem == "SteinerNetwork":
            return (req[0], req[1])
        if self.problem == "PCST":
            return (req[0],)
        raise AssertionError

    @property
    def k(self) -> int:
        """Number of terminals/clients that arrive online."""
        if self.problem in PAIRED:
            return 2 * len(self.requests)
        return len(self.requests)


class MultiGraphSolution:
    """Bought/rented edges with multiplicities plus penalty/facility state.

    Bought edges only ever accumulate (online decisions are irrevocable).
    """

    def __init__(self):
        self.bought = {}  # (u, v) sorted -> multiplicity
        self.rented = {}  # request idx -> [(u, v), ...]
        self.penalties_paid = set()
        self.opened = set()
        self.assignments = {}  # request idx -> facility point

    def buy(self, u: int, v: int, copies: int = 1) -> None:
        key = (u, v) if u <= v else (v, u)
        self.bought[key] = self.bought.get(key, 0) + copies

    def rent(self, idx: int, u: int, v: int) -> None:
        self.rented.setdefault(idx, []).append((u, v) if u <= v else (v, u))

    def bought_cost(self, m: MetricSpace) -> float:
        return sum(m.dist(u, v) * mult for (u, v), mult in self.bought.items())

    def rent_cost(self, m: MetricSpace) -> float:
        return sum(m.dist(u, v) for edges in self.rented.values() for (u, v) in edges)

    def bought_components(self, n: int) -> UnionFind:
        uf = UnionFind(n)
        for (u, v) in self.bought:
            uf.union(u, v)
        return uf


@dataclass
class CostBreakdown:
    buy: float = 0.0
    rent: float = 0.0
    penalty: float = 0.0
    opening: float = 0.0

    @property
    def total(self) -> float:
        return self.buy + self.rent + self.penalty + self.opening


def solution_cost(sol: MultiGraphSolution, seq: RequestSequence, m: MetricSpace) -> CostBreakdown:
    """Cost decomposition per the problem's objective.

    The buy term is multiplied by M for rent-or-buy/CFL and by 1 for the
    Steiner problems; every term is nonnegative by construction.
    """
    buy_weight = seq.M if seq.problem in ("SROB", "MROB", "CFL") else 1.0
    out = CostBreakdown()
    out.buy = buy_weight * sol.bought_cost(m)
    out.rent = sol.rent_cost(m)
    if seq.problem == "PCST":
        pi = {i: seq.requests[i][1] for i in range(len(seq.requests))}
        out.penalty = sum(pi[i] for i in sol.penalties_paid)
    if seq.problem == "CFL":
        costs = dict(seq.facilities)
        out.opening = sum(costs[x] for x in sol.opened)
        out.rent = sum(
            m.dist(seq.requests[i], sol.assignments[i]) for i in sol.assignments
        )
    return out


def check_feasible(sol: MultiGraphSolution, seq: RequestSequence, m: MetricSpace):
    """Per-request feasibility booleans against the final solution state."""
    n = m.n
    base = sol.bought_components(n)
    out = []
    for idx in range(len(seq.requests)):
        req = seq.requests[idx]
        if seq.problem in ("SteinerTree", "SROB"):
            out.append(_connected_with_rents(base, sol.rented.get(idx, ()), req, seq.root))
        elif seq.problem in ("SteinerForest", "MROB"):
            out.append(_connected_with_rents(base, sol.rented.get(idx, ()), req[0], req[1]))
        elif seq.problem == "SteinerNetwork":
            s, t, r = req
            if s == t or m.coincident(s, t):
                out.append(True)
            else:
                cap = {}
                for (u, v), mult in sol.bought.items():
                    cap.setdefault(u, {})[v] = cap.get(u, {}).get(v, 0) + mult
                    cap.setdefault(v, {})[u] = cap.get(v, {}).get(u, 0) + mult
                out.append(max_flow(cap, s, t, limit=r) >= r)
        elif seq.problem == "PCST":
            i = req[0]
            ok = idx in sol.penalties_paid or base.connected(i, seq.root) or m.coincident(i, seq.root)
            out.append(ok)
        elif seq.problem == "CFL":
            x = sol.assignments.get(idx)
            ok = x is not None and (x in sol.opened or x == seq.root)
            if ok and x != seq.root:
                ok = base.connected(x, seq.root) or m.coincident(x, seq.root)
            out.append(ok)
    return out


def _connected_with_rents(base: UnionFind, rents, a: int, b: int) -> bool:
    if a == b or base.connected(a, b):
        return True
    # rents are per-request direct edges; splice them on top of the bought components
    reach = {base.find(a)}
    changed = True
    while changed:
        changed = False
        for (u, v) in rents:
            ru, rv = base.find(u), base.find(v)
            if (ru in reach) != (rv in reach):
                reach.update((ru, rv))
                changed = True
    return base.find(b) in reach


# ---------------------------------------------------------------------------
# Run traces
# ---------------------------------------------------------------------------

@dataclass
class RequestRecord:
    """One trace row per request; problem-specific fields stay None when unused."""

    idx: int
    decision: str                      # buy | rent | penalty | virtual | bc | auto
    points: tuple
    a: Optional[float] = None
    klass: Optional[int] = None        # floor(log2 a); None for coincident requests
    cost: float = 0.0
    witnesses: tuple = ()              # witness request indices (s-side for MROB)
    witnesses_t: tuple = ()            # MROB: t-side witness set
    attach: Optional[int] = None       # z / x: the point we connected or assigned to
    edges: tuple = ()                  # ((u, v, level), ...) for BC-style buys
    rho: Optional[float] = None        # PCST cost share
    pi: Optional[float] = None
    sigma_hat: Optional[int] = None    # CFL virtual assignment
    sigma: Optional[int] = None        # CFL actual assignment
    opened: Optional[int] = None       # CFL facility opened by this request
    rent_endpoint: Optional[str] = None  # MROB: which endpoint entered R_j
    level: Optional[int] = None        # SN: instantiation index l
    copies: Optional[int] = None       # SN: 2^(l+1)
    feasible_now: bool = True


@dataclass
class RunTrace:
    """Per-request decisions plus end-of-run summaries; raw material for checks."""

    problem: str
    records: list = field(default_factory=list)
    root: Optional[int] = None
    M: Optional[float] = None
    summary: dict = field(default_factory=dict)

    def add(self, rec: RequestRecord) -> None:
        self.records.append(rec)

    def by_class(self, decision=None):
        """Map class j -> list of records, optionally filtered by decision tag."""
        out = {}
        for rec in self.records:
            if rec.klass is None:
                continue
            if decision is not None and rec.decision != decision:
                continue
            out.setdefault(rec.klass, []).append(rec)
        return out

    def total_cost(self) -> float:
        return sum(rec.cost for rec in self.records)

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for rec in self.records:
                fh.write(json.dumps(asdict(rec), sort_keys=True) + "\n")

    @classmethod
    def from_jsonl(cls, path, problem="?", root=None, M=None) -> "RunTrace":
        trace = cls(problem=problem, root=root, M=M)
        with open(path) as fh:
            for line in fh:
                row = json.loads(line)
                for key in ("points", "witnesses", "witnesses_t"):
                    row[key] = tuple(row[key])
                row["edges"] = tuple(tuple(e) for e in row["edges"])
                trace.add(RequestRecord(**row))
        return trace


# ---------------------------------------------------------------------------
# Instance JSON (external interface; unknown fields rejected)
# ---------------------------------------------------------------------------

_INSTANCE_FIELDS = {"points", "matrix", "problem", "root", "M", "facilities", "requests"}


def instance_from_dict(doc: dict):
    unknown = set(doc) - _INSTANCE_FIELDS
    if unknown:
        raise SchemaError(f"unknown instance fields: {sorted(unknown)}")
    if ("points" in doc) == ("matrix" in doc):
        raise SchemaError("exactly one of 'points' or 'matrix' is required")
    if "problem" not in doc or "requests" not in doc:
        raise SchemaError("instance needs 'problem' and 'requests'")
    m = build_metric(doc.get("points", doc.get("matrix")))
    problem = doc["problem"]
    reqs = []
    for i, raw in enumerate(doc["requests"]):
        try:
            if problem in ("SteinerTree", "SROB", "CFL"):
                reqs.append(int(raw))
            elif problem in ("SteinerForest", "MROB"):
                s, t = raw
                reqs.append((int(s), int(t)))
            elif problem == "SteinerNetwork":
                s, t, r = raw
                reqs.append((int(s), int(t), int(r)))
            elif problem == "PCST":
                p, pi = raw
                reqs.append((int(p), float(pi)))
            else:
                raise SchemaError(f"unknown problem {problem!r}")
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"malformed request {i}: {raw!r}") from exc
    facilities = None
    if doc.get("facilities") is not None:
        facilities = []
        for f in doc["facilities"]:
            if set(f) != {"point", "cost"}:
                raise SchemaError(f"malformed facility entry {f!r}")
            facilities.append((int(f["point"]), float(f["cost"])))
        facilities = tuple(facilities)
    seq = RequestSequence(
        problem=problem,
        requests=tuple(reqs),
        root=doc.get("root"),
        M=doc.get("M"),
        facilities=facilities,
    )
    seq.validate_points(m.n)
    if problem == "PCST" and any(pi < 0 for _, pi in seq.requests):
        raise SchemaError("penalties must be >= 0")
    return m, seq


def load_instance(path):
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def instance_to_dict(m: MetricSpace, seq: RequestSequence, points=None) -> dict:
    doc = {"problem": seq.problem, "requests": [list(r) if isinstance(r, tuple) else r for r in seq.requests]}
    if points is not None:
        doc["points"] = [list(map(float, p)) for p in points]
    else:
        doc["matrix"] = m.d.tolist()
    if seq.root is not None:
        doc["root"] = seq.root
    if seq.M is not None:
        doc["M"] = seq.M
    if seq.facilities is not None:
        doc["facilities"] = [{"point": p, "cost": c} for p, c in seq.facilities]
    return doc


def dump_instance(path, m: MetricSpace, seq: RequestSequence, points=None) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(m, seq, points), fh, sort_keys=True)
        fh.write("\n")
