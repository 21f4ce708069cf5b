"""Instance families: random Euclidean and graph metrics, random request
sequences, and the recursive-diamond adversarial family that realizes the
Omega(log k) lower bound for greedy online Steiner tree.

Everything is a pure function of its seed (numpy SeedSequence-derived PCG64).
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import DepthTooLarge
from .metric import MetricSpace, RequestSequence, build_metric

_DIAMOND_CAP = 10


def _rng(seed: int, *key):
    return np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=key))


def gen_euclidean(count: int, dimension: int = 2, seed: int = 0):
    """Uniform points in the unit cube, normalized; returns (metric, points)."""
    rng = _rng(seed, 1)
    pts = rng.random((count, dimension))
    return build_metric(pts), pts


def gen_graph_metric(vertices: int, density: float = 0.3, seed: int = 0) -> MetricSpace:
    """Shortest-path closure of a random connected weighted graph."""
    rng = _rng(seed, 2)
    w = np.zeros((vertices, vertices))
    order = rng.permutation(vertices)
    for i in range(1, vertices):  # random spanning tree keeps the sample connected
        j = order[int(rng.integers(0, i))]
        w[order[i], j] = w[j, order[i]] = rng.uniform(0.5, 2.0)
    for u in range(vertices):
        for v in range(u + 1, vertices):
            if w[u, v] == 0 and rng.random() < density:
                w[u, v] = w[v, u] = rng.uniform(0.5, 2.0)
    closure = shortest_path(csr_matrix(w), method="D", directed=False)
    closure = (closure + closure.T) / 2.0  # Dijkstra runs are not bit-symmetric
    return build_metric(closure)


def gen_diamond_lb(depth: int):
    """Recursive-diamond lower-bound family for greedy online Steiner tree.

    The metric is the shortest-path closure of the depth-d diamond graph
    restricted to one designated s-t path (unit steps after scaling) plus the
    off-path twin of each diamond.  The adversarial order presents s, then t,
    then per phase i the midpoints of the current path edges; greedy pays
    2^(d-i) for each of the 2^(i-1) phase-i terminals while the whole terminal
    set always lies on a single path of length 2^d.

    Returns (metric, request sequence, info) with info carrying k and the
    family's known optimum (= 2^d in normalized units).
    """
    if depth > _DIAMOND_CAP:
        raise DepthTooLarge(f"depth {depth} > {_DIAMOND_CAP}")
    if depth < 0:
        raise DepthTooLarge("depth must be >= 0")
    span = 2**depth
    n_path = span + 1
    rows, cols, vals = [], [], []

    def edge(u, v, w):
        rows.append(u)
        cols.append(v)
        vals.append(w)

    for i in range(span):
        edge(i, i + 1, 1.0)
    nid = n_path
    for level in range(1, depth + 1):
        step = 2 ** (depth - level + 1)
        half = step // 2
        for a in range(0, span, step):
            edge(a, nid, float(half))
            edge(nid, a + step, float(half))
            nid += 1
    n = nid
    g = csr_matrix((vals + vals, (rows + cols, cols + rows)), shape=(n, n))
    closure = shortest_path(g, method="D", directed=False)
    closure = (closure + closure.T) / 2.0
    # A shortest-path closure is a metric by construction and the finest path
    # edges have length exactly 1, so skip the O(n^3) revalidation (depth 10
    # reaches n = 2048); small depths round-trip through build_metric in tests.
    closure.setflags(write=False)
    m = MetricSpace(d=closure)

    requests = [span]
    for level in range(1, depth + 1):
        gap = 2 ** (depth - level)
        requests.extend(range(gap, span, 2 * gap))
    seq = RequestSequence(problem="SteinerTree", requests=tuple(requests), root=0)
    info = {"k": len(requests) + 1, "opt": float(span), "depth": depth}
    return m, seq, info


def gen_requests(problem: str, m: MetricSpace, count: int, seed: int, params=None) -> RequestSequence:
    """Uniform random requests for any problem.

    params: root (default 0), M, R_max (log-uniform requirements), n_facilities
    and f_max for CFL.  Penalties are uniform in [0, 2 * diameter].
    """
    params = dict(params or {})
    rng = _rng(seed, 3)
    root = int(params.get("root", 0))
    diam = m.diameter()

    def pick():
        return int(rng.integers(0, m.n))

    def pick_pair():
        s = pick()
        t = pick()
        while t == s:
            t = int(rng.integers(0, m.n))
        return s, t

    if problem == "SteinerTree":
        return RequestSequence(problem=problem, requests=tuple(pick() for _ in range(count)), root=root)
    if problem == "SteinerForest":
        return RequestSequence(problem=problem, requests=tuple(pick_pair() for _ in range(count)))
    if problem == "SteinerNetwork":
        r_max = max(1, int(params.get("R_max", 8)))
        reqs = []
        for _ in range(count):
            s, t = pick_pair()
            r = int(round(2.0 ** (rng.random() * np.log2(r_max)))) if r_max > 1 else 1
            reqs.append((s, t, min(max(r, 1), r_max)))
        return RequestSequence(problem=problem, requests=tuple(reqs))
    if problem == "SROB":
        return RequestSequence(
            problem=problem,
            requests=tuple(pick() for _ in range(count)),
            root=root,
            M=float(params.get("M", 2.0)),
        )
    if problem == "MROB":
        return RequestSequence(
            problem=problem,
            requests=tuple(pick_pair() for _ in range(count)),
            M=float(params.get("M", 2.0)),
        )
    if problem == "PCST":
        reqs = tuple((pick(), float(rng.uniform(0, 2 * diam))) for _ in range(count))
        return RequestSequence(problem=problem, requests=reqs, root=root)
    if problem == "CFL":
        n_fac = min(m.n, int(params.get("n_facilities", 4)))
        f_max = float(params.get("f_max", diam))
        others = [p for p in range(m.n) if p != root]
        chosen = list(rng.choice(others, size=max(0, n_fac - 1), replace=False)) if n_fac > 1 else []
        facilities = [(root, 0.0)] + [(int(p), float(rng.uniform(0, f_max))) for p in chosen]
        return RequestSequence(
            problem=problem,
            requests=tuple(pick() for _ in range(count)),
            root=root,
            M=float(params.get("M", 2.0)),
            facilities=tuple(facilities),
        )
    raise ValueError(f"unknown problem {problem!r}")
