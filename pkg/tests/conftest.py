import numpy as np
import pytest

from ondesign.metric import MetricSpace, build_metric


def line_metric(positions):
    """Metric from points on a line, without normalization (positions are
    chosen so the minimum distinct distance is already 1)."""
    pos = np.asarray(positions, dtype=float)
    d = np.abs(pos[:, None] - pos[None, :])
    return MetricSpace(d=d)


def euclid(points):
    return build_metric(np.asarray(points, dtype=float))


@pytest.fixture
def two_point_metric():
    return build_metric([[0.0, 1.0], [1.0, 0.0]])


# ---------------------------------------------------------------------------
# Independent path-walk oracles for tree optima (used against tree_opt)
# ---------------------------------------------------------------------------

def edge_list(t):
    return list(range(1, t.n_nodes))


def path_edges(t, u, v):
    """Edge node-ids on the leaf-to-leaf path, computed by ancestor walks."""
    a, b = t.point_leaf[u], t.point_leaf[v]
    up_a = []
    x = a
    while x != 0:
        up_a.append(x)
        x = t.parent[x]
    seen = {n: i for i, n in enumerate(up_a)}
    up_b = []
    x = b
    while x != 0 and x not in seen:
        up_b.append(x)
        x = t.parent[x]
    if x == 0:
        return set(up_a) | set(up_b)
    return set(up_a[: seen[x]]) | set(up_b)


def root_path_edges(t, r, u):
    return path_edges(t, r, u) if u != r else set()


def brute_tree_sf(t, pairs):
    used = set()
    for s, u in pairs:
        if s != u:
            used |= path_edges(t, s, u)
    return sum(t.edge_length(e) for e in used)


def brute_tree_sn(t, pairs, reqs):
    total = 0.0
    for e in edge_list(t):
        need = max((r for (s, u), r in zip(pairs, reqs) if s != u and e in path_edges(t, s, u)), default=0)
        total += t.edge_length(e) * need
    return total


def brute_tree_rob_multi(t, pairs, M):
    total = 0.0
    for e in edge_list(t):
        count = sum(1 for s, u in pairs if s != u and e in path_edges(t, s, u))
        total += t.edge_length(e) * min(M, count)
    return total


def brute_tree_rob_single(t, r, M, weights=None):
    """Enumerate per-edge buy/rent decisions over edges off r's root chain."""
    import itertools

    chain = set()
    x = t.point_leaf[r]
    while x != 0:
        chain.add(x)
        x = t.parent[x]
    edges = [e for e in edge_list(t) if e not in chain]
    usage = {e: 0 for e in edges}
    for p in t.point_leaf:
        w = (weights or {}).get(p, 1) if weights is not None else 1
        if p == r:
            continue
        for e in root_path_edges(t, r, p):
            if e in usage:
                usage[e] += w
    best = None
    if len(edges) <= 13:
        for buys in itertools.product((False, True), repeat=len(edges)):
            cost = sum(
                (M if b else usage[e]) * t.edge_length(e) for e, b in zip(edges, buys)
            )
            best = cost if best is None else min(best, cost)
        return best
    return sum(min(M, usage[e]) * t.edge_length(e) for e in edges)


def brute_tree_pcst(t, r, penalties):
    """Enumerate penalty subsets; connecting cost is the union of r-paths."""
    import itertools

    rows = list(penalties)
    best = None
    for keep in itertools.product((False, True), repeat=len(rows)):
        pay = sum(pi for (p, pi), k in zip(rows, keep) if not k)
        used = set()
        for (p, pi), k in zip(rows, keep):
            if k and p != r:
                used |= path_edges(t, r, p)
        cost = pay + sum(t.edge_length(e) for e in used)
        best = cost if best is None else min(best, cost)
    return best


def random_small_hst(rng, max_leaves=8, extended_chance=0.5):
    """Sample a valid HST over a random small Euclidean metric."""
    from ondesign.hst import extend_singleton_levels, sample_frt

    k = int(rng.integers(2, max_leaves + 1))
    pts = rng.random((k, 2)) * rng.uniform(1.0, 40.0)
    m = build_metric(pts)
    t = sample_frt(m, range(k), int(rng.integers(0, 2**31)))
    if rng.random() < extended_chance:
        t = extend_singleton_levels(t, -2 if rng.random() < 0.5 else -1)
    return m, t
