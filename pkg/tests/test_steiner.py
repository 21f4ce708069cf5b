import numpy as np
import pytest

from conftest import euclid, line_metric
from ondesign.errors import InvalidCover, InvalidRequirement
from ondesign.hst import sample_frt
from ondesign.metric import RequestRecord, RunTrace, check_feasible
from ondesign.metric import RequestSequence
from ondesign.steiner import (
    check_bc_edge_property,
    check_class_separation,
    check_metagraph_acyclic,
    check_sn_decomposition,
    covers_from_tree,
    run_bc_sf,
    run_greedy_st,
    run_sn,
)


def test_greedy_line_example():
    m = line_metric([0, 1, 3])
    sol, trace = run_greedy_st(m, 0, [1, 2])
    assert trace.total_cost() == 3.0
    assert [(r.a, r.klass) for r in trace.records] == [(1.0, 0), (2.0, 1)]
    assert sol.bought == {(0, 1): 1, (1, 2): 1}


def test_greedy_single_arrival():
    m = line_metric([0, 1])
    _, trace = run_greedy_st(m, 0, [1])
    assert trace.total_cost() == 1.0 and trace.records[0].klass == 0


def test_greedy_coincident_arrivals():
    m = line_metric([0, 4, 4])
    _, trace = run_greedy_st(m, 0, [1, 2])
    assert [r.a for r in trace.records] == [4.0, 0.0]
    assert trace.records[1].decision == "auto"
    assert trace.total_cost() == 4.0


def test_greedy_share_identity():
    rng = np.random.default_rng(0)
    m = euclid(rng.random((12, 2)) * 10)
    _, trace = run_greedy_st(m, 0, list(range(1, 12)))
    share = sum(2.0 ** (r.klass + 1) for r in trace.records if r.klass is not None)
    assert trace.total_cost() <= share


def test_bc_single_pair():
    m = line_metric([0, 1])
    sol, trace = run_bc_sf(m, [(0, 1)])
    assert trace.total_cost() == 1.0
    assert trace.summary["A"] == {0: [(0, 1)]}


def test_bc_far_pairs():
    m = line_metric([0, 1, 10, 11.5])
    sol, trace = run_bc_sf(m, [(0, 1), (2, 3)])
    assert trace.total_cost() == 2.5


def test_bc_repeat_pair_idempotent():
    m = line_metric([0, 1, 10, 11.5])
    sol, trace = run_bc_sf(m, [(0, 1), (2, 3), (0, 1)])
    assert trace.total_cost() == 2.5
    assert trace.records[2].cost == 0.0


def test_bc_connects_every_pair():
    rng = np.random.default_rng(3)
    m = euclid(rng.random((14, 2)) * 6)
    pairs = [tuple(map(int, rng.choice(14, size=2, replace=False))) for _ in range(8)]
    sol, trace = run_bc_sf(m, pairs)
    assert all(r.feasible_now for r in trace.records)
    seq = RequestSequence(problem="SteinerForest", requests=tuple(pairs))
    assert all(check_feasible(sol, seq, m))


def test_bc_edge_property_random():
    rng = np.random.default_rng(4)
    m = euclid(rng.random((12, 2)) * 9)
    pairs = [tuple(map(int, rng.choice(12, size=2, replace=False))) for _ in range(7)]
    _, trace = run_bc_sf(m, pairs)
    assert check_bc_edge_property(trace, m) == []


def test_sn_examples(two_point_metric):
    sol, trace = run_sn(two_point_metric, [(0, 1, 5)])
    assert trace.total_cost() == 8.0 and sol.bought == {(0, 1): 8}
    sol, trace = run_sn(two_point_metric, [(0, 1, 1)])
    assert trace.total_cost() == 2.0
    sol, trace = run_sn(two_point_metric, [(0, 1, 1), (0, 1, 5)])
    assert trace.total_cost() == 10.0 and sol.bought == {(0, 1): 10}


def test_sn_invalid_requirement(two_point_metric):
    with pytest.raises(InvalidRequirement):
        run_sn(two_point_metric, [(0, 1, 0)])


def test_sn_feasibility_and_decomposition():
    rng = np.random.default_rng(9)
    m = euclid(rng.random((10, 2)) * 8)
    reqs = [
        (int(a), int(b), int(rng.integers(1, 12)))
        for a, b in (rng.choice(10, size=2, replace=False) for _ in range(8))
    ]
    sol, trace = run_sn(m, reqs)
    assert all(r.feasible_now for r in trace.records)
    seq = RequestSequence(problem="SteinerNetwork", requests=tuple(reqs))
    assert all(check_feasible(sol, seq, m))
    assert check_sn_decomposition(trace, sol) == []


def test_class_separation_pass_and_forged():
    m = line_metric([0, 1, 3])
    _, trace = run_greedy_st(m, 0, [1, 2])
    assert check_class_separation(trace, m) == []
    forged = RunTrace(problem="SteinerTree", root=0)
    forged.add(RequestRecord(idx=0, decision="buy", points=(1,), a=2.0, klass=1, cost=2.0))
    forged.add(RequestRecord(idx=1, decision="buy", points=(2,), a=2.0, klass=1, cost=2.0))
    # points 1 and 2 are at distance 2 in this metric: fine; forge closer ones
    m2 = line_metric([0, 5, 6])
    assert check_class_separation(forged, m2) != []  # d(1,2)=1 < 2^1


def test_class_separation_empty():
    trace = RunTrace(problem="SteinerTree", root=0)
    m = line_metric([0, 1])
    assert check_class_separation(trace, m) == []


def test_metagraph_single_pair(two_point_metric):
    _, trace = run_bc_sf(two_point_metric, [(0, 1)])
    t = sample_frt(two_point_metric, [0, 1], seed=1)
    covers = covers_from_tree(t, trace)
    assert check_metagraph_acyclic(trace, covers, two_point_metric) == []


def test_metagraph_two_far_pairs():
    m = line_metric([0, 1, 10, 11.5])
    _, trace = run_bc_sf(m, [(0, 1), (2, 3)])
    t = sample_frt(m, [0, 1, 2, 3], seed=5)
    covers = covers_from_tree(t, trace)
    assert check_metagraph_acyclic(trace, covers, m) == []


def test_metagraph_forged_triangle():
    m = line_metric([0, 1, 2])
    forged = RunTrace(problem="SteinerForest")
    forged.summary = {
        "A": {1: [(0, 1), (1, 2), (0, 2)]},
        "occ": [(0, 1), (1, 1), (2, 1)],
        "zero_merges": [],
    }
    covers = {1: [{0}, {1}, {2}]}
    out = check_metagraph_acyclic(forged, covers, m)
    assert any("meta-cycle" in v for v in out)


def test_metagraph_invalid_cover():
    m = line_metric([0, 1, 2])
    forged = RunTrace(problem="SteinerForest")
    forged.summary = {"A": {1: [(0, 1)]}, "occ": [(0, 1), (1, 1)], "zero_merges": []}
    with pytest.raises(InvalidCover):
        check_metagraph_acyclic(forged, {1: [{0, 2}, {1}]}, m)  # diam 2 >= 2^1
    with pytest.raises(InvalidCover):
        check_metagraph_acyclic(forged, {1: [{0}]}, m)  # misses terminal 1


def test_bc_metagraph_many_random():
    rng = np.random.default_rng(17)
    for trial in range(15):
        n = int(rng.integers(6, 16))
        m = euclid(rng.random((n, 2)) * rng.uniform(2, 20))
        pairs = [
            tuple(map(int, rng.choice(n, size=2, replace=False)))
            for _ in range(int(rng.integers(2, 9)))
        ]
        _, trace = run_bc_sf(m, pairs)
        pts = sorted({p for pr in pairs for p in pr})
        t = sample_frt(m, pts, seed=trial)
        covers = covers_from_tree(t, trace)
        assert check_metagraph_acyclic(trace, covers, m) == []
