import numpy as np
import pytest

from ondesign.errors import DepthTooLarge
from ondesign.exact import dreyfus_wagner_st
from ondesign.generators import gen_diamond_lb, gen_euclidean, gen_graph_metric, gen_requests
from ondesign.metric import build_metric, solution_cost
from ondesign.steiner import run_greedy_st
from ondesign.verify import run_problem


def test_gen_euclidean_deterministic():
    m1, p1 = gen_euclidean(10, seed=42)
    m2, p2 = gen_euclidean(10, seed=42)
    assert np.array_equal(m1.d, m2.d) and np.array_equal(p1, p2)
    m3, _ = gen_euclidean(10, seed=43)
    assert not np.array_equal(m1.d, m3.d)


def test_gen_euclidean_normalized():
    for seed in range(5):
        m, _ = gen_euclidean(12, seed=seed)
        pos = m.d[m.d > 0]
        assert pos.min() == pytest.approx(1.0)
        # round-trips through build_metric untouched
        again = build_metric(m.d)
        assert np.allclose(again.d, m.d)


def test_gen_euclidean_tiny():
    m, _ = gen_euclidean(1, seed=0)
    assert m.n == 1
    m2, _ = gen_euclidean(2, seed=0)
    assert m2.dist(0, 1) == pytest.approx(1.0)


def test_gen_graph_metric_valid():
    for seed in range(4):
        m = gen_graph_metric(12, density=0.2, seed=seed)
        assert np.isfinite(m.d).all()  # connected
        again = build_metric(m.d)
        assert np.allclose(again.d, m.d)


def test_gen_requests_determinism_and_shapes():
    m, _ = gen_euclidean(10, seed=1)
    for problem in ("SteinerTree", "SteinerForest", "SteinerNetwork", "SROB", "MROB", "PCST", "CFL"):
        a = gen_requests(problem, m, 6, 7, {"M": 2.0, "R_max": 4, "n_facilities": 3})
        b = gen_requests(problem, m, 6, 7, {"M": 2.0, "R_max": 4, "n_facilities": 3})
        assert a.requests == b.requests
        a.validate_points(m.n)
        sol, trace = run_problem(m, a)
        assert solution_cost(sol, a, m).total >= 0.0


def test_gen_requests_sn_rmax_one():
    m, _ = gen_euclidean(6, seed=2)
    seq = gen_requests("SteinerNetwork", m, 5, 3, {"R_max": 1})
    assert all(r == 1 for _, _, r in seq.requests)


def test_gen_requests_count_zero():
    m, _ = gen_euclidean(5, seed=0)
    seq = gen_requests("SteinerTree", m, 0, 0)
    assert seq.requests == ()


def test_diamond_depth_zero():
    m, seq, info = gen_diamond_lb(0)
    sol, trace = run_greedy_st(m, seq.root, seq.requests)
    assert trace.total_cost() == pytest.approx(info["opt"])  # ratio 1


def test_diamond_depth_one():
    m, seq, info = gen_diamond_lb(1)
    assert m.n == 4  # path 0,1,2 plus one twin
    sol, trace = run_greedy_st(m, seq.root, seq.requests)
    ratio = trace.total_cost() / info["opt"]
    assert ratio == pytest.approx(1.5)
    # exhaustive check against the exact oracle
    opt = dreyfus_wagner_st(m, set(seq.requests) | {0})
    assert opt == pytest.approx(info["opt"])


def test_diamond_ratios_strictly_increase():
    prev = 0.0
    for depth in range(1, 6):
        m, seq, info = gen_diamond_lb(depth)
        _, trace = run_greedy_st(m, seq.root, seq.requests)
        ratio = trace.total_cost() / info["opt"]
        assert ratio == pytest.approx(1 + depth / 2)
        assert ratio > prev
        prev = ratio


def test_diamond_depth_cap():
    with pytest.raises(DepthTooLarge):
        gen_diamond_lb(11)


def test_diamond_closure_passes_build_metric():
    # generated metrics revalidate unchanged (triangle, symmetry, min = 1)
    for depth in (2, 4):
        m, _, _ = gen_diamond_lb(depth)
        again = build_metric(m.d)
        assert np.array_equal(again.d, m.d) and again.scale == 1.0


def test_single_terminal_ratio_is_one():
    m, _ = gen_euclidean(3, seed=6)
    seq = gen_requests("SteinerTree", m, 1, 11, {})
    sol, trace = run_problem(m, seq)
    opt = dreyfus_wagner_st(m, set(seq.requests) | {0})
    cost = solution_cost(sol, seq, m).total
    if opt > 0:
        assert cost / opt == 1.0
