import json

import pytest

from ondesign.cli import main


def write_instance(tmp_path, doc, name="inst.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def sn_single_pair(tmp_path):
    return write_instance(
        tmp_path,
        {"matrix": [[0, 1], [1, 0]], "problem": "SteinerNetwork", "requests": [[0, 1, 5]]},
    )


def test_run_sn_cost_record(tmp_path):
    inst = sn_single_pair(tmp_path)
    out = tmp_path / "res.json"
    rc = main(["run", inst, "--algo", "SteinerNetwork", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["cost"]["total"] == 8.0
    assert doc["feasible"] is True
    assert (tmp_path / "res.json.trace.jsonl").exists()


def test_run_empty_requests(tmp_path):
    inst = write_instance(
        tmp_path, {"matrix": [[0, 1], [1, 0]], "problem": "SteinerForest", "requests": []}
    )
    out = tmp_path / "res.json"
    rc = main(["run", inst, "--algo", "SteinerForest", "--out", str(out)])
    assert rc == 0
    assert json.loads(out.read_text())["cost"]["total"] == 0.0


def test_run_wrong_algo_exit_2(tmp_path):
    inst = sn_single_pair(tmp_path)
    assert main(["run", inst, "--algo", "SteinerTree", "--out", str(tmp_path / "x.json")]) == 2


def test_run_schema_error_exit_2(tmp_path):
    inst = write_instance(
        tmp_path,
        {"matrix": [[0, 1], [1, 0]], "problem": "SteinerTree", "root": 0, "requests": [1], "junk": 0},
    )
    assert main(["run", inst, "--algo", "SteinerTree", "--out", str(tmp_path / "x.json")]) == 2


def test_gen_then_verify_roundtrip(tmp_path):
    inst = tmp_path / "gen.json"
    rc = main([
        "gen", "--family", "euclidean", "--problem", "SROB", "--n", "12",
        "--count", "8", "--M", "2", "--seed", "5", "--out", str(inst),
    ])
    assert rc == 0
    out = tmp_path / "rep.json"
    rc = main(["verify", str(inst), "--trials", "6", "--seed", "1", "--out", str(out)])
    assert rc == 0
    rep = json.loads(out.read_text())
    assert rep["violations"] == 0
    assert rep["max_ratios"]["share_vs_tree"] <= 8.0 + 1e-9


def test_verify_forged_trace_exit_4(tmp_path):
    inst = write_instance(
        tmp_path,
        {"matrix": [[0.0, 5.0, 6.0], [5.0, 0.0, 1.0], [6.0, 1.0, 0.0]],
         "problem": "SteinerTree", "root": 0, "requests": [1, 2]},
    )
    trace_path = tmp_path / "forged.jsonl"
    rows = [
        {"idx": 0, "decision": "buy", "points": [1], "a": 2.1, "klass": 1, "cost": 2.1,
         "witnesses": [], "witnesses_t": [], "attach": 0, "edges": [[1, 0, None]],
         "rho": None, "pi": None, "sigma_hat": None, "sigma": None, "opened": None,
         "rent_endpoint": None, "level": None, "copies": None, "feasible_now": True},
        {"idx": 1, "decision": "buy", "points": [2], "a": 2.2, "klass": 1, "cost": 2.2,
         "witnesses": [], "witnesses_t": [], "attach": 0, "edges": [[2, 0, None]],
         "rho": None, "pi": None, "sigma_hat": None, "sigma": None, "opened": None,
         "rent_endpoint": None, "level": None, "copies": None, "feasible_now": True},
    ]
    trace_path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    rc = main([
        "verify", inst, "--trace", str(trace_path), "--trials", "2",
        "--out", str(tmp_path / "rep.json"),
    ])
    assert rc == 4  # two class-1 terminals at distance 1 violate separation


def test_ratio_diamond_monotone(tmp_path):
    out = tmp_path / "ratio.csv"
    rc = main(["ratio", "--family", "diamond", "--sizes", "1,2,3", "--out", str(out)])
    assert rc == 0
    lines = [l for l in out.read_text().splitlines() if l and not l.startswith("#")]
    ratios = [float(l.split(",")[6]) for l in lines[1:]]
    assert ratios == sorted(ratios) and ratios[0] < ratios[-1]


def test_ratio_cap_exceeded_exit_5(tmp_path):
    rc = main([
        "ratio", "--family", "euclidean", "--problem", "SteinerNetwork",
        "--sizes", "12", "--trials", "1", "--out", str(tmp_path / "r.csv"),
    ])
    assert rc == 5


def test_embed_two_point_exact_stretch(tmp_path):
    inst = write_instance(
        tmp_path,
        {"matrix": [[0, 1], [1, 0]], "problem": "SteinerForest", "requests": [[0, 1]]},
    )
    out = tmp_path / "emb.json"
    rc = main(["embed", inst, "--trials", "10", "--out", str(out)])
    assert rc == 0
    rep = json.loads(out.read_text())
    assert rep["valid_rate"] == 1.0
    assert rep["max_mean_stretch"] == pytest.approx(2.0)


def test_determinism_across_jobs(tmp_path):
    inst = tmp_path / "gen.json"
    main([
        "gen", "--family", "euclidean", "--problem", "MROB", "--n", "14",
        "--count", "7", "--M", "2", "--seed", "9", "--out", str(inst),
    ])
    outs = []
    for jobs in (1, 4, 1):
        out = tmp_path / f"rep{jobs}{len(outs)}.json"
        rc = main(["verify", str(inst), "--trials", "8", "--seed", "3",
                   "--jobs", str(jobs), "--out", str(out)])
        assert rc == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_gen_diamond_instance(tmp_path):
    inst = tmp_path / "d.json"
    rc = main(["gen", "--family", "diamond", "--depth", "2", "--out", str(inst)])
    assert rc == 0
    rc = main(["run", str(inst), "--algo", "SteinerTree", "--out", str(tmp_path / "r.json")])
    assert rc == 0


def test_verify_greedy_three_collinear(tmp_path):
    # matrix [[0,1,3],[1,0,2],[3,2,0]]: ratios <= 4 across 20 trees, exit 0
    inst = write_instance(
        tmp_path,
        {"matrix": [[0, 1, 3], [1, 0, 2], [3, 2, 0]], "problem": "SteinerTree",
         "root": 0, "requests": [1, 2]},
    )
    out = tmp_path / "rep.json"
    rc = main(["verify", inst, "--trials", "20", "--out", str(out)])
    assert rc == 0
    rep = json.loads(out.read_text())
    assert rep["max_ratios"]["cost_vs_tree"] <= 4.0 + 1e-9


def test_embed_single_point(tmp_path):
    inst = write_instance(
        tmp_path,
        {"matrix": [[0]], "problem": "SteinerTree", "root": 0, "requests": [0]},
    )
    out = tmp_path / "emb.json"
    rc = main(["embed", inst, "--trials", "5", "--out", str(out)])
    assert rc == 0
    rep = json.loads(out.read_text())
    assert rep["pairs"] == 0 and rep["valid_rate"] == 1.0
