import json

import numpy as np
import pytest

from uspanner.cli import main, resolve_s
from uspanner.metric import Metric, load_points, save_points
from uspanner.spanner import SpannerGraph


def write_line(path, xs):
    save_points(path, np.array([[float(x), 0.0] for x in xs]))
    return str(path)


def read_json(path):
    return json.loads(path.read_text())


# -- generate -------------------------------------------------------------------

def test_generate_two_points(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["generate", "--n", "2", "--out", str(out)]) == 0
    rows = [r for r in out.read_text().splitlines() if not r.startswith("#")]
    assert len(rows) == 2
    assert load_points(out).n == 2


def test_generate_grid(tmp_path):
    out = tmp_path / "g.csv"
    assert main(["generate", "--n", "9", "--dist", "grid", "--out", str(out)]) == 0
    m = load_points(out)
    assert m.n == 9
    assert sorted(map(tuple, m.points.tolist())) == [(float(i), float(j)) for i in range(3) for j in range(3)]


def test_generate_clustered(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["generate", "--n", "60", "--dist", "clustered", "--seed", "4", "--out", str(out)]) == 0
    pts = load_points(out).points
    left, right = pts[pts[:, 0] < 50], pts[pts[:, 0] >= 50]
    assert len(left) == len(right) == 30

    def diam(a):
        return np.sqrt(((a[:, None] - a[None]) ** 2).sum(-1)).max()

    gap = np.sqrt(((left[:, None] - right[None]) ** 2).sum(-1)).min()
    assert max(diam(left), diam(right)) <= 1.0
    assert gap >= 98.0


def test_generate_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["generate", "--n", "20", "--seed", "3", "--out", str(a)])
    main(["generate", "--n", "20", "--seed", "3", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_generate_graph_metric(tmp_path):
    out = tmp_path / "m.csv"
    assert main(["generate", "--n", "30", "--metric", "graph", "--out", str(out)]) == 0
    assert Metric.from_matrix(np.loadtxt(out, delimiter=",", comments="#")).n == 30


@pytest.mark.parametrize("args", [["--n", "0"], ["--n", "5", "--dim", "0"]])
def test_generate_bad_counts(tmp_path, args, capsys):
    assert main(["generate", *args, "--out", str(tmp_path / "x.csv")]) == 2
    assert "error" in capsys.readouterr().err


# -- run --------------------------------------------------------------------------

def test_resolve_s():
    assert resolve_s(2.0, None) == 2.0
    assert resolve_s(None, 1.0) == 3.0
    for bad in [(None, None), (2.0, 1.0), (1.0, None), (None, -1.0)]:
        with pytest.raises(ValueError):
            resolve_s(*bad)


def test_run_collinear_three(tmp_path):
    pts = write_line(tmp_path / "p.csv", [0, 1, 2])
    out = tmp_path / "run"
    assert main(["run", "--points", pts, "--s", "2", "--out", str(out)]) == 0
    summary = read_json(out / "summary.json")
    assert summary["edges"] == 3
    assert summary["max_stretch"] == 1.0
    assert summary["messages"] == 6
    assert summary["ok"] and all(summary["checks"].values())
    for name in ("graph.json", "graph.dot", "graph.svg", "wspd.json", "events.jsonl", "hierarchy.json"):
        assert (out / name).exists(), name


def test_run_two_points(tmp_path):
    pts = write_line(tmp_path / "p.csv", [0, 1])
    out = tmp_path / "run"
    assert main(["run", "--points", pts, "--epsilon", "2", "--out", str(out)]) == 0
    summary = read_json(out / "summary.json")
    assert summary["edges"] == 1 and summary["messages"] == 2
    assert summary["s"] == 2.0


def test_run_matrix_has_no_svg(tmp_path):
    mat = tmp_path / "m.csv"
    main(["generate", "--n", "25", "--metric", "graph", "--out", str(mat)])
    out = tmp_path / "run"
    assert main(["run", "--matrix", str(mat), "--s", "2", "--out", str(out)]) == 0
    assert (out / "graph.dot").exists() and not (out / "graph.svg").exists()
    assert read_json(out / "summary.json")["metric"] == "explicit-matrix"


def test_run_sweep(tmp_path):
    out = tmp_path / "sweep"
    rc = main(["run", "--sweep", "20,40,60", "--s", "3", "--seed", "1", "--out", str(out)])
    assert rc == 0
    rows = read_json(out / "sweep.json")
    assert [r["n"] for r in rows] == [20, 40, 60]
    csv_rows = (out / "sweep.csv").read_text().splitlines()
    assert len(csv_rows) == 4 and csv_rows[0].startswith("n,s,edges")
    assert (out / "sweep.svg").exists()
    for n in (20, 40, 60):
        assert (out / f"n{n}" / "summary.json").exists()
        assert (out / f"n{n}" / "points.csv").exists()


def test_run_is_deterministic(tmp_path):
    args = ["run", "--n", "40", "--seed", "2", "--s", "2"]
    main([*args, "--out", str(tmp_path / "a")])
    main([*args, "--out", str(tmp_path / "b")])
    for name in ("summary.json", "graph.json", "events.jsonl", "graph.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_run_rejects_missing_s(tmp_path, capsys):
    with pytest.raises(SystemExit):
        main(["run", "--n", "5", "--out", str(tmp_path)])
    assert main(["run", "--n", "5", "--s", "1", "--out", str(tmp_path)]) == 2


# -- verify -----------------------------------------------------------------------

def test_verify_roundtrip(tmp_path):
    out = tmp_path / "run"
    main(["run", "--n", "60", "--seed", "5", "--s", "2", "--out", str(out)])
    rep = tmp_path / "rep.json"
    rc = main(["verify", "--graph", str(out / "graph.json"), "--points", str(out / "points.csv"),
               "--out", str(rep)])
    assert rc == 0
    assert read_json(rep) == read_json(out / "summary.json")["verification"]


def test_verify_corrupted_length(tmp_path):
    out = tmp_path / "run"
    main(["run", "--n", "30", "--s", "2", "--out", str(out)])
    data = read_json(out / "graph.json")
    data["edges"][0]["len"] *= 1.5
    (out / "graph.json").write_text(json.dumps(data))
    rep = tmp_path / "rep.json"
    rc = main(["verify", "--graph", str(out / "graph.json"), "--points", str(out / "points.csv"),
               "--out", str(rep)])
    assert rc == 1
    report = read_json(rep)
    assert not report["ok"] and report["separation"]["bad_edges"]


def test_verify_mst_only_graph(tmp_path):
    pts = write_line(tmp_path / "p.csv", [0, 1, 2])
    m = Metric.from_points(np.array([[0.0, 0], [1, 0], [2, 0]]))
    g = SpannerGraph(3, 2.0)
    g.add(m, 0, 1)
    g.add(m, 1, 2)
    g.save(tmp_path / "g.json")
    rep = tmp_path / "rep.json"
    rc = main(["verify", "--graph", str(tmp_path / "g.json"), "--points", pts, "--out", str(rep)])
    assert rc == 1
    report = read_json(rep)
    assert report["separation_ok"] is False
    assert [0, 2] in report["separation"]["uncovered_non_edges"]


def test_verify_schema_errors(tmp_path):
    pts = write_line(tmp_path / "p.csv", [0, 1, 2])
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["verify", "--graph", str(bad), "--points", pts]) == 2
    bad.write_text(json.dumps({"n": 3}))
    assert main(["verify", "--graph", str(bad), "--points", pts]) == 2
    g = SpannerGraph(5, 2.0)
    g.save(tmp_path / "g5.json")
    assert main(["verify", "--graph", str(tmp_path / "g5.json"), "--points", pts]) == 2
