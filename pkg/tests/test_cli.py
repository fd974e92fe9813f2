import csv
import json

import numpy as np
import pytest

from fsurv import dataio
from fsurv.cli import derive_seed, main
from fsurv.forest import load_forest
from fsurv.fpca import ScoreMatrix, load_basis


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data, fp, tree, forest = (root / x for x in ("data", "fpca", "tree", "forest"))
    assert run("simulate", "--scenario", "A", "--n", 80, "--seed", 5, "--out", data) == 0
    assert run("fpca", "--data", data, "--p", 4, "--out", fp) == 0
    assert run("grow-tree", "--data", data, "--fpca", fp, "--out", tree) == 0
    assert run("grow-forest", "--data", data, "--fpca", fp, "--trees", 30, "--seed", 5, "--out", forest) == 0
    return root


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_simulate_outputs_reload(pipeline):
    data = pipeline / "data"
    long = dataio.load_longitudinal(data / "longitudinal.csv")
    surv = dataio.load_survival(data / "survival.csv")
    truth = json.loads((data / "truth.json").read_text())
    ds = dataio.join(long, surv, truth["window"])
    assert len(ds) == 80 and ds.status.sum() == 32


def test_fpca_outputs_reload(pipeline):
    basis = load_basis(pipeline / "fpca" / "basis.json")
    scores = ScoreMatrix.from_csv(pipeline / "fpca" / "scores.csv")
    assert basis.p == 4 and scores.values.shape == (80, 4)
    assert set(json.loads((pipeline / "fpca" / "basis.json").read_text())) == {
        "grid", "mean", "eigenvalues", "eigenfunctions", "sigma2"}


def test_tree_export_and_report_idempotent(pipeline, tmp_path):
    src = pipeline / "tree" / "tree.json"
    payload = json.loads(src.read_text())
    assert "discrimination" in payload["nodes"][0]
    assert run("report", "--tree", src, "--out", tmp_path) == 0
    assert (tmp_path / "tree.json").read_bytes() == src.read_bytes()
    assert _rows(tmp_path / "splits.csv")[0] == ["node", "depth", "feature", "threshold", "statistic", "p_value", "n"]
    rows = _rows(pipeline / "tree" / "terminals.csv")
    assert rows[0] == ["node", "t", "sf", "chf"] and len(rows) > 1


def test_forest_outputs(pipeline):
    f = load_forest(pipeline / "forest" / "forest.jsonl")
    metrics = json.loads((pipeline / "forest" / "metrics.json").read_text())
    assert f.n_trees == 30 == metrics["n_trees"]
    assert f.seed == derive_seed(5, "grow-forest", "forest")
    if metrics["oob_integrated_brier"] is not None:
        assert _rows(pipeline / "forest" / "oob_sf.csv")[0] == ["id", "t", "sf"]


def test_predict_lfsdc_and_explanations(pipeline, tmp_path):
    data, fp, forest = pipeline / "data", pipeline / "fpca", pipeline / "forest" / "forest.jsonl"
    assert run("predict", "--forest", forest, "--data", data, "--fpca", fp, "--out", tmp_path / "p") == 0
    rows = _rows(tmp_path / "p" / "predictions.csv")
    assert rows[0] == ["id", "t", "sf", "chf"]
    assert run("lfsdc", "--tree", pipeline / "tree" / "tree.json", "--fpca", fp, "--node", "0",
               "--out", tmp_path / "l") == 0
    assert _rows(tmp_path / "l" / "lfsdc_node0.csv")[0] == ["t", "value"]
    assert _rows(tmp_path / "l" / "profile_node0.csv") == [["depth", "d2"]]
    unit = dataio.load_survival(data / "survival.csv")[0].subject_id
    assert run("explain-local", "--forest", forest, "--unit", unit, "--features", "pc1,x3", "--background", 20,
               "--lambda", "1.0", "--out", tmp_path / "s") == 0
    summary = _rows(tmp_path / "s" / f"shap_summary_{unit}.csv")
    assert summary[0] == ["feature", "interval", "phi_star_at_ta", "phi_star_at_tb", "tsd", "tnsd"]
    assert {r[0] for r in summary[1:]} == {"pc1", "x3"}
    for r in summary[1:]:
        a, b = json.loads(r[1])
        assert float(r[5]) == float(r[4]) / (b - a)
    shap_rows = _rows(tmp_path / "s" / f"shap_{unit}.csv")
    by_t = {}
    for t, _, phi, _ in shap_rows[1:]:
        by_t[t] = by_t.get(t, 0.0) + abs(float(phi))
    assert len(by_t) > 0
    assert run("explain-local", "--forest", forest, "--unit", unit, "--mode", "kernel", "--budget", 40,
               "--background", 10, "--out", tmp_path / "k") == 0


def test_explain_global_summary(pipeline, tmp_path):
    forest = pipeline / "forest" / "forest.jsonl"
    code = run("explain-global", "--forest", forest, "--repeats", 2, "--features", "pc1,pc2", "--out", tmp_path)
    f = load_forest(forest)
    seen = np.zeros(f.features.values.shape[0], dtype=bool)
    for oob in f.oob_indices:
        seen[oob] = True
    if not seen.all():
        assert code == 2
        return
    assert code == 0
    rows = _rows(tmp_path / "pfi_summary.csv")
    assert rows[0] == ["feature", "interval", "fi_at_ta", "fi_at_tb", "mtgd", "mtngd"]
    for r in rows[1:]:
        a, b = json.loads(r[1])
        assert float(r[5]) == float(r[4]) / (b - a)
    assert _rows(tmp_path / "pfi_pc1.csv")[0] == ["t", "fi_bar"]
    assert [r[1] for r in _rows(tmp_path / "pfi_ranking.csv")[1:]] in (["pc1", "pc2"], ["pc2", "pc1"])


def test_forest_report(pipeline, tmp_path):
    assert run("report", "--forest", pipeline / "forest" / "forest.jsonl", "--out", tmp_path) == 0
    report = json.loads((tmp_path / "forest_report.json").read_text())
    assert report["n_trees"] == 30 and sum(report["root_features"].values()) <= 30


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--scenario", "C", "--out", "x"],
        ["simulate", "--bogus", "--out", "x"],
        ["simulate"],
        ["nonsense"],
        [],
        ["report", "--out", "x"],
    ],
)
def test_usage_errors_exit_one(argv, tmp_path, capsys):
    argv = [str(tmp_path / a) if a == "x" else a for a in argv]
    assert main(argv) == 1
    assert "usage" in capsys.readouterr().err.lower() or argv[:1] == ["report"]


def test_data_errors_exit_two(tmp_path, pipeline):
    (tmp_path / "bad").mkdir()
    (tmp_path / "bad" / "longitudinal.csv").write_text("id,time,value\na,1,x\n")
    (tmp_path / "bad" / "survival.csv").write_text("id,time,status\na,2,1\n")
    assert run("fpca", "--data", tmp_path / "bad", "--out", tmp_path / "o") == 2
    assert run("fpca", "--data", tmp_path / "missing", "--out", tmp_path / "o") == 2
    assert run("explain-local", "--forest", pipeline / "forest" / "forest.jsonl", "--unit", "nobody",
               "--out", tmp_path / "o") == 2


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "simulate" in capsys.readouterr().out


def test_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 12, "scenario": "B", "out": str(tmp_path / "sim")}))
    assert run("simulate", "--config", cfg, "--seed", 1) == 0
    assert len(dataio.load_survival(tmp_path / "sim" / "survival.csv")) == 12
    assert run("simulate", "--config", cfg, "--n", 20, "--out", tmp_path / "sim2") == 0
    assert len(dataio.load_survival(tmp_path / "sim2" / "survival.csv")) == 20
    cfg.write_text(json.dumps({"trees": 5}))
    assert run("simulate", "--config", cfg, "--out", tmp_path / "sim3") == 1


def test_seed_controls_output_and_svg_is_stable(tmp_path):
    for tag in ("a", "b"):
        assert run("simulate", "--n", 15, "--seed", 3, "--svg", "--out", tmp_path / tag) == 0
    for name in ("longitudinal.csv", "survival.csv", "truth.json", "trajectories.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert run("simulate", "--n", 15, "--seed", 4, "--out", tmp_path / "c") == 0
    assert (tmp_path / "c" / "survival.csv").read_bytes() != (tmp_path / "a" / "survival.csv").read_bytes()


def test_derive_seed_is_stable():
    assert derive_seed(1, "simulate", "sim") == derive_seed(1, "simulate", "sim")
    assert len({derive_seed(1, c, "m", i) for c in ("a", "b") for i in range(3)}) == 6
