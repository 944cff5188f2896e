import json
import math
from pathlib import Path

import numpy as np
import pytest

from netselect.cli import main

REPORT_KEYS = {"method", "params", "selected_ids", "objective",
               "converged", "runtime_ms"}


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    rc = main(["synth", "--n", "40", "--m", "12", "--module-size", "3",
               "--effect", "1.0", "--seed", "3", "--out", str(d)])
    assert rc == 0
    return d


@pytest.fixture(scope="module")
def tasks_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("tasks")
    for t, seed in enumerate((4, 5)):
        rc = main(["synth", "--n", "36", "--m", "10", "--module-size", "3",
                   "--effect", "1.2", "--seed", str(seed),
                   "--out", str(root / f"t{t}")])
        assert rc == 0
    return root


def _read_json(path):
    return json.loads(Path(path).read_text())


def _read_beta(path):
    lines = Path(path).read_text().strip().split("\n")
    assert lines[0] == "feature_id\tbeta"
    out = {}
    for line in lines[1:]:
        fid, val = line.split("\t")
        out[fid] = float(val)
    return out


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def test_synth_writes_dataset(dataset):
    for name in ("features.tsv", "phenotype.tsv", "network.tsv", "planted.txt"):
        assert (dataset / name).exists()
    planted = (dataset / "planted.txt").read_text().split()
    assert len(planted) == 3


def test_synth_deterministic(tmp_path, dataset):
    other = tmp_path / "again"
    rc = main(["synth", "--n", "40", "--m", "12", "--module-size", "3",
               "--effect", "1.0", "--seed", "3", "--out", str(other)])
    assert rc == 0
    for name in ("features.tsv", "phenotype.tsv", "network.tsv", "planted.txt"):
        assert (other / name).read_bytes() == (dataset / name).read_bytes()


# ---------------------------------------------------------------------------
# scones / multi-scones
# ---------------------------------------------------------------------------


def test_scones_report_and_ids(dataset, tmp_path):
    out = tmp_path / "report.json"
    rc = main(["scones", "--features", str(dataset / "features.tsv"),
               "--phenotype", str(dataset / "phenotype.tsv"),
               "--network", str(dataset / "network.tsv"),
               "--eta", "500", "--lambda", "10", "--out", str(out)])
    assert rc == 0
    doc = _read_json(out)
    assert set(doc) == REPORT_KEYS
    assert doc["method"] == "scones"
    assert doc["params"]["eta"] == 500.0
    assert doc["params"]["lambda"] == 10.0
    assert doc["converged"] is True
    assert doc["runtime_ms"] >= 0.0
    assert 0 < len(doc["selected_ids"]) < 12
    # IDs come out in feature-index order
    idx = [int(f[1:]) for f in doc["selected_ids"]]
    assert idx == sorted(idx)
    ids = (tmp_path / "report.selected.txt").read_text().split()
    assert ids == doc["selected_ids"]


def test_scones_deterministic_selection(dataset, tmp_path):
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        rc = main(["scones", "--features", str(dataset / "features.tsv"),
                   "--phenotype", str(dataset / "phenotype.tsv"),
                   "--network", str(dataset / "network.tsv"),
                   "--eta", "500", "--lambda", "10", "--out", str(out)])
        assert rc == 0
        doc = _read_json(out)
        doc.pop("runtime_ms")
        outs.append(doc)
    assert outs[0] == outs[1]


def test_multi_scones_tasks(tasks_dir, tmp_path):
    out = tmp_path / "multi.json"
    rc = main(["multi-scones", "--tasks", str(tasks_dir),
               "--eta", "600", "--lambda", "10", "--mu", "50",
               "--out", str(out)])
    assert rc == 0
    doc = _read_json(out)
    assert doc["method"] == "multi-scones"
    assert doc["params"]["mu"] == 50.0
    assert [t["task"] for t in doc["tasks"]] == ["t0", "t1"]
    union = set()
    for t in doc["tasks"]:
        per_task = (tmp_path / f"multi.{t['task']}.selected.txt").read_text().split()
        assert per_task == t["selected_ids"]
        union.update(t["selected_ids"])
    assert doc["selected_ids"] == sorted(union)
    assert (tmp_path / "multi.selected.txt").read_text().split() == doc["selected_ids"]


# ---------------------------------------------------------------------------
# regression commands
# ---------------------------------------------------------------------------


def test_lasso_beta_file(dataset, tmp_path):
    out = tmp_path / "fit.json"
    rc = main(["lasso", "--features", str(dataset / "features.tsv"),
               "--phenotype", str(dataset / "phenotype.tsv"),
               "--lambda", "2.0", "--out", str(out)])
    assert rc == 0
    doc = _read_json(out)
    assert doc["method"] == "lasso"
    assert doc["params"] == {"lambda": 2.0}
    beta = _read_beta(tmp_path / "fit.beta.tsv")
    assert sorted(beta) == sorted(f"f{j}" for j in range(12))
    nonzero = sorted((fid for fid, b in beta.items() if b != 0.0),
                     key=lambda f: int(f[1:]))
    assert doc["selected_ids"] == nonzero


def test_lasso_requires_lambda_or_path(dataset, tmp_path, capsys):
    rc = main(["lasso", "--features", str(dataset / "features.tsv"),
               "--phenotype", str(dataset / "phenotype.tsv"),
               "--out", str(tmp_path / "x.json")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_lasso_lambda_path(dataset, tmp_path):
    out = tmp_path / "fit.json"
    rc = main(["lasso", "--features", str(dataset / "features.tsv"),
               "--phenotype", str(dataset / "phenotype.tsv"),
               "--lambda-path", "--out", str(out)])
    assert rc == 0
    rows = (tmp_path / "fit.path.tsv").read_text().strip().split("\n")
    assert rows[0] == "lambda\tnonzeros\tobjective\tconverged"
    assert len(rows) == 31
    lams = [float(r.split("\t")[0]) for r in rows[1:]]
    assert all(a > b for a, b in zip(lams, lams[1:]))
    assert lams[-1] == pytest.approx(lams[0] * 1e-3)
    doc = _read_json(out)
    assert doc["params"]["path_points"] == 30
    assert doc["params"]["lambda"] == pytest.approx(lams[-1])


def test_grace_cli(dataset, tmp_path):
    out = tmp_path / "g.json"
    rc = main(["grace", "--features", str(dataset / "features.tsv"),
               "--phenotype", str(dataset / "phenotype.tsv"),
               "--network", str(dataset / "network.tsv"),
               "--lambda1", "1.0", "--lambda2", "0.5", "--out", str(out)])
    assert rc == 0
    doc = _read_json(out)
    assert doc["params"] == {"lambda1": 1.0, "lambda2": 0.5}
    assert (tmp_path / "g.beta.tsv").exists()


def test_gfl_cli(dataset, tmp_path):
    out = tmp_path / "g.json"
    rc = main(["gfl", "--features", str(dataset / "features.tsv"),
               "--phenotype", str(dataset / "phenotype.tsv"),
               "--network", str(dataset / "network.tsv"),
               "--lambda", "1.5", "--eta", "0.4", "--out", str(out)])
    assert rc == 0
    doc = _read_json(out)
    assert doc["params"] == {"lambda": 1.5, "eta": 0.4}


def _write_groups(path, assignments):
    path.write_text("".join(f"{g}\t{f}\n" for g, f in assignments))


def test_ogl_cli(dataset, tmp_path):
    groups = tmp_path / "groups.tsv"
    _write_groups(groups, [("gA", f"f{j}") for j in range(6)]
                  + [("gB", f"f{j}") for j in range(6, 12)])
    out = tmp_path / "o.json"
    rc = main(["ogl", "--features", str(dataset / "features.tsv"),
               "--phenotype", str(dataset / "phenotype.tsv"),
               "--groups", str(groups), "--lambda", "4.0", "--out", str(out)])
    assert rc == 0
    doc = _read_json(out)
    assert doc["params"]["lambda"] == 4.0


def test_gggl_cli(dataset, tmp_path):
    groups = tmp_path / "groups.tsv"
    _write_groups(groups, [("gA", f"f{j}") for j in range(6)]
                  + [("gB", f"f{j}") for j in range(6, 12)])
    gnet = tmp_path / "gnet.tsv"
    gnet.write_text("gA\tgB\t1.0\n")
    out = tmp_path / "gg.json"
    rc = main(["gggl", "--features", str(dataset / "features.tsv"),
               "--phenotype", str(dataset / "phenotype.tsv"),
               "--groups", str(groups), "--gene-network", str(gnet),
               "--eta1", "0.5", "--eta2", "0.2", "--lambda-group", "1.5",
               "--out", str(out)])
    assert rc == 0
    doc = _read_json(out)
    assert doc["params"]["eta1"] == 0.5
    assert doc["params"]["eta2"] == 0.2


def test_mtlasso_cli(tasks_dir, tmp_path):
    out = tmp_path / "mt.json"
    rc = main(["mtlasso", "--tasks", str(tasks_dir),
               "--lambda", "0.15", "--out", str(out)])
    assert rc == 0
    doc = _read_json(out)
    assert doc["method"] == "mtlasso"
    b0 = _read_beta(tmp_path / "mt.t0.beta.tsv")
    b1 = _read_beta(tmp_path / "mt.t1.beta.tsv")
    assert sorted(b0) == sorted(b1)
    # block penalty keeps the support shared across tasks
    s0 = {f for f, v in b0.items() if v != 0.0}
    s1 = {f for f, v in b1.items() if v != 0.0}
    assert s0 == s1
    assert sorted(s0) == doc["selected_ids"]


# ---------------------------------------------------------------------------
# network construction and gene scoring
# ---------------------------------------------------------------------------


def test_build_network_sequence(tmp_path):
    pos = tmp_path / "positions.tsv"
    pos.write_text(
        "s1\tchr1\t100\n"
        "s2\tchr1\t5000\n"
        "s3\tchr2\t40\n"
        "s4\tchr2\t90000\n"
    )
    out = tmp_path / "net.tsv"
    rc = main(["build-network", "--positions", str(pos),
               "--mode", "sequence", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().split("\n")
    pairs = {tuple(line.split("\t")[:2]) for line in lines}
    assert pairs == {("s1", "s2"), ("s3", "s4")}


def test_build_network_gene_mode_requires_genes(tmp_path, capsys):
    pos = tmp_path / "positions.tsv"
    pos.write_text("s1\tchr1\t100\n")
    rc = main(["build-network", "--positions", str(pos),
               "--mode", "gene", "--out", str(tmp_path / "net.tsv")])
    assert rc == 2
    assert "requires --genes" in capsys.readouterr().err


def test_build_network_gene_mode(tmp_path):
    pos = tmp_path / "positions.tsv"
    pos.write_text(
        "s1\tchr1\t100\n"
        "s2\tchr1\t900\n"
        "s3\tchr1\t500000\n"
    )
    genes = tmp_path / "genes.tsv"
    genes.write_text("G1\tchr1\t50\t1200\n")
    out = tmp_path / "net.tsv"
    rc = main(["build-network", "--positions", str(pos),
               "--genes", str(genes), "--mode", "gene",
               "--window", "100", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().split("\n")
    pairs = {tuple(line.split("\t")[:2]) for line in lines}
    # s1-s2 both fall in G1; s3 is consecutive to s2 on chr1 (sequence
    # edges are a subset of gene mode)
    assert ("s1", "s2") in pairs
    assert ("s2", "s3") in pairs


def test_gene_pvals_and_modules(tmp_path):
    snp = tmp_path / "snp.tsv"
    snp.write_text("s1\t0.01\ns2\t0.2\ns3\t0.5\ns4\t0.001\n")
    mapping = tmp_path / "map.tsv"
    mapping.write_text("s1\tG1\ns2\tG1\ns3\tG2\ns4\tG2\n")
    scores_out = tmp_path / "genes_scored.tsv"
    rc = main(["gene-pvals", "--snp-pvals", str(snp), "--mapping", str(mapping),
               "--method", "min", "--out", str(scores_out)])
    assert rc == 0
    rows = [r.split("\t") for r in scores_out.read_text().strip().split("\n")]
    byg = {r[0]: (float(r[1]), float(r[2])) for r in rows}
    assert byg["G1"][0] == 0.01
    assert byg["G2"][0] == 0.001
    assert byg["G2"][1] > byg["G1"][1] > 0

    gnet = tmp_path / "gnet.tsv"
    gnet.write_text("G1\tG2\t1.0\n")
    mods_out = tmp_path / "modules.tsv"
    rc = main(["modules", "--gene-scores", str(scores_out),
               "--network", str(gnet), "--r", "0.1", "--out", str(mods_out)])
    assert rc == 0
    rows = [r.split("\t") for r in mods_out.read_text().strip().split("\n")]
    assert rows[0][0] == "1"
    scores = [float(r[1]) for r in rows]
    assert scores == sorted(scores, reverse=True)
    genes0 = rows[0][2].split(",")
    assert set(genes0) <= {"G1", "G2"}


def test_gene_pvals_deterministic_bytes(tmp_path):
    snp = tmp_path / "snp.tsv"
    snp.write_text("s1\t0.03\ns2\t0.4\n")
    mapping = tmp_path / "map.tsv"
    mapping.write_text("s1\tG1\ns2\tG1\n")
    a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    for out in (a, b):
        rc = main(["gene-pvals", "--snp-pvals", str(snp),
                   "--mapping", str(mapping), "--method", "mean",
                   "--out", str(out)])
        assert rc == 0
    assert a.read_bytes() == b.read_bytes()


# ---------------------------------------------------------------------------
# cross-validation command
# ---------------------------------------------------------------------------


def test_cv_lasso(dataset, tmp_path):
    out = tmp_path / "cv.json"
    rc = main(["cv", "--method", "lasso",
               "--features", str(dataset / "features.tsv"),
               "--phenotype", str(dataset / "phenotype.tsv"),
               "--folds", "3", "--seed", "1", "--out", str(out)])
    assert rc == 0
    doc = _read_json(out)
    assert set(doc) == REPORT_KEYS | {"cv"}
    cv = doc["cv"]
    assert cv["criterion"] == "product"
    assert cv["folds"] == 3
    assert cv["seed"] == 1
    assert "mean fold-selection size" in cv["admissibility_rule"]
    assert len(cv["table"]) == 7  # default single-axis grid
    chosen = [row for row in cv["table"] if row["chosen"]]
    assert len(chosen) == 1
    assert chosen[0]["params"] == doc["params"]
    for row in cv["table"]:
        if row["admissible"]:
            assert row["criterion_value"] <= chosen[0]["criterion_value"] + 1e-12
    assert (tmp_path / "cv.beta.tsv").exists()
    ids = (tmp_path / "cv.selected.txt").read_text().split()
    assert ids == doc["selected_ids"]


def test_cv_scones_explicit_grid(dataset, tmp_path):
    out = tmp_path / "cv.json"
    rc = main(["cv", "--method", "scones",
               "--features", str(dataset / "features.tsv"),
               "--phenotype", str(dataset / "phenotype.tsv"),
               "--network", str(dataset / "network.tsv"),
               "--grid-eta", "log:0.001:1:3", "--grid-lambda", "0.01,0.1",
               "--folds", "3", "--out", str(out)])
    assert rc == 0
    doc = _read_json(out)
    assert len(doc["cv"]["table"]) == 6
    assert set(doc["params"]) == {"eta", "lambda"}
    assert not (tmp_path / "cv.beta.tsv").exists()  # selection, no weights


def test_cv_mtlasso_writes_per_task_beta(tasks_dir, tmp_path):
    out = tmp_path / "cv.json"
    rc = main(["cv", "--method", "mtlasso", "--tasks", str(tasks_dir),
               "--grid-lambda", "0.05,0.3", "--folds", "3",
               "--out", str(out)])
    assert rc == 0
    doc = _read_json(out)
    assert (tmp_path / "cv.task0.beta.tsv").exists()
    assert (tmp_path / "cv.task1.beta.tsv").exists()
    assert doc["params"]["lambda"] in (0.05, 0.3)


def test_cv_requires_inputs(tmp_path, capsys):
    rc = main(["cv", "--method", "lasso", "--out", str(tmp_path / "x.json")])
    assert rc == 2
    assert "requires --features" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# error handling
# ---------------------------------------------------------------------------


def test_missing_file_exits_two(tmp_path, capsys):
    rc = main(["scones", "--features", str(tmp_path / "nope.tsv"),
               "--phenotype", str(tmp_path / "nope2.tsv"),
               "--network", str(tmp_path / "nope3.tsv"),
               "--eta", "0.1", "--lambda", "0.1",
               "--out", str(tmp_path / "out.json")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_malformed_input_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.tsv"
    bad.write_text("sample_id\tf0\ns0\tnot_a_number\ns1\t2.0\n")
    pheno = tmp_path / "ph.tsv"
    pheno.write_text("sample_id\tphenotype\ns0\t1.0\ns1\t2.0\n")
    net = tmp_path / "net.tsv"
    net.write_text("source\ttarget\tweight\n")
    rc = main(["scones", "--features", str(bad), "--phenotype", str(pheno),
               "--network", str(net), "--eta", "0.1", "--lambda", "0.1",
               "--out", str(tmp_path / "out.json")])
    assert rc == 2
    err = capsys.readouterr().err
    assert "error:" in err and "row 2" in err


def test_argparse_rejects_unknown_subcommand():
    with pytest.raises(SystemExit):
        main(["not-a-command"])
