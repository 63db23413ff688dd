import csv
import json

import numpy as np
import pytest

from isoscale.cli import main
from isoscale.dataset import ResponseMatrix, write_labels, write_matrix
from isoscale.experiments import ExperimentSpec
from isoscale.synthgen import GeneratorConfig, generate


@pytest.fixture()
def miskey_files(tmp_path, miskey_fixture):
    m, lab = miskey_fixture
    write_matrix(m, tmp_path / "m.csv")
    write_labels(lab, tmp_path / "l.csv")
    return tmp_path / "m.csv", tmp_path / "l.csv", lab


def rows_of(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def test_scan_ranks_miskeys_first(miskey_files, capsys):
    mpath, _, lab = miskey_files
    assert main(["scan", "--matrix", str(mpath)]) == 0
    out = capsys.readouterr().out
    assert "# mode=tau_directed_fit" in out and "# seed=0" in out
    rows = rows_of(out)
    assert [r["rank"] for r in rows[:3]] == ["1", "2", "3"]
    assert {r["item_id"] for r in rows[:3]} == set(lab.bad_items)
    assert list(rows[0]) == ["rank", "item_id", "m_iso", "suspicion"]


def test_scan_two_items(tmp_path, capsys):
    write_matrix(ResponseMatrix([[0, 1], [1, 1], [1, 0], [0, 0.0]]), tmp_path / "m.csv")
    assert main(["scan", "--matrix", str(tmp_path / "m.csv"), "--methods", "m_iso,phi"]) == 0
    rows = rows_of(capsys.readouterr().out)
    assert len(rows) == 2 and set(rows[0]) == {"rank", "item_id", "m_iso", "phi", "suspicion"}


def test_scan_writes_file(miskey_files, tmp_path):
    mpath, _, _ = miskey_files
    out = tmp_path / "scan.csv"
    assert main(["scan", "--matrix", str(mpath), "--out", str(out), "--threads", "2"]) == 0
    assert out.read_text().startswith("# command=scan")


def test_unknown_method_suggests(miskey_files, capsys):
    mpath, _, _ = miskey_files
    assert main(["scan", "--matrix", str(mpath), "--methods", "m_izo"]) == 2
    err = capsys.readouterr().err
    assert "m_iso" in err and "known methods" in err


@pytest.mark.parametrize("extra", [["--mode", "sideways"], ["--aggregation", "trimmed:0.7"],
                                   ["--strategy", "random:x"]])
def test_bad_options_are_usage_errors(miskey_files, extra):
    mpath, _, _ = miskey_files
    assert main(["scan", "--matrix", str(mpath), *extra]) == 2


def test_usage_and_data_exit_codes(tmp_path, capsys):
    assert main([]) == 2
    assert main(["scan"]) == 2
    assert main(["scan", "--matrix", str(tmp_path / "missing.csv")]) == 3
    (tmp_path / "bad.csv").write_text("q1,q2\n0,x\n1,0\n")
    assert main(["scan", "--matrix", str(tmp_path / "bad.csv")]) == 3
    err = capsys.readouterr().err
    assert "data error" in err


def test_label_reference_is_data_error(miskey_files, tmp_path):
    mpath, _, _ = miskey_files
    (tmp_path / "l2.csv").write_text("nope,1\n")
    assert main(["eval", "--matrix", str(mpath), "--labels", str(tmp_path / "l2.csv")]) == 3


def test_eval_auc_and_roc(miskey_files, tmp_path, capsys):
    mpath, lpath, _ = miskey_files
    rc = main(["eval", "--matrix", str(mpath), "--labels", str(lpath), "--methods", "m_iso,smc",
               "--roc-dir", str(tmp_path / "roc")])
    assert rc == 0
    rep = json.loads(capsys.readouterr().out)
    assert set(rep["results"]) == {"m_iso", "smc"}
    assert rep["results"]["m_iso"]["auc"] == 1.0 and rep["results"]["m_iso"]["n_bad"] == 3
    assert rep["config"]["methods"] == "m_iso,smc"
    assert (tmp_path / "roc" / "roc_m_iso.csv").exists() and (tmp_path / "roc" / "roc_smc.csv").exists()


def test_eval_single_class_is_degenerate(miskey_files, tmp_path, capsys):
    mpath, _, _ = miskey_files
    (tmp_path / "good.csv").write_text("item_id,is_bad\nq1,0\n")
    assert main(["eval", "--matrix", str(mpath), "--labels", str(tmp_path / "good.csv")]) == 4
    assert "degenerate" in capsys.readouterr().err


def test_negate_items_rescues_miskeys(miskey_files, capsys):
    mpath, lpath, lab = miskey_files
    main(["eval", "--matrix", str(mpath), "--labels", str(lpath)])
    before = json.loads(capsys.readouterr().out)["results"]["m_iso"]["auc"]
    main(["eval", "--matrix", str(mpath), "--labels", str(lpath), "--negate-items", ",".join(lab.bad_items)])
    after = json.loads(capsys.readouterr().out)["results"]["m_iso"]["auc"]
    assert after < before


def test_roc_command(miskey_files, capsys):
    mpath, lpath, _ = miskey_files
    assert main(["roc", "--matrix", str(mpath), "--labels", str(lpath)]) == 0
    rows = rows_of(capsys.readouterr().out)
    assert (rows[0]["fpr"], rows[0]["tpr"]) == ("0.0", "0.0") and (rows[-1]["fpr"], rows[-1]["tpr"]) == ("1.0", "1.0")


def test_simulate_deterministic(tmp_path, capsys):
    cfg = tmp_path / "g.json"
    cfg.write_text(json.dumps({"n": 40, "p": 8, "pathologies": {"miskey": 1}}))
    outs = []
    for k in range(2):
        assert main(["simulate", "--config", str(cfg), "--seed", "3", "--out", str(tmp_path / f"m{k}.csv"),
                     "--labels", str(tmp_path / f"l{k}.csv")]) == 0
        outs.append(((tmp_path / f"m{k}.csv").read_bytes(), (tmp_path / f"l{k}.csv").read_bytes()))
    assert outs[0] == outs[1]
    assert "# seed=3" in capsys.readouterr().err
    cfg.write_text(json.dumps({"n": 40, "typo": 1}))
    assert main(["simulate", "--config", str(cfg)]) == 2


def _spec_file(tmp_path, **kw):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(kw))
    return path


def test_experiment_outputs_and_rerun(tmp_path, capsys):
    sim = generate(GeneratorConfig(n=120, p=30, pathologies={"miskey": 3, "grading_noise": 2}, seed=2))
    write_matrix(sim.matrix, tmp_path / "m.csv")
    write_labels(sim.labels, tmp_path / "l.csv")
    spec = _spec_file(tmp_path, mode="np_grid", methods=["m_iso", "phi"], p_grid=[8, 16], n_fractions=[0.5, 1.1],
                      resamples=3, seed=7)
    outs = []
    for k, threads in enumerate(("1", "3")):
        d = tmp_path / f"run{k}"
        assert main(["experiment", "--matrix", str(tmp_path / "m.csv"), "--labels", str(tmp_path / "l.csv"),
                     "--spec", str(spec), "--out", str(d), "--threads", threads]) == 0
        outs.append([(d / f).read_bytes() for f in ("trials.csv", "summary.json", "resamples.json")])
    assert outs[0] == outs[1]
    err = capsys.readouterr().err
    assert "m_iso: 12/12 valid trials" in err and "# spec_hash=" in err
    want = ExperimentSpec.from_dict({"mode": "np_grid", "methods": ["m_iso", "phi"], "p_grid": [8, 16],
                                     "n_fractions": [0.5, 1.1], "resamples": 3, "seed": 7}).hash()
    assert outs[0][0].decode().splitlines()[0] == f"# spec_hash={want} seed=7"


def test_experiment_degenerate_cell_exit_4(tmp_path):
    vals = np.tile([[1.0] * 6, [0.0] * 6], (10, 1))
    write_matrix(ResponseMatrix(vals), tmp_path / "m.csv")
    (tmp_path / "l.csv").write_text("q1,1\nq2,1\n")
    spec = _spec_file(tmp_path, methods=["smc"], B=2, n_sub=10, p_sub=4)
    assert main(["experiment", "--matrix", str(tmp_path / "m.csv"), "--labels", str(tmp_path / "l.csv"),
                 "--spec", str(spec), "--out", str(tmp_path / "o")]) == 4
    assert (tmp_path / "o" / "trials.csv").exists()


def test_experiment_bad_spec(tmp_path, miskey_files):
    mpath, lpath, _ = miskey_files
    for raw in ({"mode": "np_grid", "replacement": "without", "n_fractions": [1.1]}, {"methods": ["m_izo"]},
                {"colour": 1}):
        spec = _spec_file(tmp_path, **raw)
        assert main(["experiment", "--matrix", str(mpath), "--labels", str(lpath), "--spec", str(spec)]) == 2


def test_measures(tmp_path, capsys):
    assert main(["measures", "--list"]) == 0
    listing = capsys.readouterr().out
    assert "phi" in listing and "kappa" in listing
    write_matrix(ResponseMatrix([[0, 1, 1], [1, 1, 0], [1, 0, 1], [0, 0, 0.0]]), tmp_path / "m.csv")
    assert main(["measures", "--name", "phi", "--matrix", str(tmp_path / "m.csv")]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert [r["item_id"] for r in rows] == ["q1", "q2", "q3"] and rows[0]["n_pairs"] == "2"
    assert main(["measures", "--name", "phii", "--matrix", str(tmp_path / "m.csv")]) == 2
