import csv
import json
import os

import numpy as np
import pytest

from crossphish.config import RunConfig
from crossphish.errors import ConfigError
from crossphish.experiments import (
    CANONICAL_IDS,
    DIVERGENCE_PAIRS,
    ExperimentSpec,
    balanced_explanation_sample,
    canonical_matrix,
)
from crossphish.table import DataTable


def test_canonical_matrix_layout():
    specs = canonical_matrix("xgb", seed=0, explain=True)
    assert [s.id for s in specs] == list(CANONICAL_IDS)
    by_id = {s.id: s for s in specs}
    assert by_id["Exp-1"].feature_set == "all"
    assert by_id["Exp-2"].feature_set == "all"
    assert all(by_id[i].feature_set == "common"
               for i in CANONICAL_IDS if i not in ("Exp-1", "Exp-2"))
    assert (by_id["Exp-5"].train_source, by_id["Exp-5"].test_source) == \
        ("d1", "d2")
    assert (by_id["Exp-6"].train_source, by_id["Exp-6"].test_source) == \
        ("d2", "d1")
    assert all(by_id[i].train_source == "merged"
               for i in ("Exp-7.1", "Exp-7.2", "Exp-7.3"))


def test_all_features_cross_source_rejected():
    with pytest.raises(ConfigError):
        ExperimentSpec(id="bad", feature_set="all", train_source="d1",
                       test_source="d2")
    with pytest.raises(ConfigError):
        ExperimentSpec(id="bad", feature_set="full", train_source="d1",
                       test_source="d1")


def test_divergence_pairs_cover_spec_contrasts():
    assert ("Exp-3", "Exp-4") in DIVERGENCE_PAIRS
    assert ("Exp-4", "Exp-5") in DIVERGENCE_PAIRS
    assert ("Exp-3", "Exp-6") in DIVERGENCE_PAIRS
    assert ("Exp-7.1", "Exp-3") in DIVERGENCE_PAIRS
    assert ("Exp-7.1", "Exp-4") in DIVERGENCE_PAIRS
    assert ("Exp-7.1", "Exp-7.2") in DIVERGENCE_PAIRS


def _two_class_table(n_pos=30, n_neg=50):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(n_pos + n_neg, 3))
    y = [1] * n_pos + [0] * n_neg
    return DataTable(X, y, ("a", "b", "c"))


def test_balanced_sample_interleaves_classes():
    t = _two_class_table()
    out = balanced_explanation_sample(t, n_per_class=10, seed=1)
    assert out.n_rows == 20
    assert list(out.y[0::2]) == [1] * 10
    assert list(out.y[1::2]) == [0] * 10


def test_balanced_sample_clamps_with_warning():
    # the sample stays balanced: both classes shrink to the scarcer one
    t = _two_class_table(n_pos=4, n_neg=50)
    with pytest.warns(UserWarning):
        out = balanced_explanation_sample(t, n_per_class=10, seed=1)
    assert (out.y == 1).sum() == 4
    assert (out.y == 0).sum() == 4


def test_balanced_sample_deterministic():
    t = _two_class_table()
    a = balanced_explanation_sample(t, n_per_class=8, seed=5)
    b = balanced_explanation_sample(t, n_per_class=8, seed=5)
    np.testing.assert_array_equal(a.X, b.X)


# ---- whole-matrix checks against the shared small run ----

def _artifact(summary, exp_id, name):
    return summary["manifest"]["experiments"][exp_id]["artifacts"][name]


def test_matrix_writes_all_experiments(matrix_run):
    cfg, summary = matrix_run
    assert set(summary["manifest"]["experiments"]) == set(CANONICAL_IDS)
    for exp_id in CANONICAL_IDS:
        for name in ("metrics", "predictions", "shap", "shap_meta",
                     "importance", "bar", "beeswarm"):
            path = os.path.join(cfg.out_dir, _artifact(summary, exp_id, name))
            assert os.path.exists(path), (exp_id, name)


def test_merged_experiments_reuse_one_model(matrix_run):
    _, summary = matrix_run
    exps = summary["manifest"]["experiments"]
    assert exps["Exp-7.1"]["model"] == "trained"
    assert exps["Exp-7.2"]["model"] == "reused"
    assert exps["Exp-7.3"]["model"] == "reused"
    # same-source pairs with identical training data also reuse
    assert exps["Exp-3"]["model"] == "trained"
    assert exps["Exp-5"]["model"] == "reused"


def test_accuracy_recomputable_from_predictions(matrix_run):
    cfg, summary = matrix_run
    for exp_id in CANONICAL_IDS:
        path = os.path.join(cfg.out_dir,
                            _artifact(summary, exp_id, "predictions"))
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        acc = sum(int(r["y_true"]) == int(r["y_pred"]) for r in rows) / len(rows)
        stated = summary["manifest"]["experiments"][exp_id]["accuracy"]
        assert acc == pytest.approx(stated, abs=1e-12)


def test_metrics_json_matches_manifest(matrix_run):
    cfg, summary = matrix_run
    for exp_id in CANONICAL_IDS:
        path = os.path.join(cfg.out_dir, _artifact(summary, exp_id, "metrics"))
        doc = json.load(open(path, encoding="utf-8"))
        assert doc["id"] == exp_id
        assert doc["metrics"]["accuracy"] == \
            summary["manifest"]["experiments"][exp_id]["accuracy"]


def test_divergence_files_written(matrix_run):
    cfg, summary = matrix_run
    assert len(summary["divergence"]) == len(DIVERGENCE_PAIRS)
    for entry in summary["manifest"]["divergence"]:
        doc = json.load(open(os.path.join(cfg.out_dir, entry["path"]),
                             encoding="utf-8"))
        assert doc["a"] == entry["a"]
        assert doc["b"] == entry["b"]
        assert -1.0 <= doc["kendall_tau"] <= 1.0


def test_local_accuracy_of_written_shap(tmp_path):
    """Per-instance sums in the persisted long-form CSV reproduce the
    trained model's margins to 1e-9."""
    from crossphish.experiments import prepare_all, run_experiment

    cfg = RunConfig(out_dir=str(tmp_path / "out"), synth_n_a=400,
                    synth_n_b=300, merge_per_class=60)
    prep = prepare_all(cfg)
    spec = next(s for s in canonical_matrix("xgb", seed=0, explain=True)
                if s.id == "Exp-3")
    cache = {}
    res = run_experiment(spec, prep, params={"n_rounds": 12, "max_depth": 3},
                         out_dir=cfg.out_dir, background_size=16,
                         explain_per_class=15, cache=cache)
    model = next(iter(cache.values()))
    sample = balanced_explanation_sample(prep.get("d1", "common", "test"),
                                         15, spec.seed)
    margins = model.margin(sample.X)

    meta = json.load(open(res.artifacts["shap_meta"], encoding="utf-8"))
    sums = {}
    with open(res.artifacts["shap"], newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            i = int(r["instance_id"])
            sums[i] = sums.get(i, 0.0) + float(r["shap_value"])
    assert len(sums) == sample.n_rows
    for i in range(sample.n_rows):
        assert abs(sums[i] + meta["base_value"] - margins[i]) <= 1e-9


def test_subsample_cap_only_for_all_features(tmp_path):
    from crossphish.config import load_config
    from crossphish.experiments import run_matrix
    from conftest import write_tiny_config

    extra = "\n[data]\nmax_train_rows = 200\n"
    # configparser forbids duplicate sections, so patch the text instead
    cfg_path = write_tiny_config(str(tmp_path), str(tmp_path / "out"))
    text = open(cfg_path, encoding="utf-8").read()
    text = text.replace("test_fraction = 0.3",
                        "test_fraction = 0.3\nmax_train_rows = 200")
    open(cfg_path, "w", encoding="utf-8").write(text)
    cfg = load_config(cfg_path)
    cfg.experiment_ids = ("Exp-1", "Exp-3")
    summary = run_matrix(cfg)
    docs = {}
    for exp_id in ("Exp-1", "Exp-3"):
        path = os.path.join(
            cfg.out_dir,
            summary["manifest"]["experiments"][exp_id]["artifacts"]["metrics"])
        docs[exp_id] = json.load(open(path, encoding="utf-8"))
    assert docs["Exp-1"]["subsampled_train_rows"] == 200
    assert docs["Exp-3"]["subsampled_train_rows"] is None
    assert docs["Exp-3"]["train_rows"] > 200


def test_unknown_experiment_id_rejected(tmp_path):
    from crossphish.experiments import run_matrix

    cfg = RunConfig(out_dir=str(tmp_path / "out"), experiment_ids=("Exp-9",),
                    synth_n_a=200, synth_n_b=200, merge_per_class=30)
    with pytest.raises(ConfigError):
        run_matrix(cfg)


def test_explain_needs_tree_model(tmp_path):
    from crossphish.experiments import run_matrix

    cfg = RunConfig(out_dir=str(tmp_path / "out"), matrix_model="lr")
    with pytest.raises(ConfigError):
        run_matrix(cfg)
