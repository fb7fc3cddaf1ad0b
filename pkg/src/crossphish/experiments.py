"""The experiment matrix: nine train/test scenarios over two sources and
their merge, a model comparison table, and cross-experiment attribution
divergence.

All artifacts under the output directory are byte-deterministic for a fixed
config and seed; wall-clock times go only to the separate run log.
"""

import csv
import json
import os
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .baselines import baseline_from_json, fit_gaussian_nb, fit_logistic_regression
from .errors import ConfigError, MissingImportance
from .metrics import evaluate
from .pipeline import build_merged, prepare_source
from .shapley import (
    compare_rankings,
    global_importance,
    sample_background,
    shap_meta,
    summary_data,
    tree_shap,
    write_shap_csv,
)
from .stats import feature_stats
from .svgplot import render_bar_svg, render_beeswarm_svg
from .synth import generate_pair
from .table import DataTable, load_csv, load_schema_mapping
from .trees import model_from_json, train_model
from .urlfeat import CANONICAL_FEATURES

CANONICAL_IDS = ("Exp-1", "Exp-2", "Exp-3", "Exp-4", "Exp-5", "Exp-6",
                 "Exp-7.1", "Exp-7.2", "Exp-7.3")

DIVERGENCE_PAIRS = (("Exp-3", "Exp-4"), ("Exp-4", "Exp-5"), ("Exp-3", "Exp-6"),
                    ("Exp-7.1", "Exp-3"), ("Exp-7.1", "Exp-4"),
                    ("Exp-7.1", "Exp-7.2"))


@dataclass(frozen=True)
class ExperimentSpec:
    id: str
    feature_set: str    # all | common
    train_source: str   # d1 | d2 | merged
    test_source: str
    model: str = "xgb"
    seed: int = 0
    explain: bool = True

    def __post_init__(self):
        if self.feature_set not in ("all", "common"):
            raise ConfigError(f"{self.id}: feature_set must be all or common")
        if self.feature_set == "all" and self.train_source != self.test_source:
            raise ConfigError(
                f"{self.id}: unique features do not align across sources, "
                "feature_set=all needs train_source == test_source")


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    metrics: object
    importance: list = None
    artifacts: dict = field(default_factory=dict)
    wall_time: float = 0.0
    reused_model: bool = False


def canonical_matrix(model="xgb", seed=0, explain=True):
    """The nine standard scenarios: same-source on all features, same-source
    on the common schema, the two cross-source runs, and the three
    merged-training runs."""
    rows = (
        ("Exp-1", "all", "d1", "d1"),
        ("Exp-2", "all", "d2", "d2"),
        ("Exp-3", "common", "d1", "d1"),
        ("Exp-4", "common", "d2", "d2"),
        ("Exp-5", "common", "d1", "d2"),
        ("Exp-6", "common", "d2", "d1"),
        ("Exp-7.1", "common", "merged", "d1"),
        ("Exp-7.2", "common", "merged", "d2"),
        ("Exp-7.3", "common", "merged", "merged"),
    )
    return [ExperimentSpec(i, f, tr, te, model=model, seed=seed, explain=explain)
            for i, f, tr, te in rows]


def balanced_explanation_sample(table, n_per_class, seed):
    """Equal rows per class, drawn without replacement and interleaved
    (phishing, legitimate, phishing, ...).  Clamps to the minority count
    with a warning when a class is short."""
    pos = np.flatnonzero(table.y == 1)
    neg = np.flatnonzero(table.y == 0)
    take = min(n_per_class, pos.shape[0], neg.shape[0])
    if take < n_per_class:
        warnings.warn(
            f"explanation sample clamped to {take} per class "
            f"({pos.shape[0]} phishing / {neg.shape[0]} legitimate rows)")
    rng = np.random.default_rng(seed)
    pos_pick = np.sort(rng.choice(pos, size=take, replace=False))
    neg_pick = np.sort(rng.choice(neg, size=take, replace=False))
    order = np.empty(2 * take, dtype=np.int64)
    order[0::2] = pos_pick
    order[1::2] = neg_pick
    return table.take(order)


def fit_any(kind, X, y, feature_names, params=None, seed=0):
    """Train any supported model kind with a uniform call shape."""
    params = dict(params or {})
    if kind == "lr":
        return fit_logistic_regression(X, y, feature_names, **params)
    if kind == "nb":
        return fit_gaussian_nb(X, y, feature_names, **params)
    return train_model(kind, X, y, feature_names, params=params, seed=seed)


def load_any_model(path):
    """Model file loader covering tree ensembles and the two baselines."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("kind") in ("lr", "nb"):
        return baseline_from_json(doc)
    return model_from_json(doc)


def _json_dump(doc, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _cache_key(spec, params, cap):
    return (spec.train_source, spec.feature_set, spec.model,
            tuple(sorted(params.items())), spec.seed, cap)


def run_experiment(spec, prepared, params=None, out_dir="results",
                   background_size=128, explain_per_class=500, bar_top_n=30,
                   beeswarm_max_points=400, max_train_rows=0, cache=None):
    """Train (or reuse), evaluate, optionally explain; write the artifact
    set for one experiment and return its result."""
    params = dict(params or {})
    train = prepared.get(spec.train_source, spec.feature_set, "train")
    test = prepared.get(spec.test_source, spec.feature_set, "test")

    subsampled = None
    cap = max_train_rows if spec.feature_set == "all" else 0
    if cap and train.n_rows > cap:
        rng = np.random.default_rng(spec.seed)
        rows = np.sort(rng.choice(train.n_rows, size=cap, replace=False))
        train = train.take(rows)
        subsampled = cap

    t0 = time.perf_counter()
    key = _cache_key(spec, params, cap)
    reused = cache is not None and key in cache
    if reused:
        model = cache[key]
    else:
        model = fit_any(spec.model, train.X, train.y, train.feature_names,
                        params=params, seed=spec.seed)
        if cache is not None:
            cache[key] = model

    proba = model.predict_proba(test.X)
    y_pred = (proba >= 0.5).astype(np.int8)
    metrics = evaluate(test.y, y_pred)
    wall = time.perf_counter() - t0

    exp_dir = os.path.join(out_dir, spec.id)
    os.makedirs(exp_dir, exist_ok=True)
    artifacts = {}

    doc = {
        "id": spec.id,
        "feature_set": spec.feature_set,
        "train_source": spec.train_source,
        "test_source": spec.test_source,
        "model": spec.model,
        "model_params": params,
        "seed": spec.seed,
        "train_rows": train.n_rows,
        "test_rows": test.n_rows,
        "subsampled_train_rows": subsampled,
        "metrics": metrics.to_dict(),
    }
    artifacts["metrics"] = os.path.join(exp_dir, "metrics.json")
    _json_dump(doc, artifacts["metrics"])

    artifacts["predictions"] = os.path.join(exp_dir, "predictions.csv")
    with open(artifacts["predictions"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["instance_id", "y_true", "y_pred", "proba"])
        for i in range(test.n_rows):
            w.writerow([i, int(test.y[i]), int(y_pred[i]), repr(float(proba[i]))])

    importance = None
    if spec.explain:
        sample = balanced_explanation_sample(test, explain_per_class, spec.seed)
        bg = sample_background(train, size=background_size, seed=spec.seed + 1)
        result = tree_shap(model, sample.X, bg)
        importance = global_importance(result)

        artifacts["shap"] = os.path.join(exp_dir, "shap.csv")
        write_shap_csv(result, artifacts["shap"])
        artifacts["shap_meta"] = os.path.join(exp_dir, "shap_meta.json")
        _json_dump(shap_meta(result, extra={"experiment": spec.id,
                                            "seed": spec.seed}),
                   artifacts["shap_meta"])
        artifacts["importance"] = os.path.join(exp_dir, "importance.json")
        _json_dump({"id": spec.id, "background_size": bg.shape[0],
                    "explained_rows": sample.n_rows, "rows": importance},
                   artifacts["importance"])
        artifacts["bar"] = os.path.join(exp_dir, "bar.svg")
        render_bar_svg(importance, artifacts["bar"], top_n=bar_top_n,
                       title=f"{spec.id}: mean |attribution|")
        artifacts["beeswarm"] = os.path.join(exp_dir, "beeswarm.svg")
        render_beeswarm_svg(summary_data(result, sample.X),
                            artifacts["beeswarm"], seed=spec.seed,
                            max_points=beeswarm_max_points,
                            title=f"{spec.id}: attribution spread")

    return ExperimentResult(spec=spec, metrics=metrics, importance=importance,
                            artifacts=artifacts, wall_time=wall,
                            reused_model=reused)


def cross_experiment_divergence(results, pairs=DIVERGENCE_PAIRS, top_k=10,
                                out_dir=None):
    """Ranking divergence per pair; pairs whose experiments were not run are
    skipped, but a pair missing only its importances raises."""
    by_id = {r.spec.id: r for r in results}
    out = []
    for a, b in pairs:
        if a not in by_id or b not in by_id:
            continue
        ra, rb = by_id[a], by_id[b]
        if ra.importance is None or rb.importance is None:
            raise MissingImportance(f"pair ({a}, {b}) lacks importances")
        report = compare_rankings(ra.importance, rb.importance, top_k=top_k)
        doc = {"a": a, "b": b, "top_k": top_k}
        doc.update(report.to_dict())
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            path = os.path.join(out_dir, f"{a}__{b}.json")
            _json_dump(doc, path)
            doc["path"] = path
        out.append(doc)
    return out


_ZOO_COLUMNS = ("model", "accuracy", "precision_positive", "recall_positive",
                "f1_positive", "precision_macro", "recall_macro", "f1_macro",
                "tp", "fp", "fn", "tn")


def model_zoo_comparison(prepared, source, models, params_by_kind=None,
                         seed=0, max_train_rows=0):
    """Metrics for each model kind on one source's all-features split."""
    params_by_kind = params_by_kind or {}
    train = prepared.get(source, "all", "train")
    test = prepared.get(source, "all", "test")
    if max_train_rows and train.n_rows > max_train_rows:
        rng = np.random.default_rng(seed)
        rows = np.sort(rng.choice(train.n_rows, size=max_train_rows,
                                  replace=False))
        train = train.take(rows)
    rows = []
    for kind in models:
        model = fit_any(kind, train.X, train.y, train.feature_names,
                        params=dict(params_by_kind.get(kind, {})), seed=seed)
        m = evaluate(test.y, model.predict(test.X))
        row = {"model": kind, **m.to_dict()}
        conf = row.pop("confusion")
        row.pop("zero_division")
        row.update(conf)
        rows.append(row)
    return rows


def write_zoo(rows, source, out_dir):
    json_path = os.path.join(out_dir, f"zoo_{source}.json")
    best = max(rows, key=lambda r: r["accuracy"])["model"] if rows else None
    _json_dump({"source": source, "best_model": best, "rows": rows}, json_path)
    csv_path = os.path.join(out_dir, f"zoo_{source}.csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(_ZOO_COLUMNS)
        for row in rows:
            w.writerow([row["model"]] +
                       [repr(float(row[c])) for c in _ZOO_COLUMNS[1:-4]] +
                       [row[c] for c in _ZOO_COLUMNS[-4:]])
    return {"json": json_path, "csv": csv_path}


def _load_sources(cfg):
    """The two raw tables per the config's data mode."""
    if cfg.mode == "synthetic":
        synth_dir = os.path.join(cfg.out_dir, "synthetic")
        paths = generate_pair(synth_dir, n_a=cfg.synth_n_a, n_b=cfg.synth_n_b,
                              seed=cfg.seed)
        d1_path, d2_path = paths["d1"], paths["d2"]
    else:
        d1_path, d2_path = cfg.d1_csv, cfg.d2_csv
    d1 = load_csv(d1_path, cfg.d1_label_column, cfg.d1_positive_label,
                  drop_columns=cfg.d1_drop_columns, source="d1")
    d2 = load_csv(d2_path, cfg.d2_label_column, cfg.d2_positive_label,
                  drop_columns=cfg.d2_drop_columns, source="d2")
    return d1, d2


def prepare_all(cfg):
    """Both sources through the pipeline plus the merged tables."""
    d1, d2 = _load_sources(cfg)
    mapping = load_schema_mapping(cfg.mapping_csv or None)
    prep = prepare_source(d1, CANONICAL_FEATURES, mapping, cfg.d1_schema,
                          cfg.test_fraction, cfg.seed, apply_smote=True,
                          smote_k=cfg.smote_k,
                          test_counts=cfg.test_counts_for("d1"),
                          source_name="d1")
    prep = prepare_source(d2, CANONICAL_FEATURES, mapping, cfg.d2_schema,
                          cfg.test_fraction, cfg.seed, apply_smote=False,
                          smote_k=cfg.smote_k,
                          test_counts=cfg.test_counts_for("d2"),
                          prepared=prep, source_name="d2")
    merged_train, merged_test = build_merged(
        prep.get("d1", "common", "train_raw"),
        prep.get("d2", "common", "train_raw"),
        prep.get("d1", "common", "test"),
        prep.get("d2", "common", "test"),
        per_class=cfg.merge_per_class, seed=cfg.seed + 7)
    prep.put("merged", "common", "train", merged_train)
    prep.put("merged", "common", "test", merged_test)
    return prep


def _stats_table(prep, source):
    """Dataset-level table for the stats report: imputed common-schema rows,
    train (pre-balance) plus test."""
    tr = prep.get(source, "common", "train_raw")
    te = prep.get(source, "common", "test")
    return DataTable(np.vstack([tr.X, te.X]), np.concatenate([tr.y, te.y]),
                     tr.feature_names, source)


def run_matrix(cfg):
    """Everything end to end; returns a summary dict mirroring the manifest."""
    if cfg.explain_enabled and cfg.matrix_model in ("lr", "nb"):
        raise ConfigError("attributions need a tree model; "
                          "set matrix_model to xgb/gbm/rf/dt or disable explain")
    os.makedirs(cfg.out_dir, exist_ok=True)
    prep = prepare_all(cfg)

    stats_paths = {}
    for source in ("d1", "d2"):
        path = os.path.join(cfg.out_dir, f"stats_{source}.json")
        _json_dump(feature_stats(_stats_table(prep, source)), path)
        stats_paths[source] = path

    specs = canonical_matrix(cfg.matrix_model, cfg.seed, cfg.explain_enabled)
    if cfg.experiment_ids:
        wanted = set(cfg.experiment_ids)
        unknown = wanted - set(CANONICAL_IDS)
        if unknown:
            raise ConfigError(f"unknown experiment ids: {sorted(unknown)}")
        specs = [s for s in specs if s.id in wanted]

    cache = {}
    results = []
    params = cfg.params_for(cfg.matrix_model)
    for spec in specs:
        results.append(run_experiment(
            spec, prep, params=params, out_dir=cfg.out_dir,
            background_size=cfg.background_size,
            explain_per_class=cfg.explain_per_class,
            bar_top_n=cfg.bar_top_n,
            beeswarm_max_points=cfg.beeswarm_max_points,
            max_train_rows=cfg.max_train_rows, cache=cache))

    divergence = []
    if cfg.explain_enabled:
        divergence = cross_experiment_divergence(
            results, top_k=cfg.top_k,
            out_dir=os.path.join(cfg.out_dir, "divergence"))

    zoo_paths = {}
    for source in cfg.zoo_sources:
        rows = model_zoo_comparison(
            prep, source, cfg.zoo_models,
            params_by_kind=cfg.model_params, seed=cfg.seed,
            max_train_rows=cfg.max_train_rows)
        zoo_paths[source] = write_zoo(rows, source, cfg.out_dir)

    # manifest paths are relative to out_dir so reruns compare byte for byte
    rel = lambda p: os.path.relpath(p, cfg.out_dir)  # noqa: E731
    manifest = {
        "backend": kernels.BACKEND,
        "seed": cfg.seed,
        "mode": cfg.mode,
        "matrix_model": cfg.matrix_model,
        "prepared": prep.manifest(),
        "experiments": {
            r.spec.id: {
                "artifacts": {k: rel(v) for k, v in r.artifacts.items()},
                "accuracy": r.metrics.accuracy,
                "model": "reused" if r.reused_model else "trained",
            } for r in results},
        "divergence": [{"a": d["a"], "b": d["b"], "path": rel(d["path"])}
                       for d in divergence if "path" in d],
        "stats": {k: rel(v) for k, v in stats_paths.items()},
        "zoo": {src: {k: rel(v) for k, v in paths.items()}
                for src, paths in zoo_paths.items()},
    }
    _json_dump(manifest, os.path.join(cfg.out_dir, "run_manifest.json"))

    with open(os.path.join(cfg.out_dir, "run_log.txt"), "w",
              encoding="utf-8") as fh:
        for r in results:
            fh.write(f"{r.spec.id}: {r.wall_time:.3f}s "
                     f"({'reused' if r.reused_model else 'trained'})\n")

    return {"results": results, "divergence": divergence,
            "manifest": manifest}
