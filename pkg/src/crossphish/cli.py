"""Command-line entry point.

Exit codes: 0 success, 1 validation problem (bad arguments, bad config, bad
input data), 2 runtime failure (download errors, unexpected exceptions).
"""

import argparse
import csv
import hashlib
import json
import math
import os
import shutil
import sys
import urllib.request

import numpy as np

from .config import load_config
from .errors import ConfigError, CrossphishError
from .experiments import (
    balanced_explanation_sample,
    fit_any,
    load_any_model,
    prepare_all,
    run_matrix,
)
from .metrics import evaluate
from .pipeline import impute_median
from .shapley import (
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
from .table import load_csv
from .trees import TreeEnsembleModel
from .urlfeat import extract_all

D1_URL = ("https://raw.githubusercontent.com/GregaVrbancic/"
          "Phishing-Dataset/master/dataset_full.csv")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse normally sys.exits with status 2; route through our own codes
    def error(self, message):
        raise _UsageError(message)


def _json_dump(doc, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _load_table(args, source=""):
    """Standalone commands see one table at a time, so missing cells are
    filled with that table's own column medians."""
    table = load_csv(args.input, args.label_column, args.positive_label,
                     drop_columns=tuple(args.drop or ()), source=source)
    if np.isnan(table.X).any():
        table, _ = impute_median(table)
    return table


def _cmd_extract(args):
    with open(args.input, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ConfigError(f"{args.input}: empty file")
        header = [c.strip() for c in header]
        if args.url_column not in header:
            raise ConfigError(
                f"{args.input}: no column {args.url_column!r} in header")
        url_idx = header.index(args.url_column)
        label_idx = header.index(args.label_column) \
            if args.label_column and args.label_column in header else None
        urls, labels = [], []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            urls.append(row[url_idx])
            if label_idx is not None:
                labels.append(row[label_idx].strip())

    matrix, names = extract_all(urls)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        head = list(names) + (["label"] if label_idx is not None else [])
        w.writerow(head)
        for i in range(matrix.shape[0]):
            row = []
            for v in matrix[i]:
                if math.isnan(v):
                    row.append("")
                else:
                    row.append(int(v))
            if label_idx is not None:
                row.append(labels[i])
            w.writerow(row)
    print(f"wrote {matrix.shape[0]} rows x {len(names)} features to {args.out}")
    return 0


def _cmd_synth(args):
    paths = generate_pair(args.out_dir, n_a=args.n_a, n_b=args.n_b,
                          seed=args.seed)
    print(f"wrote {paths['d1']} and {paths['d2']}")
    return 0


def _download(url, dest, expected_sha256):
    tmp = dest + ".part"
    with urllib.request.urlopen(url, timeout=120) as resp, open(tmp, "wb") as out:
        shutil.copyfileobj(resp, out)
    digest = hashlib.sha256()
    with open(tmp, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    got = digest.hexdigest()
    print(f"{dest}: sha256 {got}")
    if expected_sha256 and got != expected_sha256.lower():
        os.remove(tmp)
        raise ConfigError(f"{url}: sha256 mismatch, expected {expected_sha256}")
    os.replace(tmp, dest)


def _cmd_fetch(args):
    os.makedirs(args.dest, exist_ok=True)
    jobs = []
    if args.dataset in ("d1", "both"):
        jobs.append((args.url_d1, os.path.join(args.dest, "d1.csv"),
                     args.sha256_d1))
    if args.dataset in ("d2", "both"):
        if not args.url_d2:
            raise ConfigError(
                "the second dataset has no stable direct URL; pass --url-d2 "
                "(see the README for the dataset DOI)")
        jobs.append((args.url_d2, os.path.join(args.dest, "d2.csv"),
                     args.sha256_d2))
    for url, dest, sha in jobs:
        print(f"downloading {url}")
        _download(url, dest, sha)
    return 0


def _write_table_csv(table, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(table.feature_names) + ["label"])
        for i in range(table.n_rows):
            row = []
            for v in table.X[i]:
                if math.isnan(v):
                    row.append("")
                elif float(v) == int(v):
                    row.append(int(v))
                else:
                    row.append(repr(float(v)))
            row.append(int(table.y[i]))
            w.writerow(row)


def _cmd_prepare(args):
    cfg = load_config(args.config)
    if args.out:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    prep = prepare_all(cfg)
    out = os.path.join(cfg.out_dir, "prepared")
    os.makedirs(out, exist_ok=True)
    for (source, fset, part), table in sorted(prep.tables.items()):
        if part == "train_raw":
            continue
        _write_table_csv(table,
                         os.path.join(out, f"{source}_{fset}_{part}.csv"))
    _json_dump(prep.manifest(), os.path.join(out, "manifest.json"))
    print(f"prepared tables under {out}")
    return 0


def _cmd_train(args):
    table = _load_table(args, source="train")
    params = json.loads(args.params_json) if args.params_json else {}
    model = fit_any(args.model, table.X, table.y, table.feature_names,
                    params=params, seed=args.seed)
    model.save(args.out)
    print(f"trained {args.model} on {table.n_rows} rows -> {args.out}")
    return 0


def _cmd_eval(args):
    model = load_any_model(args.model)
    table = _load_table(args, source="test")
    aligned = table.select(list(model.feature_names))
    y_pred = model.predict(aligned.X)
    m = evaluate(aligned.y, y_pred)
    doc = {"model": args.model, "test_rows": aligned.n_rows,
           "metrics": m.to_dict()}
    _json_dump(doc, args.out)
    print(f"accuracy {m.accuracy:.4f} -> {args.out}")
    return 0


def _cmd_explain(args):
    model = load_any_model(args.model)
    if not isinstance(model, TreeEnsembleModel):
        raise ConfigError("attributions are only defined for tree models")
    table = _load_table(args, source="test")
    aligned = table.select(list(model.feature_names))
    bg_table = load_csv(args.background, args.label_column,
                        args.positive_label,
                        drop_columns=tuple(args.drop or ()), source="background")
    if np.isnan(bg_table.X).any():
        bg_table, _ = impute_median(bg_table)
    bg_aligned = bg_table.select(list(model.feature_names))
    bg = sample_background(bg_aligned, size=args.background_size,
                           seed=args.seed)
    sample = balanced_explanation_sample(aligned, args.per_class, args.seed)
    result = tree_shap(model, sample.X, bg)
    importance = global_importance(result)

    os.makedirs(args.out_dir, exist_ok=True)
    write_shap_csv(result, os.path.join(args.out_dir, "shap.csv"))
    _json_dump(shap_meta(result, extra={"seed": args.seed}),
               os.path.join(args.out_dir, "shap_meta.json"))
    _json_dump({"rows": importance, "background_size": bg.shape[0],
                "explained_rows": sample.n_rows},
               os.path.join(args.out_dir, "importance.json"))
    render_bar_svg(importance, os.path.join(args.out_dir, "bar.svg"),
                   top_n=args.top_n)
    render_beeswarm_svg(summary_data(result, sample.X),
                        os.path.join(args.out_dir, "beeswarm.svg"),
                        seed=args.seed)
    print(f"explained {sample.n_rows} rows -> {args.out_dir}")
    return 0


def _cmd_stats(args):
    table = _load_table(args, source=args.input)
    _json_dump(feature_stats(table), args.out)
    print(f"stats for {table.n_rows} rows -> {args.out}")
    return 0


def _load_importance(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return doc["rows"] if isinstance(doc, dict) else doc


def _cmd_compare(args):
    from .shapley import compare_rankings

    report = compare_rankings(_load_importance(args.a),
                              _load_importance(args.b), top_k=args.k)
    doc = {"a": args.a, "b": args.b, "top_k": args.k}
    doc.update(report.to_dict())
    _json_dump(doc, args.out)
    print(f"kendall_tau {report.kendall_tau:.4f}, "
          f"{len(report.sign_flips)} sign flips -> {args.out}")
    return 0


def _cmd_run_matrix(args):
    cfg = load_config(args.config)
    if args.out:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    summary = run_matrix(cfg)
    for r in summary["results"]:
        print(f"{r.spec.id}: accuracy {r.metrics.accuracy:.4f} "
              f"({r.spec.train_source} -> {r.spec.test_source}, "
              f"{r.spec.feature_set})")
    print(f"artifacts under {cfg.out_dir}")
    return 0


def _add_table_args(p, label_default="label", positive_default="1"):
    p.add_argument("--input", required=True, help="labeled feature CSV")
    p.add_argument("--label-column", default=label_default)
    p.add_argument("--positive-label", default=positive_default)
    p.add_argument("--drop", action="append", default=[],
                   help="column to ignore (repeatable)")


def build_parser():
    parser = _Parser(prog="crossphish",
                     description="cross-dataset phishing-URL model audit")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("extract", help="URL strings -> canonical feature CSV")
    p.add_argument("--input", required=True, help="CSV containing a URL column")
    p.add_argument("--url-column", default="url")
    p.add_argument("--label-column", default="",
                   help="optional label column copied through")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("synth", help="write the synthetic two-source benchmark")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-a", type=int, default=4000)
    p.add_argument("--n-b", type=int, default=3000)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("fetch", help="download the two public datasets")
    p.add_argument("--dest", default="data")
    p.add_argument("--dataset", choices=("d1", "d2", "both"), default="both")
    p.add_argument("--url-d1", default=D1_URL)
    p.add_argument("--url-d2", default="")
    p.add_argument("--sha256-d1", default="")
    p.add_argument("--sha256-d2", default="")
    p.set_defaults(func=_cmd_fetch)

    p = sub.add_parser("prepare", help="run the data pipeline, dump tables")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_prepare)

    p = sub.add_parser("train", help="fit one model on a feature CSV")
    _add_table_args(p)
    p.add_argument("--model", required=True,
                   choices=("xgb", "gbm", "rf", "dt", "lr", "nb"))
    p.add_argument("--params-json", default="",
                   help='hyperparameters as JSON, e.g. \'{"n_rounds": 100}\'')
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model JSON path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="score a saved model on a feature CSV")
    _add_table_args(p)
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--out", required=True, help="metrics JSON path")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("explain", help="attributions for a saved tree model")
    _add_table_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--background", required=True,
                   help="feature CSV the background rows are drawn from")
    p.add_argument("--background-size", type=int, default=128)
    p.add_argument("--per-class", type=int, default=500)
    p.add_argument("--top-n", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_explain)

    p = sub.add_parser("stats", help="per-class feature statistics")
    _add_table_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("compare", help="ranking divergence of two importances")
    p.add_argument("--a", required=True, help="importance JSON")
    p.add_argument("--b", required=True, help="importance JSON")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("run-matrix", help="the full audit end to end")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="", help="override the config's out_dir")
    p.add_argument("--seed", type=int, default=None,
                   help="override the config's master seed")
    p.set_defaults(func=_cmd_run_matrix)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            return 1
        return args.func(args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (CrossphishError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
