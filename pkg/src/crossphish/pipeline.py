"""Dataset preparation: imputation, constant-column pruning, stratified
splitting, SMOTE oversampling, and the merged-training construction.

Order of operations for a source dataset is fixed:
load -> align/rename -> impute -> drop constants -> split -> SMOTE (train only).
Split indices depend only on labels and the seed, so imputation can take its
medians from the training rows without reordering anything.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    AllMissingColumn,
    DegenerateClass,
    InsufficientRows,
    LengthMismatch,
    TooFewMinoritySamples,
)
from .table import DataTable, check_same_schema, rename_to_canonical


def impute_median(table, train_rows=None):
    """Replace NaN cells with the per-column median.

    Args:
        table: input DataTable.
        train_rows: optional row indices; when given, medians are computed on
            those rows only (train statistics) but applied everywhere.

    Returns:
        (imputed DataTable, medians array aligned with feature_names).
    """
    stat_rows = table.X if train_rows is None else table.X[np.asarray(train_rows)]
    if stat_rows.shape[0] == 0:
        raise InsufficientRows("no rows to compute imputation statistics from")
    all_missing = np.isnan(stat_rows).all(axis=0)
    if all_missing.any():
        bad = [table.feature_names[i] for i in np.flatnonzero(all_missing)]
        raise AllMissingColumn(f"no observed values in statistic rows: {bad}")
    medians = np.nanmedian(stat_rows, axis=0)
    X = table.X.copy()
    nan_r, nan_c = np.nonzero(np.isnan(X))
    X[nan_r, nan_c] = medians[nan_c]
    return DataTable(X, table.y, table.feature_names, table.source), medians


def apply_imputation(table, medians):
    """Impute with externally supplied statistics (e.g. train medians)."""
    medians = np.asarray(medians, dtype=np.float64)
    if medians.shape[0] != table.n_features:
        raise LengthMismatch(f"{medians.shape[0]} medians for {table.n_features} columns")
    X = table.X.copy()
    nan_r, nan_c = np.nonzero(np.isnan(X))
    X[nan_r, nan_c] = medians[nan_c]
    return DataTable(X, table.y, table.feature_names, table.source)


def drop_constant_columns(table):
    """Remove columns whose non-missing values are all equal.

    Returns (pruned table, tuple of dropped names).
    """
    keep, dropped = [], []
    for j, name in enumerate(table.feature_names):
        col = table.X[:, j]
        obs = col[~np.isnan(col)]
        if obs.size == 0 or (obs == obs[0]).all():
            dropped.append(name)
        else:
            keep.append(j)
    if not keep:
        raise DegenerateClass("every column is constant")
    out = DataTable(table.X[:, keep], table.y,
                    tuple(table.feature_names[j] for j in keep), table.source)
    return out, tuple(dropped)


def stratified_split(table, test_fraction, seed, test_counts=None):
    """Per-class seeded shuffle into train/test index arrays.

    Per-class test sizes use largest-remainder rounding of
    n_class * test_fraction, so each class is within one row of its exact
    share.  `test_counts` overrides the per-class test sizes directly as
    {class_label: count} (used to reproduce a published split).

    Returns:
        (train_idx, test_idx), both sorted ascending.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0,1), got {test_fraction}")
    y = table.y
    classes = [0, 1]
    counts = {c: int((y == c).sum()) for c in classes}
    if min(counts.values()) == 0:
        raise DegenerateClass(f"class counts {counts}")

    if test_counts is None:
        quotas = {c: counts[c] * test_fraction for c in classes}
        base = {c: int(np.floor(quotas[c])) for c in classes}
        total = int(round(table.n_rows * test_fraction))
        short = total - sum(base.values())
        # hand the leftover rows to the classes with the largest remainders
        order = sorted(classes, key=lambda c: (-(quotas[c] - base[c]), c))
        take = dict(base)
        for c in order[:max(short, 0)]:
            take[c] += 1
    else:
        take = {int(c): int(k) for c, k in test_counts.items()}
        missing = set(classes) - set(take)
        if missing:
            raise ValueError(f"test_counts missing classes {sorted(missing)}")

    for c in classes:
        if not 0 < take[c] < counts[c]:
            raise InsufficientRows(
                f"class {c}: test size {take[c]} of {counts[c]} rows leaves no train or test")

    rng = np.random.default_rng(seed)
    train_parts, test_parts = [], []
    for c in classes:
        idx = np.flatnonzero(y == c)
        perm = rng.permutation(idx)
        test_parts.append(perm[: take[c]])
        train_parts.append(perm[take[c]:])
    train_idx = np.sort(np.concatenate(train_parts))
    test_idx = np.sort(np.concatenate(test_parts))
    return train_idx, test_idx


def _minority_class(y):
    pos = int(y.sum())
    neg = y.shape[0] - pos
    if pos == neg:
        return None
    return 1 if pos < neg else 0


def smote(table, k=5, seed=0, round_binary=False, binary_columns=()):
    """Oversample the minority class to parity with synthetic interpolants.

    Each synthetic row is x + lam * (nn - x) for a random minority row x, one
    of its k nearest minority neighbours nn (Euclidean distance on min-max
    scaled features, ties broken by row index, self excluded) and
    lam ~ U[0, 1).  Majority rows are untouched; synthetic rows are appended
    after the originals.

    round_binary additionally snaps the named binary columns of synthetic
    rows to {0, 1}; off by default because it moves points off the
    interpolation segment.
    """
    minority = _minority_class(table.y)
    if minority is None:
        return table
    min_rows = np.flatnonzero(table.y == minority)
    n_min = min_rows.shape[0]
    n_maj = table.n_rows - n_min
    if n_min < k + 1:
        raise TooFewMinoritySamples(f"{n_min} minority rows, need at least {k + 1}")

    Xm = np.ascontiguousarray(table.X[min_rows])
    if np.isnan(Xm).any():
        raise ValueError("smote requires imputed (NaN-free) features")

    lo = Xm.min(axis=0)
    rng_span = Xm.max(axis=0) - lo
    scale = np.where(rng_span > 0, rng_span, 1.0)
    S = np.ascontiguousarray((Xm - lo) / scale)

    neighbors = np.empty((n_min, k), dtype=np.int64)
    kernels.knn_sorted(S, k, neighbors)

    rng = np.random.default_rng(seed)
    deficit = n_maj - n_min
    base = rng.integers(0, n_min, size=deficit)
    pick = rng.integers(0, k, size=deficit)
    lam = rng.random(deficit)

    xa = Xm[base]
    xb = Xm[neighbors[base, pick]]
    synth = xa + lam[:, None] * (xb - xa)
    if round_binary:
        for name in binary_columns:
            if name in table.feature_names:
                j = table.feature_names.index(name)
                synth[:, j] = np.rint(synth[:, j])

    X = np.vstack([table.X, synth])
    y = np.concatenate([table.y, np.full(deficit, minority, dtype=np.int8)])
    return DataTable(X, y, table.feature_names, table.source)


def build_merged(d1_train, d2_train, d1_test, d2_test, per_class, seed):
    """Merged-source training and test tables.

    Training: `per_class` rows per class sampled (without replacement) from
    the original D1 training rows, concatenated with every D2 training row.
    Test: plain concatenation of both test tables.  All four inputs must
    already share the canonical schema.
    """
    check_same_schema(d1_train, d2_train)
    check_same_schema(d1_train, d1_test)
    check_same_schema(d1_train, d2_test)

    rng = np.random.default_rng(seed)
    parts = []
    for c in (0, 1):
        idx = np.flatnonzero(d1_train.y == c)
        if idx.shape[0] < per_class:
            raise InsufficientRows(
                f"class {c}: need {per_class} D1 train rows, have {idx.shape[0]}")
        chosen = np.sort(rng.choice(idx, size=per_class, replace=False))
        parts.append(chosen)
    d1_rows = np.concatenate(parts)

    train = DataTable(
        np.vstack([d1_train.X[d1_rows], d2_train.X]),
        np.concatenate([d1_train.y[d1_rows], d2_train.y]),
        d1_train.feature_names, "merged")
    test = DataTable(
        np.vstack([d1_test.X, d2_test.X]),
        np.concatenate([d1_test.y, d2_test.y]),
        d1_test.feature_names, "merged")
    return train, test


@dataclass
class PreparedData:
    """Every table the experiment matrix needs, keyed (source, feature_set,
    part); plus per-stage bookkeeping for the manifest."""

    tables: dict = field(default_factory=dict)
    dropped_columns: dict = field(default_factory=dict)
    medians: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def put(self, source, feature_set, part, tbl):
        self.tables[(source, feature_set, part)] = tbl

    def get(self, source, feature_set, part):
        key = (source, feature_set, part)
        if key not in self.tables:
            raise KeyError(f"no table for {key}")
        return self.tables[key]

    def manifest(self):
        out = {"tables": {}, "dropped_columns": self.dropped_columns,
               "notes": self.notes}
        for (source, fset, part), tbl in sorted(self.tables.items()):
            neg, pos = tbl.class_counts()
            out["tables"][f"{source}/{fset}/{part}"] = {
                "rows": tbl.n_rows,
                "features": tbl.n_features,
                "phishing": pos,
                "legitimate": neg,
            }
        return out


def prepare_source(raw, common_names, mapping, source_key, test_fraction, seed,
                   apply_smote, smote_k, test_counts=None, prepared=None,
                   source_name=None):
    """Run the fixed pipeline for one source dataset, producing the
    all-features and common-schema train/test tables.

    Returns the PreparedData it filled (creating one if needed).  The
    pre-SMOTE common train table is stashed under part 'train_raw' for the
    merged construction.
    """
    name = source_name or raw.source
    prep = prepared if prepared is not None else PreparedData()

    renamed = rename_to_canonical(raw, mapping, source_key, common_names)
    train_idx, test_idx = stratified_split(renamed, test_fraction, seed,
                                           test_counts=test_counts)
    imputed, med = impute_median(renamed, train_rows=train_idx)
    prep.medians[name] = {n: float(v) for n, v in zip(imputed.feature_names, med)}
    full, dropped = drop_constant_columns(imputed)
    # the canonical 20 keep their fixed schema even if one is constant here
    common = imputed.select(list(common_names), source=name)

    for fset, tbl in (("all", full), ("common", common)):
        tr = tbl.take(train_idx)
        te = tbl.take(test_idx)
        if fset == "common":
            prep.put(name, fset, "train_raw", tr)
        if apply_smote:
            tr = smote(tr, k=smote_k, seed=seed + 1)
        prep.put(name, fset, "train", tr)
        prep.put(name, fset, "test", te)
    prep.dropped_columns[name] = list(dropped)
    return prep
