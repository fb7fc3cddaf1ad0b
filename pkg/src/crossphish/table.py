"""Labeled feature tables and schema alignment between sources.

A DataTable is a float64 matrix (NaN for missing), a 0/1 label vector
(1 = phishing), ordered feature names, and a source tag.  Loading is plain
csv; every non-dropped column must parse as a number, with a small set of
missing-value spellings mapped to NaN.
"""

import csv
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import (
    AllMissingColumn,
    DuplicateColumnName,
    EmptyFile,
    LengthMismatch,
    MissingLabelColumn,
    SchemaMismatch,
    UnmappedColumn,
)

_MISSING_TOKENS = frozenset({"", "na", "nan", "n/a", "null", "none", "?"})


@dataclass
class DataTable:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple
    source: str = ""

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int8)
        self.feature_names = tuple(self.feature_names)
        if self.X.ndim != 2:
            raise SchemaMismatch(f"X must be 2-d, got shape {self.X.shape}")
        if self.X.shape[0] != self.y.shape[0]:
            raise LengthMismatch(f"{self.X.shape[0]} rows vs {self.y.shape[0]} labels")
        if self.X.shape[1] != len(self.feature_names):
            raise SchemaMismatch(
                f"{self.X.shape[1]} columns vs {len(self.feature_names)} names")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise DuplicateColumnName("duplicate feature names")
        bad = set(np.unique(self.y)) - {0, 1}
        if bad:
            raise ValueError(f"labels must be 0/1, got {sorted(bad)}")

    @property
    def n_rows(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    def class_counts(self):
        """(negatives, positives)."""
        pos = int(self.y.sum())
        return self.n_rows - pos, pos

    def take(self, rows, source=None):
        rows = np.asarray(rows)
        return DataTable(self.X[rows], self.y[rows], self.feature_names,
                         self.source if source is None else source)

    def select(self, names, source=None):
        idx = []
        for name in names:
            if name not in self.feature_names:
                raise SchemaMismatch(f"column {name!r} not in table {self.source!r}")
            idx.append(self.feature_names.index(name))
        return DataTable(self.X[:, idx], self.y, tuple(names),
                         self.source if source is None else source)

    def column(self, name):
        return self.X[:, self.feature_names.index(name)]


def _parse_cell(cell, column, row_no):
    s = cell.strip()
    if s.lower() in _MISSING_TOKENS:
        return np.nan
    try:
        return float(s)
    except ValueError:
        raise ValueError(
            f"column {column!r} row {row_no}: cannot parse {cell!r} as a number") from None


def load_csv(path, label_column, positive_label, negative_label=None,
             drop_columns=(), source=""):
    """Load a labeled CSV into a DataTable.

    Args:
        path: csv file with a header row.
        label_column: name of the label column.
        positive_label: cell value (string compare, stripped) meaning phishing.
        negative_label: optional; when given, any label cell matching neither
            value raises.  When None, every non-positive value counts as 0.
        drop_columns: column names to discard (e.g. raw URL text).
        source: tag recorded on the table.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path}: no header") from None
        header = [c.strip() for c in header]
        if len(set(header)) != len(header):
            dupes = sorted({c for c in header if header.count(c) > 1})
            raise DuplicateColumnName(f"{path}: duplicate columns {dupes}")
        if label_column not in header:
            raise MissingLabelColumn(f"{path}: label column {label_column!r} not found")

        drop = set(drop_columns) | {label_column}
        keep_idx = [i for i, c in enumerate(header) if c not in drop]
        names = tuple(header[i] for i in keep_idx)
        label_idx = header.index(label_column)

        rows = []
        labels = []
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"{path} row {row_no}: {len(row)} cells, expected {len(header)}")
            lab = row[label_idx].strip()
            if lab == str(positive_label):
                labels.append(1)
            elif negative_label is not None and lab != str(negative_label):
                raise ValueError(f"{path} row {row_no}: unexpected label {lab!r}")
            else:
                labels.append(0)
            rows.append([_parse_cell(row[i], header[i], row_no) for i in keep_idx])

    if not rows:
        raise EmptyFile(f"{path}: no data rows")
    X = np.asarray(rows, dtype=np.float64)
    return DataTable(X, np.asarray(labels), names, source=source)


def load_schema_mapping(path=None):
    """canonical feature -> {source: column name} from a 3-column csv
    (canonical, d1, d2).  Defaults to the packaged mapping."""
    if path is None:
        text = resources.files("crossphish").joinpath("data", "schema_mapping.csv").read_text(encoding="utf-8")
        lines = text.splitlines()
    else:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    reader = csv.DictReader(lines)
    mapping = {}
    for row in reader:
        canonical = row["canonical"].strip()
        mapping[canonical] = {k: v.strip() for k, v in row.items() if k != "canonical"}
    return mapping


def align_schema(table, mapping, source_key, canonical_names):
    """Project a source table onto the canonical schema.

    Args:
        table: source DataTable.
        mapping: output of load_schema_mapping.
        source_key: which mapping column applies ('d1' or 'd2').
        canonical_names: ordered canonical feature names to produce.

    Returns:
        DataTable with exactly canonical_names, in order.

    Raises:
        UnmappedColumn: when a canonical feature has no mapping or the mapped
            column is absent from the table.
    """
    cols = []
    for name in canonical_names:
        entry = mapping.get(name)
        if entry is None or not entry.get(source_key):
            raise UnmappedColumn(f"no {source_key} mapping for {name!r}")
        src = entry[source_key]
        if src not in table.feature_names:
            raise UnmappedColumn(
                f"{name!r} maps to {src!r}, absent from table {table.source!r}")
        cols.append(table.feature_names.index(src))
    return DataTable(table.X[:, cols], table.y, tuple(canonical_names), table.source)


def rename_to_canonical(table, mapping, source_key, canonical_names):
    """All-features variant: keep every column, but give the mapped ones their
    canonical names and move them to the front in canonical order."""
    src_to_canonical = {}
    for name in canonical_names:
        entry = mapping.get(name)
        if entry is None or not entry.get(source_key):
            raise UnmappedColumn(f"no {source_key} mapping for {name!r}")
        src_to_canonical[entry[source_key]] = name

    front, rest = [], []
    renamed = []
    for i, col in enumerate(table.feature_names):
        if col in src_to_canonical:
            front.append((src_to_canonical[col], i))
        else:
            rest.append((col, i))
    missing = set(src_to_canonical.values()) - {n for n, _ in front}
    if missing:
        raise UnmappedColumn(f"mapped columns absent from table: {sorted(missing)}")
    front.sort(key=lambda t: canonical_names.index(t[0]))
    renamed = front + rest
    idx = [i for _, i in renamed]
    names = tuple(n for n, _ in renamed)
    return DataTable(table.X[:, idx], table.y, names, table.source)


def check_same_schema(a, b):
    if a.feature_names != b.feature_names:
        raise SchemaMismatch(
            f"schemas differ: {a.source!r} vs {b.source!r}")


def median_impute_check(table):
    """Raise AllMissingColumn if any column has no observed value."""
    all_missing = np.isnan(table.X).all(axis=0)
    if all_missing.any():
        bad = [table.feature_names[i] for i in np.flatnonzero(all_missing)]
        raise AllMissingColumn(f"columns entirely missing: {bad}")
