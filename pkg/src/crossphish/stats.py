"""Descriptive statistics by feature kind: class-conditional means for the
count and length features, class-conditional percentage-of-ones for the
binary flags.  The two kinds go to separate tables so counts and percentages
are never mixed on one axis.
"""

import numpy as np

from .errors import DegenerateClass
from .urlfeat import BINARY_FEATURES


def _five_number(col):
    col = col[~np.isnan(col)]
    if col.shape[0] == 0:
        return {"min": None, "max": None, "median": None, "stddev": None}
    return {
        "min": float(col.min()),
        "max": float(col.max()),
        "median": float(np.median(col)),
        "stddev": float(col.std()),
    }


def feature_stats(table, binary_features=None):
    """Per-feature report over one table.

    Numerical (count/length) features get per-class means; binary features
    get per-class percentage of ones in [0, 100].  NaN cells are excluded
    from every statistic.  Returns a dict with "numerical" and "binary"
    row lists plus the class sizes.
    """
    if binary_features is None:
        binary_features = BINARY_FEATURES
    binary = set(binary_features) & set(table.feature_names)
    neg_rows = table.y == 0
    pos_rows = table.y == 1
    if not neg_rows.any() or not pos_rows.any():
        raise DegenerateClass("both classes are needed for per-class statistics")

    def class_mean(col, mask):
        vals = col[mask]
        vals = vals[~np.isnan(vals)]
        return float(vals.mean()) if vals.shape[0] else None

    numerical, flags = [], []
    for j, name in enumerate(table.feature_names):
        col = table.X[:, j]
        row = {"feature": name,
               "mean_legitimate": class_mean(col, neg_rows),
               "mean_phishing": class_mean(col, pos_rows)}
        row.update(_five_number(col))
        if name in binary:
            for cls in ("legitimate", "phishing"):
                m = row["mean_" + cls]
                row["percent_" + cls] = None if m is None else 100.0 * m
            flags.append(row)
        else:
            numerical.append(row)

    return {
        "source": table.source,
        "rows_legitimate": int(neg_rows.sum()),
        "rows_phishing": int(pos_rows.sum()),
        "numerical": numerical,
        "binary": flags,
    }


def largest_binary_gap(stats_a, stats_b):
    """The binary feature whose phishing-class percentage differs most
    between two reports, with the gap in percentage points."""
    pa = {r["feature"]: r["percent_phishing"] for r in stats_a["binary"]}
    best_name, best_gap = None, -1.0
    for row in stats_b["binary"]:
        name = row["feature"]
        if name not in pa or pa[name] is None or row["percent_phishing"] is None:
            continue
        gap = abs(pa[name] - row["percent_phishing"])
        if gap > best_gap:
            best_name, best_gap = name, gap
    return best_name, best_gap
