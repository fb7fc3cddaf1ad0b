"""Synthetic two-source benchmark with a controlled distribution shift.

Source A and source B describe the same 20-feature schema but disagree on
the direction of four feature-label couplings (slash count, TLD-in-params
flag, domain length, redirect count).  A model trained on either source
scores well on its own held-out split and collapses on the other source,
and the flipped features change attribution sign between the two
single-source experiments.  That makes the full audit pipeline exercisable
with no network access.

Source A mimics the first public dataset's shape: canonical column names,
imbalanced classes, numeric 0/1 label column "phishing", a few extra
columns, one constant column.  Source B mimics the second: the other
naming scheme, balanced classes, a raw "url" text column, string label
column "status" (phishing/legitimate).  Both get a sprinkle of missing
cells in the resolver-backed columns.
"""

import csv
import math

import numpy as np

from .table import load_schema_mapping
from .urlfeat import CANONICAL_FEATURES

# (legitimate, phishing) distribution parameters; flipped features swap the
# pair in source B
_SHARED_POISSON = {
    "qty_dot_url": (3.0, 4.2),
    "qty_hyphen_url": (0.7, 1.5),
    "qty_at_url": (0.03, 0.16),
}
_FLIPPED_POISSON = {
    "qty_slash_url": (3.0, 7.5),
    "qty_redirects": (0.4, 2.6),
}
_NOISE_POISSON = {
    "qty_equal_url": 0.8,
    "qty_dollar_url": 0.05,
    "qty_comma_url": 0.1,
    "qty_underline_url": 0.5,
    "qty_percent_url": 0.3,
    "qty_asterisk_url": 0.02,
    "qty_questionmark_url": 0.5,
    "qty_tilde_url": 0.05,
    "qty_and_url": 0.6,
}


def _source_columns(y, rng, flip):
    """Feature columns for one source; flip reverses the class-conditional
    parameters of the four shifted features."""
    n = y.shape[0]
    phish = y == 1

    def rates(pair, flipped):
        lo, hi = (pair[1], pair[0]) if flipped else pair
        return np.where(phish, hi, lo)

    cols = {}
    for name, pair in _SHARED_POISSON.items():
        cols[name] = rng.poisson(rates(pair, False)).astype(float)
    for name, pair in _FLIPPED_POISSON.items():
        cols[name] = rng.poisson(rates(pair, flip)).astype(float)
    for name, lam in _NOISE_POISSON.items():
        cols[name] = rng.poisson(lam, size=n).astype(float)

    # lengths: shared weak coupling for the URL, flipped strong one for the
    # domain
    cols["length_url"] = np.maximum(
        np.rint(rng.normal(rates((55.0, 78.0), False), 18.0)), 4.0)
    cols["domain_length"] = np.maximum(
        np.rint(rng.normal(rates((13.0, 26.0), flip), 3.5)), 4.0)

    # binary flags
    def bern(pair, flipped):
        return (rng.random(n) < rates(pair, flipped)).astype(float)

    cols["url_google_index"] = bern((0.62, 0.38), False)
    cols["tld_present_params"] = bern((0.08, 0.72), flip)
    cols["url_shortened"] = bern((0.06, 0.09), False)
    cols["domain_in_ip"] = bern((0.04, 0.05), False)
    return cols


def _punch_missing(cols, rng, names, frac=0.03):
    for name in names:
        mask = rng.random(cols[name].shape[0]) < frac
        cols[name] = cols[name].copy()
        cols[name][mask] = np.nan


def _fake_url(rng, domain_len, url_len):
    letters = "abcdefghijklmnopqrstuvwxyz"
    host = "".join(letters[i] for i in rng.integers(0, 26, size=max(int(domain_len) - 4, 2)))
    tail_len = max(int(url_len) - len(host) - 12, 1)
    tail = "".join(letters[i] for i in rng.integers(0, 26, size=tail_len))
    return f"http://{host}.com/{tail}"


def _write_csv(path, header, columns, n):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(n):
            row = []
            for name in header:
                v = columns[name][i]
                if isinstance(v, str):
                    row.append(v)
                elif isinstance(v, float) and math.isnan(v):
                    row.append("")
                elif float(v) == int(v):
                    row.append(int(v))
                else:
                    row.append(repr(float(v)))
            w.writerow(row)


def generate_source_a(path, n=4000, seed=0, phish_fraction=0.3):
    """Imbalanced source with canonical column names and a 0/1 label."""
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < phish_fraction).astype(np.int8)
    cols = _source_columns(y, rng, flip=False)
    _punch_missing(cols, rng, ("url_google_index", "qty_redirects"))

    cols["qty_dot_domain"] = rng.poisson(1.1, size=n).astype(float)
    cols["qty_hyphen_domain"] = rng.poisson(0.2, size=n).astype(float)
    cols["asn_ip"] = rng.integers(1000, 64000, size=n).astype(float)
    cols["server_client_domain"] = np.zeros(n)  # constant on purpose
    cols["phishing"] = y.astype(float)

    header = list(CANONICAL_FEATURES) + [
        "qty_dot_domain", "qty_hyphen_domain", "asn_ip",
        "server_client_domain", "phishing"]
    _write_csv(path, header, cols, n)
    return path


def generate_source_b(path, n=3000, seed=1, phish_fraction=0.5):
    """Balanced source with the alternate naming scheme, a text url column,
    and a string label."""
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < phish_fraction).astype(np.int8)
    cols = _source_columns(y, rng, flip=True)
    _punch_missing(cols, rng, ("url_google_index", "qty_redirects"))

    mapping = load_schema_mapping()
    renamed = {mapping[name]["d2"]: cols[name] for name in CANONICAL_FEATURES}
    renamed["url"] = [
        _fake_url(rng, cols["domain_length"][i], cols["length_url"][i])
        for i in range(n)]
    renamed["nb_www"] = rng.integers(0, 2, size=n).astype(float)
    renamed["nb_com"] = rng.poisson(0.9, size=n).astype(float)
    renamed["punycode"] = np.zeros(n)  # constant on purpose
    renamed["status"] = ["phishing" if v else "legitimate" for v in y]

    header = ["url"] + [mapping[name]["d2"] for name in CANONICAL_FEATURES] + [
        "nb_www", "nb_com", "punycode", "status"]
    _write_csv(path, header, renamed, n)
    return path


def generate_pair(out_dir, n_a=4000, n_b=3000, seed=0):
    """Write both synthetic sources under out_dir; returns their paths."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    a = os.path.join(out_dir, "sourceA.csv")
    b = os.path.join(out_dir, "sourceB.csv")
    generate_source_a(a, n=n_a, seed=seed)
    generate_source_b(b, n=n_b, seed=seed + 1)
    return {"d1": a, "d2": b}
