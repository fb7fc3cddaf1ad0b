"""Interventional Shapley values for tree ensemble margins.

Attributions are background-conditioned: a coalition S is evaluated as the
mean margin over background rows b of the hybrid input taking x on S and b
elsewhere.  Two implementations:

- shap_brute_force: direct subset enumeration (2^m coalitions, m <= 12).
  This is the reference oracle; it never touches the fast path.
- tree_shap: polynomial per-(instance, background row, tree) path walk via
  the kernels module; must match the oracle to 1e-9.

Both satisfy local accuracy exactly in real arithmetic:
sum(phi) = margin(x) - mean_b margin(b).
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import EmptyIntersection, InsufficientRows, LengthMismatch, TooManyFeatures

BRUTE_FORCE_MAX_FEATURES = 12


def exact_weight_table(max_count):
    """W[a, b] = (a-1)! b! / (a+b)! for a >= 1; row 0 is unused zeros.

    At a leaf reached with u x-followers and d b-followers, each x-follower
    gains W[u, d] * leaf and each b-follower loses W[d, u] * leaf.
    """
    size = max_count + 1
    W = np.zeros((size, size))
    for a in range(1, size):
        for b in range(size):
            if a + b > max_count:
                continue
            W[a, b] = (math.factorial(a - 1) * math.factorial(b)
                       / math.factorial(a + b))
    return W


def shap_brute_force(model, x, background):
    """Oracle attributions for one instance by coalition enumeration.

    Args:
        model: anything with .margin(X) and .feature_names.
        x: (m,) instance.
        background: (nb, m) background rows.

    Returns:
        (phi, base): (m,) attributions and the mean background margin.

    Raises:
        TooManyFeatures: for m > 12.
    """
    x = np.asarray(x, dtype=np.float64)
    B = np.ascontiguousarray(background, dtype=np.float64)
    m = x.shape[0]
    if m > BRUTE_FORCE_MAX_FEATURES:
        raise TooManyFeatures(f"{m} features, brute force capped at {BRUTE_FORCE_MAX_FEATURES}")
    if B.ndim != 2 or B.shape[1] != m:
        raise LengthMismatch(f"background shape {B.shape} vs {m} features")

    nb = B.shape[0]
    n_masks = 1 << m
    v = np.empty(n_masks)
    for mask in range(n_masks):
        comp = B.copy()
        for j in range(m):
            if mask >> j & 1:
                comp[:, j] = x[j]
        v[mask] = model.margin(comp).mean()

    # phi_j = sum over S not containing j of |S|! (m-|S|-1)! / m! * (v(S+j) - v(S))
    fact = [math.factorial(i) for i in range(m + 1)]
    phi = np.zeros(m)
    for mask in range(n_masks):
        size = bin(mask).count("1")
        for j in range(m):
            if mask >> j & 1:
                continue
            weight = fact[size] * fact[m - size - 1] / fact[m]
            phi[j] += weight * (v[mask | (1 << j)] - v[mask])
    return phi, float(v[0])


@dataclass
class ShapResult:
    values: np.ndarray       # (n, m)
    base_value: float        # mean background margin
    feature_names: tuple
    background_size: int

    def local_accuracy_error(self, margins):
        """max |base + sum(phi) - margin| over instances."""
        recon = self.base_value + self.values.sum(axis=1)
        return float(np.max(np.abs(recon - np.asarray(margins))))


def tree_shap(model, X, background):
    """Fast interventional attributions for a TreeEnsembleModel.

    Returns a ShapResult over the rows of X with attributions in margin
    units (log-odds for boosted models, probability for averaged ones).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    B = np.ascontiguousarray(background, dtype=np.float64)
    if X.ndim != 2 or B.ndim != 2 or X.shape[1] != B.shape[1]:
        raise LengthMismatch(f"X {X.shape} vs background {B.shape}")
    if X.shape[1] != model.n_features:
        raise LengthMismatch(f"{X.shape[1]} columns, model has {model.n_features}")
    if B.shape[0] == 0:
        raise InsufficientRows("background is empty")

    depth = model.max_depth()
    wtab = exact_weight_table(max(depth, 1))
    phi = np.zeros((X.shape[0], X.shape[1]))
    kernels.shap_interventional(
        model.node_feat, model.node_thresh, model.node_left, model.node_right,
        model.node_value, model.tree_offset, model.tree_weight,
        X, B, wtab, depth, phi)
    phi /= B.shape[0]
    base = float(model.margin(B).mean())
    return ShapResult(values=phi, base_value=base,
                      feature_names=tuple(model.feature_names),
                      background_size=B.shape[0])


def sample_background(table, size=128, seed=0):
    """Background rows drawn without replacement from a (training) table."""
    n = table.n_rows
    if n == 0:
        raise InsufficientRows("empty table")
    take = min(size, n)
    rng = np.random.default_rng(seed)
    rows = np.sort(rng.choice(n, size=take, replace=False))
    return np.ascontiguousarray(table.X[rows])


def balanced_sample(table, per_class=500, seed=0):
    """Row indices with up to per_class rows of each label, seeded."""
    rng = np.random.default_rng(seed)
    picks = []
    for c in (0, 1):
        idx = np.flatnonzero(table.y == c)
        take = min(per_class, idx.shape[0])
        if take:
            picks.append(np.sort(rng.choice(idx, size=take, replace=False)))
    if not picks:
        raise InsufficientRows("empty table")
    return np.concatenate(picks)


def global_importance(result):
    """Per-feature mean |phi| and mean phi, sorted by mean |phi| descending
    (ties by name) so the order is a reproducible ranking.  rank is 1-based;
    direction is the sign of the mean (zero counts as positive)."""
    mean_abs = np.abs(result.values).mean(axis=0)
    mean_signed = result.values.mean(axis=0)
    rows = [
        {"feature": name, "mean_abs_shap": float(a), "mean_shap": float(s),
         "direction": "negative" if s < 0 else "positive"}
        for name, a, s in zip(result.feature_names, mean_abs, mean_signed)
    ]
    rows.sort(key=lambda r: (-r["mean_abs_shap"], r["feature"]))
    for i, row in enumerate(rows):
        row["rank"] = i + 1
    return rows


def midranks(values):
    """1-based ranks with ties sharing their average position."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0], dtype=np.float64)
    i = 0
    while i < values.shape[0]:
        j = i
        while j + 1 < values.shape[0] and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def summary_data(result, X):
    """Beeswarm input: one row per (instance, feature) with the raw feature
    value, its attribution, and the value's empirical-CDF position among the
    explained instances ((midrank - 0.5) / n, so a constant column sits at
    0.5).  Features appear in global-importance order."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape != result.values.shape:
        raise LengthMismatch(
            f"feature matrix {X.shape} vs attributions {result.values.shape}")
    order = [row["feature"] for row in global_importance(result)]
    col = {name: j for j, name in enumerate(result.feature_names)}
    n = X.shape[0]
    out = []
    for name in order:
        j = col[name]
        q = (midranks(X[:, j]) - 0.5) / n
        for i in range(n):
            out.append({"feature": name,
                        "feature_value": float(X[i, j]),
                        "shap_value": float(result.values[i, j]),
                        "value_quantile": float(q[i])})
    return out


def write_shap_csv(result, path):
    """Long-form CSV: instance_id, feature, shap_value."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["instance_id", "feature", "shap_value"])
        for i in range(result.values.shape[0]):
            for j, name in enumerate(result.feature_names):
                w.writerow([i, name, repr(float(result.values[i, j]))])


def shap_meta(result, extra=None):
    meta = {
        "base_value": result.base_value,
        "feature_names": list(result.feature_names),
        "n_instances": int(result.values.shape[0]),
        "background_size": result.background_size,
        "units": "margin",
    }
    if extra:
        meta.update(extra)
    return meta


def _ranks(importance):
    """feature -> 0-based rank from an importance list (already sorted)."""
    return {row["feature"]: i for i, row in enumerate(importance)}


@dataclass
class DivergenceReport:
    n_common: int
    kendall_tau: float
    spearman_rho: float
    top_k: int
    jaccard_top_k: float
    sign_flips: list

    def to_dict(self):
        return {
            "n_common": self.n_common,
            "kendall_tau": self.kendall_tau,
            "spearman_rho": self.spearman_rho,
            "top_k": self.top_k,
            "jaccard_top_k": self.jaccard_top_k,
            "sign_flips": self.sign_flips,
        }


def kendall_tau_a(ra, rb):
    """Tau-a by pair counting over two equal-length rank vectors without
    ties: (concordant - discordant) / (n choose 2)."""
    n = len(ra)
    if n < 2:
        raise InsufficientRows("need at least two items for tau")
    conc = disc = 0
    for i in range(n):
        for j in range(i + 1, n):
            s = (ra[i] - ra[j]) * (rb[i] - rb[j])
            if s > 0:
                conc += 1
            elif s < 0:
                disc += 1
    return (conc - disc) / (n * (n - 1) / 2)


def spearman_rho(ra, rb):
    """1 - 6 sum(d^2) / (n (n^2-1)) over permutation ranks."""
    ra = np.asarray(ra, dtype=np.float64)
    rb = np.asarray(rb, dtype=np.float64)
    n = ra.shape[0]
    if n < 2:
        raise InsufficientRows("need at least two items for rho")
    d = ra - rb
    return float(1.0 - 6.0 * np.sum(d * d) / (n * (n * n - 1)))


def compare_rankings(importance_a, importance_b, top_k=10):
    """Rank agreement between two global importance lists.

    Only features present in both lists are compared (EmptyIntersection when
    none).  Ranks are positions after re-sorting the common subset by
    mean |phi| descending with name tiebreak.  A sign flip is a common
    feature whose mean signed attributions have opposite signs (product < 0).
    """
    names_a = {r["feature"] for r in importance_a}
    names_b = {r["feature"] for r in importance_b}
    common = sorted(names_a & names_b)
    if not common:
        raise EmptyIntersection("no shared features between rankings")

    def order(imp):
        rows = [r for r in imp if r["feature"] in set(common)]
        rows.sort(key=lambda r: (-r["mean_abs_shap"], r["feature"]))
        return {r["feature"]: i for i, r in enumerate(rows)}

    rank_a = order(importance_a)
    rank_b = order(importance_b)
    ra = [rank_a[f] for f in common]
    rb = [rank_b[f] for f in common]

    tau = kendall_tau_a(ra, rb)
    rho = spearman_rho(ra, rb)

    k = min(top_k, len(common))
    top_a = {f for f, r in rank_a.items() if r < k}
    top_b = {f for f, r in rank_b.items() if r < k}
    union = top_a | top_b
    jaccard = len(top_a & top_b) / len(union) if union else 1.0

    signed_a = {r["feature"]: r["mean_shap"] for r in importance_a}
    signed_b = {r["feature"]: r["mean_shap"] for r in importance_b}
    flips = []
    for f in common:
        if signed_a[f] * signed_b[f] < 0.0:
            flips.append({"feature": f,
                          "mean_shap_a": signed_a[f],
                          "mean_shap_b": signed_b[f]})
    flips.sort(key=lambda r: r["feature"])
    return DivergenceReport(n_common=len(common), kendall_tau=tau,
                            spearman_rho=rho, top_k=k, jaccard_top_k=jaccard,
                            sign_flips=flips)
