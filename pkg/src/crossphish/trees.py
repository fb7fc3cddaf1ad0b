"""Tree ensembles: a single CART, random forests, and gradient boosting.

All three learners share one level-wise growth driver and one split kernel
maximizing sum_side G^2/(H + lambda):

    decision tree   g = w*y, h = w, lambda = 0   (equivalent to Gini)
    gbdt order 1    g = residual, h = 1          (variance splits, Newton leaf)
    gbdt order 2    g = p - y, h = p(1-p)        (second-order gain, L2 leaf)

Trees are stored flat (feature/threshold/left/right/value arrays with a
per-tree offset) because the kernels want plain arrays; serialization nests
them back into node objects.  Split convention: x <= threshold or NaN goes
left.  Ties in gain resolve to the lower feature index, then the lower
threshold.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateClass, SchemaMismatch, UnknownModel


@dataclass
class TreeEnsembleModel:
    kind: str
    mode: str  # "boosted": probability = sigmoid(margin); "averaged": margin is the probability
    base_score: float
    feature_names: tuple
    node_feat: np.ndarray
    node_thresh: np.ndarray
    node_left: np.ndarray
    node_right: np.ndarray
    node_value: np.ndarray
    tree_offset: np.ndarray
    tree_weight: np.ndarray
    params: dict = field(default_factory=dict)

    @property
    def n_trees(self):
        return self.tree_offset.shape[0] - 1

    @property
    def n_features(self):
        return len(self.feature_names)

    def margin(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.shape[1] != self.n_features:
            raise SchemaMismatch(f"{X.shape[1]} columns, model has {self.n_features}")
        out = np.empty(X.shape[0], dtype=np.float64)
        kernels.predict_margin(self.node_feat, self.node_thresh, self.node_left,
                               self.node_right, self.node_value, self.tree_offset,
                               self.tree_weight, X, self.base_score, out)
        return out

    def predict_proba(self, X):
        m = self.margin(X)
        if self.mode == "boosted":
            return _sigmoid(m)
        return np.clip(m, 0.0, 1.0)

    def predict(self, X):
        """Labels with p >= 0.5 mapped to the positive class."""
        return (self.predict_proba(X) >= 0.5).astype(np.int8)

    def check_table(self, table):
        if tuple(table.feature_names) != tuple(self.feature_names):
            raise SchemaMismatch(
                f"table schema {table.source!r} differs from model features")

    def max_depth(self):
        depth = 0
        for t in range(self.n_trees):
            stack = [(int(self.tree_offset[t]), 0)]
            while stack:
                node, d = stack.pop()
                if self.node_feat[node] < 0:
                    depth = max(depth, d)
                else:
                    stack.append((int(self.node_left[node]), d + 1))
                    stack.append((int(self.node_right[node]), d + 1))
        return depth

    def to_json(self):
        trees = []
        for t in range(self.n_trees):
            trees.append(self._node_dict(int(self.tree_offset[t])))
        return {
            "schema_version": 1,
            "kind": self.kind,
            "mode": self.mode,
            "base_score": self.base_score,
            "feature_names": list(self.feature_names),
            "tree_weights": self.tree_weight.tolist(),
            "trees": trees,
            "params": self.params,
        }

    def _node_dict(self, node):
        if self.node_feat[node] < 0:
            return {"value": float(self.node_value[node])}
        return {
            "feature": self.feature_names[self.node_feat[node]],
            "threshold": float(self.node_thresh[node]),
            "default": "left",
            "left": self._node_dict(int(self.node_left[node])),
            "right": self._node_dict(int(self.node_right[node])),
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def model_from_json(doc):
    if doc.get("schema_version") != 1:
        raise ValueError(f"unsupported model schema_version {doc.get('schema_version')!r}")
    names = tuple(doc["feature_names"])
    name_idx = {n: i for i, n in enumerate(names)}
    feat, thresh, left, right, value = [], [], [], [], []
    offsets = [0]

    def add(node):
        nid = len(feat)
        if "value" in node:
            feat.append(-1)
            thresh.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(float(node["value"]))
            return nid
        feat.append(name_idx[node["feature"]])
        thresh.append(float(node["threshold"]))
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        left_id = add(node["left"])
        right_id = add(node["right"])
        left[nid] = left_id
        right[nid] = right_id
        return nid

    for tree in doc["trees"]:
        add(tree)
        offsets.append(len(feat))

    return TreeEnsembleModel(
        kind=doc["kind"], mode=doc["mode"], base_score=float(doc["base_score"]),
        feature_names=names,
        node_feat=np.asarray(feat, dtype=np.int32),
        node_thresh=np.asarray(thresh, dtype=np.float64),
        node_left=np.asarray(left, dtype=np.int32),
        node_right=np.asarray(right, dtype=np.int32),
        node_value=np.asarray(value, dtype=np.float64),
        tree_offset=np.asarray(offsets, dtype=np.int64),
        tree_weight=np.asarray(doc["tree_weights"], dtype=np.float64),
        params=dict(doc.get("params", {})))


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_json(json.load(fh))


def _sigmoid(z):
    # tanh form avoids overflow warnings at extreme margins
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class _FlatTree:
    """Mutable node arrays while growing one tree."""

    def __init__(self):
        self.feat = []
        self.thresh = []
        self.left = []
        self.right = []
        self.value = []

    def new_node(self):
        self.feat.append(-1)
        self.thresh.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feat) - 1


def _column_orders(Xcols):
    return [np.argsort(col, kind="stable").astype(np.int64) for col in Xcols]


def _grow_tree(Xcols, orders, X, g, h, w, leaf_num, leaf_den, max_depth,
               min_leaf_w, min_cover, lam_split, lam_leaf, rng=None, mtry=None):
    """Grow one tree level-wise.

    Xcols is the transposed (contiguous per-feature) view of X; orders are the
    per-feature global stable argsorts.  g/h/w/leaf_num/leaf_den are per-row
    and already folded with any sample weight.  Returns (tree, row_leaf) where
    row_leaf maps each active input row to its leaf node id.
    """
    n, m = X.shape
    tree = _FlatTree()
    root = tree.new_node()
    node_slot = np.where(w > 0, 0, -1).astype(np.int32)
    row_leaf = np.full(n, -1, dtype=np.int64)
    active = [root]

    if node_slot.max() < 0:
        return tree, row_leaf

    for _level in range(max_depth + 1):
        n_act = len(active)
        if n_act == 0:
            break
        rows = np.flatnonzero(node_slot >= 0)
        slots = node_slot[rows]
        node_g = np.bincount(slots, weights=g[rows], minlength=n_act)
        node_h = np.bincount(slots, weights=h[rows], minlength=n_act)
        node_w = np.bincount(slots, weights=w[rows], minlength=n_act)

        at_cap = _level == max_depth
        if at_cap:
            do_split = np.zeros(n_act, dtype=bool)
            best_feat = np.full(n_act, -1, dtype=np.int64)
            best_thr = np.zeros(n_act)
        else:
            if mtry is None or mtry >= m:
                allowed = np.ones((n_act, m), dtype=np.uint8)
            else:
                draw = rng.random((n_act, m))
                chosen = np.argsort(draw, axis=1)[:, :mtry]
                allowed = np.zeros((n_act, m), dtype=np.uint8)
                allowed[np.arange(n_act)[:, None], chosen] = 1
            best_gain = np.full(n_act, -np.inf)
            best_feat = np.full(n_act, -1, dtype=np.int64)
            best_thr = np.zeros(n_act)
            gains = np.empty(n_act)
            thrs = np.empty(n_act)
            for j in range(m):
                col_allowed = np.ascontiguousarray(allowed[:, j])
                if not col_allowed.any():
                    continue
                gains.fill(-np.inf)
                thrs.fill(0.0)
                kernels.best_split_for_feature(
                    Xcols[j], orders[j], node_slot, n_act, g, h, w,
                    node_g, node_h, node_w, col_allowed,
                    lam_split, min_leaf_w, min_cover, gains, thrs)
                upd = gains > best_gain
                if upd.any():
                    best_gain[upd] = gains[upd]
                    best_feat[upd] = j
                    best_thr[upd] = thrs[upd]
            do_split = best_feat >= 0

        # nodes that stop here become leaves
        stop_slots = np.flatnonzero(~do_split)
        if stop_slots.size:
            fin = ~do_split[slots]
            frows = rows[fin]
            fslots = slots[fin]
            num = np.bincount(fslots, weights=leaf_num[frows], minlength=n_act)
            den = np.bincount(fslots, weights=leaf_den[frows], minlength=n_act)
            leaf_ids = np.empty(n_act, dtype=np.int64)
            for s in stop_slots:
                nid = active[s]
                denom = den[s] + lam_leaf
                tree.value[nid] = num[s] / denom if denom > 0 else 0.0
                leaf_ids[s] = nid
            row_leaf[frows] = leaf_ids[fslots]

        if not do_split.any():
            break

        # materialize children and reassign rows
        child_base = np.full(n_act, -1, dtype=np.int64)
        new_active = []
        for s in np.flatnonzero(do_split):
            nid = active[s]
            child_base[s] = len(new_active)
            lid = tree.new_node()
            rid = tree.new_node()
            tree.feat[nid] = int(best_feat[s])
            tree.thresh[nid] = float(best_thr[s])
            tree.left[nid] = lid
            tree.right[nid] = rid
            new_active.append(lid)
            new_active.append(rid)

        keep = do_split[slots]
        krows = rows[keep]
        kslots = slots[keep]
        go_right = X[krows, best_feat[kslots]] > best_thr[kslots]
        new_slot = np.full(n, -1, dtype=np.int32)
        new_slot[krows] = (child_base[kslots] + go_right).astype(np.int32)
        node_slot = new_slot
        active = new_active

    return tree, row_leaf


def _finalize(trees, weights, kind, mode, base_score, feature_names, params):
    feat, thresh, left, right, value = [], [], [], [], []
    offsets = [0]
    for tree in trees:
        k = len(feat)
        feat.extend(tree.feat)
        thresh.extend(tree.thresh)
        left.extend(c + k if c >= 0 else -1 for c in tree.left)
        right.extend(c + k if c >= 0 else -1 for c in tree.right)
        value.extend(tree.value)
        offsets.append(len(feat))
    return TreeEnsembleModel(
        kind=kind, mode=mode, base_score=base_score, feature_names=tuple(feature_names),
        node_feat=np.asarray(feat, dtype=np.int32),
        node_thresh=np.asarray(thresh, dtype=np.float64),
        node_left=np.asarray(left, dtype=np.int32),
        node_right=np.asarray(right, dtype=np.int32),
        node_value=np.asarray(value, dtype=np.float64),
        tree_offset=np.asarray(offsets, dtype=np.int64),
        tree_weight=np.asarray(weights, dtype=np.float64),
        params=params)


def _prep_inputs(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.isnan(X).any():
        raise ValueError("training features must be imputed (no NaN)")
    if y.min() == y.max():
        raise DegenerateClass("training labels are single-class")
    Xcols = [np.ascontiguousarray(X[:, j]) for j in range(X.shape[1])]
    return X, Xcols, _column_orders(Xcols), y


def fit_decision_tree(X, y, feature_names, max_depth=12, min_samples_leaf=1):
    X, Xcols, orders, y = _prep_inputs(X, y)
    n = X.shape[0]
    ones = np.ones(n)
    tree, _ = _grow_tree(Xcols, orders, X, y, ones, ones, y, ones,
                         max_depth=max_depth, min_leaf_w=float(min_samples_leaf),
                         min_cover=0.0, lam_split=0.0, lam_leaf=0.0)
    return _finalize([tree], [1.0], "dt", "averaged", 0.0, feature_names,
                     {"max_depth": max_depth, "min_samples_leaf": min_samples_leaf})


def fit_random_forest(X, y, feature_names, n_trees=200, max_depth=12, mtry=None,
                      min_samples_leaf=1, seed=0):
    X, Xcols, orders, y = _prep_inputs(X, y)
    n, m = X.shape
    if mtry is None:
        mtry = int(math.ceil(math.sqrt(m)))
    rng = np.random.default_rng(seed)
    trees = []
    for _t in range(n_trees):
        counts = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(np.float64)
        tree, _ = _grow_tree(Xcols, orders, X, y * counts, counts, counts,
                             y * counts, counts,
                             max_depth=max_depth, min_leaf_w=float(min_samples_leaf),
                             min_cover=0.0, lam_split=0.0, lam_leaf=0.0,
                             rng=rng, mtry=mtry)
        trees.append(tree)
    wts = [1.0 / n_trees] * n_trees
    return _finalize(trees, wts, "rf", "averaged", 0.0, feature_names,
                     {"n_trees": n_trees, "max_depth": max_depth, "mtry": mtry,
                      "min_samples_leaf": min_samples_leaf, "seed": seed})


def fit_gbdt(X, y, feature_names, n_rounds=300, learning_rate=0.1, max_depth=6,
             lam=1.0, min_child_weight=1.0, order=2):
    """Gradient boosted trees on the logistic loss.

    order=2 splits on the second-order gain with L2 term `lam` and uses
    -G/(H+lam) leaves; order=1 splits on variance of the residual and fits
    the leaf with one Newton step sum(r)/sum(p(1-p)) (no L2 term).

    Returns (model, history) with history["loss"] the training log-loss after
    each round.
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    X, Xcols, orders, y = _prep_inputs(X, y)
    n = X.shape[0]
    ones = np.ones(n)

    pbar = min(max(float(y.mean()), 1e-12), 1.0 - 1e-12)
    base = math.log(pbar / (1.0 - pbar))
    margins = np.full(n, base)
    trees = []
    losses = []
    for _r in range(n_rounds):
        p = _sigmoid(margins)
        if order == 2:
            grad = p - y
            hess = p * (1.0 - p)
            tree, row_leaf = _grow_tree(Xcols, orders, X, grad, hess, ones,
                                        -grad, hess,
                                        max_depth=max_depth, min_leaf_w=0.0,
                                        min_cover=float(min_child_weight),
                                        lam_split=float(lam), lam_leaf=float(lam))
        else:
            resid = y - p
            tree, row_leaf = _grow_tree(Xcols, orders, X, resid, ones, ones,
                                        resid, p * (1.0 - p),
                                        max_depth=max_depth, min_leaf_w=0.0,
                                        min_cover=float(min_child_weight),
                                        lam_split=0.0, lam_leaf=0.0)
        values = np.asarray(tree.value)
        margins = margins + learning_rate * values[row_leaf]
        losses.append(float(np.mean(np.logaddexp(0.0, margins) - y * margins)))
        trees.append(tree)

    params = {"n_rounds": n_rounds, "learning_rate": learning_rate,
              "max_depth": max_depth, "lambda": lam,
              "min_child_weight": min_child_weight, "order": order}
    model = _finalize(trees, [learning_rate] * n_rounds, f"gbdt{order}", "boosted",
                      base, feature_names, params)
    return model, {"loss": losses}


def train_model(kind, X, y, feature_names, params=None, seed=0):
    """Uniform entry point used by the experiment runner and CLI."""
    params = dict(params or {})
    if kind == "dt":
        return fit_decision_tree(X, y, feature_names, **params)
    if kind == "rf":
        params.setdefault("seed", seed)
        return fit_random_forest(X, y, feature_names, **params)
    if kind in ("gbm", "gbdt1"):
        params["order"] = 1
        return fit_gbdt(X, y, feature_names, **params)[0]
    if kind in ("xgb", "gbdt2"):
        params["order"] = 2
        return fit_gbdt(X, y, feature_names, **params)[0]
    raise UnknownModel(f"unknown tree model kind {kind!r}")
