"""Numba-jitted kernels.

Twins of kernels_np: same signatures, bitwise-identical results.  The split
scan keeps per-node running sums in the global value order, which is exactly
the order the numpy twin's per-segment cumsum accumulates in.  No fastmath
anywhere; reassociation would break cross-backend equality.

The Shapley walk is shared source: kernels_np.shap_interventional is written
in numba-compatible python and compiled here as-is.
"""

import numpy as np
from numba import njit

from . import kernels_np


@njit(cache=True)
def best_split_for_feature(xcol, order, node_slot, n_nodes, g, h, w,
                           node_g, node_h, node_w, allowed,
                           lam, min_leaf_w, min_cover, gains, thresholds):
    n = order.shape[0]
    run_g = np.zeros(n_nodes, dtype=np.float64)
    run_h = np.zeros(n_nodes, dtype=np.float64)
    run_w = np.zeros(n_nodes, dtype=np.float64)
    last = np.zeros(n_nodes, dtype=np.float64)
    seen = np.zeros(n_nodes, dtype=np.uint8)
    best_gain = np.full(n_nodes, -np.inf, dtype=np.float64)
    best_thr = np.zeros(n_nodes, dtype=np.float64)

    for ii in range(n):
        row = order[ii]
        nid = node_slot[row]
        if nid < 0:
            continue
        if allowed[nid] == 0:
            continue
        v = xcol[row]
        if seen[nid] == 1 and v > last[nid]:
            gl = run_g[nid]
            hl = run_h[nid]
            wl = run_w[nid]
            G = node_g[nid]
            H = node_h[nid]
            W = node_w[nid]
            gr = G - gl
            hr = H - hl
            wr = W - wl
            if wl >= min_leaf_w and wr >= min_leaf_w and hl >= min_cover and hr >= min_cover:
                gain = gl * gl / (hl + lam) + gr * gr / (hr + lam) - G * G / (H + lam)
                if gain > best_gain[nid]:
                    best_gain[nid] = gain
                    best_thr[nid] = 0.5 * (last[nid] + v)
        run_g[nid] += g[row]
        run_h[nid] += h[row]
        run_w[nid] += w[row]
        last[nid] = v
        seen[nid] = 1

    for nid in range(n_nodes):
        if best_gain[nid] > 0.0:
            gains[nid] = best_gain[nid]
            thresholds[nid] = best_thr[nid]


@njit(cache=True)
def predict_margin(node_feat, node_thresh, node_left, node_right, node_value,
                   tree_offset, tree_weight, X, base, out):
    n = X.shape[0]
    n_trees = tree_offset.shape[0] - 1
    for i in range(n):
        acc = base
        for t in range(n_trees):
            node = tree_offset[t]
            while node_feat[node] >= 0:
                xv = X[i, node_feat[node]]
                if xv <= node_thresh[node] or np.isnan(xv):
                    node = node_left[node]
                else:
                    node = node_right[node]
            acc += tree_weight[t] * node_value[node]
        out[i] = acc


@njit(cache=True)
def knn_sorted(S, k, out_idx):
    n, m = S.shape
    bd = np.empty(k, dtype=np.float64)
    bj = np.empty(k, dtype=np.int64)
    for i in range(n):
        for q in range(k):
            bd[q] = np.inf
            bj[q] = -1
        for j in range(n):
            if j == i:
                continue
            dist = 0.0
            for f in range(m):
                diff = S[j, f] - S[i, f]
                dist += diff * diff
            if dist < bd[k - 1] or (dist == bd[k - 1] and j < bj[k - 1]):
                pos = k - 1
                while pos > 0 and (dist < bd[pos - 1] or (dist == bd[pos - 1] and j < bj[pos - 1])):
                    bd[pos] = bd[pos - 1]
                    bj[pos] = bj[pos - 1]
                    pos -= 1
                bd[pos] = dist
                bj[pos] = j
        for q in range(k):
            out_idx[i, q] = bj[q]


shap_interventional = njit(cache=True)(kernels_np.shap_interventional)
