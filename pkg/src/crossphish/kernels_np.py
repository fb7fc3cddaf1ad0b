"""Pure numpy/python fallback kernels.

Each function here must produce bitwise-identical output to its numba twin in
kernels_nb.  That pins the accumulation order: prefix sums run over the same
global value-ordering the jitted loops walk (np.cumsum is sequential), node
totals come precomputed from the shared driver, and gain expressions are
written with the exact same operations.  Do not "optimize" the arithmetic
here without changing kernels_nb to match.
"""

import numpy as np


def best_split_for_feature(xcol, order, node_slot, n_nodes, g, h, w,
                           node_g, node_h, node_w, allowed,
                           lam, min_leaf_w, min_cover, gains, thresholds):
    """Best split per active node for one feature.

    Args:
        xcol: (n,) feature values, no NaN.
        order: (n,) row indices sorting xcol ascending (stable).
        node_slot: (n,) slot id per row, -1 for inactive rows.
        n_nodes: number of active slots.
        g, h, w: (n,) gradient / hessian / row-weight sums, pre-folded.
        node_g, node_h, node_w: (n_nodes,) per-slot totals (shared driver).
        allowed: (n_nodes,) uint8, 0 disables the feature for that slot.
        lam: L2 term added to every hessian denominator.
        min_leaf_w: minimum summed row weight per side.
        min_cover: minimum summed hessian per side.
        gains: (n_nodes,) output, pre-filled -inf; only improved entries set.
        thresholds: (n_nodes,) output.

    A candidate lies between consecutive distinct values within a node; its
    gain is gl^2/(hl+lam) + gr^2/(hr+lam) - G^2/(H+lam).  Ties keep the
    lowest threshold.  Gains must be strictly positive to count.
    """
    slots = node_slot[order]
    valid = slots >= 0
    rows = order[valid]
    s = slots[valid]
    ok_node = allowed[s] != 0
    rows = rows[ok_node]
    s = s[ok_node]
    if rows.size == 0:
        return

    grp = np.argsort(s, kind="stable")
    rows = rows[grp]
    s = s[grp]
    vals = xcol[rows]
    gg = g[rows]
    hh = h[rows]
    ww = w[rows]

    starts = np.flatnonzero(np.r_[True, s[1:] != s[:-1]])
    ends = np.r_[starts[1:], s.size]
    for a, b in zip(starts, ends):
        if b - a < 2:
            continue
        nid = int(s[a])
        v = vals[a:b]
        cand = v[1:] > v[:-1]
        if not cand.any():
            continue
        cg = np.cumsum(gg[a:b])[:-1][cand]
        ch = np.cumsum(hh[a:b])[:-1][cand]
        cw = np.cumsum(ww[a:b])[:-1][cand]
        G = node_g[nid]
        H = node_h[nid]
        W = node_w[nid]
        gr = G - cg
        hr = H - ch
        wr = W - cw
        feasible = (cw >= min_leaf_w) & (wr >= min_leaf_w) & (ch >= min_cover) & (hr >= min_cover)
        if not feasible.any():
            continue
        gain = cg * cg / (ch + lam) + gr * gr / (hr + lam) - G * G / (H + lam)
        gain = np.where(feasible, gain, -np.inf)
        j = int(np.argmax(gain))
        if gain[j] > 0.0:
            gains[nid] = gain[j]
            lo = v[:-1][cand][j]
            hi = v[1:][cand][j]
            thresholds[nid] = 0.5 * (lo + hi)


def predict_margin(node_feat, node_thresh, node_left, node_right, node_value,
                   tree_offset, tree_weight, X, base, out):
    """Ensemble margin per row: base + sum_t weight_t * leaf_value_t.

    NaN feature values route to the left child.
    """
    n = X.shape[0]
    n_trees = tree_offset.shape[0] - 1
    out[:] = base
    for t in range(n_trees):
        node = np.full(n, tree_offset[t], dtype=np.int64)
        while True:
            f = node_feat[node]
            inner = f >= 0
            if not inner.any():
                break
            idx = np.flatnonzero(inner)
            sub = node[idx]
            xv = X[idx, f[idx]]
            go_left = (xv <= node_thresh[sub]) | np.isnan(xv)
            node[idx] = np.where(go_left, node_left[sub], node_right[sub])
        out += tree_weight[t] * node_value[node]


def knn_sorted(S, k, out_idx):
    """k nearest neighbours per row, self excluded.

    Selection order is lexicographic on (squared distance, index).  Distances
    accumulate feature-by-feature so they match the jitted twin bitwise.
    """
    n, m = S.shape
    for i in range(n):
        d = np.zeros(n, dtype=np.float64)
        for f in range(m):
            diff = S[:, f] - S[i, f]
            d += diff * diff
        order = np.argsort(d, kind="stable")
        order = order[order != i]
        out_idx[i, :] = order[:k]


def shap_interventional(node_feat, node_thresh, node_left, node_right, node_value,
                        tree_offset, tree_weight, X, B, wtab, max_depth, out_phi):
    """Background-conditioned Shapley values of the ensemble margin.

    For every (instance, background row, tree) the walk partitions the path
    features into x-followers and b-followers; at each reached leaf V with
    u x-followers and d b-followers it adds wtab[u, d] * V to every x-follower
    and subtracts wtab[d, u] * V from every b-follower, where
    wtab[a, b] = (a-1)! b! / (a+b)!.  Results are summed over background rows
    and trees; the caller divides by len(B) afterwards.

    This exact function is njit-compiled for the numba backend, so it stays
    within numba-supported python.
    """
    nx = X.shape[0]
    nb = B.shape[0]
    n_trees = tree_offset.shape[0] - 1
    cap = max_depth + 2
    width = max_depth + 1
    stack_node = np.empty(cap, dtype=np.int64)
    stack_u = np.empty(cap, dtype=np.int64)
    stack_d = np.empty(cap, dtype=np.int64)
    stack_fx = np.empty((cap, width), dtype=np.int64)
    stack_fb = np.empty((cap, width), dtype=np.int64)

    for ix in range(nx):
        for t in range(n_trees):
            tw = tree_weight[t]
            root = tree_offset[t]
            for ib in range(nb):
                sp = 0
                stack_node[0] = root
                stack_u[0] = 0
                stack_d[0] = 0
                while sp >= 0:
                    node = stack_node[sp]
                    u = stack_u[sp]
                    d = stack_d[sp]
                    diverged = False
                    while node_feat[node] >= 0:
                        f = node_feat[node]
                        thr = node_thresh[node]
                        xv = X[ix, f]
                        bv = B[ib, f]
                        x_left = (xv <= thr) or np.isnan(xv)
                        b_left = (bv <= thr) or np.isnan(bv)
                        mark = 0
                        for q in range(u):
                            if stack_fx[sp, q] == f:
                                mark = 1
                                break
                        if mark == 0:
                            for q in range(d):
                                if stack_fb[sp, q] == f:
                                    mark = 2
                                    break
                        if mark == 1:
                            node = node_left[node] if x_left else node_right[node]
                        elif mark == 2:
                            node = node_left[node] if b_left else node_right[node]
                        elif x_left == b_left:
                            node = node_left[node] if x_left else node_right[node]
                        else:
                            # paths diverge: current frame becomes the b-branch,
                            # the x-branch goes on top and is walked first
                            b_child = node_left[node] if b_left else node_right[node]
                            x_child = node_left[node] if x_left else node_right[node]
                            stack_node[sp] = b_child
                            for q in range(u):
                                stack_fx[sp + 1, q] = stack_fx[sp, q]
                            for q in range(d):
                                stack_fb[sp + 1, q] = stack_fb[sp, q]
                            stack_fb[sp, d] = f
                            stack_d[sp] = d + 1
                            stack_fx[sp + 1, u] = f
                            stack_u[sp + 1] = u + 1
                            stack_d[sp + 1] = d
                            stack_node[sp + 1] = x_child
                            sp += 1
                            diverged = True
                            break
                    if diverged:
                        continue
                    val = tw * node_value[node]
                    if u > 0:
                        inc = wtab[u, d] * val
                        for q in range(u):
                            out_phi[ix, stack_fx[sp, q]] += inc
                    if d > 0:
                        dec = wtab[d, u] * val
                        for q in range(d):
                            out_phi[ix, stack_fb[sp, q]] -= dec
                    sp -= 1
