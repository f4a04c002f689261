"""NumPy reference kernels for tree growing and forest prediction.

This is the fallback backend used when the compiled extension is missing.
The compiled twin (``_kernels_cy``) implements exactly the same arithmetic in
the same order, so the two backends produce bit-identical trees and
predictions; keep any change here mirrored there.

Key layout invariants shared by both backends:

* a tree is grown level-wise; each level keeps, per candidate feature, the
  rows of all active nodes concatenated segment-by-segment in ascending
  feature-value order;
* prefix sums of residuals are taken sequentially over that concatenated
  order (``np.cumsum`` is sequential accumulation);
* the best split is the first (feature, position) pair in scan order whose
  gain strictly exceeds the running best, seeded at parent score + eps;
* split thresholds are midpoints nudged down to the left value whenever
  rounding would land them on the right value, so routing by ``x <= thr``
  reproduces the training partition exactly.
"""

from __future__ import annotations

import numpy as np

GAIN_EPS = 1e-12

BACKEND_NAME = "python"


def build_tree(
    X: np.ndarray,
    g: np.ndarray,
    feat_ids: np.ndarray,
    sorted_rows: np.ndarray,
    max_depth: int,
    min_samples_leaf: int,
):
    """Grow one least-squares regression tree on the given row subsample.

    ``sorted_rows[k]`` holds the subsampled row ids ordered by feature
    ``feat_ids[k]``.  Returns ``(feature, threshold, left, right, value)``
    node arrays; ``feature < 0`` marks leaves.
    """
    n_feats, m = sorted_rows.shape
    minleaf = int(min_samples_leaf)

    feature = [np.int32(-1)]
    threshold = [0.0]
    left = [np.int32(-1)]
    right = [np.int32(-1)]
    value = [0.0]

    cum0 = np.cumsum(g[sorted_rows[0]])
    g_root = float(cum0[-1])

    def finish():
        return (
            np.asarray(feature, dtype=np.int32),
            np.asarray(threshold, dtype=np.float64),
            np.asarray(left, dtype=np.int32),
            np.asarray(right, dtype=np.int32),
            np.asarray(value, dtype=np.float64),
        )

    if max_depth < 1 or m < 2 * minleaf:
        value[0] = g_root / m
        return finish()

    orders = sorted_rows.astype(np.int64, copy=True)
    seg_start = np.array([0], dtype=np.int64)
    seg_len = np.array([m], dtype=np.int64)
    seg_g = np.array([g_root], dtype=np.float64)
    seg_node = np.array([0], dtype=np.int64)
    side = np.zeros(X.shape[0], dtype=np.uint8)
    depth = 0

    while seg_start.size:
        n_seg = seg_start.size
        level_len = orders.shape[1]
        pos = np.arange(level_len, dtype=np.int64)
        a_rep = np.repeat(seg_start, seg_len)
        g_rep = np.repeat(seg_g, seg_len)
        n_rep = np.repeat(seg_len, seg_len)
        nl_all = pos - a_rep + 1

        parent_score = seg_g * seg_g / seg_len
        best_gain = parent_score + GAIN_EPS
        best_feat = np.full(n_seg, -1, dtype=np.int64)
        best_pos = np.full(n_seg, -1, dtype=np.int64)
        best_gl = np.zeros(n_seg, dtype=np.float64)
        best_va = np.zeros(n_seg, dtype=np.float64)
        best_vb = np.zeros(n_seg, dtype=np.float64)

        for k in range(n_feats):
            order_k = orders[k]
            cum = np.cumsum(g[order_k])
            base = np.where(a_rep > 0, cum[np.maximum(a_rep - 1, 0)], 0.0)
            gl = cum - base
            gr = g_rep - gl
            nl = nl_all
            nr = n_rep - nl
            vals = X[order_k, feat_ids[k]]
            boundary = np.empty(level_len, dtype=bool)
            boundary[:-1] = vals[:-1] < vals[1:]
            boundary[-1] = False
            valid = (nl >= minleaf) & (nr >= minleaf) & boundary
            nl_safe = np.maximum(nl, 1)
            nr_safe = np.maximum(nr, 1)
            gain = np.where(valid, gl * gl / nl_safe + gr * gr / nr_safe, -np.inf)

            seg_max = np.maximum.reduceat(gain, seg_start)
            cand = np.where(gain == np.repeat(seg_max, seg_len), pos, level_len)
            first = np.minimum.reduceat(cand, seg_start)
            improved = seg_max > best_gain
            safe_first = np.minimum(first, level_len - 1)
            safe_next = np.minimum(first + 1, level_len - 1)
            best_gain = np.where(improved, seg_max, best_gain)
            best_feat = np.where(improved, k, best_feat)
            best_pos = np.where(improved, first, best_pos)
            best_gl = np.where(improved, gl[safe_first], best_gl)
            best_va = np.where(improved, vals[safe_first], best_va)
            best_vb = np.where(improved, vals[safe_next], best_vb)

        split = best_feat >= 0

        # Leaves: no split improves on the parent.
        for s in np.flatnonzero(~split):
            value[seg_node[s]] = seg_g[s] / seg_len[s]

        if not split.any():
            break

        # Midpoint threshold, nudged down when rounding hits the right value.
        thr = best_va + (best_vb - best_va) * 0.5
        thr = np.where(thr >= best_vb, best_va, thr)

        nl_split = best_pos - seg_start + 1
        nr_split = seg_len - nl_split
        gl_split = best_gl
        gr_split = seg_g - gl_split

        # Mark sides using the winning feature's sorted order.
        for s in np.flatnonzero(split):
            a = seg_start[s]
            win = orders[best_feat[s]]
            side[win[a : a + nl_split[s]]] = 1
            side[win[a + nl_split[s] : a + seg_len[s]]] = 0

        # Create children; push the ones that can still be split.
        next_depth_ok = depth + 1 < max_depth
        key_left = np.full(n_seg, -1, dtype=np.int64)
        key_right = np.full(n_seg, -1, dtype=np.int64)
        push_len: list[int] = []
        push_g: list[float] = []
        push_node: list[int] = []
        for s in np.flatnonzero(split):
            node_id = seg_node[s]
            feature[node_id] = np.int32(feat_ids[best_feat[s]])
            threshold[node_id] = float(thr[s])
            for child_side, g_child, n_child in (
                ("L", float(gl_split[s]), int(nl_split[s])),
                ("R", float(gr_split[s]), int(nr_split[s])),
            ):
                child_id = len(feature)
                feature.append(np.int32(-1))
                threshold.append(0.0)
                left.append(np.int32(-1))
                right.append(np.int32(-1))
                value.append(0.0)
                if child_side == "L":
                    left[node_id] = np.int32(child_id)
                else:
                    right[node_id] = np.int32(child_id)
                if next_depth_ok and n_child >= 2 * minleaf:
                    rank = len(push_len)
                    if child_side == "L":
                        key_left[s] = rank
                    else:
                        key_right[s] = rank
                    push_len.append(n_child)
                    push_g.append(g_child)
                    push_node.append(child_id)
                else:
                    value[child_id] = g_child / n_child

        if not push_len:
            break

        drop = len(push_len)
        key_left = np.where(key_left < 0, drop, key_left)
        key_right = np.where(key_right < 0, drop, key_right)
        # Per position: stable bucket key = pushed-child rank, or the drop bucket.
        kept_total = int(np.sum(push_len))
        new_orders = np.empty((n_feats, kept_total), dtype=np.int64)
        seg_of = np.repeat(np.arange(n_seg, dtype=np.int64), seg_len)
        for k in range(n_feats):
            order_k = orders[k]
            is_left = side[order_k] == 1
            key = np.where(is_left, key_left[seg_of], key_right[seg_of])
            perm = np.argsort(key, kind="stable")
            new_orders[k] = order_k[perm[:kept_total]]

        orders = new_orders
        seg_len = np.asarray(push_len, dtype=np.int64)
        seg_start = np.concatenate(([0], np.cumsum(seg_len)[:-1]))
        seg_g = np.asarray(push_g, dtype=np.float64)
        seg_node = np.asarray(push_node, dtype=np.int64)
        depth += 1

    return finish()


def predict_forest(
    X: np.ndarray,
    feature: np.ndarray,
    threshold: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    value: np.ndarray,
    tree_offsets: np.ndarray,
) -> np.ndarray:
    """Sum of per-tree leaf values for each row of ``X``.

    All trees are walked simultaneously; for bit-equality with the compiled
    backend the per-row sum runs sequentially over trees (``cumsum``).
    """
    n_rows = X.shape[0]
    n_trees = len(tree_offsets) - 1
    if n_rows == 0 or n_trees == 0:
        return np.zeros(n_rows, dtype=np.float64)
    cur = np.broadcast_to(
        tree_offsets[:-1].astype(np.int64), (n_rows, n_trees)
    ).copy()
    row_grid = np.broadcast_to(np.arange(n_rows)[:, None], cur.shape)
    while True:
        feat = feature[cur]
        active = feat >= 0
        if not active.any():
            break
        xv = X[row_grid, np.maximum(feat, 0)]
        step = np.where(xv <= threshold[cur], left[cur], right[cur])
        cur = np.where(active, step, cur)
    vals = value[cur]
    return np.cumsum(vals, axis=1)[:, -1]
