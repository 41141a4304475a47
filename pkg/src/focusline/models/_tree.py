"""Compiled CART growth shared by the forest, boosting and gradient-boosting models.

Trees are grown breadth-first over presorted feature columns, so each level
costs one pass over the data per feature. Two split criteria are supported:

* ``GINI``: ``stats`` holds per-sample weighted one-hot class counts and a
  split maximises the weighted Gini impurity decrease.
* ``NEWTON``: ``stats`` holds per-sample ``(gradient, hessian)`` and a split
  maximises ``G_L^2/(H_L+lam) + G_R^2/(H_R+lam) - G^2/(H+lam)`` (halved).
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

GINI = 0
NEWTON = 1

_U64 = np.uint64


@numba.njit(cache=True, nogil=True)
def _splitmix(state):
    state[0] += _U64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


@numba.njit(cache=True, nogil=True)
def _grow(Xs, order, X, stats, counts, mode, lam, max_depth, min_leaf, max_features, seed):
    d, n = order.shape
    S = stats.shape[1]
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    totals = np.zeros((cap, S))
    node_count = np.zeros(cap, dtype=np.int64)
    importance = np.zeros(d)
    node_local = np.full(cap, -1, dtype=np.int64)
    rng = np.zeros(1, dtype=np.uint64)
    rng[0] = _U64(seed)
    perm = np.arange(d)

    node_of = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        if counts[i] > 0:
            node_of[i] = 0
    level = np.zeros(1, dtype=np.int64)
    n_nodes = 1
    depth = 0
    while level.shape[0] > 0:
        L = level.shape[0]
        for l in range(L):
            node_local[level[l]] = l
        tot = np.zeros((L, S))
        cnt = np.zeros(L, dtype=np.int64)
        for i in range(n):
            j = node_of[i]
            if j >= 0:
                l = node_local[j]
                cnt[l] += counts[i]
                for s in range(S):
                    tot[l, s] += stats[i, s]

        splittable = np.zeros(L, dtype=np.bool_)
        parent = np.zeros(L)
        best_gain = np.zeros(L)
        tie_eps = np.zeros(L)
        for l in range(L):
            node = level[l]
            node_count[node] = cnt[l]
            for s in range(S):
                totals[node, s] = tot[l, s]
            ok = (max_depth < 0 or depth < max_depth) and cnt[l] >= 2 * min_leaf
            if mode == GINI:
                w = 0.0
                sq = 0.0
                nz = 0
                for s in range(S):
                    w += tot[l, s]
                    sq += tot[l, s] * tot[l, s]
                    if tot[l, s] > 0:
                        nz += 1
                ok = ok and nz > 1 and w > 0
                parent[l] = sq / w if w > 0 else 0.0
                tie_eps[l] = 1e-12 * w
                best_gain[l] = tie_eps[l]
            else:
                parent[l] = tot[l, 0] * tot[l, 0] / (tot[l, 1] + lam)
                tie_eps[l] = 1e-12
                best_gain[l] = tie_eps[l]
            splittable[l] = ok

        cand = np.zeros((L, d), dtype=np.bool_)
        for l in range(L):
            if not splittable[l]:
                continue
            if max_features >= d:
                for f in range(d):
                    cand[l, f] = True
            else:
                for f in range(d):
                    perm[f] = f
                for t in range(max_features):
                    r = t + np.int64(_splitmix(rng) % _U64(d - t))
                    tmp = perm[t]
                    perm[t] = perm[r]
                    perm[r] = tmp
                    cand[l, perm[t]] = True

        # local index of each sample's node at this level, -1 when not splittable
        loc = np.full(n, -1, dtype=np.int64)
        for i in range(n):
            j = node_of[i]
            if j >= 0 and splittable[node_local[j]]:
                loc[i] = node_local[j]

        best_f = np.full(L, -1, dtype=np.int64)
        best_thr = np.zeros(L)
        lstat = np.zeros((L, S))
        lcnt = np.zeros(L, dtype=np.int64)
        last = np.zeros(L)
        seen = np.zeros(L, dtype=np.bool_)
        all_cand = max_features >= d
        for f in range(d):
            any_cand = False
            for l in range(L):
                if cand[l, f]:
                    any_cand = True
                    break
            if not any_cand:
                continue
            lcnt[:] = 0
            seen[:] = False
            lstat[:, :] = 0.0
            for r in range(n):
                i = order[f, r]
                l = loc[i]
                if l < 0:
                    continue
                if not all_cand and not cand[l, f]:
                    continue
                x = Xs[f, r]
                if seen[l] and x > last[l] and lcnt[l] >= min_leaf and cnt[l] - lcnt[l] >= min_leaf:
                    if mode == GINI:
                        wl = 0.0
                        wr = 0.0
                        sl = 0.0
                        sr = 0.0
                        for s in range(S):
                            a = lstat[l, s]
                            b = tot[l, s] - a
                            wl += a
                            wr += b
                            sl += a * a
                            sr += b * b
                        if wl > 0 and wr > 0:
                            gain = sl / wl + sr / wr - parent[l]
                        else:
                            gain = -1.0
                    else:
                        gl = lstat[l, 0]
                        hl = lstat[l, 1]
                        gr = tot[l, 0] - gl
                        hr = tot[l, 1] - hl
                        gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent[l])
                    # gains within rounding noise are ties: first feature and threshold win
                    if gain > best_gain[l] + tie_eps[l]:
                        best_gain[l] = gain
                        best_f[l] = f
                        thr = 0.5 * (last[l] + x)
                        if thr >= x:
                            thr = last[l]
                        best_thr[l] = thr
                for s in range(S):
                    lstat[l, s] += stats[i, s]
                lcnt[l] += counts[i]
                last[l] = x
                seen[l] = True

        n_next = 0
        for l in range(L):
            if best_f[l] >= 0:
                n_next += 2
        nxt = np.empty(n_next, dtype=np.int64)
        k = 0
        for l in range(L):
            node = level[l]
            if best_f[l] >= 0:
                feature[node] = best_f[l]
                threshold[node] = best_thr[l]
                left[node] = n_nodes
                right[node] = n_nodes + 1
                nxt[k] = n_nodes
                nxt[k + 1] = n_nodes + 1
                k += 2
                n_nodes += 2
                importance[best_f[l]] += best_gain[l]
        for i in range(n):
            j = node_of[i]
            if j < 0:
                continue
            f = feature[j]
            if f >= 0:
                if X[i, f] <= threshold[j]:
                    node_of[i] = left[j]
                else:
                    node_of[i] = right[j]
            else:
                node_of[i] = -1
        for l in range(L):
            node_local[level[l]] = -1
        level = nxt
        depth += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), totals[:n_nodes].copy(), node_count[:n_nodes].copy(), importance)


@numba.njit(cache=True, nogil=True)
def _apply(X, feature, threshold, left, right):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while left[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


class Presorted:
    """Column-wise sort order of a training matrix, reused across many trees."""

    def __init__(self, X: np.ndarray):
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        order = np.argsort(self.X, axis=0, kind="stable")
        self.order = np.ascontiguousarray(order.T)
        self.sorted = np.ascontiguousarray(np.take_along_axis(self.X, order, axis=0).T)

    @property
    def shape(self):
        return self.X.shape


@dataclass
class Tree:
    """Fitted tree in flat-array form. ``value`` rows are node outputs."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    importance: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        return _apply(np.ascontiguousarray(X, dtype=np.float64), self.feature, self.threshold,
                      self.left, self.right)

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "value": self.value.tolist(), "importance": self.importance.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        value = np.asarray(d["value"], dtype=np.float64)
        return cls(np.asarray(d["feature"], dtype=np.int64), np.asarray(d["threshold"], dtype=np.float64),
                   np.asarray(d["left"], dtype=np.int64), np.asarray(d["right"], dtype=np.int64),
                   value.reshape(len(d["feature"]), -1), np.asarray(d["importance"], dtype=np.float64))


def grow_classifier(data: Presorted, y: np.ndarray, n_classes: int, *, sample_weight=None,
                    counts=None, max_depth: int | None = None, min_samples_leaf: int = 1,
                    max_features: int | None = None, seed: int = 0) -> Tree:
    """Gini CART; node values are class-probability rows."""
    n, d = data.shape
    counts = np.ones(n, dtype=np.int64) if counts is None else np.asarray(counts, dtype=np.int64)
    w = counts.astype(np.float64) if sample_weight is None else np.asarray(sample_weight) * counts
    stats = np.zeros((n, n_classes))
    stats[np.arange(n), y] = w
    feat, thr, lft, rgt, totals, _, imp = _grow(
        data.sorted, data.order, data.X, stats, counts, GINI, 0.0,
        -1 if max_depth is None else int(max_depth), int(min_samples_leaf),
        d if max_features is None else int(max_features), np.uint64(seed % (1 << 64)))
    sums = totals.sum(axis=1, keepdims=True)
    value = totals / np.where(sums > 0, sums, 1.0)
    return Tree(feat, thr, lft, rgt, value, imp)


def grow_newton(data: Presorted, grad: np.ndarray, hess: np.ndarray, *, lam: float = 1.0,
                max_depth: int = 6, min_samples_leaf: int = 1) -> Tree:
    """Second-order regression tree with leaf weight ``-G / (H + lam)``."""
    n, d = data.shape
    stats = np.ascontiguousarray(np.column_stack([grad, hess]))
    feat, thr, lft, rgt, totals, _, imp = _grow(
        data.sorted, data.order, data.X, stats, np.ones(n, dtype=np.int64), NEWTON, float(lam),
        int(max_depth), int(min_samples_leaf), d, np.uint64(0))
    value = (-totals[:, 0] / (totals[:, 1] + lam))[:, None]
    return Tree(feat, thr, lft, rgt, value, imp)
