"""Independent reference computations used by the test suite.

Nothing here imports the code under test; each oracle recomputes its
quantity the slow, obvious way.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def gini_of(labels) -> float:
    labels = np.asarray(labels)
    if labels.size == 0:
        return 0.0
    p = labels.mean()
    return 2.0 * p * (1.0 - p)


def walk_mdi(feature, threshold, left, right, X, y, n_features) -> np.ndarray:
    """Weighted Gini decrease per feature, routing the raw samples through the tree."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n = len(y)
    out = np.zeros(n_features)

    def visit(node, rows):
        f = feature[node]
        if f < 0:
            return
        go_left = X[rows, f] <= threshold[node]
        lrows, rrows = rows[go_left], rows[~go_left]
        nt = len(rows)
        decrease = gini_of(y[rows]) - len(lrows) / nt * gini_of(y[lrows]) - len(rrows) / nt * gini_of(y[rrows])
        out[f] += nt / n * decrease
        visit(left[node], lrows)
        visit(right[node], rrows)

    visit(0, np.arange(n))
    return out


def greedy_tree(X, y, max_depth, depth=0):
    """Exhaustive greedy CART on dense data; nested dicts compare with ``tree_as_nested``.

    Ties go to the first (feature, threshold) in enumeration order.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n = len(y)
    node = {"value": float(y.mean())}
    if depth >= max_depth or y.min() == y.max():
        return node
    best = None
    for j in range(X.shape[1]):
        values = sorted(set(X[:, j]))
        for a, b in zip(values, values[1:]):
            t = (a + b) / 2
            go_left = X[:, j] <= t
            gain = n * gini_of(y) - go_left.sum() * gini_of(y[go_left]) - (~go_left).sum() * gini_of(y[~go_left])
            if best is None or gain > best[0] + 1e-12 * abs(best[0]):
                best = (gain, j, t)
    if best is None or best[0] <= 1e-10 * n * gini_of(y):
        return node
    _, j, t = best
    go_left = X[:, j] <= t
    node.update(
        feature=j,
        threshold=t,
        left=greedy_tree(X[go_left], y[go_left], max_depth, depth + 1),
        right=greedy_tree(X[~go_left], y[~go_left], max_depth, depth + 1),
    )
    return node


def tree_as_nested(tree, i=0) -> dict:
    node = {"value": float(tree.value[i])}
    if tree.feature[i] >= 0:
        node.update(
            feature=int(tree.feature[i]),
            threshold=float(tree.threshold[i]),
            left=tree_as_nested(tree, tree.left[i]),
            right=tree_as_nested(tree, tree.right[i]),
        )
    return node


def mann_whitney_auc(y, score) -> float:
    pos = [s for s, t in zip(score, y) if t == 1]
    neg = [s for s, t in zip(score, y) if t == 0]
    total = 0.0
    for a in pos:
        for b in neg:
            total += 1.0 if a > b else 0.5 if a == b else 0.0
    return total / (len(pos) * len(neg))


def enumerate_wilcoxon_p(diffs) -> float:
    """Two-sided exact p by trying every sign assignment of the ranked |diffs|."""
    d = [x for x in diffs if x != 0]
    n = len(d)
    if n == 0:
        return 1.0
    mags = sorted(abs(x) for x in d)
    # mid-ranks for ties
    rank_of = {}
    i = 0
    while i < n:
        j = i
        while j + 1 < n and mags[j + 1] == mags[i]:
            j += 1
        rank_of[mags[i]] = (i + j + 2) / 2
        i = j + 1
    ranks = [rank_of[abs(x)] for x in d]
    total = sum(ranks)
    w_plus = sum(r for r, x in zip(ranks, d) if x > 0)
    observed = min(w_plus, total - w_plus)
    hits = 0
    for signs in itertools.product((0, 1), repeat=n):
        s = sum(r for r, b in zip(ranks, signs) if b)
        if min(s, total - s) <= observed + 1e-9:
            hits += 1
    return hits / 2**n


def logistic_objective(beta, intercept, X, y, lam) -> float:
    total = 0.0
    for xi, yi in zip(X, y):
        z = float(np.dot(xi, beta)) + intercept
        total += math.log1p(math.exp(-abs(z))) + max(z, 0.0) - yi * z
    return total + 0.5 * lam * float(np.dot(beta, beta))


def central_difference(f, w, h=1e-5) -> np.ndarray:
    g = np.zeros_like(w)
    for i in range(len(w)):
        e = np.zeros_like(w)
        e[i] = h
        g[i] = (f(w + e) - f(w - e)) / (2 * h)
    return g


def prediction_change_split(v1, c1, v2, c2) -> float:
    avr = (v1 * c1 + v2 * c2) / (c1 + c2)
    return (v1 - avr) ** 2 * c1 + (v2 - avr) ** 2 * c2
