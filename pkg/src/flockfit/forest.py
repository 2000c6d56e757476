"""A small seeded random forest for low-dimensional features.

The classification task downstream has three near-separable features,
so a bootstrap ensemble of shallow axis-aligned trees is plenty; using
an in-repo forest keeps the package free of heavyweight ML
dependencies and makes every run reproducible from a single seed.
"""

import numpy as np


def _gini(counts):
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return 1.0 - float(np.sum(p * p))


class _Node:
    __slots__ = ("feature", "threshold", "left", "right", "counts")

    def __init__(self, counts):
        self.feature = None
        self.threshold = None
        self.left = None
        self.right = None
        self.counts = counts


class DecisionTree:
    """Axis-aligned gini tree; split thresholds are midpoints between
    consecutive sorted feature values."""

    def __init__(self, max_depth=4, rng=None, max_features=None):
        self.max_depth = max_depth
        self.rng = rng or np.random.default_rng(0)
        self.max_features = max_features
        self.n_classes = None
        self.root = None

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        self.n_classes = int(y.max()) + 1
        self.root = self._grow(X, y, depth=0)
        return self

    def _grow(self, X, y, depth):
        counts = np.bincount(y, minlength=self.n_classes)
        node = _Node(counts)
        if depth >= self.max_depth or len(np.unique(y)) <= 1 or len(y) < 2:
            return node
        n_feat = X.shape[1]
        k = self.max_features or n_feat
        feats = self.rng.permutation(n_feat)[:k]
        best = (np.inf, None, None)
        for f in np.sort(feats):
            vals = np.sort(np.unique(X[:, f]))
            if len(vals) < 2:
                continue
            for thr in (vals[:-1] + vals[1:]) / 2.0:
                left = y[X[:, f] < thr]
                right = y[X[:, f] >= thr]
                cost = (
                    len(left) * _gini(np.bincount(left, minlength=self.n_classes))
                    + len(right) * _gini(np.bincount(right, minlength=self.n_classes))
                ) / len(y)
                if cost < best[0] - 1e-15:
                    best = (cost, f, thr)
        if best[1] is None:
            return node
        _, f, thr = best
        mask = X[:, f] < thr
        node.feature, node.threshold = int(f), float(thr)
        node.left = self._grow(X[mask], y[mask], depth + 1)
        node.right = self._grow(X[~mask], y[~mask], depth + 1)
        return node

    def predict_counts(self, X):
        X = np.asarray(X, dtype=float)
        out = np.zeros((len(X), self.n_classes))
        for r, x in enumerate(X):
            node = self.root
            while node.feature is not None:
                node = node.left if x[node.feature] < node.threshold else node.right
            out[r] = node.counts / max(1, node.counts.sum())
        return out


class RandomForest:
    """Seeded bootstrap ensemble; predictions are majority votes with
    ties resolved to the smallest class index."""

    def __init__(self, n_trees=50, max_depth=4, max_features=2, seed=0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.max_features = max_features
        self.seed = seed
        self.trees = []

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        rng = np.random.default_rng(self.seed)
        self.trees = []
        for _ in range(self.n_trees):
            idx = rng.integers(0, len(X), size=len(X))
            tree = DecisionTree(
                max_depth=self.max_depth,
                rng=np.random.default_rng(rng.integers(0, 2**63 - 1)),
                max_features=min(self.max_features, X.shape[1]),
            )
            tree.fit(X[idx], y[idx])
            self.trees.append(tree)
        return self

    def predict(self, X):
        votes = sum(tree.predict_counts(X) for tree in self.trees)
        return np.argmax(votes, axis=1)
