"""Binary CART trees stored as flat node arrays.

One builder serves every tree-based model in the package:

* ``criterion="gini"`` grows classification trees on 0/1 labels; each leaf
  stores the fraction of positive training samples that reached it.
* ``criterion="mse"`` grows regression trees on real targets by variance
  reduction (used for the boosting stages).
* ``splitter="best"`` scans every midpoint between consecutive distinct
  values; ``splitter="random"`` draws one uniform threshold per candidate
  feature inside the node's value range (extremely randomised trees).

Samples with ``x[feature] <= threshold`` go left. Among equally good
splits the lowest feature index wins, then the lowest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

LEAF = -1


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray  # int, LEAF for leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    def __post_init__(self):
        for arr in (self.feature, self.threshold, self.left, self.right, self.value, self.n_samples):
            arr.flags.writeable = False

    @property
    def node_count(self) -> int:
        return self.feature.shape[0]

    @property
    def depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=np.int64)
        for i in range(self.node_count):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] == LEAF

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def with_values(self, value: np.ndarray) -> "Tree":
        return Tree(self.feature, self.threshold, self.left, self.right,
                    np.asarray(value, dtype=np.float64), self.n_samples)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_samples": self.n_samples.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            value=np.asarray(d["value"], dtype=np.float64),
            n_samples=np.asarray(d["n_samples"], dtype=np.int64),
        )


def gini(labels) -> float:
    """Gini impurity ``1 - sum p_c^2`` of a 0/1 label multiset."""
    labels = np.asarray(labels)
    n = labels.size
    if n == 0:
        return 0.0
    p = np.count_nonzero(labels) / n
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def resolve_max_features(rule, n_features: int) -> int:
    """Number of candidate features per split for an ``all``/``sqrt``/int rule."""
    if rule is None or rule == "all":
        return n_features
    if rule == "sqrt":
        return max(1, int(np.sqrt(n_features)))
    if isinstance(rule, (int, np.integer)) and not isinstance(rule, bool) and rule > 0:
        return min(int(rule), n_features)
    raise ValueError(f"invalid max_features rule {rule!r}")


def _midpoint(a: float, b: float) -> float:
    t = (a + b) / 2.0
    # adjacent floats: the midpoint can round up onto b
    return a if t >= b else t


def _pick_gini(num, den, feat_rank, pos_rank):
    """Index of the candidate with the smallest ``num/den``.

    ``num/den`` is proportional to the weighted child Gini impurity and
    both are exact integers, so near-ties are settled with rationals.
    Remaining exact ties go to the lowest ``(feat_rank, pos_rank)``.
    """
    val = num / den
    best = val.min()
    near = np.flatnonzero(val <= best * (1.0 + 1e-9))
    if near.size == 1:
        return int(near[0])
    exact = [Fraction(int(num[i]), int(den[i])) for i in near]
    lowest = min(exact)
    tied = [i for i, f in zip(near, exact) if f == lowest]
    return int(min(tied, key=lambda i: (feat_rank[i], pos_rank[i])))


class _Builder:
    def __init__(self, X, y, criterion, splitter, max_depth, min_samples_split,
                 max_features, rng, presorted=None):
        self.XT = np.ascontiguousarray(np.asarray(X, dtype=np.float64).T)
        self.n_features = self.XT.shape[0]
        self.criterion = criterion
        if criterion == "gini":
            self.y = np.asarray(y).astype(np.int64)
        else:
            self.y = np.asarray(y, dtype=np.float64)
        self.splitter = splitter
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.k = resolve_max_features(max_features, self.n_features)
        self.rng = rng
        self._order = presorted
        if self.k < self.n_features or splitter == "random":
            if rng is None:
                raise ValueError("a random generator is required for feature subsampling "
                                 "or random thresholds")

    def _candidates(self, idx):
        """Candidate feature ids (non-constant at this node) and their node values."""
        if self.k >= self.n_features and self.splitter == "best":
            block = self.XT[:, idx]
            lo, hi = block.min(axis=1), block.max(axis=1)
            keep = hi > lo
            return np.flatnonzero(keep), block[keep], lo[keep], hi[keep]
        order = (np.arange(self.n_features) if self.k >= self.n_features
                 else self.rng.permutation(self.n_features))
        feats, blocks, los, his = [], [], [], []
        found, pos = 0, 0
        while found < self.k and pos < self.n_features:
            chunk = order[pos:pos + self.k - found]
            pos += chunk.size
            block = self.XT[np.ix_(chunk, idx)]
            lo, hi = block.min(axis=1), block.max(axis=1)
            keep = hi > lo
            feats.append(chunk[keep])
            blocks.append(block[keep])
            los.append(lo[keep])
            his.append(hi[keep])
            found += int(keep.sum())
        return (np.concatenate(feats), np.concatenate(blocks),
                np.concatenate(los), np.concatenate(his))

    def _sorted_block(self, idx, feats, block, y_node):
        """Node values and targets sorted per feature (ties keep row order)."""
        n, m = self.XT.shape[1], idx.size
        if self.k >= self.n_features and m * 16 > n:
            # large node: filter a global presort instead of sorting again
            if self._order is None:
                self._order = np.argsort(self.XT, axis=1, kind="stable")
            in_node = np.zeros(n, dtype=bool)
            in_node[idx] = True
            rows = self._order[feats]
            rows = rows[in_node[rows]].reshape(feats.size, m)
            return np.take_along_axis(self.XT[feats], rows, axis=1), self.y[rows]
        order = np.argsort(block, axis=1, kind="stable")
        return np.take_along_axis(block, order, axis=1), y_node[order]

    def _best_split(self, idx, feats, block, y_node):
        m = block.shape[1]
        xs, ys = self._sorted_block(idx, feats, block, y_node)
        valid = xs[:, 1:] > xs[:, :-1]
        if not valid.any():
            return None
        n_left = np.arange(1, m)
        n_right = m - n_left
        pos_rank = np.broadcast_to(n_left, valid.shape)
        feat_rank = np.broadcast_to(feats[:, None], valid.shape)
        if self.criterion == "gini":
            pos_left = np.cumsum(ys, axis=1)[:, :-1]
            pos_right = int(y_node.sum()) - pos_left
            num = (pos_left * (n_left - pos_left) * n_right
                   + pos_right * (n_right - pos_right) * n_left)
            den = np.broadcast_to(n_left * n_right, valid.shape)
            num = np.where(valid, num, np.iinfo(np.int64).max)
            flat = _pick_gini(num.ravel(), den.ravel(), feat_rank.ravel(), pos_rank.ravel())
        else:
            sum_left = np.cumsum(ys, axis=1)[:, :-1]
            sum_right = y_node.sum() - sum_left
            # maximising this minimises the children's summed squared error
            gain = sum_left * sum_left / n_left + sum_right * sum_right / n_right
            gain = np.where(valid, gain, -np.inf).ravel()
            tied = np.flatnonzero(gain == gain.max())
            flat = int(min(tied, key=lambda i: (feat_rank.flat[i], pos_rank.flat[i])))
        f, p = divmod(flat, m - 1)
        return int(feats[f]), _midpoint(xs[f, p], xs[f, p + 1])

    def _random_split(self, feats, block, lo, hi, y_node):
        m = block.shape[1]
        thr = lo + (hi - lo) * self.rng.random(feats.size)
        thr = np.where(thr >= hi, lo, thr)
        go_left = block <= thr[:, None]
        n_left = go_left.sum(axis=1)
        n_right = m - n_left
        if self.criterion == "gini":
            pos_left = (go_left & (y_node == 1)).sum(axis=1)
            pos_right = int(y_node.sum()) - pos_left
            num = (pos_left * (n_left - pos_left) * n_right
                   + pos_right * (n_right - pos_right) * n_left)
            pick = _pick_gini(num, n_left * n_right, feats, np.zeros(feats.size))
        else:
            sum_left = (go_left * y_node).sum(axis=1)
            sum_right = y_node.sum() - sum_left
            gain = sum_left * sum_left / n_left + sum_right * sum_right / n_right
            tied = np.flatnonzero(gain == gain.max())
            pick = int(min(tied, key=lambda i: feats[i]))
        return int(feats[pick]), float(thr[pick])

    def _is_pure(self, y_node) -> bool:
        if self.criterion == "gini":
            s = int(y_node.sum())
            return s == 0 or s == y_node.size
        return bool(np.all(y_node == y_node[0]))

    def build(self):
        n = self.XT.shape[1]
        feature, threshold, left, right, value, counts = [], [], [], [], [], []
        leaf_of = np.empty(n, dtype=np.int64)
        stack = [(np.arange(n), 0, -1, False)]
        while stack:
            idx, depth, parent, is_left = stack.pop()
            node = len(feature)
            if parent >= 0:
                (left if is_left else right)[parent] = node
            y_node = self.y[idx]
            m = idx.size
            if self.criterion == "gini":
                value.append(float(y_node.sum()) / m)
            else:
                value.append(float(y_node.mean()))
            counts.append(m)
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)

            split = None
            if (m >= self.min_samples_split
                    and (self.max_depth is None or depth < self.max_depth)
                    and not self._is_pure(y_node)):
                feats, block, lo, hi = self._candidates(idx)
                if feats.size:
                    if self.splitter == "best":
                        split = self._best_split(idx, feats, block, y_node)
                    else:
                        split = self._random_split(feats, block, lo, hi, y_node)
            if split is None:
                leaf_of[idx] = node
                continue
            f, t = split
            feature[node], threshold[node] = f, t
            mask = self.XT[f, idx] <= t
            stack.append((idx[~mask], depth + 1, node, False))
            stack.append((idx[mask], depth + 1, node, True))

        tree = Tree(
            feature=np.asarray(feature, dtype=np.int64),
            threshold=np.asarray(threshold, dtype=np.float64),
            left=np.asarray(left, dtype=np.int64),
            right=np.asarray(right, dtype=np.int64),
            value=np.asarray(value, dtype=np.float64),
            n_samples=np.asarray(counts, dtype=np.int64),
        )
        return tree, leaf_of


def presort(X) -> np.ndarray:
    """Per-feature stable sort order of ``X``'s rows, shape (n_features, n_samples).

    Pass to :func:`build_tree` when many trees are grown on the same matrix.
    """
    return np.argsort(np.asarray(X, dtype=np.float64).T, axis=1, kind="stable")


def build_tree(X, y, *, criterion="gini", splitter="best", max_depth=None,
               min_samples_split=2, max_features="all", rng=None, presorted=None):
    """Grow one tree on ``(X, y)``.

    Parameters
    ----------
    X : ndarray of shape (n_samples, n_features)
    y : ndarray
        0/1 labels for ``gini``, real targets for ``mse``.
    criterion : {"gini", "mse"}
    splitter : {"best", "random"}
    max_depth : int or None
    min_samples_split : int
    max_features : "all", "sqrt" or int
        Candidate features per split. Features constant within the node
        do not count towards this number.
    rng : numpy.random.Generator, optional
        Needed when features are subsampled or thresholds are random.
    presorted : ndarray, optional
        Output of :func:`presort` for this exact ``X``.

    Returns
    -------
    tree : Tree
    leaf_of : ndarray of shape (n_samples,)
        Leaf index each training row ended in.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError(f"X must be a non-empty 2-D matrix, got shape {X.shape}")
    if criterion not in ("gini", "mse"):
        raise ValueError(f"unknown criterion {criterion!r}")
    if splitter not in ("best", "random"):
        raise ValueError(f"unknown splitter {splitter!r}")
    if min_samples_split < 2:
        raise ValueError("min_samples_split must be at least 2")
    builder = _Builder(X, y, criterion, splitter, max_depth, min_samples_split,
                       max_features, rng, presorted)
    return builder.build()
