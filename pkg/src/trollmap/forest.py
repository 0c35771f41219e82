"""Gini decision trees and a balanced-subsample random forest, from scratch.

Trees are grown CART-style: at every node a fixed-size feature subset is
drawn from the tree's random stream, candidate thresholds are midpoints
between consecutive distinct sorted values, and the split minimizing the
mass-weighted child Gini impurity wins (ties: lower feature index, then
lower threshold).  Class imbalance is handled per tree: each bootstrap
sample can reweight classes inversely to their bootstrap frequency, so
minority votes are not drowned in mixed leaves.

Everything is deterministic given (data, params): per-tree streams are
derived from the master seed and the tree index, so training order and
parallel scheduling cannot change the result.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import IO, Mapping, Optional, Sequence, Union

import numpy as np

from . import rng as rngmod
from .errors import TrainingError
from .features import FeatureMatrix
from .taxonomy import CATEGORIES, CATEGORY_INDEX, Category

N_CLASSES = len(CATEGORIES)

MODEL_FORMAT = "trollmap-forest"
MODEL_VERSION = 1


@dataclass(frozen=True)
class Leaf:
    distribution: tuple[float, ...]  # over CATEGORIES, sums to 1


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Split]


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int = 5
    min_samples_split: int = 2
    features_per_split: Optional[int] = None  # None -> floor(sqrt(d)) at fit time
    seed: int = 0
    class_weight_mode: str = "balanced_subsample"

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 1 or self.min_samples_split < 1:
            raise TrainingError("n_trees, max_depth and min_samples_split must be positive")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise TrainingError("features_per_split must be positive")
        if self.class_weight_mode not in ("uniform", "balanced_subsample"):
            raise TrainingError(f"unknown class_weight_mode {self.class_weight_mode!r}")


@dataclass(frozen=True)
class TreeInfo:
    root: TreeNode
    bootstrap: tuple[int, ...]
    class_weights: tuple[float, ...]  # over CATEGORIES; absent classes weigh 0


@dataclass(frozen=True)
class Forest:
    params: ForestParams
    n_features: int
    feature_names: tuple[str, ...]
    trees: tuple[TreeInfo, ...]


def gini_impurity(class_mass: Sequence[float]) -> float:
    """Sum of P_i (1 - P_i) over the class-probability vector.

    0 means a pure node; for k classes the maximum is (k-1)/k.
    """
    mass = np.asarray(class_mass, dtype=np.float64)
    if mass.ndim != 1 or mass.size == 0:
        raise TrainingError("class mass must be a non-empty 1-D vector")
    if np.any(mass < 0):
        raise TrainingError("class mass must be non-negative")
    total = mass.sum()
    if total <= 0:
        raise TrainingError("gini impurity is undefined for all-zero class mass")
    p = mass / total
    return float(np.sum(p * (1.0 - p)))


def balanced_subsample_weights(labels: Sequence[Category]) -> dict[Category, float]:
    """Per-class weights n / (k' * n_c) over one bootstrap sample.

    k' counts only classes present in the bootstrap; absent classes get 0.
    """
    if not labels:
        raise TrainingError("cannot weight an empty bootstrap")
    counts = {c: 0 for c in CATEGORIES}
    for label in labels:
        counts[label] += 1
    present = sum(1 for c in CATEGORIES if counts[c] > 0)
    n = len(labels)
    return {
        c: (n / (present * counts[c]) if counts[c] > 0 else 0.0) for c in CATEGORIES
    }


def _as_matrix(X) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(X, FeatureMatrix):
        return X.values, X.columns
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise TrainingError("X must be a 2-D matrix")
    return arr, tuple(f"f{j}" for j in range(arr.shape[1]))


def _encode_labels(y: Sequence[Category]) -> np.ndarray:
    try:
        return np.asarray([CATEGORY_INDEX[label] for label in y], dtype=np.int64)
    except KeyError as err:
        raise TrainingError(f"unknown label {err.args[0]!r}") from None


def _leaf(mass: np.ndarray) -> Leaf:
    dist = mass / mass.sum()
    return Leaf(distribution=tuple(float(v) for v in dist))


class _TreeBuilder:
    def __init__(self, X, y, sample_weight, max_depth, min_samples_split, mtry, rng):
        self.X = X
        self.y = y
        self.w = sample_weight
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.mtry = mtry
        self.rng = rng
        self.d = X.shape[1]

    def grow(self, idx: np.ndarray, depth: int) -> TreeNode:
        y = self.y[idx]
        w = self.w[idx]
        mass = np.bincount(y, weights=w, minlength=N_CLASSES)
        if (
            depth >= self.max_depth
            or idx.size < self.min_samples_split
            or np.count_nonzero(np.bincount(y, minlength=N_CLASSES)) <= 1
        ):
            return _leaf(mass)

        chosen = np.sort(self.rng.choice(self.d, size=self.mtry, replace=False))
        total = mass.sum()
        parent = float(np.sum((mass / total) * (1.0 - mass / total)))

        best_score = parent
        best: Optional[tuple[int, float]] = None
        for f in chosen:
            vals = self.X[idx, f]
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            cuts = np.nonzero(sv[1:] != sv[:-1])[0]
            if cuts.size == 0:
                continue
            onehot = np.zeros((idx.size, N_CLASSES), dtype=np.float64)
            onehot[np.arange(idx.size), y[order]] = w[order]
            cum = np.cumsum(onehot, axis=0)
            left = cum[cuts]
            right = mass - left
            s_left = left.sum(axis=1)
            s_right = right.sum(axis=1)
            p_left = left / s_left[:, None]
            p_right = right / s_right[:, None]
            g_left = np.sum(p_left * (1.0 - p_left), axis=1)
            g_right = np.sum(p_right * (1.0 - p_right), axis=1)
            score = (s_left * g_left + s_right * g_right) / total
            j = int(np.argmin(score))
            if score[j] < best_score:
                best_score = float(score[j])
                best = (int(f), float(0.5 * (sv[cuts[j]] + sv[cuts[j] + 1])))

        if best is None:
            return _leaf(mass)
        feature, threshold = best
        mask = self.X[idx, feature] <= threshold
        return Split(
            feature=feature,
            threshold=threshold,
            left=self.grow(idx[mask], depth + 1),
            right=self.grow(idx[~mask], depth + 1),
        )


def train_tree(
    X,
    y: Sequence[Category],
    class_weights: Mapping[Category, float],
    params: ForestParams,
    rng: np.random.Generator,
) -> TreeNode:
    """Grow one CART tree; degenerate inputs yield a single leaf."""
    arr, _ = _as_matrix(X)
    codes = _encode_labels(y)
    if arr.shape[0] < 1:
        raise TrainingError("need at least one sample to grow a tree")
    if arr.shape[0] != codes.size:
        raise TrainingError("X and y disagree on sample count")
    weight_vec = np.asarray([class_weights[c] for c in CATEGORIES], dtype=np.float64)
    sample_weight = weight_vec[codes]
    if np.any(sample_weight <= 0):
        raise TrainingError("every present class needs a positive weight")
    mtry = params.features_per_split or max(1, int(math.isqrt(arr.shape[1])))
    if mtry > arr.shape[1]:
        raise TrainingError(f"features_per_split={mtry} exceeds {arr.shape[1]} features")
    builder = _TreeBuilder(
        arr, codes, sample_weight, params.max_depth, params.min_samples_split, mtry, rng
    )
    return builder.grow(np.arange(arr.shape[0]), 0)


def train_forest(X, y: Sequence[Category], params: ForestParams) -> Forest:
    """Train n_trees bootstrap trees with per-tree class weights."""
    arr, names = _as_matrix(X)
    codes = _encode_labels(y)
    n, d = arr.shape
    if n < 2:
        raise TrainingError("need at least two samples")
    if codes.size != n:
        raise TrainingError("X and y disagree on sample count")
    if np.unique(codes).size < 2:
        raise TrainingError("training requires at least two distinct classes")
    mtry = params.features_per_split or max(1, int(math.isqrt(d)))
    if mtry > d:
        raise TrainingError(f"features_per_split={mtry} exceeds {d} features")

    y_list = list(y)
    trees = []
    for t in range(params.n_trees):
        stream = rngmod.stream(params.seed, "tree", t)
        boot = stream.integers(0, n, size=n)
        boot_labels = [y_list[i] for i in boot]
        if params.class_weight_mode == "balanced_subsample":
            weights = balanced_subsample_weights(boot_labels)
        else:
            weights = {c: 1.0 for c in CATEGORIES}
        weight_vec = np.asarray([weights[c] for c in CATEGORIES], dtype=np.float64)
        builder = _TreeBuilder(
            arr[boot],
            codes[boot],
            weight_vec[codes[boot]],
            params.max_depth,
            params.min_samples_split,
            mtry,
            stream,
        )
        root = builder.grow(np.arange(n), 0)
        trees.append(
            TreeInfo(
                root=root,
                bootstrap=tuple(int(i) for i in boot),
                class_weights=tuple(weights[c] for c in CATEGORIES),
            )
        )
    return Forest(params=params, n_features=d, feature_names=names, trees=tuple(trees))


def _tree_distributions(root: TreeNode, X: np.ndarray, out: np.ndarray) -> None:
    stack = [(root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if isinstance(node, Leaf):
            out[idx] += node.distribution
        else:
            mask = X[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[mask]))
            stack.append((node.right, idx[~mask]))


def predict_batch(forest: Forest, X) -> tuple[list[Category], np.ndarray]:
    """Average tree leaf distributions; argmax ties break in canonical order."""
    arr, _ = _as_matrix(X)
    if arr.shape[1] != forest.n_features:
        raise TrainingError(
            f"input has {arr.shape[1]} features, model expects {forest.n_features}"
        )
    sums = np.zeros((arr.shape[0], N_CLASSES), dtype=np.float64)
    for tree in forest.trees:
        _tree_distributions(tree.root, arr, sums)
    dist = sums / len(forest.trees)
    winners = [CATEGORIES[int(np.argmax(row))] for row in dist]
    return winners, dist


def predict(forest: Forest, x: Sequence[float]) -> tuple[Category, tuple[float, ...]]:
    """Classify one feature vector; returns (category, vote distribution)."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise TrainingError("predict expects a single 1-D feature vector")
    winners, dist = predict_batch(forest, arr[None, :])
    return winners[0], tuple(float(v) for v in dist[0])


def crossval_weighted_f1(
    X, y: Sequence[Category], params: ForestParams, folds: int, seed: Optional[int] = None
) -> list[float]:
    """Stratified k-fold weighted f1 of the forest; one value per fold."""
    from .evaluation import classification_report, stratified_kfold

    arr, _ = _as_matrix(X)
    y_list = list(y)
    fold_seed = params.seed if seed is None else seed
    scores = []
    for train_idx, test_idx in stratified_kfold(y_list, folds, fold_seed):
        model = train_forest(arr[train_idx], [y_list[i] for i in train_idx], params)
        predicted, _ = predict_batch(model, arr[test_idx])
        report = classification_report([y_list[i] for i in test_idx], predicted)
        scores.append(report.weighted_f1)
    return scores


def depth_sweep(
    X,
    y: Sequence[Category],
    depths: Sequence[int],
    params: ForestParams,
    folds: int,
) -> list[tuple[int, float]]:
    """Mean cross-validated weighted f1 at each depth, same folds throughout."""
    if not depths:
        raise TrainingError("depth sweep needs at least one depth")
    results = []
    for depth in depths:
        swept = replace(params, max_depth=int(depth))
        scores = crossval_weighted_f1(X, y, swept, folds, seed=params.seed)
        results.append((int(depth), float(np.mean(scores))))
    return results


# ---------------------------------------------------------------------------
# Model (de)serialization: versioned JSON, reloadable for prediction-only runs.

def _node_to_dict(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        return {"kind": "leaf", "dist": list(node.distribution)}
    return {
        "kind": "split",
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(payload: dict) -> TreeNode:
    if payload["kind"] == "leaf":
        return Leaf(distribution=tuple(payload["dist"]))
    return Split(
        feature=int(payload["feature"]),
        threshold=float(payload["threshold"]),
        left=_node_from_dict(payload["left"]),
        right=_node_from_dict(payload["right"]),
    )


def forest_to_json(forest: Forest, extra: Optional[dict] = None) -> str:
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "params": {
            "n_trees": forest.params.n_trees,
            "max_depth": forest.params.max_depth,
            "min_samples_split": forest.params.min_samples_split,
            "features_per_split": forest.params.features_per_split,
            "seed": forest.params.seed,
            "class_weight_mode": forest.params.class_weight_mode,
        },
        "classes": [c.value for c in CATEGORIES],
        "n_features": forest.n_features,
        "feature_names": list(forest.feature_names),
        "trees": [
            {
                "root": _node_to_dict(t.root),
                "bootstrap": list(t.bootstrap),
                "class_weights": list(t.class_weights),
            }
            for t in forest.trees
        ],
    }
    if extra:
        payload.update(extra)
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def forest_from_json(text: str) -> Forest:
    payload = json.loads(text)
    if payload.get("format") != MODEL_FORMAT:
        raise TrainingError("not a forest model file")
    if payload.get("version") != MODEL_VERSION:
        raise TrainingError(f"unsupported model version {payload.get('version')!r}")
    params = ForestParams(**payload["params"])
    trees = tuple(
        TreeInfo(
            root=_node_from_dict(t["root"]),
            bootstrap=tuple(int(i) for i in t["bootstrap"]),
            class_weights=tuple(float(w) for w in t["class_weights"]),
        )
        for t in payload["trees"]
    )
    return Forest(
        params=params,
        n_features=int(payload["n_features"]),
        feature_names=tuple(payload["feature_names"]),
        trees=trees,
    )


def save_forest(forest: Forest, dest: Union[str, IO[str]], extra: Optional[dict] = None) -> None:
    text = forest_to_json(forest, extra=extra)
    if isinstance(dest, str):
        with open(dest, "w", encoding="utf-8", newline="\n") as out:
            out.write(text + "\n")
    else:
        dest.write(text + "\n")


def load_forest(source: Union[str, IO[str]]) -> Forest:
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as handle:
            return forest_from_json(handle.read())
    return forest_from_json(source.read())
