"""Baseline classifiers for the accuracy comparison harness.

Six standard learners, each implemented directly so that behavior is fixed
by this codebase rather than library defaults: Gaussian naive Bayes, a
single CART tree, k-nearest-neighbors, multinomial logistic regression
(full-batch gradient descent with an L2 penalty), one-vs-rest linear SVM
(sub-gradient descent on the hinge loss) and SAMME boosting over depth-1
stumps.  The gradient learners run a fixed iteration budget; there is no
convergence test by design.  All tie-breaks end in canonical category
order, so every model is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from . import rng as rngmod
from .errors import TrainingError
from .evaluation import classification_report, stratified_split
from .forest import (
    ForestParams,
    TreeNode,
    _as_matrix,
    _encode_labels,
    predict_batch as forest_predict_batch,
    train_forest,
    train_tree,
)
from .forest import Leaf, Split
from .taxonomy import CATEGORIES, Category

N_CLASSES = len(CATEGORIES)

BASELINE_KINDS = (
    "NaiveBayes",
    "DecisionTree",
    "KNN",
    "LogisticRegression",
    "LinearSVM",
    "AdaBoost",
)

DEFAULT_HYPERPARAMS: dict[str, dict] = {
    "NaiveBayes": {},
    # a lone CART runs at its conventional default: grow until pure
    "DecisionTree": {"max_depth": None, "min_samples_split": 2, "seed": 0},
    "KNN": {"k": 5},
    "LogisticRegression": {"iterations": 300, "learning_rate": 1.0, "l2": 1e-3},
    "LinearSVM": {"epochs": 300, "learning_rate": 0.5, "l2": 1e-3},
    "AdaBoost": {"rounds": 50},
}

_VARIANCE_FLOOR = 1e-9


@dataclass(frozen=True)
class GaussianNBModel:
    log_priors: np.ndarray  # (4,), -inf for absent classes
    means: np.ndarray  # (4, d)
    variances: np.ndarray  # (4, d), floored


@dataclass(frozen=True)
class DecisionTreeModel:
    root: TreeNode
    n_features: int


@dataclass(frozen=True)
class KNNModel:
    X: np.ndarray
    y: np.ndarray
    k: int


@dataclass(frozen=True)
class LinearModel:
    """Shared shape for the two linear classifiers: scores = X W + b."""

    weights: np.ndarray  # (d, 4)
    bias: np.ndarray  # (4,)
    kind: str


@dataclass(frozen=True)
class Stump:
    feature: int  # -1 marks a degenerate stump that always predicts `left`
    threshold: float
    left: int
    right: int


@dataclass(frozen=True)
class AdaBoostModel:
    stumps: tuple[Stump, ...]
    alphas: tuple[float, ...]
    fallback: int  # training-majority class, used if no stump survived


BaselineModel = Union[GaussianNBModel, DecisionTreeModel, KNNModel, LinearModel, AdaBoostModel]


def _validate(X, y) -> tuple[np.ndarray, np.ndarray]:
    arr, _ = _as_matrix(X)
    codes = _encode_labels(y)
    if arr.shape[0] != codes.size:
        raise TrainingError("X and y disagree on sample count")
    if arr.shape[0] < 1:
        raise TrainingError("need at least one training sample")
    return arr, codes


def _train_naive_bayes(X: np.ndarray, y: np.ndarray) -> GaussianNBModel:
    n = X.shape[0]
    log_priors = np.full(N_CLASSES, -np.inf)
    means = np.zeros((N_CLASSES, X.shape[1]))
    variances = np.full((N_CLASSES, X.shape[1]), _VARIANCE_FLOOR)
    for c in range(N_CLASSES):
        rows = X[y == c]
        if rows.shape[0] == 0:
            continue
        log_priors[c] = np.log(rows.shape[0] / n)
        means[c] = rows.mean(axis=0)
        variances[c] = np.maximum(rows.var(axis=0), _VARIANCE_FLOOR)
    return GaussianNBModel(log_priors=log_priors, means=means, variances=variances)


def _nb_scores(model: GaussianNBModel, X: np.ndarray) -> np.ndarray:
    scores = np.empty((X.shape[0], N_CLASSES))
    for c in range(N_CLASSES):
        if model.log_priors[c] == -np.inf:
            scores[:, c] = -np.inf
            continue
        var = model.variances[c]
        diff = X - model.means[c]
        log_like = -0.5 * (np.log(2.0 * np.pi * var) + diff**2 / var).sum(axis=1)
        scores[:, c] = model.log_priors[c] + log_like
    return scores


def _train_knn(X: np.ndarray, y: np.ndarray, k: int) -> KNNModel:
    if k < 1 or k > X.shape[0]:
        raise TrainingError(f"k={k} must be in [1, n={X.shape[0]}]")
    return KNNModel(X=X.copy(), y=y.copy(), k=k)


def _knn_predict(model: KNNModel, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0], dtype=np.int64)
    for i, x in enumerate(X):
        dist = np.sqrt(((model.X - x) ** 2).sum(axis=1))
        nearest = np.argsort(dist, kind="stable")[: model.k]
        votes = np.bincount(model.y[nearest], minlength=N_CLASSES)
        top = votes.max()
        contenders = np.nonzero(votes == top)[0]
        if contenders.size > 1:
            # prefer the tied class with the closest member, then canonical order
            closest = [dist[nearest[model.y[nearest] == c]].min() for c in contenders]
            contenders = contenders[np.nonzero(closest == np.min(closest))[0]]
        out[i] = contenders[0]
    return out


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _train_logistic(X: np.ndarray, y: np.ndarray, iterations: int, learning_rate: float, l2: float) -> LinearModel:
    n, d = X.shape
    onehot = np.zeros((n, N_CLASSES))
    onehot[np.arange(n), y] = 1.0
    W = np.zeros((d, N_CLASSES))
    b = np.zeros(N_CLASSES)
    for _ in range(iterations):
        P = _softmax(X @ W + b)
        grad = (P - onehot) / n
        W -= learning_rate * (X.T @ grad + l2 * W)
        b -= learning_rate * grad.sum(axis=0)
    return LinearModel(weights=W, bias=b, kind="LogisticRegression")


def _train_linear_svm(X: np.ndarray, y: np.ndarray, epochs: int, learning_rate: float, l2: float) -> LinearModel:
    n, d = X.shape
    W = np.zeros((d, N_CLASSES))
    b = np.zeros(N_CLASSES)
    targets = np.where(
        np.arange(N_CLASSES)[None, :] == y[:, None], 1.0, -1.0
    )  # (n, 4) one-vs-rest signs
    for _ in range(epochs):
        margins = targets * (X @ W + b)
        active = (margins < 1.0).astype(np.float64) * targets
        W -= learning_rate * (l2 * W - (X.T @ active) / n)
        b -= learning_rate * (-active.sum(axis=0) / n)
    return LinearModel(weights=W, bias=b, kind="LinearSVM")


def _weighted_stump(X: np.ndarray, y: np.ndarray, w: np.ndarray) -> Stump:
    """Best depth-1 split under sample weights: minimum weighted Gini."""
    n, d = X.shape
    total_mass = np.bincount(y, weights=w, minlength=N_CLASSES)
    total = total_mass.sum()
    best_score = np.inf
    best: Optional[tuple[int, float, int, int]] = None
    for f in range(d):
        vals = X[:, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        cuts = np.nonzero(sv[1:] != sv[:-1])[0]
        if cuts.size == 0:
            continue
        onehot = np.zeros((n, N_CLASSES))
        onehot[np.arange(n), y[order]] = w[order]
        cum = np.cumsum(onehot, axis=0)
        left = cum[cuts]
        right = total_mass - left
        s_left = left.sum(axis=1)
        s_right = right.sum(axis=1)
        p_left = left / s_left[:, None]
        p_right = right / s_right[:, None]
        g = (s_left * np.sum(p_left * (1 - p_left), axis=1)
             + s_right * np.sum(p_right * (1 - p_right), axis=1)) / total
        j = int(np.argmin(g))
        if g[j] < best_score:
            best_score = float(g[j])
            threshold = float(0.5 * (sv[cuts[j]] + sv[cuts[j] + 1]))
            best = (f, threshold, int(np.argmax(left[j])), int(np.argmax(right[j])))
    if best is None:
        majority = int(np.argmax(total_mass))
        return Stump(feature=-1, threshold=0.0, left=majority, right=majority)
    return Stump(feature=best[0], threshold=best[1], left=best[2], right=best[3])


def _stump_predict(stump: Stump, X: np.ndarray) -> np.ndarray:
    if stump.feature < 0:
        return np.full(X.shape[0], stump.left, dtype=np.int64)
    return np.where(X[:, stump.feature] <= stump.threshold, stump.left, stump.right)


def _train_adaboost(X: np.ndarray, y: np.ndarray, rounds: int) -> AdaBoostModel:
    n = X.shape[0]
    w = np.full(n, 1.0 / n)
    chance_bar = 1.0 - 1.0 / N_CLASSES
    stumps: list[Stump] = []
    alphas: list[float] = []
    for _ in range(rounds):
        stump = _weighted_stump(X, y, w)
        pred = _stump_predict(stump, X)
        miss = pred != y
        err = float(w[miss].sum())
        if err <= 0.0:
            stumps.append(stump)
            alphas.append(np.log((1.0 - 1e-12) / 1e-12) + np.log(N_CLASSES - 1.0))
            break
        if err >= chance_bar:
            break
        alpha = float(np.log((1.0 - err) / err) + np.log(N_CLASSES - 1.0))
        if alpha <= 0.0:
            break
        stumps.append(stump)
        alphas.append(alpha)
        w *= np.exp(alpha * miss)
        w /= w.sum()
    fallback = int(np.argmax(np.bincount(y, minlength=N_CLASSES)))
    return AdaBoostModel(stumps=tuple(stumps), alphas=tuple(alphas), fallback=fallback)


def _adaboost_predict(model: AdaBoostModel, X: np.ndarray) -> np.ndarray:
    if not model.stumps:
        return np.full(X.shape[0], model.fallback, dtype=np.int64)
    scores = np.zeros((X.shape[0], N_CLASSES))
    for stump, alpha in zip(model.stumps, model.alphas):
        pred = _stump_predict(stump, X)
        scores[np.arange(X.shape[0]), pred] += alpha
    return scores.argmax(axis=1)


def train_baseline(kind: str, X, y: Sequence[Category], hyperparams: Optional[Mapping] = None) -> BaselineModel:
    """Train one of the six baseline kinds with its default hyperparameters."""
    if kind not in BASELINE_KINDS:
        raise TrainingError(f"unknown baseline kind {kind!r}; expected one of {BASELINE_KINDS}")
    arr, codes = _validate(X, y)
    hp = dict(DEFAULT_HYPERPARAMS[kind])
    if hyperparams:
        hp.update(hyperparams)

    if kind == "NaiveBayes":
        return _train_naive_bayes(arr, codes)
    if kind == "DecisionTree":
        depth = hp["max_depth"]
        params = ForestParams(
            n_trees=1,
            max_depth=arr.shape[0] if depth is None else depth,  # None: grow until pure
            min_samples_split=hp["min_samples_split"],
            features_per_split=arr.shape[1],  # a plain CART tree: no feature subsampling
            seed=hp["seed"],
        )
        weights = {c: 1.0 for c in CATEGORIES}
        rng = rngmod.stream(hp["seed"], "baseline", "decision-tree")
        root = train_tree(arr, list(y), weights, params, rng)
        return DecisionTreeModel(root=root, n_features=arr.shape[1])
    if kind == "KNN":
        return _train_knn(arr, codes, hp["k"])
    if kind == "LogisticRegression":
        return _train_logistic(arr, codes, hp["iterations"], hp["learning_rate"], hp["l2"])
    if kind == "LinearSVM":
        return _train_linear_svm(arr, codes, hp["epochs"], hp["learning_rate"], hp["l2"])
    return _train_adaboost(arr, codes, hp["rounds"])


def predict_baseline_batch(model: BaselineModel, X) -> list[Category]:
    arr, _ = _as_matrix(X)
    if isinstance(model, GaussianNBModel):
        codes = _nb_scores(model, arr).argmax(axis=1)
    elif isinstance(model, DecisionTreeModel):
        if arr.shape[1] != model.n_features:
            raise TrainingError("feature count mismatch")
        codes = _tree_argmax(model.root, arr)
    elif isinstance(model, KNNModel):
        codes = _knn_predict(model, arr)
    elif isinstance(model, LinearModel):
        codes = (arr @ model.weights + model.bias).argmax(axis=1)
    elif isinstance(model, AdaBoostModel):
        codes = _adaboost_predict(model, arr)
    else:
        raise TrainingError(f"not a baseline model: {type(model).__name__}")
    return [CATEGORIES[int(c)] for c in codes]


def predict_baseline(model: BaselineModel, x: Sequence[float]) -> Category:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise TrainingError("predict_baseline expects a single feature vector")
    return predict_baseline_batch(model, arr[None, :])[0]


def _tree_argmax(root: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.zeros((X.shape[0], N_CLASSES))
    stack = [(root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if isinstance(node, Leaf):
            out[idx] = node.distribution
        else:
            assert isinstance(node, Split)
            mask = X[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[mask]))
            stack.append((node.right, idx[~mask]))
    return out.argmax(axis=1)


def compare_classifiers(
    X,
    y: Sequence[Category],
    forest_params: ForestParams,
    test_fraction: float = 0.2,
    seed: int = 0,
    hyperparams: Optional[Mapping[str, Mapping]] = None,
) -> list[tuple[str, float]]:
    """Held-out weighted f1 for the forest plus all six baselines.

    One stratified split is shared by every contender; rows come back
    sorted by descending f1 (ties alphabetically).
    """
    arr, _ = _as_matrix(X)
    y_list = list(y)
    train_idx, test_idx = stratified_split(y_list, test_fraction, seed)
    X_train, X_test = arr[train_idx], arr[test_idx]
    y_train = [y_list[i] for i in train_idx]
    y_test = [y_list[i] for i in test_idx]

    rows = []
    forest = train_forest(X_train, y_train, forest_params)
    predicted, _ = forest_predict_batch(forest, X_test)
    rows.append(("RandomForest", classification_report(y_test, predicted).weighted_f1))

    per_kind = dict(hyperparams or {})
    for kind in BASELINE_KINDS:
        model = train_baseline(kind, X_train, y_train, per_kind.get(kind))
        report = classification_report(y_test, predict_baseline_batch(model, X_test))
        rows.append((kind, report.weighted_f1))
    return sorted(rows, key=lambda row: (-row[1], row[0]))
