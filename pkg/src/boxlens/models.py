"""Built-in black-box classifiers over token-count features.

Everything implements the same contract: an immutable model exposing
`predict_matrix` (class-1 probabilities for a batch of count vectors) and
`predict_prob` for a single vector.  Training is deterministic per seed.

The logistic models and the CART tree are implemented here directly because
their contracts carry constraints a stock library does not expose (monotone
training loss, L1-path stopping at a feature budget, a per-path feature cap).
The bagged forest wraps scikit-learn's RandomForestClassifier, which already
matches the bagging + sqrt-feature-subsampling contract exactly.
"""
from __future__ import annotations

import base64
import pickle
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from sklearn.ensemble import RandomForestClassifier

from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateFeatures,
    DegenerateLabels,
)
from .textrepr import Vocabulary, count_vector

MODEL_DOC_VERSION = 1


@dataclass(frozen=True)
class ModelSpec:
    """Recipe for (re)training a model: kind, hyperparameters, seed."""

    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0


@dataclass(frozen=True)
class GoldFeatureSet:
    """Features a transparently sparse model actually uses."""

    feature_ids: frozenset[int]


class ProbabilityModel(ABC):
    """Immutable trained classifier exposing class-1 probabilities."""

    kind: str = "abstract"

    def __init__(self, feature_dim: int, metadata: dict):
        self.feature_dim = feature_dim
        self.metadata = dict(metadata)

    @abstractmethod
    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        """Class-1 probability for every row of X, shape (n,)."""

    def predict_prob(self, x: np.ndarray) -> float:
        return float(self.predict_matrix(np.asarray(x, dtype=float)[None, :])[0])


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LogisticModel(ProbabilityModel):
    kind = "logreg"

    def __init__(self, weights: np.ndarray, bias: float, metadata: dict):
        super().__init__(feature_dim=weights.shape[0], metadata=metadata)
        self.weights = np.asarray(weights, dtype=float)
        self.bias = float(bias)

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(X @ self.weights + self.bias)

    def nonzero_features(self, tol: float = 1e-8) -> frozenset[int]:
        return frozenset(int(j) for j in np.flatnonzero(np.abs(self.weights) > tol))


def _logloss(w, b, X, y, l2):
    z = X @ w + b
    # log(1 + exp(-yz)) with y in {-1, +1}
    s = np.where(y == 1, -z, z)
    loss = np.mean(np.logaddexp(0.0, s))
    return loss + 0.5 * l2 * float(w @ w)


def _loggrad(w, b, X, y, l2):
    p = _sigmoid(X @ w + b)
    resid = p - y
    gw = X.T @ resid / X.shape[0] + l2 * w
    gb = float(np.mean(resid))
    return gw, gb


def train_logreg_l2(
    X: np.ndarray,
    y: np.ndarray,
    l2: float = 1e-3,
    epochs: int = 400,
    lr: float = 1.0,
    seed: int = 0,
) -> LogisticModel:
    """Batch gradient descent on L2-regularized log-loss.

    The step size backtracks whenever a step would increase the loss, so the
    recorded training-loss sequence is non-increasing.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.unique(y).size < 2:
        raise DegenerateLabels("training labels contain a single class")
    w = np.zeros(X.shape[1])
    b = 0.0
    step = lr
    loss = _logloss(w, b, X, y, l2)
    history = [loss]
    for _ in range(epochs):
        gw, gb = _loggrad(w, b, X, y, l2)
        while step > 1e-14:
            w_new = w - step * gw
            b_new = b - step * gb
            loss_new = _logloss(w_new, b_new, X, y, l2)
            if loss_new <= loss + 1e-12:
                break
            step *= 0.5
        else:
            break
        w, b, loss = w_new, b_new, loss_new
        history.append(loss)
        step *= 1.25
    meta = {
        "kind": "logreg",
        "l2": l2,
        "epochs": epochs,
        "lr": lr,
        "seed": seed,
        "final_loss": history[-1],
        "loss_history": history,
    }
    return LogisticModel(weights=w, bias=b, metadata=meta)


def _ista_fit(X, y, lam, w, b, step, max_iter=400, tol=1e-7):
    """Proximal gradient descent for L1-penalized logistic regression."""
    n = X.shape[0]
    for _ in range(max_iter):
        p = _sigmoid(X @ w + b)
        resid = p - y
        gw = X.T @ resid / n
        gb = float(np.mean(resid))
        w_new = w - step * gw
        w_new = np.sign(w_new) * np.maximum(np.abs(w_new) - step * lam, 0.0)
        b_new = b - step * gb
        delta = max(float(np.max(np.abs(w_new - w))), abs(b_new - b))
        w, b = w_new, b_new
        if delta < tol:
            break
    return w, b


def train_sparse_logreg(
    X: np.ndarray, y: np.ndarray, k_max: int = 10, seed: int = 0
) -> tuple[LogisticModel, GoldFeatureSet]:
    """L1-path logistic regression stopped at a feature budget.

    Walks a decreasing geometric penalty grid with warm starts and returns
    the last solution on the path whose support is still at most k_max.
    With k_max >= d the penalty is dropped entirely.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.unique(y).size < 2:
        raise DegenerateLabels("training labels contain a single class")
    n, d = X.shape
    if k_max < 1:
        raise ConfigError("k_max must be positive")
    if k_max >= d:
        model = train_logreg_l2(X, y, l2=0.0, seed=seed)
        gold = GoldFeatureSet(model.nonzero_features())
        model.kind = "sparse_logreg"
        model.metadata["kind"] = "sparse_logreg"
        model.metadata["k_max"] = k_max
        return model, gold
    # Lipschitz bound for the logistic gradient
    col_norm = np.linalg.norm(X, ord=2) if min(n, d) <= 2000 else np.sqrt(
        np.sum(X**2)
    )
    step = 1.0 / (col_norm**2 / (4.0 * n) + 1e-12)
    b0 = float(np.log(max(y.mean(), 1e-9) / max(1.0 - y.mean(), 1e-9)))
    lam_max = float(np.max(np.abs(X.T @ (_sigmoid(np.full(n, b0)) - y) / n)))
    lam_grid = lam_max * np.geomspace(0.98, 1e-4, 80)
    w = np.zeros(d)
    b = b0
    best: tuple[np.ndarray, float, float] | None = None
    for lam in lam_grid:
        w, b = _ista_fit(X, y, lam, w, b, step)
        nnz = int(np.count_nonzero(np.abs(w) > 1e-10))
        if nnz > k_max:
            break
        if nnz >= 1:
            best = (w.copy(), b, float(lam))
    if best is None:
        raise ConvergenceError("no penalty on the path kept a nonempty support <= k_max")
    w_best, b_best, lam_best = best
    meta = {
        "kind": "sparse_logreg",
        "k_max": k_max,
        "seed": seed,
        "lambda": lam_best,
    }
    model = LogisticModel(weights=w_best, bias=b_best, metadata=meta)
    model.kind = "sparse_logreg"
    gold = GoldFeatureSet(model.nonzero_features(1e-10))
    return model, gold


class DecisionTreeModel(ProbabilityModel):
    """CART tree on count thresholds with a per-path distinct-feature cap."""

    kind = "decision_tree"

    def __init__(self, feature, threshold, left, right, value, metadata):
        super().__init__(feature_dim=metadata["feature_dim"], metadata=metadata)
        self.feature = np.asarray(feature, dtype=int)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=int)
        self.right = np.asarray(right, dtype=int)
        self.value = np.asarray(value, dtype=float)

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        idx = np.zeros(X.shape[0], dtype=int)
        while True:
            active = self.feature[idx] >= 0
            if not np.any(active):
                break
            rows = np.flatnonzero(active)
            node = idx[rows]
            go_left = X[rows, self.feature[node]] <= self.threshold[node]
            idx[rows] = np.where(go_left, self.left[node], self.right[node])
        return self.value[idx]

    def decision_path_features(self, x: np.ndarray) -> frozenset[int]:
        """Distinct split features on x's root-to-leaf path."""
        x = np.asarray(x, dtype=float)
        node = 0
        feats: set[int] = set()
        while self.feature[node] >= 0:
            f = int(self.feature[node])
            feats.add(f)
            if x[f] <= self.threshold[node]:
                node = int(self.left[node])
            else:
                node = int(self.right[node])
        return frozenset(feats)


def _gini_best_split(xcol: np.ndarray, y: np.ndarray):
    """Best threshold and impurity decrease for one feature, or None."""
    order = np.argsort(xcol, kind="stable")
    xs = xcol[order]
    ys = y[order]
    n = xs.size
    boundaries = np.flatnonzero(xs[1:] > xs[:-1]) + 1
    if boundaries.size == 0:
        return None
    pos = np.cumsum(ys)
    total_pos = pos[-1]
    nl = boundaries.astype(float)
    nr = n - nl
    pl = pos[boundaries - 1] / nl
    pr = (total_pos - pos[boundaries - 1]) / nr
    gini = nl / n * 2 * pl * (1 - pl) + nr / n * 2 * pr * (1 - pr)
    best = int(np.argmin(gini))
    parent_p = total_pos / n
    gain = 2 * parent_p * (1 - parent_p) - gini[best]
    cut = boundaries[best]
    threshold = 0.5 * (xs[cut - 1] + xs[cut])
    return threshold, float(gain)


def train_decision_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_active_features: int = 10,
    max_depth: int = 12,
    seed: int = 0,
    min_samples_split: int = 2,
) -> DecisionTreeModel:
    """Recursive Gini partitioning on count thresholds.

    Any root-to-leaf path uses at most max_active_features distinct split
    features: once a path hits the cap, only already-used features may split.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    def build(rows: np.ndarray, depth: int, path_feats: frozenset[int]) -> int:
        node = new_node()
        ysub = y[rows]
        value[node] = float(ysub.mean())
        if (
            depth >= max_depth
            or rows.size < min_samples_split
            or ysub.min() == ysub.max()
        ):
            return node
        if len(path_feats) >= max_active_features:
            candidates = sorted(path_feats)
        else:
            candidates = range(X.shape[1])
        best_gain = 1e-12
        best = None
        for f in candidates:
            res = _gini_best_split(X[rows, f], ysub)
            if res is None:
                continue
            thr, gain = res
            if gain > best_gain:
                best_gain = gain
                best = (f, thr)
        if best is None:
            return node
        f, thr = best
        go_left = X[rows, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node] = build(rows[go_left], depth + 1, path_feats | {f})
        right[node] = build(rows[~go_left], depth + 1, path_feats | {f})
        return node

    build(np.arange(X.shape[0]), 0, frozenset())
    meta = {
        "kind": "decision_tree",
        "max_active_features": max_active_features,
        "max_depth": max_depth,
        "seed": seed,
        "feature_dim": X.shape[1],
    }
    return DecisionTreeModel(feature, threshold, left, right, value, meta)


class KnnModel(ProbabilityModel):
    """k nearest neighbors by cosine distance on counts.

    Zero vectors (query or training) are assigned the maximum distance 1;
    distance ties are broken toward the lower training index.
    """

    kind = "knn"

    def __init__(self, X_train: np.ndarray, y_train: np.ndarray, k: int, metadata: dict):
        super().__init__(feature_dim=X_train.shape[1], metadata=metadata)
        self.X_train = np.asarray(X_train, dtype=float)
        self.y_train = np.asarray(y_train, dtype=float)
        self.k = k
        norms = np.linalg.norm(self.X_train, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        self._unit = self.X_train / safe[:, None]
        self._zero_train = norms == 0

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        norms = np.linalg.norm(X, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        Q = X / safe[:, None]
        sims = Q @ self._unit.T
        sims[:, self._zero_train] = 0.0
        sims[norms == 0, :] = 0.0
        dist = 1.0 - sims
        order = np.argsort(dist, axis=1, kind="stable")[:, : self.k]
        return self.y_train[order].mean(axis=1)


def train_knn(X: np.ndarray, y: np.ndarray, k: int) -> KnnModel:
    X = np.asarray(X, dtype=float)
    if k < 1:
        raise ConfigError("k must be at least 1")
    if k > X.shape[0]:
        raise ConfigError("k exceeds the number of training documents")
    meta = {"kind": "knn", "k": k, "seed": 0}
    return KnnModel(X, np.asarray(y, dtype=float), k, meta)


class RandomForestModel(ProbabilityModel):
    """Bagged forest; probability is the mean of member-tree probabilities."""

    kind = "random_forest"

    def __init__(self, clf: RandomForestClassifier, metadata: dict):
        super().__init__(feature_dim=metadata["feature_dim"], metadata=metadata)
        self.clf = clf

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        proba = self.clf.predict_proba(X)
        classes = list(self.clf.classes_)
        if 1 not in classes:
            return np.zeros(X.shape[0])
        return proba[:, classes.index(1)]


def train_random_forest(
    X: np.ndarray, y: np.ndarray, n_trees: int = 30, seed: int = 0
) -> RandomForestModel:
    if n_trees < 1:
        raise ConfigError("n_trees must be at least 1")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    clf = RandomForestClassifier(
        n_estimators=n_trees,
        max_features="sqrt",
        bootstrap=True,
        random_state=seed & 0xFFFFFFFF,
        n_jobs=1,
    )
    clf.fit(X, y)
    meta = {
        "kind": "random_forest",
        "n_trees": n_trees,
        "seed": seed,
        "feature_dim": X.shape[1],
    }
    return RandomForestModel(clf, meta)


class MaskedModel(ProbabilityModel):
    """Wrapper that zeroes removed feature columns before prediction.

    Guarantees inference invariance to removed tokens for every model kind.
    """

    def __init__(self, inner: ProbabilityModel, removed_ids: frozenset[int]):
        super().__init__(feature_dim=inner.feature_dim, metadata=inner.metadata)
        self.kind = inner.kind
        self.inner = inner
        self.removed_ids = frozenset(int(i) for i in removed_ids)
        self._mask = np.ones(inner.feature_dim)
        if self.removed_ids:
            self._mask[np.asarray(sorted(self.removed_ids))] = 0.0

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        return self.inner.predict_matrix(np.asarray(X, dtype=float) * self._mask)


def train_from_spec(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> ProbabilityModel:
    """Dispatch training by model kind."""
    p = dict(spec.params)
    if spec.kind == "logreg":
        return train_logreg_l2(X, y, seed=spec.seed, **p)
    if spec.kind == "sparse_logreg":
        model, _ = train_sparse_logreg(X, y, seed=spec.seed, **p)
        return model
    if spec.kind == "decision_tree":
        return train_decision_tree(X, y, seed=spec.seed, **p)
    if spec.kind == "knn":
        return train_knn(X, y, **p) if p else train_knn(X, y, k=5)
    if spec.kind == "random_forest":
        return train_random_forest(X, y, seed=spec.seed, **p)
    raise ConfigError(f"unknown model kind {spec.kind!r}")


def retrain_without(
    spec: ModelSpec,
    removed_tokens: set[str],
    X: np.ndarray,
    y: np.ndarray,
    vocab: Vocabulary,
) -> ProbabilityModel:
    """Retrain the same recipe with the given tokens' counts zeroed out."""
    removed_ids = set()
    for token in removed_tokens:
        j = vocab.index.get(token)
        if j is None:
            raise ConfigError(f"token {token!r} is not in the vocabulary")
        removed_ids.add(j)
    if len(removed_ids) >= vocab.size:
        raise DegenerateFeatures("cannot remove the entire vocabulary")
    X2 = np.asarray(X, dtype=float).copy()
    if removed_ids:
        X2[:, sorted(removed_ids)] = 0.0
    model = train_from_spec(spec, X2, y)
    return MaskedModel(model, frozenset(removed_ids))


def corpus_matrix(corpus, vocab: Vocabulary) -> tuple[np.ndarray, np.ndarray]:
    """Count matrix and label vector for a labeled corpus."""
    X = np.zeros((len(corpus.docs), vocab.size))
    for i, doc in enumerate(corpus.docs):
        X[i] = count_vector(doc, vocab)
    return X, corpus.labels().astype(float)


def accuracy(model: ProbabilityModel, X: np.ndarray, y: np.ndarray) -> float:
    pred = model.predict_matrix(np.asarray(X, dtype=float)) >= 0.5
    return float(np.mean(pred == (np.asarray(y) >= 0.5)))


def model_to_doc(model: ProbabilityModel, vocab_hash: str = "") -> dict:
    """Versioned JSON-safe document describing a trained model."""
    doc = {
        "version": MODEL_DOC_VERSION,
        "kind": model.kind,
        "metadata": {
            k: v for k, v in model.metadata.items() if k != "loss_history"
        },
        "vocab_hash": vocab_hash,
    }
    if isinstance(model, MaskedModel):
        doc["removed_ids"] = sorted(model.removed_ids)
        doc["inner"] = model_to_doc(model.inner, vocab_hash)
    elif isinstance(model, LogisticModel):
        doc["weights"] = model.weights.tolist()
        doc["bias"] = model.bias
    elif isinstance(model, DecisionTreeModel):
        doc["tree"] = {
            "feature": model.feature.tolist(),
            "threshold": model.threshold.tolist(),
            "left": model.left.tolist(),
            "right": model.right.tolist(),
            "value": model.value.tolist(),
        }
    elif isinstance(model, KnnModel):
        doc["x_train"] = model.X_train.tolist()
        doc["y_train"] = model.y_train.tolist()
        doc["k"] = model.k
    elif isinstance(model, RandomForestModel):
        doc["sklearn_pickle_b64"] = base64.b64encode(
            pickle.dumps(model.clf)
        ).decode("ascii")
        doc["feature_dim"] = model.feature_dim
    else:
        raise ConfigError(f"cannot serialize model kind {model.kind!r}")
    return doc


def model_from_doc(doc: dict) -> ProbabilityModel:
    if doc.get("version") != MODEL_DOC_VERSION:
        raise ConfigError("unsupported model document version")
    kind = doc["kind"]
    meta = doc["metadata"]
    if "removed_ids" in doc:
        inner = model_from_doc(doc["inner"])
        return MaskedModel(inner, frozenset(doc["removed_ids"]))
    if kind in ("logreg", "sparse_logreg"):
        model = LogisticModel(np.asarray(doc["weights"]), doc["bias"], meta)
        model.kind = kind
        return model
    if kind == "decision_tree":
        t = doc["tree"]
        return DecisionTreeModel(
            t["feature"], t["threshold"], t["left"], t["right"], t["value"], meta
        )
    if kind == "knn":
        return KnnModel(
            np.asarray(doc["x_train"]), np.asarray(doc["y_train"]), doc["k"], meta
        )
    if kind == "random_forest":
        clf = pickle.loads(base64.b64decode(doc["sklearn_pickle_b64"]))
        return RandomForestModel(clf, meta)
    raise ConfigError(f"unknown model kind {kind!r}")
