"""Local sparse-linear explanations of a black-box classifier.

For one document: sample local perturbations of its presence vector, label
them with the black box, weight them by an exponential locality kernel on
cosine distance, select at most K features along the lasso path, and refit
weighted least squares on the selection.  Also hosts the greedy-removal and
random baseline explainers.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateInstance, InsufficientSamples
from .lassopath import lasso_path_select
from .models import ProbabilityModel
from .textrepr import (
    Document,
    InterpretableVector,
    PerturbedSample,
    Vocabulary,
    count_vector,
    sample_keep_matrix,
    vectorize,
)

DEFAULT_SIGMA = 0.25
RIDGE_JITTER = 1e-10


@dataclass(frozen=True)
class KernelConfig:
    """Exponential locality kernel exp(-distance^2 / sigma^2)."""

    sigma: float = DEFAULT_SIGMA
    distance: str = "cosine"

    def __post_init__(self):
        if self.sigma <= 0:
            raise ConfigError("kernel width sigma must be positive")
        if self.distance != "cosine":
            raise ConfigError(f"unsupported distance {self.distance!r}")


def kernel_weight(distance: float, cfg: KernelConfig) -> float:
    if distance < 0:
        raise ConfigError("distance must be nonnegative")
    return float(np.exp(-(distance**2) / cfg.sigma**2))


@dataclass
class SurrogateDataset:
    """Perturbed samples with labels and locality weights for one instance.

    Row 0 is always the unperturbed anchor (distance 0, weight 1).  The
    matrix views cover only the anchor's support columns, which are the only
    columns that vary.
    """

    rows: list[PerturbedSample]
    xprime: InterpretableVector
    support: np.ndarray  # column ids, ascending
    keep: np.ndarray  # (N x m) bool, kept support positions
    labels: np.ndarray  # (N,) black-box probabilities
    weights: np.ndarray  # (N,) kernel values
    distances: np.ndarray  # (N,)

    def __len__(self) -> int:
        return int(self.keep.shape[0])


@dataclass
class Explanation:
    """Sparse linear surrogate for one instance and one target class."""

    instance_id: str
    target_class: int
    features: list[tuple[int, str, float]]  # (column, token, weight)
    intercept: float
    fidelity: float
    config: dict = field(default_factory=dict)

    @property
    def feature_ids(self) -> list[int]:
        return [c for c, _, _ in self.features]

    def to_json(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "target_class": self.target_class,
            "intercept": self.intercept,
            "fidelity": self.fidelity,
            "features": [
                {"token": t, "column": c, "weight": w} for c, t, w in self.features
            ],
            "config": dict(self.config),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Explanation":
        return cls(
            instance_id=doc["instance_id"],
            target_class=doc["target_class"],
            features=[
                (f["column"], f["token"], f["weight"]) for f in doc["features"]
            ],
            intercept=doc["intercept"],
            fidelity=doc["fidelity"],
            config=dict(doc.get("config", {})),
        )


def build_surrogate(
    f: ProbabilityModel,
    doc: Document,
    vocab: Vocabulary,
    n: int,
    cfg: KernelConfig,
    seed: int,
) -> SurrogateDataset:
    """Sample n perturbations, label them with f, weight them by the kernel."""
    xprime = vectorize(doc, vocab)
    support = xprime.support
    m = support.size
    if m == 0:
        raise DegenerateInstance("document has no in-vocabulary tokens")
    rng = np.random.default_rng(seed)
    keep = sample_keep_matrix(m, n, rng)
    base_counts = count_vector(doc, vocab)
    masked = np.zeros((n, vocab.size))
    masked[:, support] = keep * base_counts[support]
    labels = np.asarray(f.predict_matrix(masked), dtype=float)
    # cosine distance between anchor and z' reduces to 1 - sqrt(|z'| / m)
    kept_counts = keep.sum(axis=1)
    distances = 1.0 - np.sqrt(kept_counts / m)
    weights = np.exp(-(distances**2) / cfg.sigma**2)
    rows = [
        PerturbedSample(
            zprime=InterpretableVector.from_support(vocab.size, support[keep[i]]),
            label=float(labels[i]),
            weight=float(weights[i]),
            distance=float(distances[i]),
        )
        for i in range(n)
    ]
    return SurrogateDataset(
        rows=rows,
        xprime=xprime,
        support=support,
        keep=keep,
        labels=labels,
        weights=weights,
        distances=distances,
    )


def _weighted_ls(Z: np.ndarray, y: np.ndarray, w: np.ndarray):
    """Weighted least squares with intercept via jittered normal equations."""
    A = np.column_stack([np.ones(Z.shape[0]), Z])
    Aw = A * w[:, None]
    G = A.T @ Aw
    G[np.arange(1, G.shape[0]), np.arange(1, G.shape[0])] += RIDGE_JITTER
    b = Aw.T @ y
    coef = np.linalg.solve(G, b)
    return float(coef[0]), coef[1:]


def k_lasso(Z: SurrogateDataset, k: int) -> tuple[list[int], np.ndarray, float]:
    """Select at most k columns along the lasso path, then refit WLS.

    Returns (selected column ids, their weights, intercept), ids in
    activation order.  Columns are the anchor's support columns.
    """
    if k < 1:
        raise ConfigError("k must be at least 1")
    n = len(Z)
    if n <= k:
        raise InsufficientSamples(f"need more than k={k} samples, got {n}")
    w = Z.weights
    y = Z.labels
    B = Z.keep.astype(float)
    # pi-weighted centering, then sqrt(pi) row scaling
    wsum = w.sum()
    col_means = (w @ B) / wsum
    y_mean = float(w @ y / wsum)
    sw = np.sqrt(w)
    Xc = (B - col_means) * sw[:, None]
    yc = (y - y_mean) * sw
    selected_local = lasso_path_select(Xc, yc, k)
    if not selected_local:
        return [], np.array([]), y_mean
    sel = np.asarray(selected_local, dtype=int)
    intercept, coefs = _weighted_ls(B[:, sel], y, w)
    cols = [int(Z.support[j]) for j in selected_local]
    return cols, coefs, intercept


def _weighted_sse(pred: np.ndarray, y: np.ndarray, w: np.ndarray) -> float:
    return float(w @ (y - pred) ** 2)


def explain_instance(
    f: ProbabilityModel,
    doc: Document,
    vocab: Vocabulary,
    k: int = 10,
    n: int = 5000,
    cfg: KernelConfig | None = None,
    seed: int = 0,
) -> Explanation:
    """Full pipeline: surrogate dataset -> K-feature lasso -> WLS refit."""
    cfg = cfg or KernelConfig()
    Z = build_surrogate(f, doc, vocab, n, cfg, seed)
    cols, coefs, intercept = k_lasso(Z, k)
    local = {int(c): i for i, c in enumerate(Z.support)}
    if cols:
        pred = intercept + Z.keep[:, [local[c] for c in cols]].astype(float) @ coefs
    else:
        pred = np.full(len(Z), intercept)
    sse = _weighted_sse(pred, Z.labels, Z.weights)
    base = _weighted_sse(np.full(len(Z), np.average(Z.labels, weights=Z.weights)),
                         Z.labels, Z.weights)
    fidelity = 1.0 if base <= 1e-18 else 1.0 - sse / base
    features = [(c, vocab.lookup(c), float(w)) for c, w in zip(cols, coefs)]
    target = 1 if Z.labels[0] >= 0.5 else 0
    return Explanation(
        instance_id=doc.id,
        target_class=target,
        features=features,
        intercept=intercept,
        fidelity=fidelity,
        config={
            "k": k,
            "n": n,
            "sigma": cfg.sigma,
            "seed": seed,
            "distance": cfg.distance,
        },
    )


def greedy_explain(
    f: ProbabilityModel, doc: Document, vocab: Vocabulary, k: int = 10
) -> list[int]:
    """Remove the feature hurting the predicted class most, until it flips.

    Returns the removal order (at most k column ids); ties break toward the
    lower column id.
    """
    xprime = vectorize(doc, vocab)
    support = list(xprime.support)
    if not support:
        raise DegenerateInstance("document has no in-vocabulary tokens")
    counts = count_vector(doc, vocab)
    p0 = f.predict_prob(counts)
    predicted = 1 if p0 >= 0.5 else 0
    removed: list[int] = []
    current = counts.copy()
    for _ in range(min(k, len(support))):
        remaining = [j for j in support if j not in removed]
        if not remaining:
            break
        candidates = np.tile(current, (len(remaining), 1))
        for row, j in enumerate(remaining):
            candidates[row, j] = 0.0
        probs = f.predict_matrix(candidates)
        class_prob = probs if predicted == 1 else 1.0 - probs
        best = int(np.argmin(class_prob))  # argmin keeps the lowest id on ties
        j_best = remaining[best]
        removed.append(j_best)
        current[j_best] = 0.0
        flipped = (probs[best] >= 0.5) != (predicted == 1)
        if flipped:
            break
    return removed


def random_explain(
    doc: Document, vocab: Vocabulary, k: int, seed: int
) -> list[int]:
    """Uniform sample of min(k, m) active features without replacement."""
    xprime = vectorize(doc, vocab)
    support = xprime.support
    if support.size == 0:
        raise DegenerateInstance("document has no in-vocabulary tokens")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(support, size=min(k, support.size), replace=False)
    return [int(j) for j in chosen]
