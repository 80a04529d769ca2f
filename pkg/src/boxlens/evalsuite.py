"""Simulated-user experiments: explanation faithfulness, trust in
individual predictions, and explanation-driven model selection.

Every experiment is a pure function of (config, seed).  Per-run seeds are
derived from the master seed with a splitmix-style mixer so runs are
independent and order-insensitive.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import data as datamod
from . import models as modelsmod
from .data import LabeledCorpus, NoisyFeatureSpec, UntrustworthySet, pick_untrustworthy
from .errors import ConfigError, PairSearchTimeout
from .explain import (
    Explanation,
    KernelConfig,
    explain_instance,
    greedy_explain,
    random_explain,
)
from .pick import build_matrix, submodular_pick
from .textrepr import Vocabulary, count_vector

EXPLAINERS = ("surrogate", "greedy", "random")

# Test fraction the model-selection benchmark reserves for judging which
# classifier of a pair is genuinely better; a large test split keeps the
# desk-scale 3% accuracy gap well above sampling noise.
SELECTION_TEST_FRAC = 0.68


def two_sided_signal(
    n_per_class: int = 6, low: float = 0.08, high: float = 0.75
) -> datamod.ClassSignal:
    """Planted signal with dedicated indicator tokens for each class.

    Both classes get removable evidence, so every explainer has something
    to find on every document regardless of its label.
    """
    presence = {f"good{i}word": (low, high) for i in range(n_per_class)}
    presence.update({f"bad{i}word": (high, low) for i in range(n_per_class)})
    return datamod.ClassSignal(presence=presence)


def benchmark_corpus(
    seed: int = 0, n_docs: int = 1000, vocab_size: int = 300
) -> LabeledCorpus:
    """Synthetic corpus used by the faithfulness and trust experiments."""
    return datamod.synth_corpus(
        n_docs, vocab_size, 0.5, two_sided_signal(), seed, name="synth-benchmark"
    )


def selection_corpus(seed: int = 7, n_docs: int = 5000) -> LabeledCorpus:
    """Synthetic corpus used by the model-selection experiment.

    The natural signal is deliberately weak and sparse (six tokens with
    moderate class-presence gaps) so the injected artificial features
    genuinely compete for the forests' attention; strong natural signal
    would make every candidate forest equally good and the pair search
    would only ever find noise.
    """
    presence = {
        f"sig{i}word": ((0.12, 0.37) if i % 2 else (0.37, 0.12)) for i in range(6)
    }
    return datamod.synth_corpus(
        n_docs, 200, 0.5, datamod.ClassSignal(presence=presence), seed,
        name="synth-selection",
    )


def derive_seed(master: int, *parts: int) -> int:
    """Mix indices into a master seed (splitmix64-style finalizer)."""
    z = master & 0xFFFFFFFFFFFFFFFF
    for p in parts:
        z = (z + 0x9E3779B97F4A7C15 + (p & 0xFFFFFFFFFFFFFFFF)) & 0xFFFFFFFFFFFFFFFF
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
        z = z ^ (z >> 31)
    return z


@dataclass(frozen=True)
class TrustVerdict:
    """Oracle vs simulated-user trust for one prediction."""

    oracle: bool
    simulated: bool


@dataclass
class ExperimentReport:
    """Per-run rows plus aggregate mean and standard error."""

    kind: str
    metrics: dict
    per_run: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    seed: int = 0
    n_runs: int = 1

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "metrics": self.metrics,
            "per_run": self.per_run,
            "config": self.config,
            "seed": self.seed,
            "n_runs": self.n_runs,
        }


def _mean_stderr(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    stderr = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
    return mean, stderr


def _explanation_features(
    explainer: str,
    f: modelsmod.ProbabilityModel,
    doc,
    vocab: Vocabulary,
    k: int,
    n_samples: int,
    seed: int,
):
    """Feature ids (and the Explanation itself for the surrogate method)."""
    if explainer == "surrogate":
        exp = explain_instance(f, doc, vocab, k=k, n=n_samples, seed=seed)
        return exp.feature_ids, exp
    if explainer == "greedy":
        return greedy_explain(f, doc, vocab, k=k), None
    if explainer == "random":
        return random_explain(doc, vocab, k=k, seed=seed), None
    raise ConfigError(f"unknown explainer {explainer!r}")


def faithfulness_recall(
    model_kind: str,
    explainer: str,
    corpus: LabeledCorpus,
    k: int = 10,
    n_samples: int = 5000,
    seed: int = 0,
) -> ExperimentReport:
    """Mean recovered fraction of the model's truly-used features.

    Only interpretable-by-construction models qualify: the sparse logistic
    model (gold = nonzero-weight features present in the instance) and the
    path-limited decision tree (gold = decision-path features present in
    the instance).
    """
    train, test = datamod.split(corpus, 0.8, derive_seed(seed, 0))
    vocab = train.vocabulary()
    X, y = modelsmod.corpus_matrix(train, vocab)
    if model_kind in ("sparse_logreg", "sparse_lr"):
        model, gold_set = modelsmod.train_sparse_logreg(X, y, k_max=k, seed=seed)

        def gold(counts: np.ndarray) -> frozenset[int]:
            return frozenset(
                j for j in gold_set.feature_ids if counts[j] > 0
            )

    elif model_kind == "decision_tree":
        # shallow trees keep each split locally decisive
        model = modelsmod.train_decision_tree(
            X, y, max_active_features=k, max_depth=6, min_samples_split=10,
            seed=seed,
        )

        def gold(counts: np.ndarray) -> frozenset[int]:
            return frozenset(
                j for j in model.decision_path_features(counts) if counts[j] > 0
            )

    else:
        raise ConfigError(f"model kind {model_kind!r} exposes no gold features")
    recalls = []
    for i, doc in enumerate(test.docs):
        counts = count_vector(doc, vocab)
        g = gold(counts)
        if not g or counts.sum() == 0:
            continue
        feats, _ = _explanation_features(
            explainer, model, doc, vocab, k, n_samples, derive_seed(seed, 1, i)
        )
        recalls.append(len(set(feats) & g) / len(g))
    mean, stderr = _mean_stderr(recalls)
    return ExperimentReport(
        kind="faithfulness",
        metrics={"mean_recall": mean, "stderr": stderr, "n_instances": len(recalls)},
        per_run=recalls,
        config={
            "model_kind": model_kind,
            "explainer": explainer,
            "k": k,
            "n_samples": n_samples,
        },
        seed=seed,
        n_runs=len(recalls),
    )


def trust_oracle(
    f: modelsmod.ProbabilityModel,
    counts: np.ndarray,
    untrustworthy: UntrustworthySet,
) -> bool:
    """Trustworthy iff removing the untrustworthy features keeps the class."""
    masked = np.asarray(counts, dtype=float).copy()
    ids = sorted(untrustworthy.feature_ids)
    if ids:
        masked[ids] = 0.0
    full = f.predict_prob(counts)
    red = f.predict_prob(masked)
    return (full >= 0.5) == (red >= 0.5)


def simulated_user(
    explanation: Explanation | Sequence[int],
    untrustworthy: UntrustworthySet,
) -> bool:
    """Explanation-only trust decision.

    With a weighted explanation: mistrust iff discounting the untrustworthy
    features moves the surrogate prediction across 0.5.  With a bare
    feature list: mistrust iff any untrustworthy feature is present.
    """
    bad = untrustworthy.feature_ids
    if isinstance(explanation, Explanation):
        g_full = explanation.intercept + sum(w for _c, _t, w in explanation.features)
        g_red = explanation.intercept + sum(
            w for c, _t, w in explanation.features if c not in bad
        )
        return (g_full >= 0.5) == (g_red >= 0.5)
    return not bad.intersection(explanation)


def f1_trust(oracle: Sequence[bool], simulated: Sequence[bool]) -> float:
    """F1 with 'trustworthy' as the positive class; 0 on empty denominators."""
    o = np.asarray(oracle, dtype=bool)
    s = np.asarray(simulated, dtype=bool)
    tp = int(np.sum(o & s))
    fp = int(np.sum(~o & s))
    fn = int(np.sum(o & ~s))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


DEFAULT_TRUST_CLASSIFIERS = ("logreg", "decision_tree", "knn", "random_forest")


def _train_builtin(kind: str, X: np.ndarray, y: np.ndarray, seed: int):
    if kind == "logreg":
        return modelsmod.train_logreg_l2(X, y, seed=seed)
    if kind == "decision_tree":
        return modelsmod.train_decision_tree(X, y, seed=seed)
    if kind == "knn":
        return modelsmod.train_knn(X, y, k=min(5, X.shape[0]))
    if kind == "random_forest":
        return modelsmod.train_random_forest(X, y, seed=seed)
    if kind == "sparse_logreg":
        model, _ = modelsmod.train_sparse_logreg(X, y, seed=seed)
        return model
    raise ConfigError(f"unknown classifier kind {kind!r}")


def trust_f1_experiment(
    classifiers: Sequence[str] = DEFAULT_TRUST_CLASSIFIERS,
    corpus: LabeledCorpus | None = None,
    runs: int = 100,
    seed: int = 0,
    k: int = 10,
    n_samples: int = 2000,
    untrustworthy_fraction: float = 0.25,
) -> ExperimentReport:
    """F1 of simulated trust vs the oracle, per classifier per explainer.

    Explanations depend only on the model and instance, so they are computed
    once per classifier; each run draws a fresh untrustworthy feature set.
    """
    if corpus is None:
        raise ConfigError("a corpus is required")
    train, test = datamod.split(corpus, 0.8, derive_seed(seed, 0))
    vocab = train.vocabulary()
    X, y = modelsmod.corpus_matrix(train, vocab)
    X_test, _ = modelsmod.corpus_matrix(test, vocab)
    usable = [i for i in range(len(test.docs)) if X_test[i].sum() > 0]
    per_model: dict[str, dict] = {}
    for kind in classifiers:
        model = _train_builtin(kind, X, y, seed=derive_seed(seed, 1))
        exps = {}
        for name in EXPLAINERS:
            exps[name] = []
            for i in usable:
                doc = test.docs[i]
                feats, exp = _explanation_features(
                    name, model, doc, vocab, k, n_samples, derive_seed(seed, 2, i)
                )
                exps[name].append(exp if exp is not None else feats)
        per_model[kind] = {"model": model, "explanations": exps}
    rows = []
    f1_values: dict[tuple[str, str], list[float]] = {
        (kind, name): [] for kind in classifiers for name in EXPLAINERS
    }
    for r in range(runs):
        untrust = pick_untrustworthy(
            vocab, untrustworthy_fraction, derive_seed(seed, 3, r)
        )
        ids = sorted(untrust.feature_ids)
        for kind in classifiers:
            model = per_model[kind]["model"]
            probs_full = model.predict_matrix(X_test[usable])
            masked = X_test[usable].copy()
            masked[:, ids] = 0.0
            probs_red = model.predict_matrix(masked)
            oracle = (probs_full >= 0.5) == (probs_red >= 0.5)
            for name in EXPLAINERS:
                sim = [
                    simulated_user(e, untrust)
                    for e in per_model[kind]["explanations"][name]
                ]
                f1 = f1_trust(oracle, sim)
                f1_values[(kind, name)].append(f1)
                rows.append({"run": r, "classifier": kind, "explainer": name, "f1": f1})
    metrics = {}
    for (kind, name), values in f1_values.items():
        mean, stderr = _mean_stderr(values)
        metrics[f"{kind}/{name}"] = {"f1_mean": mean, "f1_stderr": stderr}
    return ExperimentReport(
        kind="trust_f1",
        metrics=metrics,
        per_run=rows,
        config={
            "classifiers": list(classifiers),
            "runs": runs,
            "k": k,
            "n_samples": n_samples,
            "untrustworthy_fraction": untrustworthy_fraction,
        },
        seed=seed,
        n_runs=runs,
    )


@dataclass(frozen=True)
class PairSearchConfig:
    """Thresholds for finding a deceptive classifier pair."""

    val_tol: float = 0.01
    test_gap: float = 0.03
    max_attempts: int = 200
    n_trees: int = 30
    subsample: float = 0.22

    @classmethod
    def desk(cls) -> "PairSearchConfig":
        return cls()

    @classmethod
    def paper(cls) -> "PairSearchConfig":
        return cls(val_tol=0.001, test_gap=0.05, max_attempts=2000, subsample=1.0)


def _find_pair(
    X_train, y_train, X_val, y_val, X_test, y_test, cfg: PairSearchConfig, seed: int
):
    """Train forests one at a time until two have near-equal validation
    accuracy but clearly different test accuracy.

    Each candidate sees its own random subsample of the training split
    (``cfg.subsample``); that is what makes two forests with matching
    validation accuracy genuinely differ in quality rather than only in
    bagging noise.
    """
    pool = []  # (model, val_acc, test_acc)
    n = len(y_train)
    size = max(2, int(round(cfg.subsample * n)))
    for attempt in range(cfg.max_attempts):
        attempt_seed = derive_seed(seed, attempt)
        if size < n:
            rng = np.random.default_rng(attempt_seed)
            rows = rng.choice(n, size=size, replace=False)
            X_fit, y_fit = X_train[rows], y_train[rows]
        else:
            X_fit, y_fit = X_train, y_train
        model = modelsmod.train_random_forest(
            X_fit, y_fit, n_trees=cfg.n_trees, seed=attempt_seed
        )
        val_acc = modelsmod.accuracy(model, X_val, y_val)
        test_acc = modelsmod.accuracy(model, X_test, y_test)
        for other, other_val, other_test in pool:
            if (
                abs(val_acc - other_val) <= cfg.val_tol
                and abs(test_acc - other_test) >= cfg.test_gap
            ):
                return (other, other_val, other_test), (model, val_acc, test_acc)
        pool.append((model, val_acc, test_acc))
    raise PairSearchTimeout(
        f"no qualifying pair within {cfg.max_attempts} training attempts"
    )


def model_selection_experiment(
    corpus: LabeledCorpus,
    n_pairs: int = 100,
    B_values: Sequence[int] = (5, 10, 15, 20, 25, 30),
    pick: str = "submodular",
    explainer: str = "surrogate",
    seed: int = 0,
    pair_config: PairSearchConfig | None = None,
    noisy_spec: NoisyFeatureSpec | None = None,
    k: int = 10,
    n_samples: int = 500,
    pool_size: int = 60,
    test_frac: float = 0.2,
) -> ExperimentReport:
    """Accuracy of explanation-guided selection of the better classifier.

    Per pair: inject the synthetic noisy features, find two forests with
    matching validation but differing test accuracy, show a simulated user
    B picked explanations per classifier, mark the synthetic features seen,
    count validation predictions the oracle distrusts under those marks, and
    choose the classifier with fewer.  Correct means the chosen forest has
    the higher test accuracy.
    """
    if pick not in ("submodular", "random"):
        raise ConfigError(f"unknown pick method {pick!r}")
    if explainer not in ("surrogate", "greedy"):
        raise ConfigError("model selection supports surrogate or greedy explainers")
    pair_config = pair_config or PairSearchConfig.desk()
    noisy_spec = noisy_spec or NoisyFeatureSpec()
    B_values = sorted(B_values)
    B_max = B_values[-1]
    correct: dict[int, list[float]] = {B: [] for B in B_values}
    rows = []
    for r in range(n_pairs):
        rng = np.random.default_rng(derive_seed(seed, r, 0))
        trainval, test = datamod.split(corpus, 1.0 - test_frac, derive_seed(seed, r, 1))
        train, val = datamod.split(trainval, 0.8, derive_seed(seed, r, 2))
        train, val, test = datamod.inject_noisy_features(
            train, val, test, noisy_spec, derive_seed(seed, r, 3)
        )
        vocab = train.vocabulary()
        noisy_ids = {
            vocab.index[t] for t in noisy_spec.feature_tokens if t in vocab.index
        }
        X_train, y_train = modelsmod.corpus_matrix(train, vocab)
        X_val, y_val = modelsmod.corpus_matrix(val, vocab)
        X_test, y_test = modelsmod.corpus_matrix(test, vocab)
        first, second = _find_pair(
            X_train, y_train, X_val, y_val, X_test, y_test,
            pair_config, derive_seed(seed, r, 4),
        )
        pair = [first, second]
        if rng.random() < 0.5:  # randomize slots so ties carry no bias
            pair.reverse()
        pool_idx = [i for i in range(len(val.docs)) if X_val[i].sum() > 0]
        if len(pool_idx) > pool_size:
            pool_idx = sorted(
                rng.choice(pool_idx, size=pool_size, replace=False).tolist()
            )
        marked_by_B = []
        for c, (model, _va, _ta) in enumerate(pair):
            explanations = []
            for i, idx in enumerate(pool_idx):
                doc = val.docs[idx]
                if explainer == "surrogate":
                    exp = explain_instance(
                        model, doc, vocab, k=k, n=n_samples,
                        seed=derive_seed(seed, r, 5, c, i),
                    )
                else:
                    feats = greedy_explain(model, doc, vocab, k=k)
                    exp = Explanation(
                        instance_id=doc.id, target_class=0, intercept=0.0,
                        fidelity=0.0,
                        features=[(j, vocab.lookup(j), 1.0) for j in feats],
                    )
                explanations.append(exp)
            if pick == "submodular":
                mat = build_matrix(explanations, vocab.size)
                order = submodular_pick(mat.W, mat.importance, B_max).selected
            else:
                order = rng.permutation(len(explanations)).tolist()
            marked: dict[int, set[int]] = {}
            seen: set[int] = set()
            for rank, row in enumerate(order):
                seen |= set(explanations[row].feature_ids) & noisy_ids
                if rank + 1 in B_values:
                    marked[rank + 1] = set(seen)
            for B in B_values:  # budgets past the pool reuse the full view
                if B not in marked:
                    marked[B] = set(seen)
            marked_by_B.append(marked)
        for B in B_values:
            untrusted = []
            for c, (model, _va, _ta) in enumerate(pair):
                ids = sorted(marked_by_B[c][B])
                masked = X_val.copy()
                if ids:
                    masked[:, ids] = 0.0
                full = model.predict_matrix(X_val) >= 0.5
                red = model.predict_matrix(masked) >= 0.5
                untrusted.append(int(np.sum(full != red)))
            if untrusted[0] == untrusted[1]:
                chosen = int(rng.integers(0, 2))
            else:
                chosen = int(np.argmin(untrusted))
            better = int(np.argmax([pair[0][2], pair[1][2]]))
            correct[B].append(1.0 if chosen == better else 0.0)
            rows.append(
                {
                    "pair": r,
                    "B": B,
                    "correct": chosen == better,
                    "untrusted": untrusted,
                    "test_accs": [pair[0][2], pair[1][2]],
                }
            )
    metrics = {}
    for B in B_values:
        mean, stderr = _mean_stderr(correct[B])
        metrics[str(B)] = {"accuracy": mean, "stderr": stderr}
    return ExperimentReport(
        kind="model_selection",
        metrics=metrics,
        per_run=rows,
        config={
            "n_pairs": n_pairs,
            "B_values": list(B_values),
            "pick": pick,
            "explainer": explainer,
            "k": k,
            "n_samples": n_samples,
            "pool_size": pool_size,
            "test_frac": test_frac,
            "subsample": pair_config.subsample,
            "val_tol": pair_config.val_tol,
            "test_gap": pair_config.test_gap,
            "max_attempts": pair_config.max_attempts,
            "n_trees": pair_config.n_trees,
        },
        seed=seed,
        n_runs=n_pairs,
    )
