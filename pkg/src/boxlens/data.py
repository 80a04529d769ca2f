"""Corpora: JSONL loading, stratified splits, synthetic generation,
noisy-feature injection and untrustworthy-feature designation."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    CollisionError,
    ConfigError,
    ParseError,
    RangeError,
    SchemaError,
    StratificationError,
)
from .textrepr import Document, Vocabulary, tokenize


@dataclass
class LabeledCorpus:
    """A named list of labeled documents."""

    docs: list[Document]
    name: str = "corpus"
    split_seed: int = 0

    def __len__(self) -> int:
        return len(self.docs)

    def labels(self) -> np.ndarray:
        return np.asarray([d.label for d in self.docs], dtype=int)

    def vocabulary(self) -> Vocabulary:
        return Vocabulary.from_corpus(d.text for d in self.docs)


@dataclass(frozen=True)
class NoisyFeatureSpec:
    """Synthetic tokens injected at class-dependent rates."""

    feature_tokens: tuple[str, ...] = tuple(f"artifact{i}token" for i in range(10))
    train_rates: tuple[float, float] = (0.10, 0.20)
    test_rate: float = 0.10


@dataclass(frozen=True)
class UntrustworthySet:
    """Columns a simulated user refuses to rely on."""

    feature_ids: frozenset[int]
    fraction: float
    seed: int


def load_jsonl(path) -> LabeledCorpus:
    """Read one {"text": ..., "label": 0|1} object per line."""
    docs = []
    with open(path, "r", encoding="utf-8") as fh:
        for k, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON: {e.msg}", k) from e
            if not isinstance(obj, dict):
                raise SchemaError("line is not an object", k)
            text = obj.get("text")
            label = obj.get("label")
            if not isinstance(text, str):
                raise SchemaError("missing or non-string 'text'", k)
            if not isinstance(label, int) or isinstance(label, bool) or label not in (0, 1):
                raise SchemaError("label out of range", k)
            docs.append(Document(id=f"line-{k}", text=text, label=label))
    return LabeledCorpus(docs=docs, name=str(path))


def split(
    corpus: LabeledCorpus, train_frac: float, seed: int
) -> tuple[LabeledCorpus, LabeledCorpus]:
    """Deterministic stratified shuffle split into (train, test)."""
    if not 0.0 < train_frac < 1.0:
        raise RangeError("train_frac must lie in (0, 1)")
    labels = corpus.labels()
    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for cls in (0, 1):
        members = np.flatnonzero(labels == cls)
        if members.size == 0:
            raise StratificationError(f"class {cls} has no documents")
        members = members[rng.permutation(members.size)]
        n_train = int(round(train_frac * members.size))
        train_idx.extend(members[:n_train].tolist())
        test_idx.extend(members[n_train:].tolist())
    train_idx.sort()
    test_idx.sort()
    train = LabeledCorpus(
        docs=[corpus.docs[i] for i in train_idx],
        name=f"{corpus.name}-train",
        split_seed=seed,
    )
    test = LabeledCorpus(
        docs=[corpus.docs[i] for i in test_idx],
        name=f"{corpus.name}-test",
        split_seed=seed,
    )
    return train, test


def _append_token(doc: Document, token: str) -> Document:
    new = Document(id=doc.id, text=f"{doc.text} {token}", label=doc.label)
    return new


def _inject_one(
    corpus: LabeledCorpus,
    token: str,
    rate_by_class: dict[int, float],
    rng: np.random.Generator,
) -> LabeledCorpus:
    labels = corpus.labels()
    docs = list(corpus.docs)
    for cls, rate in rate_by_class.items():
        members = np.flatnonzero(labels == cls)
        n_hit = int(round(rate * members.size))
        chosen = rng.choice(members, size=n_hit, replace=False) if n_hit else []
        for i in chosen:
            docs[i] = _append_token(docs[i], token)
    return replace(corpus, docs=docs)


def inject_noisy_features(
    train: LabeledCorpus,
    val: LabeledCorpus,
    test: LabeledCorpus,
    spec: NoisyFeatureSpec,
    seed: int,
) -> tuple[LabeledCorpus, LabeledCorpus, LabeledCorpus]:
    """Append each synthetic token to class-dependent fractions of the corpora.

    Train and val get the asymmetric rates; test gets the symmetric rate.
    Hit sets are exact counts (round(rate * n_class)), not Bernoulli draws.
    """
    natural = set()
    for corpus in (train, val, test):
        for doc in corpus.docs:
            natural.update(doc.counts)
    for token in spec.feature_tokens:
        if token in natural:
            raise CollisionError(f"token {token!r} occurs in the natural vocabulary")
    rng = np.random.default_rng(seed)
    r0, r1 = spec.train_rates
    for token in spec.feature_tokens:
        train = _inject_one(train, token, {0: r0, 1: r1}, rng)
        val = _inject_one(val, token, {0: r0, 1: r1}, rng)
        test = _inject_one(test, token, {0: spec.test_rate, 1: spec.test_rate}, rng)
    return train, val, test


def pick_untrustworthy(
    vocab: Vocabulary, fraction: float, seed: int
) -> UntrustworthySet:
    """Uniform random feature subset of size round(fraction * d')."""
    if not 0.0 < fraction < 1.0:
        raise RangeError("fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    size = int(round(fraction * vocab.size))
    ids = rng.choice(vocab.size, size=size, replace=False)
    return UntrustworthySet(
        feature_ids=frozenset(int(i) for i in ids), fraction=fraction, seed=seed
    )


@dataclass(frozen=True)
class ClassSignal:
    """Tokens whose presence probability differs between the two classes.

    presence[token] = (p_class0, p_class1)
    """

    presence: dict[str, tuple[float, float]] = field(default_factory=dict)

    @classmethod
    def planted(
        cls, n_tokens: int, p_class0: float, p_class1: float, prefix: str = "signal"
    ) -> "ClassSignal":
        return cls(
            presence={
                f"{prefix}{i}word": (p_class0, p_class1) for i in range(n_tokens)
            }
        )

    @property
    def tokens(self) -> list[str]:
        return list(self.presence)


def synth_corpus(
    n_docs: int,
    vocab_size: int,
    sparsity: float,
    class_signal: ClassSignal,
    seed: int,
    name: str = "synth",
) -> LabeledCorpus:
    """Balanced synthetic review-like corpus of 20-60 token documents.

    Background tokens are drawn from a Zipf-tilted distribution over a
    generated vocabulary; signal tokens are added with class-conditional
    presence probabilities.  `sparsity` scales how concentrated the
    background distribution is (0 = uniform, 1 = strongly tilted).
    """
    if n_docs < 10:
        raise ConfigError("n_docs must be at least 10")
    signal_tokens = class_signal.tokens
    if vocab_size < len(signal_tokens):
        raise ConfigError("vocab_size smaller than the number of signal tokens")
    n_background = vocab_size - len(signal_tokens)
    background = [f"w{i:04d}" for i in range(n_background)]
    for tok in signal_tokens:
        if tok in background:
            raise ConfigError(f"signal token {tok!r} collides with background")
    rng = np.random.default_rng(seed)
    ranks = np.arange(1, n_background + 1, dtype=float)
    weights = ranks ** (-max(0.0, min(1.0, sparsity)))
    weights /= weights.sum()
    labels = np.zeros(n_docs, dtype=int)
    labels[n_docs // 2 :] = 1
    labels = labels[rng.permutation(n_docs)]
    docs = []
    for i in range(n_docs):
        length = int(rng.integers(20, 61))
        words = list(rng.choice(background, size=length, p=weights))
        for tok, (p0, p1) in class_signal.presence.items():
            p = p1 if labels[i] == 1 else p0
            if rng.random() < p:
                pos = int(rng.integers(0, len(words) + 1))
                words.insert(pos, tok)
        docs.append(
            Document(id=f"{name}-{i}", text=" ".join(words), label=int(labels[i]))
        )
    return LabeledCorpus(docs=docs, name=name, split_seed=seed)
