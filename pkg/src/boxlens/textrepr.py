"""Text representations: tokens, vocabularies, presence vectors, perturbations.

The interpretable space for a document is a binary presence vector over the
vocabulary.  Classifiers see token counts; explanations see presence bits.
All sampling here is a pure function of its seed.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import DegenerateInstance, UndefinedDistance

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split into maximal alphanumeric runs, order preserved."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Vocabulary:
    """Ordered token list with a token -> column id mapping."""

    tokens: tuple[str, ...]
    index: dict[str, int] = field(compare=False)

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "Vocabulary":
        """Build from unique tokens in sorted order."""
        uniq = tuple(sorted(set(tokens)))
        return cls(tokens=uniq, index={t: j for j, t in enumerate(uniq)})

    @classmethod
    def from_corpus(cls, texts: Iterable[str]) -> "Vocabulary":
        seen: set[str] = set()
        for text in texts:
            seen.update(tokenize(text))
        return cls.from_tokens(seen)

    @property
    def size(self) -> int:
        return len(self.tokens)

    def lookup(self, column: int) -> str:
        return self.tokens[column]

    def content_hash(self) -> str:
        import hashlib

        h = hashlib.sha256("\x00".join(self.tokens).encode("utf-8"))
        return h.hexdigest()


@dataclass
class Document:
    """A raw text with a stable id, optional binary label and token counts."""

    id: str
    text: str
    label: Optional[int] = None
    counts: Counter = field(default_factory=Counter)

    def __post_init__(self):
        if not self.counts:
            self.counts = Counter(tokenize(self.text))


@dataclass(frozen=True)
class InterpretableVector:
    """Binary presence vector over the vocabulary."""

    bits: np.ndarray  # uint8, length d'

    @classmethod
    def from_support(cls, dim: int, support: Iterable[int]) -> "InterpretableVector":
        bits = np.zeros(dim, dtype=np.uint8)
        ids = list(support)
        if ids:
            bits[np.asarray(ids, dtype=int)] = 1
        return cls(bits=bits)

    @property
    def support(self) -> np.ndarray:
        """Sorted active column ids."""
        return np.flatnonzero(self.bits)

    @property
    def dim(self) -> int:
        return int(self.bits.shape[0])

    def __eq__(self, other) -> bool:
        return isinstance(other, InterpretableVector) and np.array_equal(
            self.bits, other.bits
        )

    def __hash__(self):
        return hash(self.bits.tobytes())


@dataclass(frozen=True)
class PerturbedSample:
    """One row of the surrogate-fitting dataset."""

    zprime: InterpretableVector
    label: float  # black-box probability on the masked document
    weight: float  # locality kernel value, in (0, 1]
    distance: float  # cosine distance to the anchor


def vectorize(doc: Document, vocab: Vocabulary) -> InterpretableVector:
    """Presence vector of the document; out-of-vocabulary tokens are dropped."""
    bits = np.zeros(vocab.size, dtype=np.uint8)
    for token in doc.counts:
        j = vocab.index.get(token)
        if j is not None:
            bits[j] = 1
    return InterpretableVector(bits=bits)


def count_vector(doc: Document, vocab: Vocabulary) -> np.ndarray:
    """Token-count vector of the document over the vocabulary (float64)."""
    counts = np.zeros(vocab.size, dtype=np.float64)
    for token, c in doc.counts.items():
        j = vocab.index.get(token)
        if j is not None:
            counts[j] = c
    return counts


def sample_keep_matrix(m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Boolean (n x m) matrix of kept support positions.

    Row 0 keeps everything (the unperturbed anchor).  For each later row,
    the kept count k is Uniform{1..m} and the k positions are chosen
    uniformly without replacement.
    """
    if m < 1:
        raise DegenerateInstance("instance has no active features")
    keep = np.ones((n, m), dtype=bool)
    if n > 1:
        rest = n - 1
        k = rng.integers(1, m + 1, size=rest)
        # rank positions by random keys; keep the k smallest per row
        keys = rng.random((rest, m))
        ranks = np.argsort(np.argsort(keys, axis=1), axis=1)
        keep[1:] = ranks < k[:, None]
    return keep


def sample_perturbations(
    xprime: InterpretableVector, n: int, rng_seed: int
) -> list[InterpretableVector]:
    """Draw n local perturbations of xprime; sample 0 is xprime itself."""
    support = xprime.support
    m = support.size
    if m == 0:
        raise DegenerateInstance("instance has no active features")
    rng = np.random.default_rng(rng_seed)
    keep = sample_keep_matrix(m, n, rng)
    out = []
    for row in keep:
        bits = np.zeros(xprime.dim, dtype=np.uint8)
        bits[support[row]] = 1
        out.append(InterpretableVector(bits=bits))
    return out


def cosine_distance(a: InterpretableVector, b: InterpretableVector) -> float:
    """1 - cos(a, b) on binary vectors; 0 iff equal supports, 1 if disjoint."""
    na = float(np.count_nonzero(a.bits))
    nb = float(np.count_nonzero(b.bits))
    if na == 0.0 and nb == 0.0:
        raise UndefinedDistance("cosine distance undefined for two zero vectors")
    if na == 0.0 or nb == 0.0:
        return 1.0
    dot = float(np.count_nonzero(a.bits & b.bits))
    return 1.0 - dot / np.sqrt(na * nb)


def mask_counts(
    doc: Document, keep: InterpretableVector, vocab: Vocabulary
) -> np.ndarray:
    """Count vector with all vocabulary words outside `keep` zeroed out."""
    counts = count_vector(doc, vocab)
    counts[keep.bits == 0] = 0.0
    return counts
