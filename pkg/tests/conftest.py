"""Shared fixtures: small corpora and trained models reused across tests."""
import numpy as np
import pytest

from boxlens import data as datamod
from boxlens import models as modelsmod
from boxlens.data import ClassSignal


@pytest.fixture(scope="session")
def strong_corpus():
    """200 docs with a strong two-sided planted signal; fast to train on."""
    signal = ClassSignal(
        presence={
            "aaagood": (0.05, 0.9),
            "bbbgood": (0.05, 0.9),
            "cccbad": (0.9, 0.05),
            "dddbad": (0.9, 0.05),
        }
    )
    return datamod.synth_corpus(200, 60, 0.5, signal, seed=11, name="strong")


@pytest.fixture(scope="session")
def strong_split(strong_corpus):
    return datamod.split(strong_corpus, 0.8, 3)


@pytest.fixture(scope="session")
def strong_model(strong_split):
    """L2 logistic regression trained on the strong-signal corpus."""
    train, _test = strong_split
    vocab = train.vocabulary()
    X, y = modelsmod.corpus_matrix(train, vocab)
    model = modelsmod.train_logreg_l2(X, y, seed=0)
    return model, vocab, train


class ConstantModel(modelsmod.ProbabilityModel):
    """f(x) = c for every input; handy analytic black box."""

    kind = "constant"

    def __init__(self, c: float, feature_dim: int = 0):
        super().__init__(feature_dim=feature_dim, metadata={"kind": "constant"})
        self.c = float(c)

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        return np.full(np.asarray(X).shape[0], self.c)


@pytest.fixture
def constant_model():
    return ConstantModel
