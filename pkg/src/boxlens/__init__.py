"""boxlens: sparse local surrogate explanations for black-box text
classifiers, representative-example selection, and the simulated-user
experiment suite built on top of them."""

from .data import ClassSignal, LabeledCorpus, load_jsonl, split, synth_corpus
from .explain import (
    Explanation,
    KernelConfig,
    explain_instance,
    greedy_explain,
    random_explain,
)
from .models import ModelSpec, train_from_spec
from .pick import build_matrix, submodular_pick

__version__ = "0.1.0"

__all__ = [
    "ClassSignal",
    "Explanation",
    "KernelConfig",
    "LabeledCorpus",
    "ModelSpec",
    "build_matrix",
    "explain_instance",
    "greedy_explain",
    "load_jsonl",
    "random_explain",
    "split",
    "submodular_pick",
    "synth_corpus",
    "train_from_spec",
    "__version__",
]
