"""HTTP service: datasets, model training, explanations, picks, and
persistent feature-engineering sessions.

Everything is persisted as one JSON document per object under the data
directory (atomic write-then-rename).  Restarting the service and reloading
the store reproduces identical API responses.
"""
from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import data as datamod
from . import models as modelsmod
from .data import LabeledCorpus
from .errors import BoxlensError, DegenerateInstance
from .evalsuite import derive_seed
from .explain import KernelConfig, explain_instance
from .models import ModelSpec
from .pick import build_matrix, submodular_pick
from .textrepr import Document, Vocabulary, count_vector, tokenize

DEFAULT_POOL_CAP = 40


def _atomic_write_json(path: Path, payload: dict) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
    os.replace(tmp, path)


@dataclass
class ServiceConfig:
    data_dir: Path
    default_k: int = 10
    default_n: int = 2000
    sigma: float = 0.25
    master_seed: int = 0
    pool_cap: int = DEFAULT_POOL_CAP


@dataclass
class DatasetEntry:
    corpus: LabeledCorpus
    vocab: Vocabulary


@dataclass
class ModelEntry:
    model_id: str
    dataset: str
    spec: ModelSpec
    model: modelsmod.ProbabilityModel
    metrics: dict
    weights_hash: str


@dataclass
class SessionState:
    session_id: str
    dataset: str
    model_spec: ModelSpec
    B: int
    k: int
    seed: int
    created_at: float
    rounds: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock, compare=False)

    def to_json(self) -> dict:
        return {
            "id": self.session_id,
            "dataset": self.dataset,
            "model_spec": {
                "kind": self.model_spec.kind,
                "params": self.model_spec.params,
                "seed": self.model_spec.seed,
            },
            "B": self.B,
            "k": self.k,
            "seed": self.seed,
            "created_at": self.created_at,
            "rounds": self.rounds,
        }


class Store:
    """In-memory registry backed by JSON documents on disk."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.datasets: dict[str, DatasetEntry] = {}
        self.models: dict[str, ModelEntry] = {}
        self.sessions: dict[str, SessionState] = {}
        self._session_counter = 0
        for sub in ("datasets", "models", "sessions"):
            (config.data_dir / sub).mkdir(parents=True, exist_ok=True)
        self._load()

    # -- datasets ----------------------------------------------------
    def register_corpus(self, corpus: LabeledCorpus, persist: bool = True) -> None:
        vocab = corpus.vocabulary()
        self.datasets[corpus.name] = DatasetEntry(corpus=corpus, vocab=vocab)
        if persist:
            path = self.config.data_dir / "datasets" / f"{corpus.name}.jsonl"
            tmp = path.with_suffix(".jsonl.tmp")
            with open(tmp, "w", encoding="utf-8") as fh:
                for doc in corpus.docs:
                    fh.write(
                        json.dumps(
                            {"id": doc.id, "text": doc.text, "label": doc.label}
                        )
                        + "\n"
                    )
            os.replace(tmp, path)

    # -- persistence -------------------------------------------------
    def _load(self) -> None:
        for path in sorted((self.config.data_dir / "datasets").glob("*.jsonl")):
            corpus = datamod.load_jsonl(path)
            corpus.name = path.stem
            # restore the original document ids persisted alongside the text
            with open(path, "r", encoding="utf-8") as fh:
                ids = [
                    json.loads(line).get("id")
                    for line in fh
                    if line.strip()
                ]
            for doc, saved_id in zip(corpus.docs, ids):
                if isinstance(saved_id, str):
                    doc.id = saved_id
            self.register_corpus(corpus, persist=False)
        for path in sorted((self.config.data_dir / "models").glob("*.json")):
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
            entry = ModelEntry(
                model_id=doc["model_id"],
                dataset=doc["dataset"],
                spec=ModelSpec(**doc["spec"]),
                model=modelsmod.model_from_doc(doc["model"]),
                metrics=doc["metrics"],
                weights_hash=doc["weights_hash"],
            )
            self.models[entry.model_id] = entry
        for path in sorted((self.config.data_dir / "sessions").glob("*.json")):
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
            state = SessionState(
                session_id=doc["id"],
                dataset=doc["dataset"],
                model_spec=ModelSpec(
                    kind=doc["model_spec"]["kind"],
                    params=doc["model_spec"]["params"],
                    seed=doc["model_spec"]["seed"],
                ),
                B=doc["B"],
                k=doc["k"],
                seed=doc["seed"],
                created_at=doc["created_at"],
                rounds=doc["rounds"],
            )
            self.sessions[state.session_id] = state
            num = int(state.session_id.split("-")[-1])
            self._session_counter = max(self._session_counter, num + 1)

    def save_model(self, entry: ModelEntry, vocab_hash: str) -> None:
        doc = {
            "model_id": entry.model_id,
            "dataset": entry.dataset,
            "spec": {
                "kind": entry.spec.kind,
                "params": entry.spec.params,
                "seed": entry.spec.seed,
            },
            "model": modelsmod.model_to_doc(entry.model, vocab_hash),
            "metrics": entry.metrics,
            "weights_hash": entry.weights_hash,
        }
        _atomic_write_json(
            self.config.data_dir / "models" / f"{entry.model_id}.json", doc
        )

    def save_session(self, state: SessionState) -> None:
        _atomic_write_json(
            self.config.data_dir / "sessions" / f"{state.session_id}.json",
            state.to_json(),
        )

    def next_session_id(self) -> str:
        sid = f"sess-{self._session_counter}"
        self._session_counter += 1
        return sid


# -- request bodies --------------------------------------------------


class TrainRequest(BaseModel):
    dataset: str
    kind: str
    params: dict = {}
    seed: int = 0


class ExplainRequest(BaseModel):
    instance_index: Optional[int] = None
    text: Optional[str] = None
    k: Optional[int] = None
    n: Optional[int] = None
    sigma: Optional[float] = None
    seed: int = 0


class PickRequest(BaseModel):
    instance_indices: list[int]
    B: int
    k: Optional[int] = None
    n: Optional[int] = None
    seed: int = 0


class SessionRequest(BaseModel):
    dataset: str
    model_spec: dict
    B: int = 10
    k: int = 10
    seed: int = 0


class RoundRequest(BaseModel):
    remove_words: list[str]


def _weights_hash(model: modelsmod.ProbabilityModel) -> str:
    doc = modelsmod.model_to_doc(model)
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True).encode("utf-8")
    ).hexdigest()[:16]


def create_app(
    data_dir: str | Path,
    default_k: int = 10,
    default_n: int = 2000,
    sigma: float = 0.25,
    master_seed: int = 0,
    pool_cap: int = DEFAULT_POOL_CAP,
) -> FastAPI:
    config = ServiceConfig(
        data_dir=Path(data_dir),
        default_k=default_k,
        default_n=default_n,
        sigma=sigma,
        master_seed=master_seed,
        pool_cap=pool_cap,
    )
    store = Store(config)
    app = FastAPI(title="boxlens")
    app.state.store = store
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def _dataset(name: str) -> DatasetEntry:
        entry = store.datasets.get(name)
        if entry is None:
            raise HTTPException(404, f"unknown dataset {name!r}")
        return entry

    def _model(model_id: str) -> ModelEntry:
        entry = store.models.get(model_id)
        if entry is None:
            raise HTTPException(404, f"unknown model {model_id!r}")
        return entry

    def _train_model(dataset: str, spec: ModelSpec) -> ModelEntry:
        ds = _dataset(dataset)
        train, heldout = datamod.split(
            ds.corpus, 0.8, derive_seed(config.master_seed, spec.seed)
        )
        X, y = modelsmod.corpus_matrix(train, ds.vocab)
        Xh, yh = modelsmod.corpus_matrix(heldout, ds.vocab)
        try:
            model = modelsmod.train_from_spec(spec, X, y)
        except BoxlensError as e:
            raise HTTPException(422, str(e)) from e
        metrics = {
            "train_acc": modelsmod.accuracy(model, X, y),
            "heldout_acc": modelsmod.accuracy(model, Xh, yh),
        }
        key = json.dumps(
            [dataset, spec.kind, spec.params, spec.seed], sort_keys=True
        )
        model_id = "m-" + hashlib.sha256(key.encode("utf-8")).hexdigest()[:12]
        entry = ModelEntry(
            model_id=model_id,
            dataset=dataset,
            spec=spec,
            model=model,
            metrics=metrics,
            weights_hash=_weights_hash(model),
        )
        store.models[model_id] = entry
        store.save_model(entry, ds.vocab.content_hash())
        return entry

    def _explain_one(entry: ModelEntry, doc: Document, k, n, sigma_val, seed):
        ds = _dataset(entry.dataset)
        cfg = KernelConfig(sigma=sigma_val if sigma_val else config.sigma)
        try:
            return explain_instance(
                entry.model, doc, ds.vocab,
                k=k or config.default_k,
                n=n or config.default_n,
                cfg=cfg, seed=seed,
            )
        except DegenerateInstance as e:
            raise HTTPException(422, str(e)) from e

    @app.get("/api/datasets")
    def list_datasets():
        return [
            {
                "name": name,
                "n_docs": len(entry.corpus.docs),
                "d_prime": entry.vocab.size,
            }
            for name, entry in sorted(store.datasets.items())
        ]

    @app.post("/api/models")
    def train_model(req: TrainRequest):
        if req.kind not in (
            "logreg", "sparse_logreg", "decision_tree", "knn", "random_forest"
        ):
            raise HTTPException(422, f"unknown model kind {req.kind!r}")
        entry = _train_model(
            req.dataset, ModelSpec(kind=req.kind, params=req.params, seed=req.seed)
        )
        return {
            "model_id": entry.model_id,
            "metrics": entry.metrics,
            "weights_hash": entry.weights_hash,
        }

    @app.post("/api/models/{model_id}/explain")
    def explain_endpoint(model_id: str, req: ExplainRequest):
        entry = _model(model_id)
        ds = _dataset(entry.dataset)
        if req.text is not None:
            doc = Document(id="adhoc", text=req.text)
            if not any(t in ds.vocab.index for t in tokenize(req.text)):
                raise HTTPException(422, "text has no in-vocabulary token")
        elif req.instance_index is not None:
            if not 0 <= req.instance_index < len(ds.corpus.docs):
                raise HTTPException(404, "instance index out of range")
            doc = ds.corpus.docs[req.instance_index]
        else:
            raise HTTPException(422, "provide instance_index or text")
        exp = _explain_one(entry, doc, req.k, req.n, req.sigma, req.seed)
        return exp.to_json()

    @app.post("/api/models/{model_id}/pick")
    def pick_endpoint(model_id: str, req: PickRequest):
        entry = _model(model_id)
        ds = _dataset(entry.dataset)
        if not req.instance_indices:
            raise HTTPException(422, "instance list is empty")
        if req.B < 1:
            raise HTTPException(422, "B must be at least 1")
        explanations = []
        for i, idx in enumerate(req.instance_indices):
            if not 0 <= idx < len(ds.corpus.docs):
                raise HTTPException(404, f"instance index {idx} out of range")
            doc = ds.corpus.docs[idx]
            explanations.append(
                _explain_one(
                    entry, doc, req.k, req.n, None,
                    derive_seed(req.seed, i),
                )
            )
        mat = build_matrix(explanations, ds.vocab.size)
        result = submodular_pick(mat.W, mat.importance, req.B)
        return {
            "selected": [req.instance_indices[i] for i in result.selected],
            "coverage_trace": result.coverage_trace,
            "explanations": [
                explanations[i].to_json() for i in result.selected
            ],
        }

    def _compute_round(state: SessionState, removed_words: set[str]) -> dict:
        ds = _dataset(state.dataset)
        unknown = [w for w in removed_words if w not in ds.vocab.index]
        if unknown:
            raise HTTPException(422, f"unknown words: {sorted(unknown)[:5]}")
        train, heldout = datamod.split(
            ds.corpus, 0.8, derive_seed(state.seed, 0)
        )
        X, y = modelsmod.corpus_matrix(train, ds.vocab)
        Xh, yh = modelsmod.corpus_matrix(heldout, ds.vocab)
        try:
            model = modelsmod.retrain_without(
                state.model_spec, removed_words, X, y, ds.vocab
            )
        except BoxlensError as e:
            raise HTTPException(422, str(e)) from e
        index = len(state.rounds)
        metrics = {
            "train_acc": modelsmod.accuracy(model, X, y),
            "heldout_acc": modelsmod.accuracy(model, Xh, yh),
        }
        pool = [
            d for d in heldout.docs
            if any(
                t in ds.vocab.index and t not in removed_words
                for t in d.counts
            )
        ][: config.pool_cap]
        explanations = []
        for i, doc in enumerate(pool):
            explanations.append(
                explain_instance(
                    model, doc, ds.vocab,
                    k=state.k, n=config.default_n,
                    cfg=KernelConfig(sigma=config.sigma),
                    seed=derive_seed(state.seed, 1, i),
                )
            )
        mat = build_matrix(explanations, ds.vocab.size)
        result = submodular_pick(mat.W, mat.importance, state.B)
        round_doc = {
            "index": index,
            "removed_words_cumulative": sorted(removed_words),
            "model_version": f"{state.session_id}-r{index}",
            "metrics": metrics,
            "picked": [explanations[i].to_json() for i in result.selected],
            "coverage_trace": result.coverage_trace,
        }
        return round_doc

    @app.post("/api/sessions")
    def create_session(req: SessionRequest):
        _dataset(req.dataset)
        kind = req.model_spec.get("kind")
        if kind not in (
            "logreg", "sparse_logreg", "decision_tree", "knn", "random_forest"
        ):
            raise HTTPException(422, f"unknown model kind {kind!r}")
        spec = ModelSpec(
            kind=kind,
            params=req.model_spec.get("params", {}),
            seed=req.model_spec.get("seed", 0),
        )
        state = SessionState(
            session_id=store.next_session_id(),
            dataset=req.dataset,
            model_spec=spec,
            B=req.B,
            k=req.k,
            seed=derive_seed(config.master_seed, req.seed),
            created_at=time.time(),
        )
        state.rounds.append(_compute_round(state, set()))
        store.sessions[state.session_id] = state
        store.save_session(state)
        return state.to_json()

    def _session(session_id: str) -> SessionState:
        state = store.sessions.get(session_id)
        if state is None:
            raise HTTPException(404, f"unknown session {session_id!r}")
        return state

    @app.post("/api/sessions/{session_id}/rounds")
    def post_round(session_id: str, req: RoundRequest):
        state = _session(session_id)
        if not state.lock.acquire(blocking=False):
            raise HTTPException(409, "a retrain for this session is in flight")
        try:
            previous = set(state.rounds[-1]["removed_words_cumulative"])
            removed = previous | set(req.remove_words)
            round_doc = _compute_round(state, removed)
            state.rounds.append(round_doc)
            store.save_session(state)
            return round_doc
        finally:
            state.lock.release()

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        return _session(session_id).to_json()

    return app
