"""Command-line front door: train, explain, pick, run experiments, serve."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import data as datamod
from . import evalsuite, models as modelsmod
from .data import ClassSignal, LabeledCorpus
from .errors import BoxlensError
from .explain import KernelConfig, explain_instance
from .models import ModelSpec
from .pick import build_matrix, submodular_pick

log = logging.getLogger("boxlens")

MODEL_KINDS = ("logreg", "sparse_logreg", "decision_tree", "knn", "random_forest")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boxlens",
        description="Explain black-box text classifiers with sparse local "
        "surrogates; select representative explanations; run the "
        "simulated-user experiment suite.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--dataset", help="path to a JSONL dataset")
        p.add_argument("--k", type=int, default=10, help="max features per explanation")
        p.add_argument(
            "--n-samples", type=int, default=15000,
            help="perturbation samples per explanation (5000 is the fast preset)",
        )
        p.add_argument("--sigma", type=float, default=0.25, help="kernel width")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("synth-data", help="generate a synthetic labeled corpus")
    p.add_argument("--n-docs", type=int, default=1000)
    p.add_argument("--vocab-size", type=int, default=300)
    p.add_argument("--sparsity", type=float, default=0.5)
    p.add_argument("--n-signal", type=int, default=12)
    p.add_argument("--signal-low", type=float, default=0.1)
    p.add_argument("--signal-high", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")

    p = sub.add_parser("train", help="train a built-in classifier")
    common(p)
    p.add_argument("--kind", choices=MODEL_KINDS, default="logreg")

    p = sub.add_parser("explain", help="explain one instance")
    common(p)
    p.add_argument("--kind", choices=MODEL_KINDS, default="logreg")
    p.add_argument("--instance", type=int, default=0, help="test-set index")

    p = sub.add_parser("pick", help="pick representative explanations")
    common(p)
    p.add_argument("--kind", choices=MODEL_KINDS, default="logreg")
    p.add_argument("--budget", type=int, default=10)
    p.add_argument("--pool", type=int, default=40, help="instances to explain")

    p = sub.add_parser("eval-faithfulness", help="gold-feature recall experiment")
    common(p)
    p.add_argument(
        "--model-kind", choices=("sparse_logreg", "decision_tree"),
        default="sparse_logreg",
    )

    p = sub.add_parser("eval-trust", help="trustworthiness F1 experiment")
    common(p)
    p.add_argument("--runs", type=int, default=25)

    p = sub.add_parser("eval-select", help="model-selection experiment")
    common(p)
    p.add_argument("--runs", type=int, default=100, help="classifier pairs")
    p.add_argument("--budget", type=int, nargs="+", default=[5, 10, 15, 20, 25, 30])
    p.add_argument(
        "--thresholds", choices=("desk", "paper"), default="desk",
        help="pair-search gap configuration",
    )

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--listen", default="127.0.0.1:8000")
    p.add_argument("--data-dir", default="boxlens-data")
    p.add_argument("--dataset", action="append", default=[],
                   help="JSONL dataset to register (repeatable)")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--n-samples", type=int, default=2000)
    p.add_argument("--sigma", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _load_corpus(args) -> LabeledCorpus:
    if args.dataset:
        return datamod.load_jsonl(args.dataset)
    return evalsuite.benchmark_corpus(seed=args.seed)


def _prepare(args):
    corpus = _load_corpus(args)
    train, test = datamod.split(corpus, 0.8, args.seed)
    vocab = train.vocabulary()
    X, y = modelsmod.corpus_matrix(train, vocab)
    model = modelsmod.train_from_spec(ModelSpec(kind=args.kind, seed=args.seed), X, y)
    return corpus, train, test, vocab, X, y, model


def _write_json(out_dir: Path, name: str, payload: dict) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
    return path


def _write_csv(out_dir: Path, name: str, rows: list[dict]) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    if rows:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    return path


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    log.info("config: %s", json.dumps(vars(args), default=str, sort_keys=True))
    out_dir = Path(getattr(args, "out", "out"))
    try:
        if args.command == "synth-data":
            signal = ClassSignal.planted(
                args.n_signal, args.signal_low, args.signal_high
            )
            corpus = datamod.synth_corpus(
                args.n_docs, args.vocab_size, args.sparsity, signal, args.seed
            )
            out_dir.mkdir(parents=True, exist_ok=True)
            path = out_dir / "synth.jsonl"
            with open(path, "w", encoding="utf-8") as fh:
                for doc in corpus.docs:
                    fh.write(json.dumps({"text": doc.text, "label": doc.label}) + "\n")
            print(f"synth-data: wrote {len(corpus.docs)} docs to {path}")

        elif args.command == "train":
            _, train, test, vocab, X, y, model = _prepare(args)
            Xt, yt = modelsmod.corpus_matrix(test, vocab)
            metrics = {
                "train_acc": modelsmod.accuracy(model, X, y),
                "test_acc": modelsmod.accuracy(model, Xt, yt),
            }
            path = _write_json(out_dir, "train.json", {
                "kind": args.kind, "seed": args.seed, "metrics": metrics,
            })
            print(
                f"train: {args.kind} test_acc={metrics['test_acc']:.3f} -> {path}"
            )

        elif args.command == "explain":
            _, train, test, vocab, X, y, model = _prepare(args)
            doc = test.docs[args.instance]
            exp = explain_instance(
                model, doc, vocab, k=args.k, n=args.n_samples,
                cfg=KernelConfig(sigma=args.sigma), seed=args.seed,
            )
            path = _write_json(out_dir, "explanation.json", exp.to_json())
            top = ", ".join(f"{t}:{w:+.3f}" for _c, t, w in exp.features[:5])
            print(f"explain: instance {doc.id} fidelity={exp.fidelity:.3f} "
                  f"[{top}] -> {path}")

        elif args.command == "pick":
            _, train, test, vocab, X, y, model = _prepare(args)
            pool = [d for d in test.docs if d.counts][: args.pool]
            exps = [
                explain_instance(
                    model, doc, vocab, k=args.k, n=args.n_samples,
                    cfg=KernelConfig(sigma=args.sigma),
                    seed=evalsuite.derive_seed(args.seed, i),
                )
                for i, doc in enumerate(pool)
            ]
            mat = build_matrix(exps, vocab.size)
            result = submodular_pick(mat.W, mat.importance, args.budget)
            path = _write_json(out_dir, "pick.json", {
                "selected": [exps[i].instance_id for i in result.selected],
                "coverage_trace": result.coverage_trace,
                "explanations": [exps[i].to_json() for i in result.selected],
            })
            print(f"pick: selected {len(result.selected)} of {len(pool)} "
                  f"coverage={result.coverage_trace[-1]:.3f} -> {path}")

        elif args.command == "eval-faithfulness":
            corpus = _load_corpus(args)
            rows = []
            for explainer in evalsuite.EXPLAINERS:
                report = evalsuite.faithfulness_recall(
                    args.model_kind, explainer, corpus,
                    k=args.k, n_samples=args.n_samples, seed=args.seed,
                )
                rows.append({
                    "model_kind": args.model_kind,
                    "explainer": explainer,
                    "mean_recall": report.metrics["mean_recall"],
                    "stderr": report.metrics["stderr"],
                })
            path = _write_csv(out_dir, "faithfulness.csv", rows)
            best = max(rows, key=lambda r: r["mean_recall"])
            print(f"eval-faithfulness: best {best['explainer']} "
                  f"recall={best['mean_recall']:.3f} -> {path}")

        elif args.command == "eval-trust":
            corpus = _load_corpus(args)
            report = evalsuite.trust_f1_experiment(
                corpus=corpus, runs=args.runs, seed=args.seed,
                k=args.k, n_samples=min(args.n_samples, 2000),
            )
            rows = [
                {"cell": cell, **vals} for cell, vals in report.metrics.items()
            ]
            _write_json(out_dir, "trust.json", report.to_json())
            path = _write_csv(out_dir, "trust.csv", rows)
            top = max(rows, key=lambda r: r["f1_mean"])
            print(f"eval-trust: best cell {top['cell']} "
                  f"f1={top['f1_mean']:.3f} -> {path}")

        elif args.command == "eval-select":
            corpus = (
                datamod.load_jsonl(args.dataset)
                if args.dataset
                else evalsuite.selection_corpus()
            )
            cfg = (
                evalsuite.PairSearchConfig.paper()
                if args.thresholds == "paper"
                else evalsuite.PairSearchConfig.desk()
            )
            rows = []
            for pick_method in ("submodular", "random"):
                report = evalsuite.model_selection_experiment(
                    corpus, n_pairs=args.runs, B_values=args.budget,
                    pick=pick_method, seed=args.seed, pair_config=cfg,
                    test_frac=evalsuite.SELECTION_TEST_FRAC,
                )
                for B, vals in report.metrics.items():
                    rows.append({
                        "pick": pick_method, "B": B,
                        "accuracy": vals["accuracy"], "stderr": vals["stderr"],
                    })
            path = _write_csv(out_dir, "selection.csv", rows)
            print(f"eval-select: {len(rows)} (pick, B) cells -> {path}")

        elif args.command == "serve":
            from .service import create_app
            import uvicorn

            app = create_app(
                args.data_dir, default_k=args.k, default_n=args.n_samples,
                sigma=args.sigma, master_seed=args.seed,
            )
            for path in args.dataset:
                corpus = datamod.load_jsonl(path)
                corpus.name = Path(path).stem
                app.state.store.register_corpus(corpus)
            host, _, port = args.listen.partition(":")
            print(f"serve: listening on {args.listen}")
            uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))

        else:  # pragma: no cover - argparse enforces the choices
            parser.error(f"unknown command {args.command!r}")
    except BoxlensError as e:
        log.error("error: %s", e)
        return 1
    except OSError as e:
        log.error("error: %s", e)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
