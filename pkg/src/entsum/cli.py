"""Command-line entry point.

Commands: ``ingest`` validates a manifest, ``filter-vectors`` shrinks a
vector file to a manifest's vocabulary, ``train`` runs cross-validation and
writes checkpoints plus reports, ``evaluate`` re-scores saved checkpoints
(or the frequency oracle), and ``summarize`` prints one entity's summary.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
All randomness funnels through ``--seed``; rerunning a command with the
same inputs and seed reproduces its output files byte for byte.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

from . import evaluation
from .dataset import DatasetManifest, load_manifest
from .embeddings import (
    EmbeddingStore,
    coverage_warnings,
    load_vec_file,
    manifest_vocabulary,
    save_vec_file,
)
from .errors import DataError, NumericError
from .esbm import load_esbm
from .model import (
    ModelConfig,
    load_checkpoint,
    save_checkpoint,
    select_summary,
)
from .training import (
    CrossValReport,
    EarlyStopMetric,
    TrainConfig,
    cross_validate,
    evaluate_fold,
    oracle_reports,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); keep our codes
        raise UsageError(message)


@dataclass
class RunSpec:
    command: str
    manifest_path: Path | None = None
    esbm_root: Path | None = None
    esbm_collection: str = "all"
    vectors_path: Path | None = None
    k: int = 5
    seed: int = 0
    output_dir: Path | None = None
    checkpoint_path: Path | None = None
    checkpoint_dir: Path | None = None
    entity: str | None = None
    max_epochs: int = 50
    lr: float = 0.01
    early_stop: str = "f1"
    parallel_folds: bool = False
    oracle: bool = False
    compare: Path | None = None
    out_path: Path | None = None


def _add_manifest_args(p: argparse.ArgumentParser):
    p.add_argument("--manifest", type=Path, help="JSON manifest path")
    p.add_argument("--esbm", type=Path, help="root of an ESBM-style benchmark tree")
    p.add_argument(
        "--esbm-collection",
        choices=["all", "dbpedia", "lmdb"],
        default="all",
        help="which collection to load from an ESBM tree",
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="entsum", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load and validate a dataset")
    _add_manifest_args(p)
    p.add_argument("--vectors", type=Path, help="optional vector file for coverage warnings")

    p = sub.add_parser("filter-vectors", help="restrict a vector file to a dataset's vocabulary")
    _add_manifest_args(p)
    p.add_argument("--vectors", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="filtered vector file to write")

    p = sub.add_parser("train", help="cross-validate and write checkpoints and reports")
    _add_manifest_args(p)
    p.add_argument("--vectors", type=Path, required=True)
    p.add_argument("--k", type=int, default=5, help="summary size budget (5 or 10 on the benchmark)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--max-epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--early-stop", choices=["f1", "loss"], default="f1")
    p.add_argument("--parallel-folds", action="store_true")

    p = sub.add_parser("evaluate", help="re-evaluate saved checkpoints or the oracle baseline")
    _add_manifest_args(p)
    p.add_argument("--vectors", type=Path)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--checkpoints", type=Path, help="directory with fold<i>.ckpt files")
    p.add_argument("--oracle", action="store_true", help="evaluate the gold-frequency baseline")
    p.add_argument("--out", type=Path, help="output directory for reports")
    p.add_argument(
        "--compare", type=Path,
        help="per-entity TSV of another run; prints a paired significance test",
    )

    p = sub.add_parser("summarize", help="print the top-k triples of one entity")
    _add_manifest_args(p)
    p.add_argument("--vectors", type=Path, required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--entity", required=True, help="IRI of the entity to summarize")
    return parser


def _spec_from_args(args: argparse.Namespace) -> RunSpec:
    return RunSpec(
        command=args.command,
        manifest_path=getattr(args, "manifest", None),
        esbm_root=getattr(args, "esbm", None),
        esbm_collection=getattr(args, "esbm_collection", "all"),
        vectors_path=getattr(args, "vectors", None),
        k=getattr(args, "k", 5),
        seed=getattr(args, "seed", 0),
        output_dir=getattr(args, "out", None) if args.command in ("train", "evaluate") else None,
        checkpoint_path=getattr(args, "checkpoint", None),
        checkpoint_dir=getattr(args, "checkpoints", None),
        entity=getattr(args, "entity", None),
        max_epochs=getattr(args, "max_epochs", 50),
        lr=getattr(args, "lr", 0.01),
        early_stop=getattr(args, "early_stop", "f1"),
        parallel_folds=getattr(args, "parallel_folds", False),
        oracle=getattr(args, "oracle", False),
        compare=getattr(args, "compare", None),
        out_path=getattr(args, "out", None) if args.command == "filter-vectors" else None,
    )


def _load_dataset(spec: RunSpec) -> DatasetManifest:
    if spec.manifest_path is not None and spec.esbm_root is not None:
        raise UsageError("give either --manifest or --esbm, not both")
    if spec.manifest_path is not None:
        return load_manifest(spec.manifest_path)
    if spec.esbm_root is not None:
        return load_esbm(spec.esbm_root, spec.esbm_collection)
    raise UsageError("one of --manifest or --esbm is required")


def _load_store(spec: RunSpec, manifest: DatasetManifest) -> EmbeddingStore:
    if spec.vectors_path is None:
        raise UsageError("--vectors is required for this command")
    return load_vec_file(spec.vectors_path, vocab=manifest_vocabulary(manifest))


def cmd_ingest(spec: RunSpec) -> int:
    manifest = _load_dataset(spec)
    print(
        f"{len(manifest.entities)} entities, {manifest.triple_count} triples, "
        f"{manifest.gold_count} golds"
    )
    print(f"folds: {len(manifest.folds)}")
    if spec.vectors_path is not None:
        store = _load_store(spec, manifest)
        for warning in coverage_warnings(manifest, store):
            print(f"warning: {warning}")
    return EXIT_OK


def cmd_filter_vectors(spec: RunSpec) -> int:
    manifest = _load_dataset(spec)
    vocab = manifest_vocabulary(manifest)
    store = load_vec_file(spec.vectors_path, vocab=vocab)
    save_vec_file(store, spec.out_path)
    print(f"kept {len(store)} of {len(vocab)} vocabulary words -> {spec.out_path}")
    return EXIT_OK


def _write_reports(report_dir: Path, dataset: str, k: int, reports) -> None:
    report_dir.mkdir(parents=True, exist_ok=True)
    evaluation.write_per_entity_tsv(reports, report_dir / "per_entity.tsv")
    evaluation.write_aggregate_json(dataset, k, reports, report_dir / "aggregate.json")


def cmd_train(spec: RunSpec) -> int:
    manifest = _load_dataset(spec)
    store = _load_store(spec, manifest)
    model_cfg = ModelConfig(embed_dim=store.dim, seed=spec.seed)
    train_cfg = TrainConfig(
        k=spec.k,
        lr=spec.lr,
        max_epochs=spec.max_epochs,
        seed=spec.seed,
        early_stop_metric=EarlyStopMetric(spec.early_stop),
    )
    outcome: CrossValReport = cross_validate(
        manifest, model_cfg, train_cfg, store, parallel=spec.parallel_folds
    )
    out = spec.output_dir
    out.mkdir(parents=True, exist_ok=True)
    for fold, result in zip(manifest.folds, outcome.results):
        save_checkpoint(
            result.model,
            out / f"fold{fold.index}.ckpt",
            meta={"chosen_epoch": result.chosen_epoch, "k": spec.k, "fold": fold.index},
        )
    _write_reports(out, manifest.name, spec.k, outcome.reports)
    for report in outcome.reports:
        print(
            f"fold {report.fold_index}: mean F1 {report.mean_f1:.4f} "
            f"(epoch {report.chosen_epoch}, {len(report.per_entity_f1)} entities)"
        )
    print(f"overall mean F1 {outcome.mean_f1:.4f}")
    return EXIT_OK


def cmd_evaluate(spec: RunSpec) -> int:
    manifest = _load_dataset(spec)
    if spec.oracle:
        reports = oracle_reports(manifest, spec.k)
    else:
        if spec.checkpoint_dir is None:
            raise UsageError("evaluate needs --checkpoints or --oracle")
        store = _load_store(spec, manifest)
        reports = []
        for fold in manifest.folds:
            model, meta = load_checkpoint(spec.checkpoint_dir / f"fold{fold.index}.ckpt")
            chosen = int(meta.get("chosen_epoch", 0))
            reports.append(evaluate_fold(model, manifest, fold, spec.k, store, chosen))
    if spec.output_dir is not None:
        _write_reports(spec.output_dir, manifest.name, spec.k, reports)
    all_f1 = {iri: f1 for r in reports for iri, f1 in r.per_entity_f1.items()}
    mean = sum(all_f1.values()) / len(all_f1) if all_f1 else 0.0
    label = "oracle" if spec.oracle else "model"
    print(f"{label} mean F1 {mean:.4f} over {len(all_f1)} entities")
    if spec.compare is not None:
        other = evaluation.read_per_entity_tsv(spec.compare)
        shared = sorted(set(all_f1) & set(other))
        result = evaluation.paired_ttest(
            [all_f1[iri] for iri in shared], [other[iri] for iri in shared]
        )
        print(evaluation.format_significance(result))
    return EXIT_OK


def cmd_summarize(spec: RunSpec) -> int:
    manifest = _load_dataset(spec)
    store = _load_store(spec, manifest)
    model, _ = load_checkpoint(spec.checkpoint_path)
    desc = manifest.entity(spec.entity)
    scored = model.score_entity(desc, store)
    selected = select_summary(scored, spec.k)
    n = len(desc.triples)
    print(f"{desc.entity.raw}: top {len(selected)} of {n} triples")
    for tid in selected:
        t = desc.triples[tid]
        weights = sorted(
            ((ctx, w) for (cand, ctx), w in scored.attention.items() if cand == tid),
            key=lambda item: (-item[1], item[0]),
        )
        top_ctx = ", ".join(f"{ctx}:{w:.3f}" for ctx, w in weights[:3])
        print(
            f"  [{tid}] score={scored.scores[tid]:.4f} "
            f"{t.prop.raw} -> {t.val.raw} (attends to {top_ctx})"
        )
    return EXIT_OK


_COMMANDS = {
    "ingest": cmd_ingest,
    "filter-vectors": cmd_filter_vectors,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "summarize": cmd_summarize,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        spec = _spec_from_args(args)
        return _COMMANDS[spec.command](spec)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
