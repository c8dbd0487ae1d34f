"""Command-line entry point.

Commands:
  build-corpus   merge + normalize the source corpora into the three-class dataset
  run            execute an experiment spec and write a run directory
  analyze        emit similarity/projection/likelihood artifacts for a run
  report         combine run aggregates into one table-layout CSV

All randomness flows from the spec's seeds; no command reads ambient entropy.
Run directories are locked while written, so two writers cannot interleave.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from filelock import FileLock, Timeout

from . import analysis, artifacts, corpus, regimes
from .backend import BackendError, resolve_backend
from .corpus import CorpusError
from .mapping import MappingError
from .metrics import aggregate_runs, table_to_csv

CACHE_ENV_VAR = "EMOADAPT_CACHE_DIR"  # optional cache for backend weights


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emoadapt",
        description="Emotion-adaptive training for three-class cyberbullying detection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build-corpus", help="build the merged dataset")
    p_build.add_argument("--harassment", required=True, help="harassment corpus JSONL")
    p_build.add_argument("--defamation", required=True, help="defamation corpus JSONL")
    p_build.add_argument("--out", required=True, help="output directory")
    p_build.add_argument("--anonymize", action="store_true",
                         help="replace person spans with ## in the written corpus")
    p_build.add_argument("--no-name-filter", action="store_true",
                         help="keep harassment posts without person names")

    p_run = sub.add_parser("run", help="execute an experiment spec")
    p_run.add_argument("--spec", required=True, help="experiment spec JSON")
    p_run.add_argument("--data-dir", required=True)
    p_run.add_argument("--out", required=True, help="run directory")
    p_run.add_argument("--backend", default=None, help="override spec model_id")
    p_run.add_argument("--seed-list", default=None,
                       help="comma-separated seeds overriding the spec")
    p_run.add_argument("--cyber-file", default="hdcyberbullying.jsonl")
    p_run.add_argument("--emotion-file", default="emotion.jsonl")

    p_an = sub.add_parser("analyze", help="similarity, projection, likelihood")
    p_an.add_argument("--run", required=True, help="completed run directory")
    p_an.add_argument("--data-dir", required=True)
    p_an.add_argument("--out", default=None, help="defaults to the run directory")
    p_an.add_argument("--sample-size", type=int, default=1000)
    p_an.add_argument("--similarity-method", default="centroid_2d",
                      choices=["centroid_2d", "mean_pairwise_2d", "centroid_full"])
    p_an.add_argument("--cyber-file", default="hdcyberbullying.jsonl")
    p_an.add_argument("--emotion-file", default="emotion.jsonl")

    p_rep = sub.add_parser("report", help="combine run aggregates into one CSV")
    p_rep.add_argument("--runs", nargs="+", required=True, help="run directories")
    p_rep.add_argument("--out", required=True, help="output CSV path")
    return parser


def cmd_build_corpus(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    harassment = corpus.load_posts_jsonl(args.harassment, expected_source="harassment_corpus")
    defamation = corpus.load_posts_jsonl(args.defamation, expected_source="defamation_corpus")
    if not harassment or not defamation:
        raise CorpusError(
            f"empty input: harassment={len(harassment)} posts, "
            f"defamation={len(defamation)} posts; nothing written"
        )

    filter_failures: dict[str, str] = {}
    dropped_no_name = 0
    if not args.no_name_filter:
        result = corpus.filter_by_person_names(harassment, corpus.default_person_recognizer)
        dropped_no_name = len(harassment) - len(result.posts) - len(result.failures)
        filter_failures = result.failures
        harassment = result.posts

    h_labeled = [(p, corpus.normalize_harassment_labels(p.raw_labels)) for p in harassment]
    d_labeled = [(p, corpus.normalize_defamation_labels(p.raw_labels[0])) for p in defamation]
    dataset = corpus.build_hdcyberbullying(h_labeled, d_labeled)
    if not dataset:
        raise CorpusError("built dataset is empty; nothing written")
    if args.anonymize:
        dataset = [
            (corpus.anonymize_post(post), label) for post, label in dataset
        ]

    stats = corpus.corpus_statistics(dataset)
    stats["name_filter"] = {
        "applied": not args.no_name_filter,
        "dropped_no_person_name": dropped_no_name,
        "recognizer_failures": filter_failures,
    }

    # all inputs validated; only now touch the filesystem
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus_path = out_dir / "hdcyberbullying.jsonl"
    corpus.write_cyber_dataset(dataset, corpus_path)
    stats_path = out_dir / "corpus_stats.json"
    stats_path.write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    counts = stats["class_counts"]
    print(f"wrote {corpus_path} ({stats['total']} posts: "
          f"{counts['non_cyberbullying']} non-cyberbullying, "
          f"{counts['harassment']} harassment, {counts['defamation']} defamation)")
    print(f"wrote {stats_path}")
    return 0


def _published_test_note(spec: regimes.ExperimentSpec, n_test: int) -> dict:
    published = corpus.PUBLISHED_TEST_SIZES.get(
        spec.subset_size if spec.regime == "learning_curve" and spec.subset_size else "baseline"
    )
    return {
        "actual_test_size": n_test,
        "published_test_size": published,
        "comment": "published table lists test sizes one below the complement; "
                   "training counts are normative, test = complement",
    }


def cmd_run(args: argparse.Namespace) -> int:
    spec = regimes.ExperimentSpec.from_json(args.spec)
    if args.backend:
        spec = replace(spec, train_config=replace(spec.train_config, model_id=args.backend))
    if args.seed_list:
        seeds = tuple(int(s) for s in args.seed_list.split(","))
        spec = replace(spec, seeds=seeds)

    data_dir = Path(args.data_dir)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cyber_path = data_dir / args.cyber_file
    emotion_path = data_dir / args.emotion_file

    dataset = corpus.load_cyber_dataset(cyber_path)
    checksums = {str(cyber_path): artifacts.sha256_file(cyber_path)}
    emotion_corpus = None
    if spec.regime != "baseline":
        emotion_corpus = corpus.load_emotion_corpus(emotion_path)
        checksums[str(emotion_path)] = artifacts.sha256_file(emotion_path)

    backend = resolve_backend(
        spec.train_config.model_id, cache_dir=os.environ.get(CACHE_ENV_VAR)
    )
    started = artifacts._utcnow()
    lock = FileLock(str(out_dir / ".lock"))
    try:
        lock.acquire(timeout=0)
    except Timeout:
        print(f"error: run directory {out_dir} is locked by another writer", file=sys.stderr)
        return 1
    try:
        if spec.regime == "learning_curve":
            curve = regimes.run_learning_curve(spec, emotion_corpus, dataset, backend)
            splits = corpus.make_learning_curve_subsets(dataset, spec.split_seed)
            if spec.subset_size:
                splits = [s for s in splits if s.name == f"curve_{spec.subset_size}"]
            artifacts.write_curve_run(
                out_dir, spec, curve, splits, checksums, started,
                notes={"published_test_sizes": {
                    str(k): corpus.PUBLISHED_TEST_SIZES[k] for k in sorted(curve)
                    if k in corpus.PUBLISHED_TEST_SIZES
                }},
            )
            print(f"learning curve complete: sizes {sorted(curve)} -> {out_dir}")
        else:
            split = regimes.target_split(spec, dataset)
            runner = {
                "baseline": lambda: regimes.run_baseline(spec, dataset, backend),
                "zero_shot": lambda: regimes.run_zero_shot(spec, emotion_corpus, dataset, backend),
                "few_shot": lambda: regimes.run_few_shot(spec, emotion_corpus, dataset, backend),
            }[spec.regime]
            runs = runner()
            artifacts.write_regime_run(
                out_dir, spec, runs, split, checksums, started,
                notes=_published_test_note(spec, len(split.test)),
            )
            agg = aggregate_runs([r.report for r in runs])
            print(f"{spec.regime} complete over seeds {list(spec.seeds)}: "
                  f"macro P/R/F1 = {agg.macro_mean.precision:.3f}/"
                  f"{agg.macro_mean.recall:.3f}/{agg.macro_mean.f1:.3f} -> {out_dir}")
        return 0
    except Exception as exc:
        failed_seed = exc.seed if isinstance(exc, regimes.SeedExecutionError) else None
        artifacts.write_failure_manifest(
            out_dir, spec, checksums, started, failed_seed, f"{type(exc).__name__}: {exc}"
        )
        print(f"error: run failed: {exc}", file=sys.stderr)
        return 1
    finally:
        lock.release()


def cmd_analyze(args: argparse.Namespace) -> int:
    paths = analysis.analyze_run(
        args.run,
        args.data_dir,
        args.out,
        sample_size=args.sample_size,
        similarity_method=args.similarity_method,
        cyber_file=args.cyber_file,
        emotion_file=args.emotion_file,
    )
    for name, path in sorted(paths.items()):
        print(f"wrote {name}: {path}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    from .metrics import PRF, RunAggregate
    import numpy as np

    aggregates: dict[str, "RunAggregate"] = {}
    for run_dir in args.runs:
        run_dir = Path(run_dir)
        manifest = artifacts.load_manifest(run_dir)
        agg_path = run_dir / "aggregate.json"
        if not agg_path.exists():
            raise artifacts.ArtifactError(f"missing required artifact: {agg_path}")
        obj = json.loads(agg_path.read_text(encoding="utf-8"))
        agg = RunAggregate(
            per_class_mean={int(c): PRF(*v) for c, v in obj["per_class_mean"].items()},
            per_class_std={int(c): PRF(*v) for c, v in obj["per_class_std"].items()},
            macro_mean=PRF(*obj["macro_mean"]),
            macro_std=PRF(*obj["macro_std"]),
            confusion_mean=np.asarray(obj["confusion_mean"]),
            confusion_std=np.asarray(obj["confusion_std"]),
            n_test=obj["n_test"],
            n_runs=obj["n_runs"],
            seeds=tuple(obj["seeds"]),
        )
        label = manifest["regime"]
        i = 2
        while label in aggregates:
            label = f"{manifest['regime']}_{i}"
            i += 1
        aggregates[label] = agg
    table_to_csv(aggregates, args.out)
    print(f"wrote {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "build-corpus": cmd_build_corpus,
        "run": cmd_run,
        "analyze": cmd_analyze,
        "report": cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (CorpusError, MappingError, BackendError, artifacts.ArtifactError,
            regimes.RegimeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
