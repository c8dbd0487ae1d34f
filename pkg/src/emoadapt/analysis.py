"""Post-run diagnostics: domain similarity, projection export, and the
class-conditional emotion-likelihood table.

The likelihood table asks a fine-grained emotion classifier (reference
backend at arity 28, trained on the emotion corpus) what it sees in the
cyberbullying test texts, then conditions the predicted emotions on the true
cyberbullying class. Rows therefore sum to 1 wherever the class is populated.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .artifacts import ArtifactError, load_manifest, read_predictions
from .backend import ReferenceBackend, resolve_backend
from .corpus import (
    EMOTION_INDEX,
    EMOTION_TAXONOMY,
    Dataset,
    Post,
    load_cyber_dataset,
    load_emotion_corpus,
)
from .geometry import (
    domain_similarity,
    export_projection,
    similarity_summary,
    write_similarity_summary,
)
from .mapping import (
    ConceptMap,
    emotion_likelihood_matrix,
    harassment_mass_report,
)
from .regimes import ExperimentSpec


def emotion_index_dataset(emotion_corpus: Sequence[Post]) -> Dataset:
    """Single-label view of the emotion corpus for arity-28 training: each
    post keeps its first raw label in taxonomy order."""
    out: Dataset = []
    for post in emotion_corpus:
        first = min(post.raw_labels, key=EMOTION_INDEX.__getitem__)
        out.append((post, EMOTION_INDEX[first]))
    return out


def predict_emotions(
    emotion_corpus: Sequence[Post],
    targets: Sequence[Post],
    config,
) -> list[str]:
    """Train the arity-28 reference classifier on the emotion corpus and name
    the most likely emotion for each target post."""
    backend = ReferenceBackend(label_arity=len(EMOTION_TAXONOMY))
    handle, _ = backend.fine_tune(emotion_index_dataset(emotion_corpus), config)
    preds = backend.predict(handle, list(targets))
    return [EMOTION_TAXONOMY[i] for i in preds]


def projection_class_labels(
    emotion_sample: Sequence[Post],
    cyber_sample: Dataset,
    concept_map: ConceptMap,
) -> list[int]:
    """Class column for projection exports: cyberbullying rows use their true
    class; emotion rows use their uniquely-mapped class, or -1 if unmapped or
    conflicting."""
    labels: list[int] = []
    for post in emotion_sample:
        targets = concept_map.targets(post.raw_labels)
        labels.append(next(iter(targets)) if len(targets) == 1 else -1)
    labels.extend(label for _, label in cyber_sample)
    return labels


def _seeded_sample(items: list, size: int, rng: np.random.Generator) -> list:
    if size >= len(items):
        return list(items)
    idx = rng.choice(len(items), size=size, replace=False)
    return [items[i] for i in sorted(idx)]


def analyze_run(
    run_dir: str | Path,
    data_dir: str | Path,
    out_dir: str | Path | None = None,
    *,
    sample_size: int = 1000,
    similarity_method: str = "centroid_2d",
    cyber_file: str = "hdcyberbullying.jsonl",
    emotion_file: str = "emotion.jsonl",
) -> dict[str, Path]:
    """Emit similarity.json, projection.csv, likelihood.csv, and
    likelihood_summary.json for a completed run directory."""
    run_dir = Path(run_dir)
    data_dir = Path(data_dir)
    out_dir = Path(out_dir) if out_dir is not None else run_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    manifest = load_manifest(run_dir)
    spec_path = run_dir / "spec.json"
    if not spec_path.exists():
        raise ArtifactError(f"missing required artifact: {spec_path}")
    spec = ExperimentSpec.from_json(spec_path)
    first_seed = manifest["seeds"][0]
    pred_path = run_dir / f"predictions_seed{first_seed}.csv"
    if spec.regime == "learning_curve" and not pred_path.exists():
        # curve runs keep predictions per size/arm; use the smallest adapted arm
        sizes = sorted(
            int(p.name.split("_")[1]) for p in run_dir.glob("size_*") if p.is_dir()
        )
        if not sizes:
            raise ArtifactError(f"missing required artifact: {pred_path}")
        pred_path = run_dir / f"size_{sizes[0]}" / "adapted" / f"predictions_seed{first_seed}.csv"
    predictions = read_predictions(pred_path)

    dataset = load_cyber_dataset(data_dir / cyber_file)
    emotion_corpus = load_emotion_corpus(data_dir / emotion_file)
    by_id = {post.id: (post, label) for post, label in dataset}

    test_items: Dataset = []
    for pid, true_label, _ in predictions:
        if pid not in by_id:
            raise ArtifactError(
                f"prediction id {pid!r} not present in {data_dir / cyber_file}"
            )
        post, label = by_id[pid]
        if label != true_label:
            raise ArtifactError(
                f"prediction true label {true_label} disagrees with corpus "
                f"label {label} for id {pid!r}"
            )
        test_items.append((post, label))

    # Similarity and projection over seeded samples of both domains.
    rng = np.random.default_rng(spec.split_seed)
    emotion_sample = _seeded_sample(sorted(emotion_corpus, key=lambda p: p.id), sample_size, rng)
    cyber_sample = _seeded_sample(sorted(dataset, key=lambda it: it[0].id), sample_size, rng)
    backend = resolve_backend(spec.train_config.model_id)
    result = domain_similarity(
        emotion_sample,
        [post for post, _ in cyber_sample],
        backend.embed,
        similarity_method=similarity_method,
    )
    paths: dict[str, Path] = {}
    paths["similarity"] = out_dir / "similarity.json"
    write_similarity_summary(
        similarity_summary(result, seed=spec.split_seed, sample_size=sample_size),
        paths["similarity"],
    )
    paths["projection"] = out_dir / "projection.csv"
    export_projection(
        result,
        projection_class_labels(emotion_sample, cyber_sample, spec.concept_map),
        paths["projection"],
    )

    # Emotion likelihood over the run's test set.
    emotions = predict_emotions(
        emotion_corpus, [post for post, _ in test_items], spec.train_config
    )
    matrix = emotion_likelihood_matrix(
        list(zip((label for _, label in test_items), emotions))
    )
    paths["likelihood"] = out_dir / "likelihood.csv"
    matrix.to_csv(paths["likelihood"])
    paths["likelihood_summary"] = out_dir / "likelihood_summary.json"
    summary = {
        "row_counts": list(matrix.row_counts),
        "defined_rows": list(matrix.defined),
        "row_sums": [
            float(np.nansum(matrix.values[c])) if matrix.defined[c] else None
            for c in range(3)
        ],
        "harassment_mass_diagnostic": harassment_mass_report(matrix, spec.concept_map),
    }
    paths["likelihood_summary"].write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return paths
