"""Experiment regimes: baseline fine-tuning, zero-shot transfer from the
emotion domain, few-shot transfer (zero-shot then continued fine-tuning on
the small target split), and the learning-curve comparison.

One experiment fixes its train/test split and its mapped-emotion sample with
``split_seed``; the seed list only varies training randomness, so every
regime of an experiment evaluates on the identical test-id set and the runs
are directly comparable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .backend import Backend, TrainConfig
from .corpus import (
    CURVE_SIZES,
    Dataset,
    DatasetSplit,
    Post,
    make_learning_curve_subsets,
    stratified_split,
)
from .mapping import ConceptMap, default_concept_map
from .metrics import EvalReport, evaluate

REGIMES = ("baseline", "zero_shot", "few_shot", "learning_curve")
DEFAULT_SEEDS = (1, 2, 3, 4, 5)
DEFAULT_EMOTION_BUDGET = 3700


class RegimeError(ValueError):
    pass


class PurityError(RuntimeError):
    """A zero-shot training set touched the target corpus."""


class SeedExecutionError(RuntimeError):
    """One seed's training or evaluation failed; carries the seed."""

    def __init__(self, seed: int, cause: BaseException):
        super().__init__(f"seed {seed}: {cause}")
        self.seed = seed


@dataclass(frozen=True)
class ExperimentSpec:
    regime: str
    concept_map: ConceptMap = field(default_factory=default_concept_map)
    emotion_budget: int = DEFAULT_EMOTION_BUDGET
    train_config: TrainConfig = field(default_factory=TrainConfig)
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    split_seed: int = 0
    train_fraction: float = 0.1
    subset_size: int | None = None

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise RegimeError(f"unknown regime {self.regime!r}; expected one of {REGIMES}")
        if not self.seeds:
            raise RegimeError("seed list must be non-empty")
        if self.emotion_budget < 0:
            raise RegimeError("emotion_budget must be >= 0")
        if self.subset_size is not None and self.subset_size not in CURVE_SIZES:
            raise RegimeError(
                f"subset_size {self.subset_size} not one of {CURVE_SIZES}"
            )
        if not isinstance(self.seeds, tuple):
            object.__setattr__(self, "seeds", tuple(self.seeds))

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "concept_map": dict(sorted(self.concept_map.groups.items())),
            "emotion_budget": self.emotion_budget,
            "train_config": self.train_config.to_dict(),
            "seeds": list(self.seeds),
            "split_seed": self.split_seed,
            "train_fraction": self.train_fraction,
            "subset_size": self.subset_size,
        }

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentSpec":
        return cls(
            regime=obj["regime"],
            concept_map=ConceptMap(groups={k: int(v) for k, v in obj.get("concept_map", {}).items()} or dict(default_concept_map().groups)),
            emotion_budget=int(obj.get("emotion_budget", DEFAULT_EMOTION_BUDGET)),
            train_config=TrainConfig.from_dict(obj.get("train_config", {})),
            seeds=tuple(obj.get("seeds", DEFAULT_SEEDS)),
            split_seed=int(obj.get("split_seed", 0)),
            train_fraction=float(obj.get("train_fraction", 0.1)),
            subset_size=obj.get("subset_size"),
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentSpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class SeedRun:
    """One training seed's outcome within a regime. ``test_ids``,
    ``test_labels``, and ``predictions`` are order-aligned."""

    seed: int
    report: EvalReport
    loss_trace: tuple[float, ...]
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    test_labels: tuple[int, ...]
    predictions: tuple[int, ...]
    handle: object = None


@dataclass(frozen=True)
class CurvePoint:
    size: int
    adapted: tuple[SeedRun, ...]      # emotion pretraining then subset fine-tune
    plain: tuple[SeedRun, ...]        # subset fine-tune only


def _ids(data: Dataset) -> tuple[str, ...]:
    return tuple(post.id for post, _ in data)


def _train_eval(
    backend: Backend,
    train: Dataset,
    test: Dataset,
    config: TrainConfig,
    seed: int,
    start_handle=None,
    prior_trace: Sequence[float] = (),
) -> SeedRun:
    handle, trace = backend.fine_tune(train, replace(config, seed=seed), handle=start_handle)
    preds = backend.predict(handle, [post for post, _ in test])
    truths = [label for _, label in test]
    report = evaluate(truths, preds, seed=seed)
    return SeedRun(
        seed=seed,
        report=report,
        loss_trace=tuple(prior_trace) + tuple(trace),
        train_ids=_ids(train),
        test_ids=_ids(test),
        test_labels=tuple(truths),
        predictions=tuple(preds),
        handle=handle,
    )


def target_split(spec: ExperimentSpec, dataset: Dataset) -> DatasetSplit:
    """The experiment's fixed small-target split (10% by default)."""
    return stratified_split(dataset, spec.train_fraction, spec.split_seed, name="target")


def mapped_emotion_sample(spec: ExperimentSpec, emotion_corpus: Sequence[Post]) -> Dataset:
    """The experiment's fixed mapped-emotion training pool."""
    from .mapping import apply_concept_map

    return apply_concept_map(
        emotion_corpus, spec.concept_map, spec.emotion_budget, spec.split_seed
    )


def assert_zero_shot_purity(emotion_train: Dataset, dataset: Dataset) -> None:
    overlap = {p.id for p, _ in emotion_train} & {p.id for p, _ in dataset}
    if overlap:
        raise PurityError(
            f"zero-shot training set shares {len(overlap)} id(s) with the "
            f"target corpus: {sorted(overlap)[:5]}"
        )


def _per_seed(seeds: Sequence[int], job) -> list[SeedRun]:
    runs = []
    for seed in seeds:
        try:
            runs.append(job(seed))
        except Exception as exc:
            raise SeedExecutionError(seed, exc) from exc
    return runs


def run_baseline(spec: ExperimentSpec, dataset: Dataset, backend: Backend) -> list[SeedRun]:
    """Fine-tune on the small target split alone; evaluate on the complement."""
    split = target_split(spec, dataset)
    return _per_seed(
        spec.seeds,
        lambda seed: _train_eval(backend, split.train, split.test, spec.train_config, seed),
    )


def run_zero_shot(
    spec: ExperimentSpec,
    emotion_corpus: Sequence[Post],
    dataset: Dataset,
    backend: Backend,
) -> list[SeedRun]:
    """Train only on the mapped emotion sample; the target corpus never enters
    training (checked, not assumed). Evaluation uses the same test complement
    as the baseline."""
    split = target_split(spec, dataset)
    emotion_train = mapped_emotion_sample(spec, emotion_corpus)
    assert_zero_shot_purity(emotion_train, dataset)
    return _per_seed(
        spec.seeds,
        lambda seed: _train_eval(backend, emotion_train, split.test, spec.train_config, seed),
    )


def run_few_shot(
    spec: ExperimentSpec,
    emotion_corpus: Sequence[Post],
    dataset: Dataset,
    backend: Backend,
) -> list[SeedRun]:
    """Stage 1: zero-shot training on mapped emotion data. Stage 2: continued
    fine-tuning of the same handle on the small target split. The loss trace
    concatenates both stages."""
    split = target_split(spec, dataset)
    emotion_train = mapped_emotion_sample(spec, emotion_corpus)
    assert_zero_shot_purity(emotion_train, dataset)

    def job(seed):
        stage1, trace1 = backend.fine_tune(
            emotion_train, replace(spec.train_config, seed=seed)
        )
        return _train_eval(
            backend, split.train, split.test, spec.train_config, seed,
            start_handle=stage1, prior_trace=trace1,
        )

    return _per_seed(spec.seeds, job)


def run_learning_curve(
    spec: ExperimentSpec,
    emotion_corpus: Sequence[Post],
    dataset: Dataset,
    backend: Backend,
) -> dict[int, CurvePoint]:
    """For each subset size, run the emotion-adapted arm and the plain
    fine-tuning arm on the same subset, per seed. ``spec.subset_size`` limits
    the run to one size; left unset, all six published sizes run."""
    subsets = {
        s.name: s for s in make_learning_curve_subsets(dataset, spec.split_seed)
    }
    sizes = [spec.subset_size] if spec.subset_size else list(CURVE_SIZES)
    emotion_train = mapped_emotion_sample(spec, emotion_corpus)
    assert_zero_shot_purity(emotion_train, dataset)
    out: dict[int, CurvePoint] = {}
    for size in sizes:
        split = subsets[f"curve_{size}"]

        def adapted_job(seed, split=split):
            stage1, trace1 = backend.fine_tune(
                emotion_train, replace(spec.train_config, seed=seed)
            )
            return _train_eval(
                backend, split.train, split.test, spec.train_config, seed,
                start_handle=stage1, prior_trace=trace1,
            )

        def plain_job(seed, split=split):
            return _train_eval(backend, split.train, split.test, spec.train_config, seed)

        out[size] = CurvePoint(
            size=size,
            adapted=tuple(_per_seed(spec.seeds, adapted_job)),
            plain=tuple(_per_seed(spec.seeds, plain_job)),
        )
    return out


def mean_macro_f1(runs: Iterable[SeedRun]) -> float:
    runs = list(runs)
    return sum(r.report.macro.f1 for r in runs) / len(runs)
