"""Emotion-to-cyberbullying label mapping and the emotion-likelihood diagnostic.

The concept map groups fine-grained emotion categories onto the three
cyberbullying classes so an emotion corpus can stand in as labeled training
data for the target task. The default grouping is {anger, disgust} -> 1,
{surprise} -> 2, {gratitude, joy} -> 0; everything else (including neutral)
stays unmapped.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import CLASSES, EMOTION_INDEX, EMOTION_TAXONOMY, Dataset, Post

DEFAULT_GROUPS = {
    "anger": 1,
    "disgust": 1,
    "surprise": 2,
    "gratitude": 0,
    "joy": 0,
}


class MappingError(ValueError):
    pass


@dataclass(frozen=True)
class ConceptMap:
    """Mapping from emotion names onto cyberbullying classes; unmapped
    emotions are simply absent."""

    groups: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_GROUPS))

    def __post_init__(self):
        for emotion, target in self.groups.items():
            if emotion not in EMOTION_INDEX:
                raise MappingError(f"unknown emotion {emotion!r} in concept map")
            if target not in CLASSES:
                raise MappingError(
                    f"emotion {emotion!r} maps to {target}, outside {{0,1,2}}"
                )

    def targets(self, raw_labels: Sequence[str]) -> set[int]:
        """Distinct cyberbullying classes reachable from a post's label set."""
        return {self.groups[l] for l in raw_labels if l in self.groups}

    def bucket(self, raw_labels: Sequence[str]) -> str | None:
        """The first mapped emotion in taxonomy order, or None if unmapped.
        Used to attribute a post to one supply bucket for budget composition."""
        mapped = [l for l in raw_labels if l in self.groups]
        if not mapped:
            return None
        return min(mapped, key=EMOTION_INDEX.__getitem__)

    def mapped_emotions(self) -> list[str]:
        return sorted(self.groups, key=EMOTION_INDEX.__getitem__)

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.groups, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "ConceptMap":
        return cls(groups=dict(json.loads(Path(path).read_text(encoding="utf-8"))))


def default_concept_map() -> ConceptMap:
    return ConceptMap(groups=dict(DEFAULT_GROUPS))


def _allocate(budget: int, supplies: dict[str, int]) -> dict[str, int]:
    """Budget composition policy over per-emotion supply buckets.

    1. Split the budget into equal quotas across buckets (taxonomy order gets
       the modulo leftovers), capped at each bucket's supply.
    2. Spread the resulting deficit over buckets with spare capacity,
       proportionally to that capacity, flooring each share.
    3. Hand any flooring leftover to the largest-supply bucket first
       (descending supply, ties by taxonomy order), capped by capacity.
    """
    buckets = sorted(supplies, key=EMOTION_INDEX.__getitem__)
    k = len(buckets)
    base, extra = divmod(budget, k)
    alloc = {}
    for i, b in enumerate(buckets):
        quota = base + (1 if i < extra else 0)
        alloc[b] = min(quota, supplies[b])
    deficit = budget - sum(alloc.values())
    if deficit > 0:
        capacity = {b: supplies[b] - alloc[b] for b in buckets}
        cap_total = sum(capacity.values())
        for b in buckets:
            share = (deficit * capacity[b]) // cap_total
            alloc[b] += share
        leftover = budget - sum(alloc.values())
        by_supply = sorted(buckets, key=lambda b: (-supplies[b], EMOTION_INDEX[b]))
        for b in by_supply:
            if leftover == 0:
                break
            room = supplies[b] - alloc[b]
            take = min(room, leftover)
            alloc[b] += take
            leftover -= take
    return alloc


def apply_concept_map(
    emotion_posts: Iterable[Post],
    concept_map: ConceptMap,
    budget: int,
    seed: int,
) -> Dataset:
    """Relabel emotion posts as cyberbullying classes and draw a seeded sample
    of exactly ``budget`` items.

    Posts whose label sets reach exactly one class get that class; posts
    reaching two or more classes are conflicts and are dropped; posts with no
    mapped label are dropped. The sample follows the composition policy in
    :func:`_allocate` over per-emotion buckets. Output is sorted by id.
    """
    if budget < 0:
        raise MappingError(f"budget must be >= 0, got {budget}")
    buckets: dict[str, Dataset] = {}
    for post in emotion_posts:
        targets = concept_map.targets(post.raw_labels)
        if len(targets) != 1:
            continue  # conflict (>=2 classes) or fully unmapped
        emotion = concept_map.bucket(post.raw_labels)
        assert emotion is not None
        buckets.setdefault(emotion, []).append((post, next(iter(targets))))

    supplies = {e: len(items) for e, items in buckets.items()}
    total = sum(supplies.values())
    if budget > total:
        per_class: dict[int, int] = {c: 0 for c in CLASSES}
        for e, n in supplies.items():
            per_class[concept_map.groups[e]] += n
        raise MappingError(
            f"budget {budget} exceeds mapped supply {total}; "
            f"per-class supply: {per_class}"
        )

    alloc = _allocate(budget, supplies) if supplies else {}
    rng = np.random.default_rng(seed)
    sample: Dataset = []
    for emotion in sorted(buckets, key=EMOTION_INDEX.__getitem__):
        items = sorted(buckets[emotion], key=lambda it: it[0].id)
        order = rng.permutation(len(items))
        sample.extend(items[i] for i in order[: alloc[emotion]])
    sample.sort(key=lambda it: it[0].id)
    return sample


@dataclass(frozen=True)
class LikelihoodMatrix:
    """Row-conditional emotion likelihoods: values[c][e] is the share of
    class-c items predicted as emotion e. Rows with no instances are
    undefined (NaN) and flagged, not zeroed."""

    values: np.ndarray            # (3, 28) float
    defined: tuple[bool, bool, bool]
    row_counts: tuple[int, int, int]

    def row(self, label: int) -> np.ndarray | None:
        return self.values[label] if self.defined[label] else None

    def to_csv(self, path: str | Path) -> None:
        """Rows in class order 0,1,2; emotion columns in taxonomy order;
        undefined rows export empty cells."""
        path = Path(path)
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["class"] + list(EMOTION_TAXONOMY))
            for c in CLASSES:
                if self.defined[c]:
                    writer.writerow([c] + [f"{v:.10f}" for v in self.values[c]])
                else:
                    writer.writerow([c] + [""] * len(EMOTION_TAXONOMY))


def emotion_likelihood_matrix(
    predictions: Iterable[tuple[int, str]],
) -> LikelihoodMatrix:
    """Build the class-conditional emotion likelihood table from
    (true cyberbullying class, predicted emotion name) pairs."""
    counts = np.zeros((len(CLASSES), len(EMOTION_TAXONOMY)), dtype=np.int64)
    for true_label, emotion in predictions:
        if true_label not in CLASSES:
            raise MappingError(f"true label {true_label} outside {{0,1,2}}")
        if emotion not in EMOTION_INDEX:
            raise MappingError(f"predicted emotion {emotion!r} not in taxonomy")
        counts[true_label, EMOTION_INDEX[emotion]] += 1
    row_totals = counts.sum(axis=1)
    values = np.full(counts.shape, np.nan, dtype=float)
    defined = []
    for c in CLASSES:
        if row_totals[c] > 0:
            values[c] = counts[c] / row_totals[c]
            defined.append(True)
        else:
            defined.append(False)
    return LikelihoodMatrix(
        values=values,
        defined=tuple(defined),
        row_counts=tuple(int(t) for t in row_totals),
    )


def harassment_mass_report(
    matrix: LikelihoodMatrix, concept_map: ConceptMap
) -> dict:
    """Diagnostic, never a hard failure: check whether anger+disgust carry the
    largest two-emotion mass of the harassment row among mapped emotions."""
    if not matrix.defined[1]:
        return {"checked": False, "reason": "harassment row undefined"}
    row = matrix.values[1]
    mapped = concept_map.mapped_emotions()
    if not {"anger", "disgust"} <= set(mapped):
        return {"checked": False, "reason": "anger/disgust not both mapped"}
    target = float(row[EMOTION_INDEX["anger"]] + row[EMOTION_INDEX["disgust"]])
    best_pair, best_mass = None, -math.inf
    for a, b in combinations(mapped, 2):
        mass = float(row[EMOTION_INDEX[a]] + row[EMOTION_INDEX[b]])
        if mass > best_mass:
            best_pair, best_mass = (a, b), mass
    return {
        "checked": True,
        "passed": target >= best_mass - 1e-12,
        "anger_plus_disgust": target,
        "best_pair": list(best_pair),
        "best_pair_mass": best_mass,
    }
