"""Corpus ingestion and split construction for three-class cyberbullying detection.

Builds the merged harassment + defamation dataset from locally provided JSONL
files, normalizes the upstream label vocabularies onto the integer classes
{0: non-cyberbullying, 1: harassment, 2: defamation}, and produces the
deterministic train/test splits and learning-curve subsets used by the
experiment regimes.

All operations are pure given (inputs, seed): outputs are sorted by post id
and identical seeds reproduce identical splits byte for byte.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, replace
from enum import IntEnum
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np


class CorpusError(ValueError):
    """Malformed input, unknown label vocabulary, or infeasible split request."""


class CyberLabel(IntEnum):
    NON_CYBERBULLYING = 0
    HARASSMENT = 1
    DEFAMATION = 2


CLASSES = (0, 1, 2)
CLASS_NAMES = {0: "non_cyberbullying", 1: "harassment", 2: "defamation"}
NAME_TO_CLASS = {name: label for label, name in CLASS_NAMES.items()}

SOURCES = ("harassment_corpus", "defamation_corpus", "emotion_corpus")

# Upstream harassment tag vocabulary; any of the six implies class 1.
HARASSMENT_TAGS = frozenset(
    {"malignant", "highly malignant", "rude", "threat", "abuse", "loathe"}
)
CLEAN_TAG = "clean"

# 27 fine-grained emotions plus neutral, in the fixed order used for CSV
# columns and bucket iteration (the GoEmotions taxonomy order).
EMOTION_TAXONOMY = (
    "admiration", "amusement", "anger", "annoyance", "approval", "caring",
    "confusion", "curiosity", "desire", "disappointment", "disapproval",
    "disgust", "embarrassment", "excitement", "fear", "gratitude", "grief",
    "joy", "love", "nervousness", "optimism", "pride", "realization",
    "relief", "remorse", "sadness", "surprise", "neutral",
)
EMOTION_INDEX = {name: i for i, name in enumerate(EMOTION_TAXONOMY)}

# Class composition of the released distribution and the published per-class
# training counts. The published training counts are normative: they are not
# exact proportional shares of the class histogram, so split construction pins
# them whenever the input matches the released distribution.
RELEASED_CLASS_COUNTS = {0: 1453, 1: 1204, 2: 250}
BASELINE_TRAIN_COUNTS = {0: 152, 1: 119, 2: 20}
BASELINE_FRACTION = 0.1
CURVE_TRAIN_COUNTS = {
    72: {0: 38, 1: 29, 2: 5},
    140: {0: 73, 1: 57, 2: 10},
    210: {0: 110, 1: 86, 2: 14},
    400: {0: 209, 1: 164, 2: 27},
    700: {0: 366, 1: 286, 2: 48},
    1300: {0: 680, 1: 531, 2: 89},
}
CURVE_SIZES = tuple(sorted(CURVE_TRAIN_COUNTS))

# Test-set sizes as published alongside the training counts. Each is one less
# than the complement of the training count within the 2,907-item corpus;
# reports carry both numbers rather than guessing which is right.
PUBLISHED_TEST_SIZES = {
    "baseline": 2615,
    72: 2834,
    140: 2766,
    210: 2696,
    400: 2506,
    700: 2206,
    1300: 1606,
}


@dataclass(frozen=True)
class Post:
    """One text item with provenance and its raw upstream labels."""

    id: str
    text: str
    source: str
    raw_labels: tuple[str, ...]
    anonymized: bool = False

    def __post_init__(self):
        if not self.id:
            raise CorpusError("post id must be non-empty")
        if not self.text.strip():
            raise CorpusError(f"post {self.id!r}: text is empty after trimming")
        if self.source not in SOURCES:
            raise CorpusError(
                f"post {self.id!r}: unknown source {self.source!r}; "
                f"expected one of {SOURCES}"
            )
        if not isinstance(self.raw_labels, tuple):
            object.__setattr__(self, "raw_labels", tuple(self.raw_labels))


LabeledPost = tuple[Post, int]
Dataset = list[LabeledPost]


@dataclass(frozen=True)
class DatasetSplit:
    """A named train/test partition of a dataset."""

    name: str
    train: Dataset
    test: Dataset
    seed: int

    def train_ids(self) -> frozenset[str]:
        return frozenset(p.id for p, _ in self.train)

    def test_ids(self) -> frozenset[str]:
        return frozenset(p.id for p, _ in self.test)


@dataclass(frozen=True)
class NameFilterResult:
    """Posts retained by the person-name filter plus a tally of recognizer
    failures (post id -> error message); failed posts are skipped, never kept."""

    posts: list[Post]
    failures: dict[str, str]


def _canon_tag(tag: str) -> str:
    return re.sub(r"\s+", " ", tag.strip()).lower()


def normalize_harassment_labels(raw_labels: Sequence[str]) -> int:
    """Collapse the six-tag harassment vocabulary onto {0, 1}.

    Any harassment tag present yields 1; a clean-only tag list yields 0.
    Unknown tags and empty lists are rejected.
    """
    if not raw_labels:
        raise CorpusError("empty label list: labeled corpora must carry >=1 tag")
    saw_harassment = False
    for tag in raw_labels:
        canon = _canon_tag(tag)
        if canon in HARASSMENT_TAGS:
            saw_harassment = True
        elif canon != CLEAN_TAG:
            raise CorpusError(f"unknown harassment-corpus tag {tag!r}")
    return 1 if saw_harassment else 0


def normalize_defamation_labels(raw_label: str) -> int:
    """Map the paired news labels onto {0, 2}: fake -> 2, legitimate -> 0."""
    canon = _canon_tag(raw_label)
    if canon == "fake":
        return 2
    if canon == "legitimate":
        return 0
    raise CorpusError(f"unknown defamation-corpus label {raw_label!r}")


# --------------------------------------------------------------------------
# Person-name filtering

Recognizer = Callable[[str], Sequence[tuple[int, int]]]

_ANON_RE = re.compile(r"#{2,}")
_CAP_RUN_RE = re.compile(r"\b[A-Z][a-z]+(?:\s+[A-Z][a-z]+)+\b")
_CAP_WORD_RE = re.compile(r"\b[A-Z][a-z]+\b")

# Capitalized words that are far more often sentence-leads than names.
_COMMON_CAPITALIZED = frozenset(
    "The A An And But Or So This That These Those It He She They We You I If "
    "What When Where Why How Not No Yes Do Don Is Are Was Were My Your His Her "
    "Its Our Their In On At To For Of With As By From".split()
)


def default_person_recognizer(text: str) -> list[tuple[int, int]]:
    """Heuristic person-name spans: anonymization markers (##), runs of two or
    more capitalized words, and single capitalized words away from sentence
    starts. A real NER tagger can be plugged in wherever a recognizer is taken.
    """
    spans = [(m.start(), m.end()) for m in _ANON_RE.finditer(text)]
    spans.extend((m.start(), m.end()) for m in _CAP_RUN_RE.finditer(text))
    for m in _CAP_WORD_RE.finditer(text):
        if m.group(0) in _COMMON_CAPITALIZED:
            continue
        if m.start() == 0 or text[max(0, m.start() - 2):m.start()].strip() in {".", "!", "?"}:
            continue
        if any(s <= m.start() < e for s, e in spans):
            continue
        spans.append((m.start(), m.end()))
    return sorted(spans)


def filter_by_person_names(posts: Iterable[Post], recognizer: Recognizer) -> NameFilterResult:
    """Keep exactly the posts whose text contains at least one person-name span.

    A recognizer exception skips that post and records it in the failure tally
    instead of aborting the whole pass.
    """
    kept: list[Post] = []
    failures: dict[str, str] = {}
    for post in posts:
        try:
            spans = recognizer(post.text)
        except Exception as exc:  # recognizer is third-party pluggable code
            failures[post.id] = f"{type(exc).__name__}: {exc}"
            continue
        if spans:
            kept.append(post)
    return NameFilterResult(posts=kept, failures=failures)


def anonymize_post(post: Post, recognizer: Recognizer = default_person_recognizer) -> Post:
    """Replace recognized person spans with '##' (presentation only; training
    normally uses raw text)."""
    spans = sorted(recognizer(post.text), reverse=True)
    text = post.text
    for start, end in spans:
        text = text[:start] + "##" + text[end:]
    return replace(post, text=text, anonymized=True)


# --------------------------------------------------------------------------
# Dataset assembly

def class_histogram(dataset: Iterable[LabeledPost]) -> dict[int, int]:
    counts = {c: 0 for c in CLASSES}
    for _, label in dataset:
        counts[label] = counts.get(label, 0) + 1
    return counts


def build_hdcyberbullying(
    harassment_posts: Iterable[LabeledPost],
    defamation_posts: Iterable[LabeledPost],
) -> Dataset:
    """Merge the two label-normalized, name-filtered sources into one dataset.

    Ids must be unique across sources; output is sorted by id.
    """
    merged: dict[str, LabeledPost] = {}
    for item in list(harassment_posts) + list(defamation_posts):
        post, label = item
        if label not in CLASSES:
            raise CorpusError(f"post {post.id!r}: label {label} outside {{0,1,2}}")
        if post.id in merged:
            other = merged[post.id][0]
            raise CorpusError(
                f"duplicate id {post.id!r} across sources: "
                f"{other.source} and {post.source}"
            )
        merged[post.id] = item
    return [merged[pid] for pid in sorted(merged)]


def _group_by_class(dataset: Dataset) -> dict[int, Dataset]:
    groups: dict[int, Dataset] = {}
    for item in sorted(dataset, key=lambda it: it[0].id):
        groups.setdefault(item[1], []).append(item)
    return groups


def split_by_class_counts(
    dataset: Dataset,
    train_counts: dict[int, int],
    seed: int,
    name: str = "split",
) -> DatasetSplit:
    """Draw exactly ``train_counts[c]`` items per class into train (seeded,
    deterministic); the complement becomes test. Both halves sorted by id."""
    groups = _group_by_class(dataset)
    rng = np.random.default_rng(seed)
    train: Dataset = []
    test: Dataset = []
    for label in sorted(groups):
        items = groups[label]
        want = train_counts.get(label, 0)
        if want > len(items):
            raise CorpusError(
                f"class {label}: requested train count {want} exceeds "
                f"class population {len(items)}"
            )
        order = rng.permutation(len(items))
        chosen = set(order[:want].tolist())
        for i, item in enumerate(items):
            (train if i in chosen else test).append(item)
    train.sort(key=lambda it: it[0].id)
    test.sort(key=lambda it: it[0].id)
    return DatasetSplit(name=name, train=train, test=test, seed=seed)


def stratified_split(
    dataset: Dataset,
    train_fraction: float,
    seed: int,
    name: str = "stratified",
) -> DatasetSplit:
    """Seeded stratified train/test split.

    Per-class train counts are floor(n_c * fraction); the remainder up to
    round(N * fraction) is assigned one item at a time by ascending class
    index, never emptying a class's test side. Exception: when the input
    matches the released distribution and the fraction is the published 10%,
    the published per-class training counts are used verbatim (they are
    normative but not an exact proportional share).
    """
    if not (0.0 < train_fraction < 1.0):
        raise CorpusError(f"train_fraction must be in (0, 1), got {train_fraction}")
    hist = class_histogram(dataset)
    for label, n in hist.items():
        if n == 0:
            raise CorpusError(f"class {label} has no items; cannot stratify")
    if hist == RELEASED_CLASS_COUNTS and abs(train_fraction - BASELINE_FRACTION) < 1e-12:
        counts = dict(BASELINE_TRAIN_COUNTS)
    else:
        counts = {c: math.floor(hist[c] * train_fraction) for c in sorted(hist)}
        target_total = int(math.floor(len(dataset) * train_fraction + 0.5))
        remainder = target_total - sum(counts.values())
        for c in sorted(hist):
            if remainder > 0 and counts[c] + 1 < hist[c]:
                counts[c] += 1
                remainder -= 1
        # any unplaceable remainder is dropped: train never swallows a class
    return split_by_class_counts(dataset, counts, seed, name=name)


def make_learning_curve_subsets(dataset: Dataset, seed: int) -> list[DatasetSplit]:
    """The six nested training subsets with the published per-class counts.

    Nesting comes from taking prefixes of one seeded per-class permutation, so
    subset(72) is contained in subset(140) and so on. Each subset's test set
    is its complement within the full dataset.
    """
    groups = _group_by_class(dataset)
    hist = {c: len(items) for c, items in groups.items()}
    largest = CURVE_TRAIN_COUNTS[CURVE_SIZES[-1]]
    for c in CLASSES:
        if largest[c] > hist.get(c, 0):
            raise CorpusError(
                f"class {c}: curve subsets need {largest[c]} items, "
                f"dataset has {hist.get(c, 0)}"
            )
    rng = np.random.default_rng(seed)
    order = {c: rng.permutation(len(groups[c])) for c in sorted(groups)}
    splits = []
    for size in CURVE_SIZES:
        counts = CURVE_TRAIN_COUNTS[size]
        train: Dataset = []
        test: Dataset = []
        for c in sorted(groups):
            items = groups[c]
            chosen = set(order[c][: counts.get(c, 0)].tolist())
            for i, item in enumerate(items):
                (train if i in chosen else test).append(item)
        train.sort(key=lambda it: it[0].id)
        test.sort(key=lambda it: it[0].id)
        splits.append(DatasetSplit(name=f"curve_{size}", train=train, test=test, seed=seed))
    return splits


# --------------------------------------------------------------------------
# JSONL / CSV interchange

def load_posts_jsonl(path: str | Path, expected_source: str | None = None) -> list[Post]:
    """Read one post per line: {"id", "text", "labels", "source"}; UTF-8, LF.

    Errors carry the path and 1-based line number of the first bad line.
    Output is sorted by id.
    """
    path = Path(path)
    posts: list[Post] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            try:
                post = Post(
                    id=str(obj["id"]),
                    text=str(obj["text"]),
                    source=str(obj["source"]),
                    raw_labels=tuple(str(l) for l in obj["labels"]),
                )
            except KeyError as exc:
                raise CorpusError(f"{path}:{lineno}: missing field {exc.args[0]!r}") from exc
            except CorpusError as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from exc
            if expected_source is not None and post.source != expected_source:
                raise CorpusError(
                    f"{path}:{lineno}: source {post.source!r} != expected {expected_source!r}"
                )
            if not post.raw_labels:
                raise CorpusError(f"{path}:{lineno}: post {post.id!r} carries no labels")
            if post.id in seen:
                raise CorpusError(f"{path}:{lineno}: duplicate id {post.id!r}")
            seen.add(post.id)
            posts.append(post)
    posts.sort(key=lambda p: p.id)
    return posts


def load_emotion_corpus(path: str | Path) -> list[Post]:
    """Load an emotion-labeled corpus, validating every label against the
    28-item taxonomy (27 emotions + neutral)."""
    path = Path(path)
    posts = load_posts_jsonl(path, expected_source="emotion_corpus")
    for post in posts:
        for label in post.raw_labels:
            if label not in EMOTION_INDEX:
                raise CorpusError(
                    f"{path}: post {post.id!r}: label {label!r} is not in the "
                    f"28-item emotion taxonomy"
                )
    return posts


def write_posts_jsonl(posts: Iterable[Post], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for post in sorted(posts, key=lambda p: p.id):
            fh.write(json.dumps(
                {"id": post.id, "text": post.text,
                 "labels": list(post.raw_labels), "source": post.source},
                ensure_ascii=False, sort_keys=True,
            ))
            fh.write("\n")


def write_cyber_dataset(dataset: Dataset, path: str | Path) -> None:
    """Persist a labeled dataset in the JSONL corpus format, with the final
    class name as the single label string."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for post, label in sorted(dataset, key=lambda it: it[0].id):
            fh.write(json.dumps(
                {"id": post.id, "text": post.text,
                 "labels": [CLASS_NAMES[label]], "source": post.source},
                ensure_ascii=False, sort_keys=True,
            ))
            fh.write("\n")


def load_cyber_dataset(path: str | Path) -> Dataset:
    """Inverse of :func:`write_cyber_dataset`."""
    path = Path(path)
    dataset: Dataset = []
    for post in load_posts_jsonl(path):
        name = post.raw_labels[0]
        if name not in NAME_TO_CLASS:
            raise CorpusError(f"{path}: post {post.id!r}: unknown class name {name!r}")
        dataset.append((post, NAME_TO_CLASS[name]))
    return dataset


def write_split_manifest(splits: Iterable[DatasetSplit], path: str | Path) -> None:
    """CSV manifest with columns (split_name, id, role)."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["split_name", "id", "role"])
        for split in splits:
            for post, _ in split.train:
                writer.writerow([split.name, post.id, "train"])
            for post, _ in split.test:
                writer.writerow([split.name, post.id, "test"])


def read_split_manifest(path: str | Path) -> dict[str, dict[str, set[str]]]:
    """Return {split_name: {"train": ids, "test": ids}}."""
    path = Path(path)
    out: dict[str, dict[str, set[str]]] = {}
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            role = row["role"]
            if role not in ("train", "test"):
                raise CorpusError(f"{path}: bad role {role!r}")
            out.setdefault(row["split_name"], {"train": set(), "test": set()})[role].add(row["id"])
    return out


def corpus_statistics(dataset: Dataset) -> dict:
    """Class counts, shares, and per-class mean word lengths for reporting."""
    hist = class_histogram(dataset)
    total = len(dataset)
    lengths: dict[int, list[int]] = {c: [] for c in CLASSES}
    for post, label in dataset:
        lengths[label].append(len(post.text.split()))
    return {
        "total": total,
        "class_counts": {CLASS_NAMES[c]: hist.get(c, 0) for c in CLASSES},
        "class_share": {
            CLASS_NAMES[c]: (hist.get(c, 0) / total if total else 0.0) for c in CLASSES
        },
        "mean_word_length": {
            CLASS_NAMES[c]: (sum(lengths[c]) / len(lengths[c]) if lengths[c] else 0.0)
            for c in CLASSES
        },
    }
