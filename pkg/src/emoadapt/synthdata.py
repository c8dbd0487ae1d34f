"""Synthetic corpora with the released distribution's shape.

Ingestion starts from locally provided files, so tests and demos need inputs
that look like the real thing: a harassment corpus, a paired fake/legitimate
news corpus, and an emotion corpus whose per-class vocabulary is aligned with
the cyberbullying classes. Alignment means a classifier trained on mapped
emotion posts has genuine signal on the cyberbullying side, which is what the
transfer regimes exercise.

Class vocabularies are sized so that scarce training data underfits the
defamation class: its pool is much larger than the few published training
examples can cover, while the mapped emotion sample covers it easily.

Run ``python -m emoadapt.synthdata OUTDIR`` to write the three JSONL files.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from .corpus import (
    Dataset,
    Post,
    build_hdcyberbullying,
    normalize_defamation_labels,
    normalize_harassment_labels,
    write_posts_jsonl,
)

# Per-class content vocabulary; defamation's (class 2) is deliberately large.
# The first few words of each pool are Zipf-style head words drawn by almost
# every text of that class; the rest is a long tail.
POOLS = {
    0: [f"calm{i:03d}" for i in range(60)],
    1: [f"rage{i:03d}" for i in range(40)],
    2: [f"rumor{i:03d}" for i in range(150)],
}
HEAD_WORDS = 4
FILLER = [f"word{i:03d}" for i in range(30)]

# (head, tail, filler) token draws per text of each class.
TEXT_SHAPE = {0: (2, 5, 8), 1: (2, 8, 6), 2: (3, 11, 8)}

HARASSMENT_TAG_CHOICES = ("Malignant", "Highly malignant", "Rude", "Threat", "Abuse", "Loathe")

EMOTION_OF_CLASS = {0: ("gratitude", "joy"), 1: ("anger", "disgust"), 2: ("surprise",)}
CLASS_OF_EMOTION = {e: c for c, es in EMOTION_OF_CLASS.items() for e in es}

CROSS_NOISE_P = 0.25  # chance a text borrows two tokens from another class
# chance a text carries no head word and only a sliver of its class pool;
# generic chatter is common in the benign class, rare in explicit harassment
HARD_TEXT_P = {0: 0.22, 1: 0.05, 2: 0.12}


def _class_tokens(rng: np.random.Generator, label: int, n_head: int, n_tail: int) -> list:
    head, tail = POOLS[label][:HEAD_WORDS], POOLS[label][HEAD_WORDS:]
    return list(rng.choice(head, size=n_head)) + list(rng.choice(tail, size=n_tail))


def _make_text(rng: np.random.Generator, label: int, with_marker: bool = True) -> str:
    n_head, n_tail, n_filler = TEXT_SHAPE[label]
    if rng.random() < HARD_TEXT_P[label]:
        n_head, n_tail = 0, max(1, n_tail // 4)
    tokens = _class_tokens(rng, label, n_head, n_tail)
    tokens += list(rng.choice(FILLER, size=n_filler))
    if rng.random() < CROSS_NOISE_P:
        other = int(rng.choice([c for c in POOLS if c != label]))
        tokens += list(rng.choice(POOLS[other][HEAD_WORDS:], size=2))
    rng.shuffle(tokens)
    if with_marker:
        # person marker so the name filter keeps synthetic posts
        tokens.insert(int(rng.integers(0, len(tokens) + 1)), "##")
    return " ".join(str(t) for t in tokens)


def synthetic_source_corpora(seed: int = 0) -> tuple[list[Post], list[Post]]:
    """Harassment-corpus and defamation-corpus posts whose normalized labels
    reproduce the released class histogram (1,453 / 1,204 / 250)."""
    rng = np.random.default_rng(seed)
    harassment: list[Post] = []
    for i in range(1204):
        n_tags = int(rng.integers(1, 3))
        tags = tuple(rng.choice(HARASSMENT_TAG_CHOICES, size=n_tags, replace=False))
        harassment.append(Post(
            id=f"h{i:05d}", text=_make_text(rng, 1),
            source="harassment_corpus", raw_labels=tags,
        ))
    for i in range(1203):
        harassment.append(Post(
            id=f"hc{i:05d}", text=_make_text(rng, 0),
            source="harassment_corpus", raw_labels=("clean",),
        ))
    defamation: list[Post] = []
    for i in range(250):
        defamation.append(Post(
            id=f"d{i:05d}", text=_make_text(rng, 2),
            source="defamation_corpus", raw_labels=("fake",),
        ))
    for i in range(250):
        defamation.append(Post(
            id=f"dl{i:05d}", text=_make_text(rng, 0),
            source="defamation_corpus", raw_labels=("legitimate",),
        ))
    return harassment, defamation


# (head, tail, filler) draws for emotion-domain texts of each mapped class.
EMOTION_TEXT_SHAPE = {0: (3, 2, 9), 1: (1, 4, 9), 2: (3, 6, 7)}


def _make_emotion_text(rng: np.random.Generator, emotion: str, label: int) -> str:
    # shares the class pool with the cyber side but leans on filler plus an
    # emotion-specific token, so transfer works without being a giveaway
    n_head, n_tail, n_filler = EMOTION_TEXT_SHAPE[label]
    tokens = _class_tokens(rng, label, n_head, n_tail)
    tokens += list(rng.choice(FILLER, size=n_filler))
    tokens += [f"feel_{emotion}"] * int(rng.integers(1, 3))
    if rng.random() < CROSS_NOISE_P:
        other = int(rng.choice([c for c in POOLS if c != label]))
        tokens += list(rng.choice(POOLS[other][HEAD_WORDS:], size=2))
    rng.shuffle(tokens)
    return " ".join(str(t) for t in tokens)


def synthetic_emotion_corpus(seed: int = 0, per_emotion: int = 800) -> list[Post]:
    """Emotion posts aligned with the class pools, plus unmapped and
    conflicting entries so the mapping's drop rules see real work."""
    rng = np.random.default_rng(seed + 1)
    posts: list[Post] = []
    i = 0
    for emotion, label in sorted(CLASS_OF_EMOTION.items()):
        for _ in range(per_emotion):
            labels: tuple[str, ...] = (emotion,)
            if rng.random() < 0.1:
                # second label that maps nowhere; must not disturb the class
                labels = (emotion, "annoyance" if label == 1 else "realization")
            posts.append(Post(
                id=f"e{i:05d}", text=_make_emotion_text(rng, emotion, label),
                source="emotion_corpus", raw_labels=labels,
            ))
            i += 1
    for _ in range(100):  # unmapped-only posts: dropped by the concept map
        emotion = str(rng.choice(["neutral", "curiosity", "confusion", "caring"]))
        posts.append(Post(
            id=f"e{i:05d}", text=" ".join(str(t) for t in rng.choice(FILLER, size=10)),
            source="emotion_corpus", raw_labels=(emotion,),
        ))
        i += 1
    for _ in range(30):  # conflicts: map to two distinct classes
        pair = [("anger", "joy"), ("disgust", "gratitude"), ("surprise", "joy")][int(rng.integers(0, 3))]
        posts.append(Post(
            id=f"e{i:05d}", text=_make_text(rng, 0, with_marker=False),
            source="emotion_corpus", raw_labels=pair,
        ))
        i += 1
    return sorted(posts, key=lambda p: p.id)


def synthetic_aligned(seed: int = 0) -> tuple[list[Post], Dataset]:
    """(emotion corpus, built cyberbullying dataset) sharing per-class
    vocabulary; the dataset has the released class histogram."""
    harassment, defamation = synthetic_source_corpora(seed)
    h_labeled = [(p, normalize_harassment_labels(p.raw_labels)) for p in harassment]
    d_labeled = [(p, normalize_defamation_labels(p.raw_labels[0])) for p in defamation]
    dataset = build_hdcyberbullying(h_labeled, d_labeled)
    return synthetic_emotion_corpus(seed), dataset


def write_synthetic_data_dir(out_dir: str | Path, seed: int = 0) -> dict[str, Path]:
    """Write harassment.jsonl, defamation.jsonl, and emotion.jsonl."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    harassment, defamation = synthetic_source_corpora(seed)
    emotion = synthetic_emotion_corpus(seed)
    paths = {
        "harassment": out_dir / "harassment.jsonl",
        "defamation": out_dir / "defamation.jsonl",
        "emotion": out_dir / "emotion.jsonl",
    }
    write_posts_jsonl(harassment, paths["harassment"])
    write_posts_jsonl(defamation, paths["defamation"])
    write_posts_jsonl(emotion, paths["emotion"])
    return paths


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if len(args) not in (1, 2):
        print("usage: python -m emoadapt.synthdata OUTDIR [SEED]", file=sys.stderr)
        return 2
    seed = int(args[1]) if len(args) == 2 else 0
    paths = write_synthetic_data_dir(args[0], seed=seed)
    for name, path in paths.items():
        print(f"wrote {name}: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
