"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``. Published full-scale
results are reference anchors only; these checks are oracle-equivalence,
exact-count, and directional desk-scale properties with pinned tolerances.
"""

import os
from collections import Counter

import numpy as np
import pytest

from emoadapt.backend import ReferenceBackend, TrainConfig
from emoadapt.cli import main
from emoadapt.corpus import (
    BASELINE_TRAIN_COUNTS,
    CURVE_TRAIN_COUNTS,
    EMOTION_INDEX,
    Post,
    class_histogram,
    load_cyber_dataset,
    make_learning_curve_subsets,
    stratified_split,
)
from emoadapt.geometry import domain_similarity, pca_reduce
from emoadapt.mapping import apply_concept_map, default_concept_map, emotion_likelihood_matrix
from emoadapt.metrics import ConfusionMatrix, confusion, macro_average, per_class_prf
from emoadapt.regimes import (
    ExperimentSpec,
    mean_macro_f1,
    run_baseline,
    run_few_shot,
    run_learning_curve,
    run_zero_shot,
)

TOL = 1e-9


def verdict(number, name, passed):
    print(f"\nACCEPTANCE {number} ({name}): {'PASS' if passed else 'FAIL'}")
    assert passed, f"acceptance criterion {number} ({name}) failed"


def _spec(regime, **kwargs):
    return ExperimentSpec(
        regime=regime, train_config=TrainConfig(learning_rate=0.5, seed=1), **kwargs
    )


# ------------------------------------------------------------------ 1

def test_criterion_1_corpus_fidelity(data_dir, tmp_path):
    out = tmp_path / "built"
    rc = main([
        "build-corpus",
        "--harassment", str(data_dir / "harassment.jsonl"),
        "--defamation", str(data_dir / "defamation.jsonl"),
        "--out", str(out),
    ])
    dataset = load_cyber_dataset(out / "hdcyberbullying.jsonl")
    hist = class_histogram(dataset)
    ok = (
        rc == 0
        and len(dataset) == 2907
        and hist == {0: 1453, 1: 1204, 2: 250}
    )
    verdict(1, "corpus fidelity 2907 = 1453/1204/250", ok)


# ------------------------------------------------------------------ 2

def test_criterion_2_published_training_counts(cyber_dataset):
    split = stratified_split(cyber_dataset, 0.1, seed=0)
    ok = class_histogram(split.train) == BASELINE_TRAIN_COUNTS
    subsets = make_learning_curve_subsets(cyber_dataset, seed=0)
    for s in subsets:
        size = len(s.train)
        ok = ok and class_histogram(s.train) == CURVE_TRAIN_COUNTS[size]
    ok = ok and sorted(len(s.train) for s in subsets) == [72, 140, 210, 400, 700, 1300]
    verdict(2, "published per-class training counts exact", ok)


# ------------------------------------------------------------------ 3

def _all_matrices(limit):
    def rec(cells, remaining, idx):
        if idx == 8:
            yield cells + [remaining]
            return
        for v in range(remaining + 1):
            yield from rec(cells + [v], remaining - v, idx + 1)
    for total in range(limit + 1):
        yield from rec([], total, 0)


def _brute_force_prf(flat):
    """Independent oracle: expand to pairs, count, apply the formulas."""
    pairs = []
    for t in range(3):
        for p in range(3):
            pairs.extend([(t, p)] * flat[3 * t + p])
    out = {}
    for c in range(3):
        tp = sum(1 for t, p in pairs if t == c and p == c)
        fp = sum(1 for t, p in pairs if t != c and p == c)
        fn = sum(1 for t, p in pairs if t == c and p != c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        out[c] = (precision, recall, f1)
    macro = tuple(sum(out[c][i] for c in range(3)) / 3 for i in range(3))
    tally = [[0] * 3 for _ in range(3)]
    for t, p in pairs:
        tally[t][p] += 1
    return out, macro, tally, pairs


def test_criterion_3_metrics_oracle_exhaustive():
    checked = 0
    ok = True
    for flat in _all_matrices(12):
        want, want_macro, want_tally, pairs = _brute_force_prf(flat)
        matrix = ConfusionMatrix(cells=np.array(flat).reshape(3, 3))
        got = per_class_prf(matrix)
        got_macro = macro_average(got)
        for c in range(3):
            for g, w in zip(got[c], want[c]):
                ok = ok and abs(g - w) <= TOL
        ok = ok and all(abs(g - w) <= TOL for g, w in zip(got_macro, want_macro))
        if pairs:
            rebuilt = confusion([t for t, _ in pairs], [p for _, p in pairs])
            ok = ok and rebuilt.cells.tolist() == want_tally
        checked += 1
        if not ok:
            break
    ok = ok and checked == 293930  # all 3x3 matrices with total <= 12
    verdict(3, f"metrics oracle over {checked} matrices", ok)


# ------------------------------------------------------------------ 4

def test_criterion_4_concept_map_on_planted_fixture():
    cm = default_concept_map()
    supplies = {"gratitude": 120, "joy": 100, "anger": 90, "disgust": 60, "surprise": 80}
    posts, conflict_ids, unmapped_ids = [], [], []
    i = 0
    for emotion, n in supplies.items():
        for _ in range(n):
            posts.append(Post(id=f"m{i:03d}", text=f"text {i}",
                              source="emotion_corpus", raw_labels=(emotion,)))
            i += 1
    for j in range(30):  # hand-planted conflicts
        pair = [("anger", "joy"), ("surprise", "gratitude"), ("disgust", "joy")][j % 3]
        posts.append(Post(id=f"x{j:03d}", text="conflicted",
                          source="emotion_corpus", raw_labels=pair))
        conflict_ids.append(f"x{j:03d}")
    for j in range(20):
        posts.append(Post(id=f"u{j:03d}", text="unmapped",
                          source="emotion_corpus", raw_labels=("neutral",)))
        unmapped_ids.append(f"u{j:03d}")
    assert len(posts) == 500

    budget = 400
    out = apply_concept_map(posts, cm, budget=budget, seed=5)
    out_ids = {p.id for p, _ in out}

    # independent restatement of the composition policy
    order = sorted(supplies, key=EMOTION_INDEX.__getitem__)
    alloc = {}
    for k, e in enumerate(order):
        alloc[e] = min(budget // 5 + (1 if k < budget % 5 else 0), supplies[e])
    deficit = budget - sum(alloc.values())
    if deficit > 0:
        cap = {e: supplies[e] - alloc[e] for e in order}
        for e in order:
            alloc[e] += (deficit * cap[e]) // sum(cap.values())
        leftover = budget - sum(alloc.values())
        for e in sorted(order, key=lambda e: (-supplies[e], EMOTION_INDEX[e])):
            take = min(supplies[e] - alloc[e], leftover)
            alloc[e] += take
            leftover -= take

    got = Counter(p.raw_labels[0] for p, _ in out)
    ok = (
        len(out) == budget
        and all(label in (0, 1, 2) for _, label in out)
        and not (out_ids & set(conflict_ids))
        and not (out_ids & set(unmapped_ids))
        and dict(got) == {e: n for e, n in alloc.items() if n}
    )
    verdict(4, "concept map drops conflicts and hits composition exactly", ok)


# ------------------------------------------------------------------ 5

def test_criterion_5_zero_shot_purity(aligned):
    emotion, dataset = aligned
    runs = run_zero_shot(_spec("zero_shot"), emotion, dataset, ReferenceBackend())
    target_ids = {p.id for p, _ in dataset}
    ok = len(runs) == 5 and all(
        not (set(r.train_ids) & target_ids) for r in runs
    )
    verdict(5, "zero-shot training never touches target ids", ok)


# ------------------------------------------------------------------ 6

def test_criterion_6_directional_transfer_gains(aligned):
    emotion, dataset = aligned
    backend = ReferenceBackend()
    base = mean_macro_f1(run_baseline(_spec("baseline"), dataset, backend))
    few = mean_macro_f1(run_few_shot(_spec("few_shot"), emotion, dataset, backend))
    curve = run_learning_curve(_spec("learning_curve"), emotion, dataset, backend)

    def gap(size):
        return mean_macro_f1(curve[size].adapted) - mean_macro_f1(curve[size].plain)

    ok = few >= base and gap(72) >= gap(1300)
    print(f"\n  few-shot {few:.3f} vs baseline {base:.3f}; "
          f"gap(72) {gap(72):+.3f} vs gap(1300) {gap(1300):+.3f}")
    verdict(6, "few-shot >= baseline and gap(72) >= gap(1300) over 5 seeds", ok)


# ------------------------------------------------------------------ 7

def test_criterion_7_likelihood_rows_sum_to_one(aligned):
    # fixture pairs
    rng = np.random.default_rng(0)
    emotions = list(EMOTION_INDEX)
    pairs = [(int(rng.integers(0, 3)), emotions[int(rng.integers(0, 28))])
             for _ in range(500)]
    fixture = emotion_likelihood_matrix(pairs)
    ok = all(
        abs(fixture.values[c].sum() - 1.0) <= TOL
        for c in range(3) if fixture.defined[c]
    )

    # real pipeline: emotion classifier over the aligned cyber test set
    from emoadapt.analysis import predict_emotions
    from emoadapt.regimes import target_split

    emotion, dataset = aligned
    split = target_split(_spec("zero_shot"), dataset)
    preds = predict_emotions(
        emotion, [p for p, _ in split.test[:600]],
        TrainConfig(learning_rate=0.5, seed=1),
    )
    real = emotion_likelihood_matrix(
        list(zip((l for _, l in split.test[:600]), preds))
    )
    ok = ok and all(
        abs(real.values[c].sum() - 1.0) <= TOL
        for c in range(3) if real.defined[c]
    ) and all(real.defined)
    verdict(7, "likelihood rows sum to 1 +- 1e-9", ok)


# ------------------------------------------------------------------ 8

def test_criterion_8_geometry_oracles():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(120, 24)) * rng.uniform(0.5, 4.0, size=24)
    coords, ev = pca_reduce(X, 2)
    eig = np.sort(np.linalg.eigvalsh(np.cov(X, rowvar=False)))[::-1][:2]
    ok = bool(np.allclose(ev, eig, atol=TOL))
    ok = ok and bool(np.allclose(np.var(coords, axis=0, ddof=1), eig, atol=TOL))

    c2, e2 = pca_reduce(X, 2)
    ok = ok and c2.tobytes() == coords.tobytes() and e2.tobytes() == ev.tobytes()

    backend = ReferenceBackend()
    posts = [Post(id=f"s{i}", text=f"shared words {i} in both", source="emotion_corpus",
                  raw_labels=("joy",)) for i in range(50)]
    self_sim = domain_similarity(posts, list(posts), backend.embed).similarity
    ok = ok and self_sim >= 0.999

    a = [Post(id=f"a{i}", text="t", source="emotion_corpus", raw_labels=("joy",))
         for i in range(150)]
    b = [Post(id=f"b{i}", text="t", source="emotion_corpus", raw_labels=("joy",))
         for i in range(150)]
    table = {}
    for p in a:
        v = np.zeros(32)
        v[0] = 6.0 + rng.normal() * 2.0
        table[p.id] = v + rng.normal(size=32) * 0.05
    for p in b:
        v = np.zeros(32)
        v[1] = 6.0 + rng.normal() * 2.0
        table[p.id] = v + rng.normal(size=32) * 0.05
    ortho = domain_similarity(a, b, lambda ps: np.stack([table[p.id] for p in ps]))
    ok = ok and abs(ortho.similarity) <= 0.05
    verdict(8, "PCA eigen-oracle, self-sim >= 0.999, orthogonal ~ 0, deterministic", ok)


# ------------------------------------------------------------------ 9

def test_criterion_9_pipeline_determinism(data_dir, tmp_path):
    built = tmp_path / "built"
    rc = main([
        "build-corpus",
        "--harassment", str(data_dir / "harassment.jsonl"),
        "--defamation", str(data_dir / "defamation.jsonl"),
        "--out", str(built),
    ])
    assert rc == 0
    (built / "emotion.jsonl").write_bytes((data_dir / "emotion.jsonl").read_bytes())

    spec_path = tmp_path / "spec.json"
    _spec("few_shot").to_json(spec_path)
    outs = []
    for name in ("first", "second"):
        out = tmp_path / name
        rc = main(["run", "--spec", str(spec_path), "--data-dir", str(built),
                   "--out", str(out)])
        assert rc == 0
        outs.append(out)
    files = ["aggregate.csv", "aggregate_table.csv", "confusion_mean.csv",
             "split_manifest.csv"] + [f"report_seed{s}.csv" for s in (1, 2, 3, 4, 5)]
    ok = all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in files)
    verdict(9, "two identical runs produce byte-identical aggregate reports", ok)


# ------------------------------------------------------------------ 10 (optional)

@pytest.mark.at_scale
@pytest.mark.skipif(
    os.environ.get("EMOADAPT_AT_SCALE") != "1",
    reason="needs downloaded encoder weights and GPU-scale time; not gating",
)
def test_criterion_10_at_scale_smoke(data_dir, tmp_path):
    """Qualitative failure signature on a real encoder: defamation F1 near 0
    without transfer, strictly positive with it. Sign/ordering only."""
    from emoadapt.backend import resolve_backend
    from emoadapt.metrics import aggregate_runs
    from emoadapt.synthdata import synthetic_aligned

    emotion, dataset = synthetic_aligned(0)
    backend = resolve_backend(os.environ.get("EMOADAPT_AT_SCALE_MODEL", "distilbert-base-uncased"))
    spec = ExperimentSpec(regime="few_shot", train_config=TrainConfig(), seeds=(1,))
    base = aggregate_runs([r.report for r in run_baseline(spec, dataset, backend)])
    few = aggregate_runs([r.report for r in run_few_shot(spec, emotion, dataset, backend)])
    assert base.per_class_mean[2].f1 <= 0.05
    assert few.per_class_mean[2].f1 > 0.0
