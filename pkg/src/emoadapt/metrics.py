"""Per-class precision/recall/F1, macro averages, confusion matrices, and
multi-run aggregation for the three-class task.

Zero denominators yield 0 with a flag instead of an error: an untrained
minority class legitimately scores 0/0/0 and the reports must be able to
say so.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .corpus import CLASSES, CLASS_NAMES


class MetricsError(ValueError):
    pass


class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class ConfusionMatrix:
    """3x3 counts; rows are true classes, columns predicted classes."""

    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.int64)
        if cells.shape != (3, 3):
            raise MetricsError(f"confusion matrix must be 3x3, got {cells.shape}")
        if (cells < 0).any():
            raise MetricsError("confusion cells must be non-negative")
        object.__setattr__(self, "cells", cells)

    @property
    def total(self) -> int:
        return int(self.cells.sum())

    def to_csv(self, path: str | Path) -> None:
        path = Path(path)
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["true\\pred", 0, 1, 2])
            for c in CLASSES:
                writer.writerow([c] + [int(v) for v in self.cells[c]])


def confusion(truths: Sequence[int], predictions: Sequence[int]) -> ConfusionMatrix:
    if len(truths) != len(predictions):
        raise MetricsError(
            f"length mismatch: {len(truths)} truths vs {len(predictions)} predictions"
        )
    cells = np.zeros((3, 3), dtype=np.int64)
    for t, p in zip(truths, predictions):
        if t not in CLASSES or p not in CLASSES:
            raise MetricsError(f"label pair ({t}, {p}) outside {{0,1,2}}")
        cells[t, p] += 1
    return ConfusionMatrix(cells=cells)


def per_class_prf(matrix: ConfusionMatrix) -> dict[int, PRF]:
    """P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R); zero denominators
    give 0 (see :func:`degenerate_classes` for the flags)."""
    cells = matrix.cells
    out: dict[int, PRF] = {}
    for c in CLASSES:
        tp = float(cells[c, c])
        fp = float(cells[:, c].sum() - cells[c, c])
        fn = float(cells[c, :].sum() - cells[c, c])
        p = tp / (tp + fp) if tp + fp > 0 else 0.0
        r = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        out[c] = PRF(p, r, f1)
    return out


def degenerate_classes(matrix: ConfusionMatrix) -> dict[int, tuple[str, ...]]:
    """Which of precision/recall/f1 hit a zero denominator, per class."""
    cells = matrix.cells
    flags: dict[int, tuple[str, ...]] = {}
    for c in CLASSES:
        tp = float(cells[c, c])
        fp = float(cells[:, c].sum() - cells[c, c])
        fn = float(cells[c, :].sum() - cells[c, c])
        degenerate = []
        if tp + fp == 0:
            degenerate.append("precision")
        if tp + fn == 0:
            degenerate.append("recall")
        p = tp / (tp + fp) if tp + fp > 0 else 0.0
        r = tp / (tp + fn) if tp + fn > 0 else 0.0
        if p + r == 0:
            degenerate.append("f1")
        if degenerate:
            flags[c] = tuple(degenerate)
    return flags


def macro_average(per_class: dict[int, PRF]) -> PRF:
    """Unweighted arithmetic mean across the three classes. Macro-F1 is the
    mean of per-class F1s, not the F1 of the means."""
    missing = [c for c in CLASSES if c not in per_class]
    if missing:
        raise MetricsError(f"macro average needs all three classes; missing {missing}")
    return PRF(
        sum(per_class[c].precision for c in CLASSES) / 3.0,
        sum(per_class[c].recall for c in CLASSES) / 3.0,
        sum(per_class[c].f1 for c in CLASSES) / 3.0,
    )


@dataclass(frozen=True)
class EvalReport:
    """Everything one evaluation run reports."""

    per_class: dict[int, PRF]
    macro: PRF
    confusion: ConfusionMatrix
    n_test: int
    seed: int
    undefined: dict[int, tuple[str, ...]]

    def __post_init__(self):
        expect = macro_average(self.per_class)
        for got, want in zip(self.macro, expect):
            if abs(got - want) > 1e-9:
                raise MetricsError("macro fields must equal per-class means")
        if self.confusion.total != self.n_test:
            raise MetricsError(
                f"confusion total {self.confusion.total} != n_test {self.n_test}"
            )


def evaluate(truths: Sequence[int], predictions: Sequence[int], seed: int) -> EvalReport:
    matrix = confusion(truths, predictions)
    per_class = per_class_prf(matrix)
    return EvalReport(
        per_class=per_class,
        macro=macro_average(per_class),
        confusion=matrix,
        n_test=matrix.total,
        seed=seed,
        undefined=degenerate_classes(matrix),
    )


@dataclass(frozen=True)
class RunAggregate:
    """Field-wise mean and population standard deviation over several runs
    with identical test sets. Confusion cells are averaged as reals."""

    per_class_mean: dict[int, PRF]
    per_class_std: dict[int, PRF]
    macro_mean: PRF
    macro_std: PRF
    confusion_mean: np.ndarray
    confusion_std: np.ndarray
    n_test: int
    n_runs: int
    seeds: tuple[int, ...]


def aggregate_runs(reports: Sequence[EvalReport]) -> RunAggregate:
    if not reports:
        raise MetricsError("aggregate_runs needs at least one report")
    n_test = reports[0].n_test
    for r in reports:
        if r.n_test != n_test:
            raise MetricsError(
                f"mismatched n_test across reports: {r.n_test} != {n_test}"
            )

    def stats(values: list[float]) -> tuple[float, float]:
        arr = np.asarray(values, dtype=float)
        return float(arr.mean()), float(arr.std())  # population std

    per_class_mean: dict[int, PRF] = {}
    per_class_std: dict[int, PRF] = {}
    for c in CLASSES:
        triples = [stats([r.per_class[c][i] for r in reports]) for i in range(3)]
        per_class_mean[c] = PRF(*(t[0] for t in triples))
        per_class_std[c] = PRF(*(t[1] for t in triples))
    macro_triples = [stats([r.macro[i] for r in reports]) for i in range(3)]
    stacked = np.stack([r.confusion.cells for r in reports]).astype(float)
    return RunAggregate(
        per_class_mean=per_class_mean,
        per_class_std=per_class_std,
        macro_mean=PRF(*(t[0] for t in macro_triples)),
        macro_std=PRF(*(t[1] for t in macro_triples)),
        confusion_mean=stacked.mean(axis=0),
        confusion_std=stacked.std(axis=0),
        n_test=n_test,
        n_runs=len(reports),
        seeds=tuple(r.seed for r in reports),
    )


# --------------------------------------------------------------------------
# CSV export

def _fmt(x: float) -> str:
    return f"{x:.10f}"


def report_to_csv(report: EvalReport, path: str | Path) -> None:
    """Per-class rows plus macro, with degenerate-metric flags."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row", "precision", "recall", "f1", "flags"])
        for c in CLASSES:
            prf = report.per_class[c]
            flags = ";".join(report.undefined.get(c, ()))
            writer.writerow([CLASS_NAMES[c], _fmt(prf.precision), _fmt(prf.recall), _fmt(prf.f1), flags])
        writer.writerow(["macro", _fmt(report.macro.precision), _fmt(report.macro.recall), _fmt(report.macro.f1), ""])
        writer.writerow(["n_test", report.n_test, "", "", ""])
        writer.writerow(["seed", report.seed, "", "", ""])


def aggregate_to_csv(agg: RunAggregate, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([
            "row", "precision_mean", "recall_mean", "f1_mean",
            "precision_std", "recall_std", "f1_std",
        ])
        for c in CLASSES:
            m, s = agg.per_class_mean[c], agg.per_class_std[c]
            writer.writerow([CLASS_NAMES[c]] + [_fmt(v) for v in (*m, *s)])
        writer.writerow(["macro"] + [_fmt(v) for v in (*agg.macro_mean, *agg.macro_std)])
        writer.writerow(["n_test", agg.n_test, "", "", "", "", ""])
        writer.writerow(["n_runs", agg.n_runs, "", "", "", "", ""])


def confusion_mean_to_csv(agg: RunAggregate, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["true\\pred", 0, 1, 2])
        for c in CLASSES:
            writer.writerow([c] + [_fmt(v) for v in agg.confusion_mean[c]])


# Published-table layout: rows H (harassment), D (defamation), A (macro).
_TABLE_ROWS = (("H", 1), ("D", 2), ("A", None))


def table_to_csv(aggregates: dict[str, RunAggregate], path: str | Path) -> None:
    """Rows H/D/A; one P/R/F1 column triple per regime, regimes sorted by name."""
    path = Path(path)
    regimes = sorted(aggregates)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["row"]
        for regime in regimes:
            header += [f"{regime}_P", f"{regime}_R", f"{regime}_F1"]
        writer.writerow(header)
        for row_name, label in _TABLE_ROWS:
            row = [row_name]
            for regime in regimes:
                agg = aggregates[regime]
                prf = agg.macro_mean if label is None else agg.per_class_mean[label]
                row += [_fmt(prf.precision), _fmt(prf.recall), _fmt(prf.f1)]
            writer.writerow(row)
