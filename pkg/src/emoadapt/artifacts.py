"""Run-directory artifacts: reports, confusion matrices, loss traces,
predictions, and the manifest that inventories them.

Every artifact a run writes is listed in manifest.json with its sha256, so a
completed run is self-describing and verifiable. Artifact content is
deterministic for the reference backend; the manifest additionally carries
timestamps and so is metadata, not a determinism surface.
"""

from __future__ import annotations

import csv
import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import DatasetSplit, write_split_manifest
from .metrics import (
    RunAggregate,
    aggregate_runs,
    aggregate_to_csv,
    confusion_mean_to_csv,
    report_to_csv,
    table_to_csv,
)
from .regimes import CurvePoint, ExperimentSpec, SeedRun


class ArtifactError(RuntimeError):
    pass


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_loss_trace(trace: Sequence[float], path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "loss"])
        for epoch, loss in enumerate(trace, start=1):
            writer.writerow([epoch, f"{loss:.10f}"])


def _write_predictions_rows(path: Path, rows: Iterable[tuple[str, int, int]]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "true", "pred"])
        for pid, t, p in rows:
            writer.writerow([pid, t, p])


def _seed_artifacts(out_dir: Path, runs: Sequence[SeedRun]) -> list[Path]:
    written: list[Path] = []
    for run in runs:
        report_path = out_dir / f"report_seed{run.seed}.csv"
        report_to_csv(run.report, report_path)
        written.append(report_path)
        conf_path = out_dir / f"confusion_seed{run.seed}.csv"
        run.report.confusion.to_csv(conf_path)
        written.append(conf_path)
        loss_path = out_dir / f"loss_seed{run.seed}.csv"
        write_loss_trace(run.loss_trace, loss_path)
        written.append(loss_path)
        pred_path = out_dir / f"predictions_seed{run.seed}.csv"
        _write_predictions_rows(
            pred_path, zip(run.test_ids, run.test_labels, run.predictions)
        )
        written.append(pred_path)
    agg = aggregate_runs([r.report for r in runs])
    agg_path = out_dir / "aggregate.csv"
    aggregate_to_csv(agg, agg_path)
    written.append(agg_path)
    agg_json = out_dir / "aggregate.json"
    agg_json.write_text(
        json.dumps(aggregate_to_dict(agg), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    written.append(agg_json)
    conf_mean = out_dir / "confusion_mean.csv"
    confusion_mean_to_csv(agg, conf_mean)
    written.append(conf_mean)
    return written


def aggregate_to_dict(agg: RunAggregate) -> dict:
    return {
        "per_class_mean": {str(c): list(agg.per_class_mean[c]) for c in agg.per_class_mean},
        "per_class_std": {str(c): list(agg.per_class_std[c]) for c in agg.per_class_std},
        "macro_mean": list(agg.macro_mean),
        "macro_std": list(agg.macro_std),
        "confusion_mean": [[float(v) for v in row] for row in agg.confusion_mean],
        "confusion_std": [[float(v) for v in row] for row in agg.confusion_std],
        "n_test": agg.n_test,
        "n_runs": agg.n_runs,
        "seeds": list(agg.seeds),
    }


def write_regime_run(
    out_dir: str | Path,
    spec: ExperimentSpec,
    runs: Sequence[SeedRun],
    split: DatasetSplit,
    data_checksums: dict[str, str],
    started_at: str,
    notes: dict | None = None,
) -> dict:
    """Write all artifacts for a baseline/zero-shot/few-shot run and return
    the manifest (also written as manifest.json)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    spec_path = out_dir / "spec.json"
    spec.to_json(spec_path)
    written.append(spec_path)
    split_path = out_dir / "split_manifest.csv"
    write_split_manifest([split], split_path)
    written.append(split_path)
    written.extend(_seed_artifacts(out_dir, runs))

    agg = aggregate_runs([r.report for r in runs])
    table_path = out_dir / "aggregate_table.csv"
    table_to_csv({spec.regime: agg}, table_path)
    written.append(table_path)

    return _write_manifest(
        out_dir, spec, written, data_checksums, started_at, notes=notes
    )


def write_curve_run(
    out_dir: str | Path,
    spec: ExperimentSpec,
    curve: dict[int, CurvePoint],
    splits: Sequence[DatasetSplit],
    data_checksums: dict[str, str],
    started_at: str,
    notes: dict | None = None,
) -> dict:
    """Write paired adapted/plain artifacts for every learning-curve size."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    spec_path = out_dir / "spec.json"
    spec.to_json(spec_path)
    written.append(spec_path)
    split_path = out_dir / "split_manifest.csv"
    write_split_manifest(splits, split_path)
    written.append(split_path)

    summary_rows = []
    for size in sorted(curve):
        point = curve[size]
        for arm_name, runs in (("adapted", point.adapted), ("plain", point.plain)):
            arm_dir = out_dir / f"size_{size}" / arm_name
            arm_dir.mkdir(parents=True, exist_ok=True)
            written.extend(_seed_artifacts(arm_dir, list(runs)))
            agg = aggregate_runs([r.report for r in runs])
            summary_rows.append(
                (size, arm_name, agg.macro_mean.f1, agg.macro_std.f1)
            )
    summary_path = out_dir / "curve_summary.csv"
    with summary_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["size", "arm", "macro_f1_mean", "macro_f1_std"])
        for size, arm, mean, std in summary_rows:
            writer.writerow([size, arm, f"{mean:.10f}", f"{std:.10f}"])
    written.append(summary_path)

    return _write_manifest(
        out_dir, spec, written, data_checksums, started_at, notes=notes
    )


def _write_manifest(
    out_dir: Path,
    spec: ExperimentSpec,
    written: Sequence[Path],
    data_checksums: dict[str, str],
    started_at: str,
    *,
    notes: dict | None = None,
    status: str = "complete",
    failed_seed: int | None = None,
) -> dict:
    manifest = {
        "spec_hash": spec.hash(),
        "regime": spec.regime,
        "seeds": list(spec.seeds),
        "split_seed": spec.split_seed,
        "data_checksums": data_checksums,
        "started_at": started_at,
        "finished_at": _utcnow(),
        "status": status,
        "failed_seed": failed_seed,
        "artifacts": {
            str(p.relative_to(out_dir)): sha256_file(p) for p in sorted(written)
        },
        "notes": notes or {},
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest


def write_failure_manifest(
    out_dir: str | Path,
    spec: ExperimentSpec,
    data_checksums: dict[str, str],
    started_at: str,
    failed_seed: int | None,
    error: str,
) -> dict:
    """Partial manifest for a run that did not complete."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    existing = [p for p in out_dir.rglob("*") if p.is_file() and p.name != "manifest.json"]
    return _write_manifest(
        out_dir, spec, existing, data_checksums, started_at,
        notes={"error": error}, status="failed", failed_seed=failed_seed,
    )


def load_manifest(run_dir: str | Path) -> dict:
    path = Path(run_dir) / "manifest.json"
    if not path.exists():
        raise ArtifactError(f"missing manifest: {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def verify_manifest(run_dir: str | Path) -> list[str]:
    """Return problems (missing artifacts, checksum mismatches); empty if ok."""
    run_dir = Path(run_dir)
    manifest = load_manifest(run_dir)
    problems = []
    for rel, digest in manifest["artifacts"].items():
        path = run_dir / rel
        if not path.exists():
            problems.append(f"missing artifact: {rel}")
        elif sha256_file(path) != digest:
            problems.append(f"checksum mismatch: {rel}")
    return problems


def read_predictions(path: str | Path) -> list[tuple[str, int, int]]:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"missing required artifact: {path}")
    rows: list[tuple[str, int, int]] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append((row["id"], int(row["true"]), int(row["pred"])))
    return rows
