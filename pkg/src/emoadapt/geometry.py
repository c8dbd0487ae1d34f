"""Embedding-space domain similarity and 2-D projection exports.

PCA is computed from the SVD of the mean-centered data with a fixed sign
convention (largest-magnitude loading positive), so identical inputs produce
identical output bits. The similarity between two domains is the cosine of
their centroids after projecting the *uncentered* embeddings onto the top-2
joint principal axes: with mean-centering the two centroids of equal-size
samples are forced antipodal and the cosine degenerates to -1, which says
nothing about the domains. The centroid cosine in the original embedding
space is reported alongside, since projections can exaggerate or flatten
the 2-D value.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class ProjectionResult:
    coordinates: np.ndarray          # (n, k), mean-centered projection
    explained_variance: np.ndarray   # (k,), non-increasing
    domain_tags: list[str]
    similarity: float
    method: str = "pca"              # coordinate method tag: "pca" or "tsne"
    similarity_method: str = "centroid_2d"
    centroid_similarity_2d: float = float("nan")
    mean_pairwise_similarity_2d: float = float("nan")
    centroid_similarity_full: float = float("nan")

    def __post_init__(self):
        if self.coordinates.shape[0] != len(self.domain_tags):
            raise GeometryError(
                f"{self.coordinates.shape[0]} coordinate rows vs "
                f"{len(self.domain_tags)} domain tags"
            )
        ev = np.asarray(self.explained_variance, dtype=float)
        if (np.diff(ev) > 1e-12).any():
            raise GeometryError("explained_variance must be non-increasing")


def _principal_axes(X: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Top-k principal axes of X. Returns (components (k,d), explained
    variance (k,), mean (d,)). Sign fixed per component."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise GeometryError(f"embeddings must be 2-D, got shape {X.shape}")
    n, d = X.shape
    if k < 1:
        raise GeometryError(f"k must be >= 1, got {k}")
    if n <= k:
        raise GeometryError(f"need more rows than components: n={n}, k={k}")
    if d < k:
        raise GeometryError(f"need dimension >= k: d={d}, k={k}")
    mean = X.mean(axis=0)
    Xc = X - mean
    _, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    tol = s[0] * max(n, d) * np.finfo(np.float64).eps if s.size and s[0] > 0 else 0.0
    rank = int((s > tol).sum())
    if rank < k:
        raise GeometryError(f"rank {rank} of centered data is below k={k}")
    components = Vt[:k].copy()
    for i in range(k):
        j = int(np.argmax(np.abs(components[i])))
        if components[i, j] < 0:
            components[i] = -components[i]
    explained = (s[:k] ** 2) / (n - 1)
    return components, explained, mean


def pca_reduce(embeddings: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean-centered projection onto the top-k principal components, ordered
    by descending variance, deterministic under the sign convention."""
    components, explained, mean = _principal_axes(embeddings, k)
    coords = (np.asarray(embeddings, dtype=np.float64) - mean) @ components.T
    return coords, explained


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise GeometryError("cosine undefined for zero-norm vector")
    return float(a @ b / (na * nb))


def domain_similarity(
    emotion_sample: Sequence,
    cyber_sample: Sequence,
    embedder: Callable[[Sequence], np.ndarray],
    *,
    similarity_method: str = "centroid_2d",
    reducer: Callable[[np.ndarray], np.ndarray] | None = None,
) -> ProjectionResult:
    """Embed both samples, jointly PCA-reduce to 2-D, and score how close the
    domains sit.

    ``similarity_method`` picks which value lands in ``similarity``:
    "centroid_2d" (default), "mean_pairwise_2d", or "centroid_full". All
    three are always computed and carried on the result. A neighborhood
    embedding (e.g. t-SNE) may be supplied as ``reducer`` to replace the
    plotted coordinates; the similarity numbers stay PCA-based.
    """
    if not len(emotion_sample) or not len(cyber_sample):
        raise GeometryError("both samples must be non-empty")
    E = np.asarray(embedder(emotion_sample), dtype=np.float64)
    C = np.asarray(embedder(cyber_sample), dtype=np.float64)
    if E.shape[1] != C.shape[1]:
        raise GeometryError(
            f"embedding widths differ: {E.shape[1]} vs {C.shape[1]}"
        )
    X = np.vstack([E, C])
    components, explained, mean = _principal_axes(X, 2)
    centered = (X - mean) @ components.T
    raw = X @ components.T  # uncentered projection: centroids stay meaningful
    n_e = len(E)
    cent_e2, cent_c2 = raw[:n_e].mean(axis=0), raw[n_e:].mean(axis=0)
    centroid_2d = _cosine(cent_e2, cent_c2)

    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    unit = np.divide(raw, norms, out=np.zeros_like(raw), where=norms > 0)
    # mean over all cross pairs of cos(a_i, b_j) == dot of the two means
    mean_pairwise_2d = float(unit[:n_e].mean(axis=0) @ unit[n_e:].mean(axis=0))

    centroid_full = _cosine(E.mean(axis=0), C.mean(axis=0))

    chosen = {
        "centroid_2d": centroid_2d,
        "mean_pairwise_2d": mean_pairwise_2d,
        "centroid_full": centroid_full,
    }
    if similarity_method not in chosen:
        raise GeometryError(f"unknown similarity method {similarity_method!r}")

    method = "pca"
    coords = centered
    if reducer is not None:
        coords = np.asarray(reducer(X), dtype=np.float64)
        if coords.shape[0] != X.shape[0]:
            raise GeometryError("reducer must return one row per input")
        method = "tsne"
    tags = ["emotion"] * n_e + ["cyberbullying"] * len(C)
    return ProjectionResult(
        coordinates=coords,
        explained_variance=explained,
        domain_tags=tags,
        similarity=chosen[similarity_method],
        method=method,
        similarity_method=similarity_method,
        centroid_similarity_2d=centroid_2d,
        mean_pairwise_similarity_2d=mean_pairwise_2d,
        centroid_similarity_full=centroid_full,
    )


def export_projection(
    result: ProjectionResult, dataset_labels: Sequence[int], path: str | Path
) -> None:
    """CSV with columns (x, y, domain, class): enough to regenerate the
    similarity scatter and the class-colored projection in any plotting tool."""
    if len(dataset_labels) != result.coordinates.shape[0]:
        raise GeometryError(
            f"{len(dataset_labels)} labels vs {result.coordinates.shape[0]} rows"
        )
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y", "domain", "class"])
        for (x, y), tag, label in zip(result.coordinates[:, :2], result.domain_tags, dataset_labels):
            writer.writerow([repr(float(x)), repr(float(y)), tag, int(label)])


def read_projection(path: str | Path) -> tuple[np.ndarray, list[str], list[int]]:
    """Inverse of :func:`export_projection` (coordinates recovered exactly)."""
    path = Path(path)
    coords: list[list[float]] = []
    tags: list[str] = []
    labels: list[int] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            coords.append([float(row["x"]), float(row["y"])])
            tags.append(row["domain"])
            labels.append(int(row["class"]))
    arr = np.asarray(coords, dtype=np.float64) if coords else np.zeros((0, 2))
    return arr, tags, labels


def similarity_summary(
    result: ProjectionResult, seed: int, sample_size: int
) -> dict:
    return {
        "method": result.similarity_method,
        "value": result.similarity,
        "seed": seed,
        "sample_size": sample_size,
        "centroid_2d": result.centroid_similarity_2d,
        "mean_pairwise_2d": result.mean_pairwise_similarity_2d,
        "centroid_full_dim": result.centroid_similarity_full,
    }


def write_similarity_summary(summary: dict, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
