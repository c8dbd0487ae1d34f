"""Classifier backends behind one train/predict/embed contract.

The experiment regimes only see this interface, so classifier families can be
swapped without touching the pipeline. The reference backend is a
deterministic linear softmax classifier over hashed bag-of-token features,
trained by mini-batch gradient descent: it runs anywhere, needs no weights or
network, and is bit-reproducible given (data, config seed). Transformer
adapters live in :mod:`emoadapt.hf_backend` and are resolved lazily.
"""

from __future__ import annotations

import json
import re
import zlib
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import Dataset, Post


class BackendError(RuntimeError):
    pass


class BackendResolutionError(BackendError):
    """model_id could not be resolved to a usable adapter."""


class UnsupportedOperationError(BackendError):
    """The adapter does not implement this part of the contract."""


class UnmappableGenerationError(BackendError):
    """A generative adapter produced output that maps to no class."""


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters and seed policy for one training run.

    Defaults follow the published settings (batch 32, Adam-style lr 4e-5,
    4 epochs, 400-token truncation). The reference backend honors the same
    fields but wants a much larger learning rate than a transformer would.
    """

    batch_size: int = 32
    learning_rate: float = 4e-5
    epochs: int = 4
    max_tokens: int = 400
    seed: int = 1
    model_id: str = "hashed-linear"

    def __post_init__(self):
        for name in ("batch_size", "epochs", "max_tokens"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def from_dict(cls, obj: dict) -> "TrainConfig":
        return cls(**obj)


class Backend(ABC):
    """Train/predict/embed contract shared by every classifier family."""

    label_arity: int = 3

    @abstractmethod
    def fine_tune(self, data: Dataset, config: TrainConfig, handle=None):
        """Train (or continue training ``handle``) on labeled posts.

        Returns (handle, loss_trace) with one mean loss per epoch."""

    @abstractmethod
    def predict(self, handle, posts: Sequence[Post]) -> list[int]:
        """One label in [0, label_arity) per post, order-aligned."""

    @abstractmethod
    def embed(self, posts: Sequence[Post], handle=None) -> np.ndarray:
        """One fixed-width vector per post; raises UnsupportedOperationError
        when the adapter has no embedding surface."""


# --------------------------------------------------------------------------
# Reference backend

_TOKEN_RE = re.compile(r"[#\w']+")


def tokenize(text: str, max_tokens: int) -> list[str]:
    """Lowercased word-ish tokens, truncated head-first to ``max_tokens``.
    Long texts are truncated, never rejected."""
    return _TOKEN_RE.findall(text.lower())[:max_tokens]


@dataclass(frozen=True)
class ReferenceHandle:
    """Trained state of the reference backend. ``initial_*`` snapshot the
    parameters this training call started from, so continued-training
    contracts are checkable bitwise."""

    weights: np.ndarray           # (arity, dim)
    bias: np.ndarray              # (arity,)
    initial_weights: np.ndarray
    initial_bias: np.ndarray
    label_arity: int
    dim: int
    config: TrainConfig


class ReferenceBackend(Backend):
    """Deterministic linear softmax classifier over hashed bag-of-token
    features (crc32 feature hashing, L2-normalized counts), trained with
    plain mini-batch gradient descent. Embedding dimension is ``dim``
    (default 256)."""

    def __init__(self, dim: int = 256, label_arity: int = 3):
        if dim <= 0 or label_arity <= 0:
            raise ValueError("dim and label_arity must be > 0")
        self.dim = dim
        self.label_arity = label_arity

    def _vectorize(self, posts: Sequence[Post], max_tokens: int) -> np.ndarray:
        X = np.zeros((len(posts), self.dim), dtype=np.float64)
        for i, post in enumerate(posts):
            for tok in tokenize(post.text, max_tokens):
                X[i, zlib.crc32(tok.encode("utf-8")) % self.dim] += 1.0
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        np.divide(X, norms, out=X, where=norms > 0)
        return X

    def fine_tune(
        self, data: Dataset, config: TrainConfig, handle: ReferenceHandle | None = None
    ) -> tuple[ReferenceHandle, list[float]]:
        if not data:
            raise BackendError("fine_tune: empty training data")
        labels = np.array([label for _, label in data], dtype=np.int64)
        bad = [int(l) for l in labels if not (0 <= l < self.label_arity)]
        if bad:
            raise BackendError(
                f"fine_tune: labels {sorted(set(bad))} outside [0, {self.label_arity})"
            )
        X = self._vectorize([post for post, _ in data], config.max_tokens)
        n = len(data)
        if handle is not None:
            if handle.label_arity != self.label_arity or handle.dim != self.dim:
                raise BackendError("fine_tune: handle shape does not match backend")
            W = handle.weights.copy()
            b = handle.bias.copy()
        else:
            W = np.zeros((self.label_arity, self.dim), dtype=np.float64)
            b = np.zeros(self.label_arity, dtype=np.float64)
        W0, b0 = W.copy(), b.copy()

        onehot = np.zeros((n, self.label_arity), dtype=np.float64)
        onehot[np.arange(n), labels] = 1.0
        rng = np.random.default_rng(config.seed)
        lr = config.learning_rate
        trace: list[float] = []
        for _ in range(config.epochs):
            order = rng.permutation(n)
            batch_losses = []
            for start in range(0, n, config.batch_size):
                idx = order[start:start + config.batch_size]
                Xb, Yb, yb = X[idx], onehot[idx], labels[idx]
                logits = Xb @ W.T + b
                logits -= logits.max(axis=1, keepdims=True)
                expz = np.exp(logits)
                probs = expz / expz.sum(axis=1, keepdims=True)
                batch_losses.append(
                    float(-np.mean(np.log(probs[np.arange(len(idx)), yb] + 1e-12)))
                )
                grad = (probs - Yb).T @ Xb / len(idx)
                W -= lr * grad
                b -= lr * (probs - Yb).mean(axis=0)
            trace.append(float(np.mean(batch_losses)))
        new_handle = ReferenceHandle(
            weights=W, bias=b, initial_weights=W0, initial_bias=b0,
            label_arity=self.label_arity, dim=self.dim, config=config,
        )
        return new_handle, trace

    def predict(self, handle: ReferenceHandle, posts: Sequence[Post]) -> list[int]:
        if handle is None:
            raise BackendError("predict: untrained handle")
        if not posts:
            return []
        X = self._vectorize(posts, handle.config.max_tokens)
        logits = X @ handle.weights.T + handle.bias
        # argmax ties resolve to the lowest class index
        return [int(i) for i in logits.argmax(axis=1)]

    def embed(self, posts: Sequence[Post], handle: ReferenceHandle | None = None) -> np.ndarray:
        if not posts:
            raise BackendError("embed: empty post list")
        max_tokens = handle.config.max_tokens if handle is not None else TrainConfig().max_tokens
        return self._vectorize(posts, max_tokens)


# --------------------------------------------------------------------------
# Generative adapters: classification via constrained output

DEFAULT_VERBALIZERS: dict[int, tuple[str, ...]] = {
    0: ("non-cyberbullying", "not cyberbullying", "no cyberbullying", "none", "0"),
    1: ("harassment", "1"),
    2: ("defamation", "2"),
}


def map_generation_to_label(
    generation: str, verbalizers: dict[int, tuple[str, ...]] | None = None
) -> int | None:
    """Map free-form generated text onto {0,1,2} by earliest verbalizer match
    (longest pattern wins on position ties). Returns None when nothing matches."""
    verbalizers = verbalizers or DEFAULT_VERBALIZERS
    text = generation.lower()
    best: tuple[int, int, int] | None = None  # (position, -len, label)
    for label, patterns in verbalizers.items():
        for pat in patterns:
            pos = text.find(pat.lower())
            if pos < 0:
                continue
            key = (pos, -len(pat), label)
            if best is None or key < best:
                best = key
    return best[2] if best is not None else None


class GenerativeBackend(Backend):
    """Adapter for decoder-only models driven through a generation callable.

    The prompt template and verbalizer map are configurable because the
    published setup does not pin them. Generations that map to no class are
    counted and reported as errors rather than silently coerced. Fine-tuning
    and embeddings are out of contract for this family.
    """

    def __init__(
        self,
        generate: Callable[[str], str],
        prompt_template: str = (
            "Classify the post as non-cyberbullying, harassment, or defamation.\n"
            "Post: {text}\nAnswer:"
        ),
        verbalizers: dict[int, tuple[str, ...]] | None = None,
    ):
        self._generate = generate
        self.prompt_template = prompt_template
        self.verbalizers = verbalizers or DEFAULT_VERBALIZERS

    def fine_tune(self, data: Dataset, config: TrainConfig, handle=None):
        raise UnsupportedOperationError(
            "generative adapters classify via constrained output; no fine-tuning surface"
        )

    def predict(self, handle, posts: Sequence[Post]) -> list[int]:
        labels: list[int] = []
        unmappable: list[tuple[str, str]] = []
        for post in posts:
            out = self._generate(self.prompt_template.format(text=post.text))
            label = map_generation_to_label(out, self.verbalizers)
            if label is None:
                unmappable.append((post.id, out))
            else:
                labels.append(label)
        if unmappable:
            ids = [pid for pid, _ in unmappable]
            raise UnmappableGenerationError(
                f"{len(unmappable)} generation(s) mapped to no class: ids {ids[:10]}"
            )
        return labels

    def embed(self, posts: Sequence[Post], handle=None) -> np.ndarray:
        raise UnsupportedOperationError("generative adapter has no embedding support")


# --------------------------------------------------------------------------
# Registry

REFERENCE_IDS = ("hashed-linear", "reference")


def resolve_backend(
    model_id: str, *, label_arity: int = 3, cache_dir: str | None = None
) -> Backend:
    """Resolve a model id to a backend adapter.

    ``hashed-linear`` (alias ``reference``) is always available; any other id
    is handed to the transformers adapter, which needs the optional ``hf``
    extra and locally available weights.
    """
    if model_id in REFERENCE_IDS:
        return ReferenceBackend(label_arity=label_arity)
    try:
        from . import hf_backend
    except ImportError as exc:
        raise BackendResolutionError(
            f"cannot resolve model_id {model_id!r}: transformers adapter "
            f"unavailable ({exc}); install the 'hf' extra or use 'hashed-linear'"
        ) from exc
    return hf_backend.TransformerBackend(
        model_id, num_labels=label_arity, cache_dir=cache_dir
    )
