"""Transformer adapter for the train/predict/embed contract.

Needs the ``hf`` extra (torch + transformers) and locally available weights;
nothing in the core pipeline or the test suite depends on it. Reproducibility
is to framework limits: seeds are set, but kernel nondeterminism on some
hardware may still wiggle low-order bits, unlike the reference backend.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from .backend import Backend, BackendError, BackendResolutionError, TrainConfig
from .corpus import Dataset, Post


@dataclass
class TransformerHandle:
    model: "torch.nn.Module"
    tokenizer: object
    config: TrainConfig
    label_arity: int


class TransformerBackend(Backend):
    """Sequence-classification fine-tuning with Adam, head-only truncation to
    ``max_tokens``, and mean-pooled hidden states as embeddings."""

    def __init__(self, model_id: str, num_labels: int = 3, cache_dir: str | None = None):
        from transformers import AutoModelForSequenceClassification, AutoTokenizer

        self.model_id = model_id
        self.label_arity = num_labels
        self.cache_dir = cache_dir
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(model_id, cache_dir=cache_dir)
            self._fresh = lambda: AutoModelForSequenceClassification.from_pretrained(
                model_id, num_labels=num_labels, cache_dir=cache_dir
            )
        except Exception as exc:
            raise BackendResolutionError(
                f"cannot resolve model_id {model_id!r}: {exc}"
            ) from exc

    @classmethod
    def from_components(cls, model, tokenizer, num_labels: int = 3) -> "TransformerBackend":
        """Build around already-constructed objects (offline tests, custom heads)."""
        self = cls.__new__(cls)
        self.model_id = getattr(model.config, "name_or_path", "in-memory")
        self.label_arity = num_labels
        self.cache_dir = None
        self._tokenizer = tokenizer
        self._fresh = lambda: copy.deepcopy(model)
        return self

    def _batches(self, posts: Sequence[Post], max_tokens: int, batch_size: int):
        for start in range(0, len(posts), batch_size):
            chunk = posts[start:start + batch_size]
            yield self._tokenizer(
                [p.text for p in chunk],
                truncation=True,
                max_length=max_tokens,
                padding=True,
                return_tensors="pt",
            )

    def fine_tune(
        self, data: Dataset, config: TrainConfig, handle: TransformerHandle | None = None
    ) -> tuple[TransformerHandle, list[float]]:
        if not data:
            raise BackendError("fine_tune: empty training data")
        labels = [label for _, label in data]
        if any(not (0 <= l < self.label_arity) for l in labels):
            raise BackendError(f"fine_tune: labels outside [0, {self.label_arity})")
        torch.manual_seed(config.seed)
        model = copy.deepcopy(handle.model) if handle is not None else self._fresh()
        model.train()
        optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
        posts = [post for post, _ in data]
        y = torch.tensor(labels, dtype=torch.long)
        n = len(posts)
        generator = torch.Generator().manual_seed(config.seed)
        trace: list[float] = []
        for _ in range(config.epochs):
            order = torch.randperm(n, generator=generator)
            epoch_losses = []
            for start in range(0, n, config.batch_size):
                idx = order[start:start + config.batch_size]
                batch_posts = [posts[i] for i in idx.tolist()]
                enc = self._tokenizer(
                    [p.text for p in batch_posts],
                    truncation=True,
                    max_length=config.max_tokens,
                    padding=True,
                    return_tensors="pt",
                )
                out = model(**enc, labels=y[idx])
                optimizer.zero_grad()
                out.loss.backward()
                optimizer.step()
                epoch_losses.append(float(out.loss.detach()))
            trace.append(float(np.mean(epoch_losses)))
        model.eval()
        return TransformerHandle(
            model=model, tokenizer=self._tokenizer, config=config,
            label_arity=self.label_arity,
        ), trace

    @torch.no_grad()
    def predict(self, handle: TransformerHandle, posts: Sequence[Post]) -> list[int]:
        if handle is None:
            raise BackendError("predict: untrained handle")
        if not posts:
            return []
        handle.model.eval()
        preds: list[int] = []
        for enc in self._batches(posts, handle.config.max_tokens, handle.config.batch_size):
            logits = handle.model(**enc).logits
            preds.extend(int(i) for i in logits.argmax(dim=-1))
        return preds

    @torch.no_grad()
    def embed(self, posts: Sequence[Post], handle: TransformerHandle | None = None) -> np.ndarray:
        if not posts:
            raise BackendError("embed: empty post list")
        if handle is not None:
            model = handle.model
            max_tokens = handle.config.max_tokens
            batch_size = handle.config.batch_size
        else:
            model = self._fresh()
            defaults = TrainConfig()
            max_tokens, batch_size = defaults.max_tokens, defaults.batch_size
        model.eval()
        rows = []
        for enc in self._batches(posts, max_tokens, batch_size):
            out = model(**enc, output_hidden_states=True)
            hidden = out.hidden_states[-1]            # (b, t, d)
            mask = enc["attention_mask"].unsqueeze(-1).to(hidden.dtype)
            pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1)
            rows.append(pooled.cpu().numpy())
        return np.vstack(rows)
