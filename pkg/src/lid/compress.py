"""Shrinking the embedding classifier: lower dimension, pruned
vocabulary, and int8 quantization of both embedding matrices."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .models import TrainConfig, train_embed
from .models.embed import EmbeddingClassifier
from .models.store import _disassemble
from .quant import QuantizedTensor, dequantize, quantize_tensor

__all__ = [
    "CompressionConfig",
    "ModelSize",
    "QuantizedTensor",
    "compress_train",
    "dequantize",
    "quantize_model",
    "quantize_tensor",
    "size_report",
]


@dataclass(frozen=True)
class CompressionConfig:
    """How far to shrink: target dimension, vocabulary floor, quantization."""

    dim: int = 100
    min_count: int = 5
    quantize: bool = True

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")


def quantize_model(model: EmbeddingClassifier) -> EmbeddingClassifier:
    """Return a copy with both embedding matrices stored as int8 codes."""
    if model.quantized:
        return model
    return replace(
        model,
        input_embeddings=quantize_tensor(np.asarray(model.input_embeddings, dtype=np.float64)),
        label_embeddings=quantize_tensor(np.asarray(model.label_embeddings, dtype=np.float64)),
    )


def compress_train(
    pairs: Sequence[tuple[str, str]],
    comp: CompressionConfig | None = None,
    cfg: TrainConfig | None = None,
    **embed_kwargs,
) -> EmbeddingClassifier:
    """Train a small embedding classifier directly.

    This retrains at the compressed dimension rather than projecting an
    existing model down, then quantizes. Extra keyword arguments reach
    the trainer (buckets, n_range, neg_samples, labels).
    """
    comp = comp or CompressionConfig()
    for key in ("dim", "min_count"):
        if key in embed_kwargs:
            raise TypeError(f"{key} is fixed by CompressionConfig")
    model = train_embed(
        pairs, cfg=cfg, dim=comp.dim, min_count=comp.min_count, **embed_kwargs
    )
    return quantize_model(model) if comp.quantize else model


@dataclass(frozen=True)
class ModelSize:
    params: int        # total tensor elements, including quantization side-cars
    tensor_bytes: int  # raw storage for those tensors

    @property
    def megabytes(self) -> float:
        return self.tensor_bytes / (1024 * 1024)


def size_report(model) -> ModelSize:
    """Parameter and byte totals as the container would store them."""
    _, tensors = _disassemble(model)
    return ModelSize(
        params=int(sum(arr.size for _, arr in tensors)),
        tensor_bytes=int(sum(arr.nbytes for _, arr in tensors)),
    )
