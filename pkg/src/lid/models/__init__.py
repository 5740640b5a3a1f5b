"""Classifier architectures and their shared train/predict/save surface."""

from .base import (
    NoSignalError,
    TrainConfig,
    TrainingDivergedError,
    apply_subset_cap,
    predict,
    predict_topk,
    softmax,
)
from .embed import EmbeddingClassifier, embed_loss_and_grads, train_embed
from .linear import LinearModel, train_linear
from .mlp import MLPModel, mlp_loss_and_grads, train_mlp
from .nb import NaiveBayesModel, train_nb
from .store import ModelFormatError, load_model, save_model

__all__ = [
    "EmbeddingClassifier",
    "LinearModel",
    "MLPModel",
    "ModelFormatError",
    "NaiveBayesModel",
    "NoSignalError",
    "TrainConfig",
    "TrainingDivergedError",
    "apply_subset_cap",
    "embed_loss_and_grads",
    "load_model",
    "mlp_loss_and_grads",
    "predict",
    "predict_topk",
    "save_model",
    "softmax",
    "train_embed",
    "train_linear",
    "train_mlp",
    "train_nb",
]
