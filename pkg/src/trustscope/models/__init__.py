"""Toy shifted-window attention and residual CNN classifiers in numpy."""

from .base import ModelParams, ShapeError, forward, loss_and_grads
from .cnn import DEFAULT_CONFIG as CNN_CONFIG
from .gradcheck import grad_check
from .registry import ARCHS, init_model
from .swin import DEFAULT_CONFIG as SWIN_CONFIG
from .swin import patch_embed, patch_merge, window_attention
from .train import TrainConfig, TrainHistory, cosine_lr, sgd_step, train

__all__ = [
    "ARCHS", "CNN_CONFIG", "ModelParams", "SWIN_CONFIG", "ShapeError", "TrainConfig",
    "TrainHistory", "cosine_lr", "forward", "grad_check", "init_model", "loss_and_grads",
    "patch_embed", "patch_merge", "sgd_step", "train", "window_attention",
]
