"""Architecture lookup and model construction."""

from __future__ import annotations

import copy

import numpy as np

from . import cnn, swin
from .base import ModelParams

ARCHS = {"swin_toy": swin, "cnn_toy": cnn}


def _module(arch: str):
    try:
        return ARCHS[arch]
    except KeyError:
        raise ValueError(f"unknown architecture {arch!r}; expected one of {sorted(ARCHS)}") from None


def default_config(arch: str) -> dict:
    return copy.deepcopy(_module(arch).DEFAULT_CONFIG)


def build_stages(arch: str, config: dict):
    return _module(arch).build_stages(config)


def init_model(arch: str, seed: int = 0, **overrides) -> ModelParams:
    """Fresh model with Glorot-uniform weights drawn from ``seed``."""
    config = default_config(arch)
    config.update(overrides)
    rng = np.random.default_rng(seed)
    return ModelParams(arch, config, _module(arch).init_params(config, rng))
