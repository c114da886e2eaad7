"""SGD-momentum training with cosine annealing and best-validation selection."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..data.preprocess import preprocess
from ..trust import f1_score, select_threshold
from .base import ModelParams, loss_and_grads
from .base import logits as model_logits
from .layers import bce_with_logits, sigmoid

log = logging.getLogger(__name__)

# initial learning rate by epoch budget
DEFAULT_LR = {30: 5e-4, 50: 5e-4, 100: 3e-4, 200: 1e-4}
THRESHOLD_MODES = ("final", "per_epoch")


def default_lr(epochs: int) -> float:
    """Tabulated initial rate, falling back to the nearest listed budget."""
    if epochs in DEFAULT_LR:
        return DEFAULT_LR[epochs]
    nearest = min(DEFAULT_LR, key=lambda e: (abs(e - epochs), e))
    return DEFAULT_LR[nearest]


@dataclass
class TrainConfig:
    epochs: int = 30
    initial_lr: float | None = None
    momentum: float = 0.9
    weight_decay: float = 1e-4
    lr_min: float = 0.0
    seed: int = 0
    freeze_backbone: bool = False
    flip_prob: float = 0.5
    batch_size: int = 8
    threshold_mode: str = "final"

    def __post_init__(self):
        if self.initial_lr is None:
            self.initial_lr = default_lr(self.epochs)
        if self.epochs < 1:
            raise ValueError(f"epochs must be positive, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ValueError(f"flip_prob must lie in [0, 1], got {self.flip_prob}")
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ValueError(f"threshold_mode must be one of {THRESHOLD_MODES}")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    val_f1: list[float] = field(default_factory=list)
    lr: list[float] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    best_epoch: int = 0

    def rows(self):
        for e in range(len(self.lr)):
            yield (e, self.lr[e], self.train_loss[e], self.val_loss[e], self.val_accuracy[e],
                   self.val_f1[e], self.threshold[e])

    HEADER = ("epoch", "lr", "train_loss", "val_loss", "val_accuracy", "val_f1", "threshold")


def cosine_lr(epoch: int, total: int, lr0: float, lr_min: float = 0.0) -> float:
    """Cosine annealing from ``lr0`` at epoch 0 to ``lr_min`` at the last epoch."""
    if total < 2:
        return lr0
    if not 0 <= epoch < total:
        raise ValueError(f"epoch {epoch} outside [0, {total})")
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + math.cos(math.pi * epoch / (total - 1)))


def sgd_step(param: np.ndarray, grad: np.ndarray, velocity: np.ndarray, lr: float,
             momentum: float = 0.9, weight_decay: float = 1e-4):
    """In-place SGD with coupled weight decay and heavy-ball momentum."""
    if param.shape != grad.shape or param.shape != velocity.shape:
        raise ValueError(f"shape mismatch: {param.shape}, {grad.shape}, {velocity.shape}")
    velocity *= momentum
    velocity += grad + weight_decay * param
    param -= lr * velocity
    return param, velocity


def _stack(samples, size):
    return np.stack([preprocess(s, size=size) for s in samples])


def predict_logits(model: ModelParams, samples, batch_size: int = 128) -> np.ndarray:
    """Logits for samples after evaluation-mode preprocessing."""
    out = []
    for i in range(0, len(samples), batch_size):
        out.append(model_logits(model, _stack(samples[i:i + batch_size], model.input_size)))
    return np.concatenate(out) if out else np.zeros(0)


def predict_scores(model: ModelParams, samples, batch_size: int = 128) -> np.ndarray:
    return sigmoid(predict_logits(model, samples, batch_size))


def _accuracy_f1(scores, labels, t):
    pred = scores > t
    y = labels == 1
    tp = int(np.sum(pred & y))
    return float(np.mean(pred == y)), f1_score(tp, int(np.sum(pred & ~y)), int(np.sum(~pred & y)))


def train(model: ModelParams, train_set, val_set, config: TrainConfig = TrainConfig()):
    """Fit ``model`` and return ``(best_model, history, threshold)``.

    Validation runs after every epoch; the parameters with the best validation
    accuracy are kept, ties going to the lower validation loss.  The decision threshold is
    chosen on the validation split by maximizing positive-class F1.
    """
    if not train_set or not val_set:
        raise ValueError("train and validation splits must be non-empty")
    ids_t = {s.id for s in train_set}
    if any(s.id in ids_t for s in val_set):
        raise ValueError("train and validation splits overlap")

    model = model.copy()
    rng = np.random.default_rng(config.seed)
    size = model.input_size
    names = model.head_names() if config.freeze_backbone else list(model.params)
    velocity = {k: np.zeros_like(model.params[k]) for k in names}
    y_train = np.array([s.label for s in train_set], dtype=np.float64)
    y_val = np.array([s.label for s in val_set])
    hist = TrainHistory()
    best, best_key, best_t = model.copy(), None, 0.5

    for epoch in range(config.epochs):
        lr = cosine_lr(epoch, config.epochs, config.initial_lr, config.lr_min)
        order = rng.permutation(len(train_set))
        losses, counts = [], []
        for i in range(0, len(order), config.batch_size):
            idx = order[i:i + config.batch_size]
            x = np.stack([preprocess(train_set[j], True, config.flip_prob, rng, size) for j in idx])
            loss, grads = loss_and_grads(model, x, y_train[idx], config.freeze_backbone)
            for k in names:
                sgd_step(model.params[k], grads[k], velocity[k], lr,
                         config.momentum, config.weight_decay)
            losses.append(loss * len(idx))
            counts.append(len(idx))

        z = predict_logits(model, val_set)
        val_loss = bce_with_logits(z, y_val)[0]
        scores = sigmoid(z)
        if config.threshold_mode == "per_epoch" and np.any(y_val == 1):
            t = select_threshold(scores, y_val)
        else:
            t = 0.5
        acc, f1 = _accuracy_f1(scores, y_val, t)
        hist.train_loss.append(math.fsum(losses) / sum(counts))
        hist.val_loss.append(val_loss)
        hist.val_accuracy.append(acc)
        hist.val_f1.append(f1)
        hist.lr.append(lr)
        hist.threshold.append(t)
        log.info("epoch %d lr %.3g loss %.4f val_loss %.4f val_acc %.4f val_f1 %.4f",
                 epoch, lr, hist.train_loss[-1], val_loss, acc, f1)
        key = (acc, -val_loss)
        if best_key is None or key > best_key:
            best, best_key, best_t = model.copy(), key, t
            hist.best_epoch = epoch

    if config.threshold_mode == "final":
        best_t = select_threshold(predict_scores(best, val_set), y_val)
    best.threshold = best_t
    return best, hist, best_t
