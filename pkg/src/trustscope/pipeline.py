"""Glue between models, data and trust scoring used by the CLI and tests."""

from __future__ import annotations

import numpy as np

from .data.logs import LogRow
from .data.preprocess import preprocess
from .data.synthetic import generate_dataset
from .models.base import ModelParams
from .models.train import predict_scores
from .saliency import ablation_cam, pointing_hit
from .trust import TrustParams, build_report, make_records


def derived_seeds(seed: int, n: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def synthetic_splits(n_train: int, n_test: int, size: int = 64, pos_fraction: float = 0.5,
                     seed: int = 42) -> dict:
    s_train, s_test = derived_seeds(seed, 2)
    return {
        "train": generate_dataset(n_train, size, pos_fraction, s_train, prefix="train-"),
        "test": generate_dataset(n_test, size, pos_fraction, s_test, prefix="test-"),
    }


def prediction_rows(model: ModelParams, samples) -> list[LogRow]:
    scores = predict_scores(model, samples)
    return [LogRow(s.id, float(p), int(s.label)) for s, p in zip(samples, scores)]


def report_from_rows(rows, params: TrustParams):
    records = make_records((r[0] for r in rows), (r[1] for r in rows), (r[2] for r in rows),
                           params.threshold)
    return build_report(records, params), records


def pointing_game(model: ModelParams, samples, min_score: float = 0.9):
    """Hit flags for positives the model scores at or above ``min_score``.

    Each qualifying positive's map is upsampled to the input size and its
    argmax is tested against the planted box.
    """
    hits = []
    for s in samples:
        if s.label != 1 or s.blob_box is None:
            continue
        x = preprocess(s, size=model.input_size)
        score = predict_scores(model, [s])[0]
        if score < min_score or score <= model.threshold:
            continue
        cam = ablation_cam(model, x)
        hits.append(pointing_hit(cam.upsampled(), s.blob_box))
    return hits
