"""CSV codecs: prediction logs, training history, raw saliency grids."""

from __future__ import annotations

import csv
import os
from typing import Iterable, NamedTuple, Sequence

import numpy as np

LOG_HEADER = ["sample_id", "raw_score", "label"]


class PredictionLogError(ValueError):
    pass


class LogRow(NamedTuple):
    sample_id: str
    raw_score: float
    label: int


def read_prediction_log(path) -> list[LogRow]:
    rows, seen = [], set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != LOG_HEADER:
            raise PredictionLogError(f"{path}: line 1: expected header {','.join(LOG_HEADER)}, got {header}")
        for fields in reader:
            line = reader.line_num
            if not fields:
                continue
            if len(fields) != 3:
                raise PredictionLogError(f"{path}: line {line}: expected 3 fields, got {len(fields)}")
            sid, raw, lab = fields
            try:
                score = float(raw)
            except ValueError:
                raise PredictionLogError(f"{path}: line {line}: raw_score {raw!r} is not a number") from None
            if not 0.0 <= score <= 1.0:
                raise PredictionLogError(f"{path}: line {line}: raw_score {score} outside [0, 1]")
            if lab not in ("0", "1"):
                raise PredictionLogError(f"{path}: line {line}: label {lab!r} not in {{0, 1}}")
            if sid in seen:
                raise PredictionLogError(f"{path}: line {line}: duplicate sample_id {sid!r}")
            seen.add(sid)
            rows.append(LogRow(sid, score, int(lab)))
    return rows


def write_prediction_log(path, rows: Iterable[Sequence]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOG_HEADER)
        for sid, score, label in rows:
            w.writerow([sid, repr(float(score)), int(label)])


def write_grid_csv(path, grid):
    a = np.asarray(grid, dtype=np.float64)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in a:
            w.writerow([repr(float(v)) for v in row])


def read_grid_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        return np.array([[float(v) for v in row] for row in csv.reader(fh) if row])


def write_table_csv(path, header: Sequence[str], rows: Iterable[Sequence]):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
