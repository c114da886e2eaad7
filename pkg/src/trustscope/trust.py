"""Question-answer trust, confidence normalization, thresholding and metrics.

A model answers a binary question with a sigmoid score.  The score is cut at a
decision threshold, rescaled so the threshold sits at 0.5, and turned into the
model's confidence in the answer it actually gave.  Trust rewards confidence
on correct answers (``C ** alpha``) and penalizes it on wrong ones
(``(1 - C) ** beta``); a class trust score is the mean over samples whose
ground-truth label is that class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NEGATIVE = 0
POSITIVE = 1
CLASS_NAMES = {NEGATIVE: "negative", POSITIVE: "positive"}


class TrustError(ValueError):
    """Invalid input to a trust computation."""


@dataclass(frozen=True)
class TrustParams:
    alpha: float = 1.0
    beta: float = 1.0
    threshold: float = 0.5

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise TrustError(f"alpha and beta must be positive, got {self.alpha}, {self.beta}")
        if not (0.0 < self.threshold < 1.0):
            raise TrustError(f"threshold must lie in (0, 1), got {self.threshold}")


@dataclass(frozen=True)
class PredictionRecord:
    sample_id: str
    raw_score: float
    label: int
    predicted: int
    normalized_output: float
    confidence: float

    @property
    def correct(self) -> bool:
        return self.predicted == self.label


@dataclass(frozen=True)
class ClassMetrics:
    """Per-class precision and sensitivity; ``None`` marks an undefined ratio."""

    precision: float | None
    sensitivity: float | None
    support: int


@dataclass
class EvalReport:
    threshold: float
    alpha: float
    beta: float
    n_test: int
    per_class: dict[int, ClassMetrics]
    trust: dict[int, float | None] = field(default_factory=dict)

    @property
    def trust_positive(self) -> float | None:
        return self.trust.get(POSITIVE)

    @property
    def trust_negative(self) -> float | None:
        return self.trust.get(NEGATIVE)

    def to_dict(self) -> dict:
        # key order is part of the output format
        return {
            "threshold": self.threshold,
            "alpha": self.alpha,
            "beta": self.beta,
            "n_test": self.n_test,
            "classes": {
                CLASS_NAMES[c]: {
                    "precision": self.per_class[c].precision,
                    "sensitivity": self.per_class[c].sensitivity,
                    "support": self.per_class[c].support,
                }
                for c in (NEGATIVE, POSITIVE)
            },
            "trust": {CLASS_NAMES[c]: self.trust.get(c) for c in (NEGATIVE, POSITIVE)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        per_class = {}
        trust = {}
        for c, name in CLASS_NAMES.items():
            m = d["classes"][name]
            per_class[c] = ClassMetrics(m["precision"], m["sensitivity"], m["support"])
            trust[c] = d["trust"][name]
        return cls(d["threshold"], d["alpha"], d["beta"], d["n_test"], per_class, trust)

    def format_table(self) -> str:
        """Fixed three-decimal text rendering, one row per class."""

        def fmt(v):
            return "undef" if v is None else f"{v:.3f}"

        lines = [
            f"threshold={self.threshold:.3f} alpha={self.alpha:g} beta={self.beta:g} n={self.n_test}",
            f"{'class':<10}{'precision':>11}{'sensitivity':>13}{'trust':>8}{'support':>9}",
        ]
        for c in (NEGATIVE, POSITIVE):
            m = self.per_class[c]
            lines.append(
                f"{CLASS_NAMES[c]:<10}{fmt(m.precision):>11}{fmt(m.sensitivity):>13}"
                f"{fmt(self.trust.get(c)):>8}{m.support:>9d}"
            )
        return "\n".join(lines)


def _check_unit(name: str, value: float) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise TrustError(f"{name} must lie in [0, 1], got {value}")
    return value


def qa_trust(confidence: float, correct: bool, params: TrustParams = TrustParams()) -> float:
    """Trust of a single answer: ``C**alpha`` if correct else ``(1-C)**beta``."""
    c = _check_unit("confidence", confidence)
    if correct:
        return c**params.alpha
    return (1.0 - c) ** params.beta


def normalize_output(raw_score: float, threshold: float) -> tuple[float, int]:
    """Piecewise-linear rescale putting ``threshold`` at exactly 0.5.

    Scores at or below the threshold land in [0, 0.5] and are predicted
    negative; scores above land in (0.5, 1] and are predicted positive.
    """
    raw = _check_unit("raw_score", raw_score)
    t = float(threshold)
    if not (0.0 < t < 1.0):
        raise TrustError(f"threshold must lie in (0, 1), got {t}")
    if raw <= t:
        return 0.5 * raw / t, NEGATIVE
    return 0.5 + 0.5 * (raw - t) / (1.0 - t), POSITIVE


def denormalize_output(normalized: float, threshold: float) -> float:
    """Inverse of :func:`normalize_output` on the raw-score axis."""
    n = _check_unit("normalized", normalized)
    t = float(threshold)
    if n <= 0.5:
        return 2.0 * n * t
    return t + (2.0 * n - 1.0) * (1.0 - t)


def make_record(sample_id: str, raw_score: float, label: int, threshold: float) -> PredictionRecord:
    if label not in (NEGATIVE, POSITIVE):
        raise TrustError(f"label must be 0 or 1, got {label!r}")
    normalized, predicted = normalize_output(raw_score, threshold)
    confidence = normalized if predicted == POSITIVE else 1.0 - normalized
    return PredictionRecord(str(sample_id), float(raw_score), int(label), predicted, normalized, confidence)


def make_records(
    ids: Iterable[str], scores: Iterable[float], labels: Iterable[int], threshold: float
) -> list[PredictionRecord]:
    return [make_record(i, s, y, threshold) for i, s, y in zip(ids, scores, labels)]


def f1_score(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 else 2 * tp / denom


def threshold_candidates(scores: Sequence[float]) -> np.ndarray:
    """Midpoints between consecutive distinct scores plus the two outer guards.

    Candidates that fall on 0 or 1 (scores touching the interval ends) are
    dropped since they cannot serve as a decision threshold.
    """
    u = np.unique(np.asarray(scores, dtype=np.float64))
    cands = np.concatenate(([0.5 * u[0]], 0.5 * (u[:-1] + u[1:]), [0.5 * (1.0 + u[-1])]))
    return cands[(cands > 0.0) & (cands < 1.0)]


def select_threshold(val_scores: Sequence[float], val_labels: Sequence[int]) -> float:
    """Decision threshold maximizing positive-class F1 on a validation set.

    Ties go to the candidate nearest 0.5, then to the smaller one.
    """
    s = np.asarray(val_scores, dtype=np.float64)
    y = np.asarray(val_labels)
    if s.ndim != 1 or s.size == 0 or s.shape != y.shape:
        raise TrustError("scores and labels must be non-empty sequences of equal length")
    if np.any((s < 0) | (s > 1)):
        raise TrustError("scores must lie in [0, 1]")
    n_pos = int(np.sum(y == POSITIVE))
    if n_pos == 0:
        raise TrustError("F1 is undefined without positive labels")

    cands = threshold_candidates(s)
    # positives predicted at candidate t: scores strictly above t
    order = np.sort(s)
    pos_sorted = np.sort(s[y == POSITIVE])
    n_above = s.size - np.searchsorted(order, cands, side="right")
    tp = n_pos - np.searchsorted(pos_sorted, cands, side="right")
    fp = n_above - tp
    fn = n_pos - tp
    f1 = 2 * tp / (2 * tp + fp + fn)

    best = np.flatnonzero(f1 == f1.max())
    dist = np.abs(cands[best] - 0.5)
    tied = best[dist == dist.min()]
    return float(cands[tied].min())


def class_metrics(records: Sequence[PredictionRecord]) -> dict[int, ClassMetrics]:
    if not records:
        raise TrustError("no records")
    out = {}
    for c in (NEGATIVE, POSITIVE):
        tp = sum(1 for r in records if r.predicted == c and r.label == c)
        fp = sum(1 for r in records if r.predicted == c and r.label != c)
        fn = sum(1 for r in records if r.predicted != c and r.label == c)
        out[c] = ClassMetrics(
            precision=tp / (tp + fp) if tp + fp else None,
            sensitivity=tp / (tp + fn) if tp + fn else None,
            support=tp + fn,
        )
    return out


def class_trust_score(
    records: Sequence[PredictionRecord], target: int, params: TrustParams = TrustParams()
) -> float:
    """Mean question-answer trust over records whose label is ``target``."""
    values = [qa_trust(r.confidence, r.correct, params) for r in records if r.label == target]
    if not values:
        raise TrustError(f"no records labelled {CLASS_NAMES.get(target, target)}")
    # fsum keeps the mean independent of record order
    return math.fsum(values) / len(values)


def build_report(records: Sequence[PredictionRecord], params: TrustParams = TrustParams()) -> EvalReport:
    """Aggregate metrics and trust for both classes.

    A class with no records gets ``None`` for its trust score.
    """
    per_class = class_metrics(records)
    trust = {}
    for c in (NEGATIVE, POSITIVE):
        trust[c] = class_trust_score(records, c, params) if per_class[c].support else None
    return EvalReport(
        threshold=params.threshold,
        alpha=params.alpha,
        beta=params.beta,
        n_test=sum(m.support for m in per_class.values()),
        per_class=per_class,
        trust=trust,
    )
