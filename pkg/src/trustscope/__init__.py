"""Trust scoring and saliency tooling for binary image classifiers."""

from .trust import (
    ClassMetrics,
    EvalReport,
    PredictionRecord,
    TrustParams,
    build_report,
    class_metrics,
    class_trust_score,
    make_record,
    normalize_output,
    qa_trust,
    select_threshold,
)

__version__ = "0.1.0"

__all__ = [
    "ClassMetrics",
    "EvalReport",
    "PredictionRecord",
    "TrustParams",
    "build_report",
    "class_metrics",
    "class_trust_score",
    "make_record",
    "normalize_output",
    "qa_trust",
    "select_threshold",
]
