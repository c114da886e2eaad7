from __future__ import annotations

from typing import Sequence

import numpy as np

from .synthetic import Sample


def _quotas(counts: dict[int, int], fraction: float) -> dict[int, int]:
    # largest-remainder rounding: per-label quotas summing to round(fraction * N)
    total = int(round(fraction * sum(counts.values())))
    exact = {c: fraction * n for c, n in counts.items()}
    quota = {c: int(np.floor(v)) for c, v in exact.items()}
    rest = total - sum(quota.values())
    by_remainder = sorted(counts, key=lambda c: (-(exact[c] - quota[c]), c))
    for c in by_remainder[:rest]:
        quota[c] += 1
    return quota


def split_validation(train: Sequence[Sample], fraction: float = 0.1, seed: int = 0):
    """Carve a label-stratified validation subset out of ``train``.

    Returns ``(train_rest, val)``, both in the original order.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    labels = np.array([s.label for s in train])
    counts = {int(c): int(n) for c, n in zip(*np.unique(labels, return_counts=True))}
    quota = _quotas(counts, fraction)
    n_val = sum(quota.values())
    if n_val == 0 or n_val == len(train):
        raise ValueError(
            f"a {fraction:g} split of {len(train)} samples would leave an empty partition")
    rng = np.random.default_rng(seed)
    chosen = set()
    for c in sorted(counts):
        idx = np.flatnonzero(labels == c)
        chosen.update(int(i) for i in rng.permutation(idx)[:quota[c]])
    rest = [s for i, s in enumerate(train) if i not in chosen]
    val = [s for i, s in enumerate(train) if i in chosen]
    return rest, val
