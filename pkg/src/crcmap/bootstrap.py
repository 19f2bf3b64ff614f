"""Image-level percentile bootstrap for any metric.

Images, never pixels, are resampled with replacement. Resample ``i`` draws
its indices from a generator seeded by ``(seed, i)``, so the interval does
not depend on evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .domain import ScoreMapSet
from .errors import CrcError, MetricUndefined, ValidationError
from .metrics import (
    ALL_METRICS,
    RANKING_METRICS,
    auprc_flat,
    auroc_flat,
    metrics_from_counts,
)


@dataclass(frozen=True)
class BootstrapSpec:
    resamples: int = 10_000
    confidence: float = 0.95
    seed: int = 0

    def __post_init__(self):
        if self.resamples < 1:
            raise ValidationError("resamples must be >= 1")
        if not (0.0 < self.confidence < 1.0):
            raise ValidationError("confidence must lie in (0, 1)")
        if not (0 <= self.seed < 2**64):
            raise ValidationError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class BootstrapResult:
    metric: str
    point: float
    lo: float
    hi: float
    resamples: int
    skipped: int
    confidence: float
    method: str = "percentile"


def resample_indices(n: int, spec: BootstrapSpec, i: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(i,)))
    return rng.integers(0, n, size=n)


def per_image_counts(scores: ScoreMapSet, lam: float) -> np.ndarray:
    """(n_images, 4) table of tp, fp, fn, tn at ``lam``."""
    flagged = scores.scores >= np.float64(lam)
    pos = scores.labels == 1
    neg = scores.labels == 0
    axes = (1, 2)
    tp = np.count_nonzero(flagged & pos, axis=axes)
    fp = np.count_nonzero(flagged & neg, axis=axes)
    fn = np.count_nonzero(pos, axis=axes) - tp
    tn = np.count_nonzero(neg, axis=axes) - fp
    return np.stack([tp, fp, fn, tn], axis=1).astype(np.int64)


def _ranking_value(metric, scores, labels, idx):
    s = scores[idx].reshape(-1)
    y = labels[idx].reshape(-1)
    valid = y != -1
    try:
        if metric == "auroc":
            return auroc_flat(s[valid], y[valid])
        return auprc_flat(s[valid], y[valid])
    except CrcError:
        return None


def bootstrap_ci(
    scores: ScoreMapSet,
    metric: str,
    lam: Optional[float] = None,
    spec: BootstrapSpec = BootstrapSpec(),
) -> BootstrapResult:
    if metric not in ALL_METRICS:
        raise ValidationError(f"unknown metric {metric!r}; choose from {ALL_METRICS}")
    n = len(scores)
    if n == 0:
        raise ValidationError("no images to resample")

    if metric in RANKING_METRICS:
        def value(idx):
            return _ranking_value(metric, scores.scores, scores.labels, idx)
    else:
        if lam is None:
            raise ValidationError(f"metric {metric!r} needs a threshold")
        counts = per_image_counts(scores, lam)

        def value(idx):
            return metrics_from_counts(*counts[idx].sum(axis=0).tolist())[metric]

    point = value(np.arange(n))
    if point is None:
        raise MetricUndefined(f"{metric} is undefined on the full set")

    values = []
    skipped = 0
    for i in range(spec.resamples):
        v = value(resample_indices(n, spec, i))
        if v is None:
            skipped += 1
        else:
            values.append(v)
    if skipped > spec.resamples / 2:
        raise MetricUndefined(f"{metric} undefined in {skipped}/{spec.resamples} resamples")

    tail = (1.0 - spec.confidence) / 2.0
    lo, hi = np.quantile(np.asarray(values), [tail, 1.0 - tail])
    return BootstrapResult(
        metric=metric,
        point=float(point),
        lo=float(lo),
        hi=float(hi),
        resamples=spec.resamples,
        skipped=skipped,
        confidence=spec.confidence,
    )
