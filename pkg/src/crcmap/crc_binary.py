"""Binary conformal risk control on pooled pixels.

A pixel is flagged when ``score >= lambda``. ``calibrate_fnr`` picks the
order statistic of positive calibration scores that bounds the false
negative rate.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .domain import CalibrationResult, RiskSpec, ScoreMapSet, quantile_index
from .errors import AlphaTooLargeForSample, EmptyInput, NoPositives, ValidationError


def crc_threshold(positive_scores: np.ndarray, alpha: float) -> tuple[float, int]:
    """Return (lambda_hat, k) for a flat array of positive-pixel scores."""
    m = positive_scores.size
    if m == 0:
        raise NoPositives("no positive calibration pixels")
    k = quantile_index(alpha, m)
    if k > m:
        raise AlphaTooLargeForSample(f"alpha={alpha} needs index {k} > m={m}")
    kth = np.partition(positive_scores, k - 1)[k - 1]
    return float(kth), k


def calibrate_fnr(cal: ScoreMapSet, spec: RiskSpec | float) -> CalibrationResult:
    if not isinstance(spec, RiskSpec):
        spec = RiskSpec(float(spec))
    pos, neg = cal.counts()
    lam, k = crc_threshold(cal.positive_scores(), spec.alpha)
    return CalibrationResult(
        lambda_hat=lam,
        alpha_used=spec.alpha,
        m_positives=pos,
        quantile_index=k,
        n_valid=pos + neg,
    )


def fnr_at(scores: ScoreMapSet, lam: float) -> float:
    tp, _, fn, _ = kernels.threshold_counts(scores.scores, scores.labels, lam)
    if tp + fn == 0:
        raise NoPositives("FNR is undefined without positive pixels")
    return fn / (tp + fn)


def set_size_at(scores: ScoreMapSet, lam: float) -> float:
    tp, fp, fn, tn = kernels.threshold_counts(scores.scores, scores.labels, lam)
    n = tp + fp + fn + tn
    if n == 0:
        raise EmptyInput("no valid pixels")
    return (tp + fp) / n


def fnr_sweep(scores: ScoreMapSet, grid) -> list[tuple[float, float, float]]:
    """(lambda, fnr, set_size) for every grid value, in grid order."""
    grid = [float(g) for g in grid]
    if not grid:
        raise ValidationError("empty threshold grid")
    rows = []
    for lam in grid:
        tp, fp, fn, tn = kernels.threshold_counts(scores.scores, scores.labels, lam)
        if tp + fn == 0:
            raise NoPositives("FNR is undefined without positive pixels")
        rows.append((lam, fn / (tp + fn), (tp + fp) / (tp + fp + fn + tn)))
    return rows


def misses_below(scores: ScoreMapSet, lam: float) -> int:
    """Number of positive pixels strictly below ``lam``."""
    return kernels.threshold_counts(scores.scores, scores.labels, lam)[2]
