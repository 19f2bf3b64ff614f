"""Threshold metrics and threshold-free ranking metrics over valid pixels."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import kernels
from .domain import MetricsReport, ScoreMapSet
from .errors import EmptyInput, NoNegatives, NoPositives

THRESHOLD_METRICS = ("coverage", "fnr", "set_size", "precision", "f1", "iou")
RANKING_METRICS = ("auroc", "auprc")
ALL_METRICS = THRESHOLD_METRICS + RANKING_METRICS


def confusion_at(scores: ScoreMapSet, lam: float) -> tuple[int, int, int, int]:
    tp, fp, fn, tn = kernels.threshold_counts(scores.scores, scores.labels, lam)
    if tp + fp + fn + tn == 0:
        raise EmptyInput("no valid pixels")
    return tp, fp, fn, tn


def _ratio(num, den):
    return num / den if den else None


def metrics_from_counts(tp: int, fp: int, fn: int, tn: int) -> dict:
    """Threshold metrics from a confusion table; undefined ratios are None."""
    coverage = _ratio(tp, tp + fn)
    return {
        "coverage": coverage,
        "fnr": None if coverage is None else 1.0 - coverage,
        "set_size": _ratio(tp + fp, tp + fp + fn + tn),
        "precision": _ratio(tp, tp + fp),
        "f1": _ratio(2 * tp, 2 * tp + fp + fn),
        "iou": _ratio(tp, tp + fp + fn),
    }


def point_metrics(scores: ScoreMapSet, lam: float) -> MetricsReport:
    tp, fp, fn, tn = confusion_at(scores, lam)
    if tp + fn == 0:
        raise NoPositives("coverage and FNR need positive pixels")
    return MetricsReport(**metrics_from_counts(tp, fp, fn, tn))


def auroc_flat(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney AUROC with ties counted one half."""
    n_pos = int(np.count_nonzero(labels == 1))
    n_neg = int(np.count_nonzero(labels == 0))
    if n_pos == 0:
        raise NoPositives("AUROC needs positive pixels")
    if n_neg == 0:
        raise NoNegatives("AUROC needs negative pixels")
    order = np.argsort(scores, kind="stable")
    rank_sum = kernels.positive_rank_sum(scores[order], labels[order])
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def auprc_flat(scores: np.ndarray, labels: np.ndarray) -> float:
    """Step-wise average precision, ties grouped by distinct score."""
    if not np.any(labels == 1):
        raise NoPositives("AUPRC needs positive pixels")
    order = np.argsort(-scores.astype(np.float64), kind="stable")
    return kernels.average_precision(scores[order], labels[order])


def auroc(scores: ScoreMapSet) -> float:
    return auroc_flat(*scores.valid_pixels())


def auprc(scores: ScoreMapSet) -> float:
    return auprc_flat(*scores.valid_pixels())


def full_report(scores: ScoreMapSet, lam: float) -> MetricsReport:
    """Threshold metrics at ``lam`` plus pooled AUROC/AUPRC where defined."""
    report = point_metrics(scores, lam)
    s, y = scores.valid_pixels()
    extra = {}
    try:
        extra["auroc"] = auroc_flat(s, y)
    except NoNegatives:
        extra["auroc"] = None
    extra["auprc"] = auprc_flat(s, y)
    return replace(report, **extra)
