"""Hot counting kernels, compiled with numba when available.

Every kernel has a pure-numpy twin with identical results. The numba path is
used by default; set ``CRCMAP_PURE_NUMPY=1`` before import to force the numpy
path (useful for debugging and for platforms without numba). Both backends
are always importable as ``NUMPY`` and ``NUMBA`` (the latter is ``None`` when
numba is missing) so tests and the benchmark can compare them directly.

All kernels take flat arrays. ``labels`` follow the -1/0/1 convention and
no-data pixels are skipped inside the kernels.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

# ---------------------------------------------------------------- numpy ---


def _np_threshold_counts(scores, labels, lam):
    # float64 scalar keeps the comparison in double precision, as in numba
    flagged = scores >= np.float64(lam)
    pos = labels == 1
    neg = labels == 0
    tp = np.count_nonzero(flagged & pos)
    fp = np.count_nonzero(flagged & neg)
    fn = np.count_nonzero(pos) - tp
    tn = np.count_nonzero(neg) - fp
    return int(tp), int(fp), int(fn), int(tn)


def _np_cost_candidates(sorted_scores, sorted_labels):
    # candidates: 0, every distinct score, and one value just above 1
    n_pos = np.count_nonzero(sorted_labels == 1)
    n_neg = sorted_labels.size - n_pos
    values, first = np.unique(sorted_scores, return_index=True)
    pos_before = np.concatenate(([0], np.cumsum(sorted_labels == 1)))
    fn = pos_before[first]
    neg_before = first - fn
    fp = n_neg - neg_before
    cand = np.concatenate(([0.0], values.astype(np.float64), [np.nextafter(1.0, 2.0)]))
    fn = np.concatenate(([0], fn, [n_pos])).astype(np.int64)
    fp = np.concatenate(([n_neg], fp, [0])).astype(np.int64)
    return cand, fn, fp


def _np_zone_codes(scores, labels, lam_min, lam_max):
    lo, hi = np.float64(lam_min), np.float64(lam_max)
    codes = np.where(scores < lo, 0, np.where(scores < hi, 1, 2)).astype(np.int8)
    codes[labels == -1] = -1
    return codes


def _np_positive_rank_sum(sorted_scores, sorted_labels):
    # average 1-based ranks with ties sharing the mean rank of their block
    _, first, counts = np.unique(sorted_scores, return_index=True, return_counts=True)
    avg = first + (counts + 1) / 2.0
    block = np.repeat(np.arange(first.size), counts)
    return float(avg[block][sorted_labels == 1].sum())


def _np_average_precision(desc_scores, desc_labels):
    n = desc_scores.size
    if n == 0:
        return float("nan")
    is_pos = desc_labels == 1
    total_pos = np.count_nonzero(is_pos)
    # last index of every block of equal scores
    ends = np.flatnonzero(np.concatenate((desc_scores[1:] != desc_scores[:-1], [True])))
    tp = np.cumsum(is_pos)[ends]
    seen = ends + 1
    prev_tp = np.concatenate(([0], tp[:-1]))
    return float(np.sum((tp - prev_tp) / total_pos * (tp / seen)))


NUMPY = SimpleNamespace(
    name="numpy",
    threshold_counts=_np_threshold_counts,
    cost_candidates=_np_cost_candidates,
    zone_codes=_np_zone_codes,
    positive_rank_sum=_np_positive_rank_sum,
    average_precision=_np_average_precision,
)

# ---------------------------------------------------------------- numba ---

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None

if njit is not None:

    @njit(cache=True, nogil=True)
    def _nb_threshold_counts(scores, labels, lam):
        # branch-free: random labels defeat the branch predictor
        tp = 0
        fp = 0
        n_pos = 0
        n_neg = 0
        for i in range(scores.size):
            flagged = np.int64(scores[i] >= lam)
            pos = np.int64(labels[i] == 1)
            neg = np.int64(labels[i] == 0)
            tp += flagged & pos
            fp += flagged & neg
            n_pos += pos
            n_neg += neg
        return tp, fp, n_pos - tp, n_neg - fp

    @njit(cache=True, nogil=True)
    def _nb_cost_candidates_impl(sorted_scores, sorted_labels):
        n = sorted_scores.size
        n_pos = 0
        for i in range(n):
            if sorted_labels[i] == 1:
                n_pos += 1
        n_neg = n - n_pos
        cand = np.empty(n + 2, np.float64)
        fn = np.empty(n + 2, np.int64)
        fp = np.empty(n + 2, np.int64)
        cand[0] = 0.0
        fn[0] = 0
        fp[0] = n_neg
        k = 1
        pos_seen = 0
        i = 0
        while i < n:
            v = sorted_scores[i]
            cand[k] = v
            fn[k] = pos_seen
            fp[k] = n_neg - (i - pos_seen)
            k += 1
            while i < n and sorted_scores[i] == v:
                if sorted_labels[i] == 1:
                    pos_seen += 1
                i += 1
        cand[k] = np.nextafter(1.0, 2.0)
        fn[k] = n_pos
        fp[k] = 0
        return cand[: k + 1], fn[: k + 1], fp[: k + 1]

    def _nb_cost_candidates(sorted_scores, sorted_labels):
        return _nb_cost_candidates_impl(
            np.ascontiguousarray(sorted_scores), np.ascontiguousarray(sorted_labels)
        )

    @njit(cache=True, nogil=True)
    def _nb_zone_codes(scores, labels, lam_min, lam_max):
        out = np.empty(scores.size, np.int8)
        for i in range(scores.size):
            if labels[i] == -1:
                out[i] = -1
            elif scores[i] < lam_min:
                out[i] = 0
            elif scores[i] < lam_max:
                out[i] = 1
            else:
                out[i] = 2
        return out

    @njit(cache=True, nogil=True)
    def _nb_positive_rank_sum(sorted_scores, sorted_labels):
        n = sorted_scores.size
        total = 0.0
        i = 0
        while i < n:
            j = i
            n_pos = 0
            while j < n and sorted_scores[j] == sorted_scores[i]:
                if sorted_labels[j] == 1:
                    n_pos += 1
                j += 1
            # ranks i+1 .. j share the average (i + 1 + j) / 2
            total += n_pos * (i + 1 + j) / 2.0
            i = j
        return total

    @njit(cache=True, nogil=True)
    def _nb_average_precision(desc_scores, desc_labels):
        n = desc_scores.size
        total_pos = 0
        for i in range(n):
            if desc_labels[i] == 1:
                total_pos += 1
        if n == 0 or total_pos == 0:
            return np.nan
        ap = 0.0
        tp = 0
        i = 0
        while i < n:
            j = i
            new_tp = 0
            while j < n and desc_scores[j] == desc_scores[i]:
                if desc_labels[j] == 1:
                    new_tp += 1
                j += 1
            tp += new_tp
            if new_tp > 0:
                ap += new_tp / total_pos * (tp / j)
            i = j
        return ap

    def _flat(a):
        return np.ascontiguousarray(a).reshape(-1)

    def _nb_threshold_counts_py(scores, labels, lam):
        tp, fp, fn, tn = _nb_threshold_counts(_flat(scores), _flat(labels), float(lam))
        return int(tp), int(fp), int(fn), int(tn)

    NUMBA = SimpleNamespace(
        name="numba",
        threshold_counts=_nb_threshold_counts_py,
        cost_candidates=_nb_cost_candidates,
        zone_codes=lambda s, lab, lo, hi: _nb_zone_codes(_flat(s), _flat(lab), float(lo), float(hi)),
        positive_rank_sum=lambda s, lab: float(_nb_positive_rank_sum(_flat(s), _flat(lab))),
        average_precision=lambda s, lab: float(_nb_average_precision(_flat(s), _flat(lab))),
    )
else:  # pragma: no cover
    NUMBA = None


def _select():
    flag = os.environ.get("CRCMAP_PURE_NUMPY", "").strip().lower()
    if flag in ("1", "true", "yes", "on") or NUMBA is None:
        return NUMPY
    return NUMBA


BACKEND = _select()


def threshold_counts(scores, labels, lam):
    """(tp, fp, fn, tn) over valid pixels under the rule score >= lam."""
    return BACKEND.threshold_counts(scores, labels, lam)


def cost_candidates(sorted_scores, sorted_labels):
    """Candidate thresholds with their miss and false-alarm counts.

    Input must be valid pixels sorted ascending by score. Returns
    ``(candidates, fn_counts, fp_counts)`` for ``0``, every distinct score,
    and a sentinel just above 1.
    """
    return BACKEND.cost_candidates(sorted_scores, sorted_labels)


def zone_codes(scores, labels, lam_min, lam_max):
    return BACKEND.zone_codes(scores, labels, lam_min, lam_max)


def positive_rank_sum(sorted_scores, sorted_labels):
    return BACKEND.positive_rank_sum(sorted_scores, sorted_labels)


def average_precision(desc_scores, desc_labels):
    return BACKEND.average_precision(desc_scores, desc_labels)
