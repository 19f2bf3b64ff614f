"""Brute-force reference implementations, independent of the package code."""

import math

import numpy as np


def pairwise_auroc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else 0.5 if p == n else 0.0
    return total / (len(pos) * len(neg))


def enumerated_average_precision(scores, labels):
    """Walk every distinct threshold from high to low and sum recall steps."""
    pairs = [(float(s), int(y)) for s, y in zip(scores, labels) if y != -1]
    n_pos = sum(y for _, y in pairs)
    ap = 0.0
    prev_recall = 0.0
    for t in sorted({s for s, _ in pairs}, reverse=True):
        tp = sum(1 for s, y in pairs if s >= t and y == 1)
        flagged = sum(1 for s, _ in pairs if s >= t)
        recall = tp / n_pos
        ap += (recall - prev_recall) * (tp / flagged)
        prev_recall = recall
    return ap


def confusion(scores, labels, lam):
    tp = fp = fn = tn = 0
    for s, y in zip(scores, labels):
        if y == -1:
            continue
        flagged = float(s) >= lam
        if y == 1:
            tp += flagged
            fn += not flagged
        else:
            fp += flagged
            tn += not flagged
    return tp, fp, fn, tn


def cost_risk(scores, labels, lam, c_fn, c_fp):
    valid = [(float(s), y) for s, y in zip(scores, labels) if y != -1]
    loss = 0.0
    for s, y in valid:
        if y == 1 and s < lam:
            loss += c_fn
        elif y == 0 and s >= lam:
            loss += c_fp
    return loss / len(valid)


def smallest_feasible(scores, labels, c_fn, c_fp, alpha):
    valid = [(float(s), y) for s, y in zip(scores, labels) if y != -1]
    n = len(valid)
    cands = sorted({0.0} | {s for s, _ in valid} | {math.nextafter(1.0, 2.0)})
    for lam in cands:
        if cost_risk(scores, labels, lam, c_fn, c_fp) + max(c_fn, c_fp) / (n + 1) <= alpha:
            return lam
    return None


def kth_smallest_positive(scores, labels, k):
    return sorted(float(s) for s, y in zip(scores, labels) if y == 1)[k - 1]


def ceil_index(alpha, m):
    from fractions import Fraction

    return math.ceil(Fraction(str(alpha)) * (m + 1))


def random_instance(rng, n_max=200, ties=True):
    n = int(rng.integers(2, n_max + 1))
    if ties and rng.random() < 0.5:
        scores = rng.integers(0, 6, n) / 5.0
    else:
        scores = rng.random(n)
    labels = rng.integers(-1, 2, n)
    labels[0], labels[1] = 1, 0
    return np.asarray(scores, dtype=np.float32), labels.astype(np.int8)
