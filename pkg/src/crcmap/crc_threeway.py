"""Cost-weighted, shift-aware three-way calibration.

Pixels are routed to SAFE (score < lambda_min), MONITOR
(lambda_min <= score < lambda_max) or EVACUATE (score >= lambda_max).
The zone boundaries are a cost-weighted CRC threshold widened by the
importance-weight mismatch at the endpoints of a declared prevalence-ratio
interval.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .domain import (
    CostSpec,
    Prevalence,
    ScoreMapSet,
    ShiftInterval,
    ZoneThresholds,
    prevalence_of,
)
from .errors import DegeneratePrevalence, Infeasible, NoNegatives, NoPositives, ValidationError


@dataclass(frozen=True)
class ShiftDiagnostics:
    rho: float
    w1: float
    w0: float
    delta_l1: float


@dataclass(frozen=True)
class ZoneReport:
    frac_safe: float
    frac_monitor: float
    frac_evacuate: float
    coverage: Optional[float]
    coverage_evacuate: Optional[float]
    decided_risk: Optional[float]
    decided_bound: Optional[float]
    d_monitor: float
    n_valid: int

    @property
    def set_size_evacuate(self) -> float:
        return self.frac_evacuate

    @property
    def set_size_flagged(self) -> float:
        return self.frac_monitor + self.frac_evacuate


def shift_diagnostics(prev: Prevalence, rho: float) -> ShiftDiagnostics:
    pi1, pi0 = prev.pi1, prev.pi0
    if not (0.0 < pi1 < 1.0):
        raise DegeneratePrevalence(f"pi1={pi1} leaves one class empty")
    if not rho > 0:
        raise ValidationError(f"rho must be positive, got {rho}")
    w1 = (rho * pi1) / (rho * pi1 + pi0) / pi1
    w0 = pi0 / (rho * pi1 + pi0) / pi0
    return ShiftDiagnostics(rho=rho, w1=w1, w0=w0, delta_l1=abs(w1 - 1) + abs(w0 - 1))


def prevalence_weighted_bound(cost: CostSpec, prev: Prevalence) -> float:
    return max(cost.c_fn * prev.pi1, cost.c_fp * prev.pi0)


def cost_weighted_risks(cal: ScoreMapSet, cost: CostSpec):
    """Candidate thresholds and their empirical mean cost-weighted loss.

    Returns ``(candidates, risks, n_valid)`` with candidates ascending.
    """
    scores, labels = cal.valid_pixels()
    n_pos = int(np.count_nonzero(labels == 1))
    if n_pos == 0:
        raise NoPositives("cost-weighted calibration needs positive pixels")
    if n_pos == labels.size:
        raise NoNegatives("cost-weighted calibration needs negative pixels")
    order = np.argsort(scores, kind="stable")
    cand, fn, fp = kernels.cost_candidates(scores[order], labels[order])
    risks = (cost.c_fn * fn + cost.c_fp * fp) / labels.size
    return cand, risks, labels.size


def calibrate_cost_weighted(cal: ScoreMapSet, cost: CostSpec, alpha: float) -> float:
    """Smallest candidate threshold whose margin-adjusted risk meets ``alpha``.

    The loss is ``c_fn`` per missed positive plus ``c_fp`` per flagged
    negative, averaged over valid pixels; the finite-sample margin is
    ``max(c_fn, c_fp) / (n + 1)``. Scanning upward from 0 returns the
    feasible threshold that flags the most pixels.
    """
    if not alpha > 0:
        raise ValidationError(f"alpha must be positive, got {alpha}")
    cand, risks, n = cost_weighted_risks(cal, cost)
    feasible = np.flatnonzero(risks + cost.c_max / (n + 1) <= alpha)
    if feasible.size == 0:
        raise Infeasible(f"no threshold reaches cost-weighted risk {alpha} with n={n}")
    return float(cand[feasible[0]])


def calibrate_three_way(
    cal: ScoreMapSet,
    cost: CostSpec,
    alpha_cw: float,
    shift: ShiftInterval,
) -> ZoneThresholds:
    if not (0 < alpha_cw < cost.c_max):
        raise ValidationError(f"alpha_cw must lie in (0, {cost.c_max}), got {alpha_cw}")
    prev = prevalence_of(cal)
    pos, neg = cal.counts()
    if pos == 0:
        raise NoPositives("three-way calibration needs positive pixels")
    if neg == 0:
        raise NoNegatives("three-way calibration needs negative pixels")
    n = pos + neg

    b_pw = prevalence_weighted_bound(cost, prev)
    d_lo = shift_diagnostics(prev, shift.rho_lo).delta_l1
    d_hi = shift_diagnostics(prev, shift.rho_hi).delta_l1
    eps_max = b_pw * max(d_lo, d_hi) + b_pw / (n + 1)
    alpha_safe = alpha_cw - eps_max
    if alpha_safe <= 0:
        raise Infeasible(f"shift interval too wide: alpha_safe={alpha_safe:.6g} <= 0")

    lam = calibrate_cost_weighted(cal, cost, alpha_safe)
    s = b_pw / cost.c_max
    return ZoneThresholds(
        lambda_min=min(1.0, max(0.0, lam - s * d_lo)),
        lambda_max=min(1.0, lam + s * d_hi),
        lambda_hat=lam,
        alpha_cw=alpha_cw,
        alpha_safe=alpha_safe,
        eps_max=eps_max,
        b_pw=b_pw,
        shift_scale_s=s,
        delta_lo_l1=d_lo,
        delta_hi_l1=d_hi,
        pi1=prev.pi1,
        n_valid=n,
        c_fn=cost.c_fn,
        c_fp=cost.c_fp,
        rho_lo=shift.rho_lo,
        rho_hi=shift.rho_hi,
    )


def zone_grid(scores: ScoreMapSet, zones: ZoneThresholds) -> np.ndarray:
    """Zone codes shaped like ``scores.scores``; -1 marks no-data pixels."""
    codes = kernels.zone_codes(scores.scores, scores.labels, zones.lambda_min, zones.lambda_max)
    return np.asarray(codes).reshape(scores.scores.shape)


def zone_report(
    scores: ScoreMapSet, zones: ZoneThresholds, codes: Optional[np.ndarray] = None
) -> ZoneReport:
    if codes is None:
        codes = zone_grid(scores, zones)
    codes = codes.reshape(-1)
    labels = scores.labels.reshape(-1)
    valid = labels != -1
    n = int(np.count_nonzero(valid))
    if n == 0:
        raise ValidationError("no valid pixels to assign")
    # rows: zone 0..2, cols: label 0..1
    table = np.zeros((3, 2), dtype=np.int64)
    np.add.at(table, (codes[valid], labels[valid]), 1)
    per_zone = table.sum(axis=1)
    n_pos = int(table[:, 1].sum())

    coverage = coverage_evac = None
    if n_pos:
        coverage = int(table[1, 1] + table[2, 1]) / n_pos
        coverage_evac = int(table[2, 1]) / n_pos

    d = per_zone[1] / n
    decided = per_zone[0] + per_zone[2]
    decided_risk = None
    if decided:
        # SAFE predicts negative (misses cost c_fn), EVACUATE predicts positive
        loss = zones.c_fn * table[0, 1] + zones.c_fp * table[2, 0]
        decided_risk = float(loss / decided)
    bound = float(zones.alpha_cw / (1.0 - d)) if d < 1.0 else None

    return ZoneReport(
        frac_safe=float(per_zone[0] / n),
        frac_monitor=float(d),
        frac_evacuate=float(per_zone[2] / n),
        coverage=coverage,
        coverage_evacuate=coverage_evac,
        decided_risk=decided_risk,
        decided_bound=bound,
        d_monitor=float(d),
        n_valid=n,
    )


def assign_zones(scores: ScoreMapSet, zones: ZoneThresholds) -> tuple[np.ndarray, ZoneReport]:
    codes = zone_grid(scores, zones)
    return codes, zone_report(scores, zones, codes)
