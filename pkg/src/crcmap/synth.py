"""Bi-normal synthetic score maps and the Monte-Carlo guarantee harness.

Latent scores are N(0, 1) for negatives and N(mu1, 1) for positives, so the
AUROC is Phi(mu1 / sqrt(2)). Latent scores are mapped to [0, 1] through a
strictly increasing logistic link; rank-based quantities do not depend on
the link.

Two links are offered:

``LOGISTIC``
    ``expit(z)``.
``POSTERIOR``
    ``expit(mu1 * z - mu1**2 / 2 + logit(pi1))``, which is exactly
    P(y = 1 | z) under the model. Scores then look like those of a
    well-calibrated classifier on rare events (most mass near 0). For
    ``mu1 == 0`` the posterior is constant, so the scale falls back to 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit, logit, ndtr, ndtri

from .crc_binary import calibrate_fnr, set_size_at, fnr_at
from .crc_threeway import assign_zones, calibrate_three_way
from .domain import SCORE_DTYPE, CostSpec, RiskSpec, ScoreMapSet, ShiftInterval
from .errors import AlphaOutOfRange, AurocOutOfRange, TooFewPositives, ValidationError


class Link(str, enum.Enum):
    LOGISTIC = "logistic"
    POSTERIOR = "posterior"


@dataclass(frozen=True)
class BiNormalModel:
    mu1: float
    pi1: float
    link: Link = Link.POSTERIOR

    def __post_init__(self):
        if not (0.0 < self.pi1 < 1.0):
            raise ValidationError(f"pi1 must lie in (0, 1), got {self.pi1}")
        if not math.isfinite(self.mu1):
            raise ValidationError("mu1 must be finite")
        object.__setattr__(self, "link", Link(self.link))

    @property
    def auroc(self) -> float:
        return float(ndtr(self.mu1 / math.sqrt(2.0)))

    def link_params(self) -> tuple[float, float]:
        """(scale, offset) of the logistic link ``expit(scale * z + offset)``."""
        if self.link is Link.LOGISTIC:
            return 1.0, 0.0
        if self.mu1 == 0.0:
            return 1.0, float(logit(self.pi1))
        return self.mu1, -0.5 * self.mu1**2 + float(logit(self.pi1))

    def to_score(self, latent: np.ndarray) -> np.ndarray:
        scale, offset = self.link_params()
        return expit(scale * np.asarray(latent, dtype=np.float64) + offset).astype(SCORE_DTYPE)


@dataclass(frozen=True)
class McResult:
    trials: int
    mean_risk: float
    std_risk: float
    violation_fraction: float
    target: float
    details: dict = field(default_factory=dict)

    def within_bound(self, n_se: float = 2.0) -> bool:
        """mean_risk <= target + n_se standard errors."""
        return self.mean_risk <= self.target + n_se * self.std_risk / math.sqrt(self.trials)


def model_from_auroc(auroc: float, pi1: float, link: Link = Link.POSTERIOR) -> BiNormalModel:
    if not (0.5 <= auroc < 1.0):
        raise AurocOutOfRange(f"auroc must lie in [0.5, 1), got {auroc}")
    return BiNormalModel(mu1=math.sqrt(2.0) * float(ndtri(auroc)), pi1=pi1, link=link)


def generate(
    model: BiNormalModel,
    n_images: int,
    h: int,
    w: int,
    seed,
    prevalence: Optional[float] = None,
) -> ScoreMapSet:
    """Draw i.i.d. pixels; ``prevalence`` overrides the label rate only.

    Overriding the prevalence keeps both class-conditional score
    distributions (and the link) fixed, i.e. it simulates pure label shift.
    """
    if n_images < 1 or h < 1 or w < 1:
        raise ValidationError("dimensions must be positive")
    pi1 = model.pi1 if prevalence is None else prevalence
    if not (0.0 <= pi1 <= 1.0):
        raise ValidationError(f"prevalence must lie in [0, 1], got {pi1}")
    rng = np.random.default_rng(seed)
    shape = (n_images, h, w)
    labels = rng.random(shape) < pi1
    latent = rng.standard_normal(shape)
    latent += model.mu1 * labels
    return ScoreMapSet(np.arange(n_images), model.to_score(latent), labels.astype(np.int8))


def closed_form_set_size(model: BiNormalModel, alpha: float) -> float:
    if not (0.0 < alpha < 1.0):
        raise AlphaOutOfRange(f"alpha must lie in (0, 1), got {alpha}")
    pi1 = model.pi1
    return pi1 * (1 - alpha) + (1 - pi1) * (1 - float(ndtr(model.mu1 + ndtri(alpha))))


def _trial_seeds(seed: int, trial: int):
    cal, test = np.random.SeedSequence(seed, spawn_key=(trial,)).spawn(2)
    return cal, test


def _check_positives(model: BiNormalModel, n_pixels: int) -> None:
    if model.pi1 * n_pixels < 20:
        raise TooFewPositives(
            f"expected {model.pi1 * n_pixels:.1f} positives per draw; need at least 20"
        )


def _summary(values: Sequence[float], target: float, details: dict) -> McResult:
    v = np.asarray(values, dtype=np.float64)
    return McResult(
        trials=int(v.size),
        mean_risk=float(v.mean()),
        std_risk=float(v.std(ddof=1)) if v.size > 1 else 0.0,
        violation_fraction=float(np.mean(v > target)),
        target=target,
        details=details,
    )


def mc_fnr_guarantee(
    model: BiNormalModel,
    alpha: float,
    n_cal_pixels: int = 50_000,
    n_test_pixels: int = 50_000,
    trials: int = 1000,
    seed: int = 0,
) -> McResult:
    """Test FNR of the calibrated threshold over repeated exchangeable draws."""
    spec = RiskSpec(alpha)
    _check_positives(model, min(n_cal_pixels, n_test_pixels))
    risks, lams = [], []
    for t in range(trials):
        cal_seed, test_seed = _trial_seeds(seed, t)
        cal = generate(model, 1, 1, n_cal_pixels, cal_seed)
        test = generate(model, 1, 1, n_test_pixels, test_seed)
        lam = calibrate_fnr(cal, spec).lambda_hat
        risks.append(fnr_at(test, lam))
        lams.append(lam)
    return _summary(risks, alpha, {"mean_lambda_hat": float(np.mean(lams))})


@dataclass(frozen=True)
class McSetSizeResult:
    trials: int
    mean_set_size: float
    std_set_size: float
    closed_form: float

    @property
    def relative_error(self) -> float:
        return abs(self.mean_set_size - self.closed_form) / self.closed_form


def mc_set_size_stats(
    model: BiNormalModel,
    alpha: float,
    n_cal_pixels: int = 1_000_000,
    n_test_pixels: int = 1_000_000,
    trials: int = 100,
    seed: int = 0,
) -> McSetSizeResult:
    spec = RiskSpec(alpha)
    _check_positives(model, min(n_cal_pixels, n_test_pixels))
    sizes = []
    for t in range(trials):
        cal_seed, test_seed = _trial_seeds(seed, t)
        lam = calibrate_fnr(generate(model, 1, 1, n_cal_pixels, cal_seed), spec).lambda_hat
        sizes.append(set_size_at(generate(model, 1, 1, n_test_pixels, test_seed), lam))
    sizes = np.asarray(sizes)
    return McSetSizeResult(
        trials=trials,
        mean_set_size=float(sizes.mean()),
        std_set_size=float(sizes.std(ddof=1)) if trials > 1 else 0.0,
        closed_form=closed_form_set_size(model, alpha),
    )


def mc_set_size(model: BiNormalModel, alpha: float, **kwargs) -> float:
    """Mean test set size at the calibrated threshold."""
    return mc_set_size_stats(model, alpha, **kwargs).mean_set_size


def mc_threeway_check(
    model: BiNormalModel,
    cost: CostSpec,
    alpha_cw: float,
    shift: ShiftInterval,
    n_cal_pixels: int = 20_000,
    n_test_pixels: int = 20_000,
    trials: int = 500,
    seed: int = 0,
    rho_test: Optional[float] = 1.0,
) -> McResult:
    """Decided-set risk of three-way zones against alpha_cw / (1 - d).

    ``rho_test`` scales the test prevalence to ``rho_test * pi1``; ``None``
    draws a fresh ratio uniformly from the shift interval in every trial.
    ``target`` of the result is the mean per-trial bound and
    ``violation_fraction`` counts trials whose risk exceeds their own bound.
    Trials with an all-MONITOR test map have no decided risk and are
    counted in ``details["undecided_trials"]``.
    """
    _check_positives(model, min(n_cal_pixels, n_test_pixels))
    risks, bounds, ds, lam_hats = [], [], [], []
    lam_min_zero = safe_empty = undecided = 0
    for t in range(trials):
        cal_seed, test_seed = _trial_seeds(seed, t)
        if rho_test is None:
            rho = float(np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(t, 2))).uniform(
                shift.rho_lo, shift.rho_hi
            ))
        else:
            rho = rho_test
        cal = generate(model, 1, 1, n_cal_pixels, cal_seed)
        zones = calibrate_three_way(cal, cost, alpha_cw, shift)
        test = generate(model, 1, 1, n_test_pixels, test_seed, prevalence=min(1.0, rho * model.pi1))
        _, rep = assign_zones(test, zones)
        lam_hats.append(zones.lambda_hat)
        lam_min_zero += zones.lambda_min == 0.0
        safe_empty += rep.frac_safe == 0.0
        ds.append(rep.d_monitor)
        if rep.decided_risk is None or rep.decided_bound is None:
            undecided += 1
            continue
        risks.append(rep.decided_risk)
        bounds.append(rep.decided_bound)

    risks_a = np.asarray(risks)
    bounds_a = np.asarray(bounds)
    mean_d = float(np.mean(ds))
    details = {
        "undecided_trials": undecided,
        "lambda_min_zero_fraction": lam_min_zero / trials,
        "safe_empty_fraction": safe_empty / trials,
        "mean_d_monitor": mean_d,
        "mean_lambda_hat": float(np.mean(lam_hats)),
        "bound_at_mean_d": alpha_cw / (1 - mean_d) if mean_d < 1 else None,
    }
    if risks_a.size == 0:
        return McResult(trials, float("nan"), float("nan"), 0.0, float("nan"), details)
    return McResult(
        trials=int(risks_a.size),
        mean_risk=float(risks_a.mean()),
        std_risk=float(risks_a.std(ddof=1)) if risks_a.size > 1 else 0.0,
        violation_fraction=float(np.mean(risks_a > bounds_a)),
        target=float(bounds_a.mean()),
        details=details,
    )


def collapse_frontier(
    auroc: float,
    pi1_grid: Sequence[float],
    cost: CostSpec,
    alpha_cw: float,
    shift: ShiftInterval,
    n_cal_pixels: int = 20_000,
    trials: int = 20,
    seed: int = 0,
) -> list[tuple[float, float]]:
    """Fraction of calibrations with an empty SAFE zone (lambda_min == 0) per prevalence."""
    rows = []
    for j, pi1 in enumerate(pi1_grid):
        model = model_from_auroc(auroc, pi1)
        zero = 0
        for t in range(trials):
            cal = generate(model, 1, 1, n_cal_pixels, np.random.SeedSequence(seed, spawn_key=(j, t)))
            zero += calibrate_three_way(cal, cost, alpha_cw, shift).lambda_min == 0.0
        rows.append((float(pi1), zero / trials))
    return rows
