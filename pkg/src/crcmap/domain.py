"""Core value types for pixel-level score maps and calibration targets.

Labels use ``-1`` as the single no-data sentinel; validity masks are always
derived from the labels, never stored.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import BadLabel, EmptyInput, ScoreOutOfRange, ValidationError

NO_DATA = -1
NEGATIVE = 0
POSITIVE = 1

SCORE_DTYPE = np.float32
LABEL_DTYPE = np.int8
ID_DTYPE = np.uint32


class PixelLabel(enum.IntEnum):
    NO_DATA = NO_DATA
    NON_FIRE = NEGATIVE
    FIRE = POSITIVE


class Zone(enum.IntEnum):
    SAFE = 0
    MONITOR = 1
    EVACUATE = 2


def quantile_index(alpha: float, m: int) -> int:
    """1-based order-statistic index ceil(alpha * (m + 1)).

    Products such as 0.07 * 100 = 7.000000000000001 are snapped back to the
    integer they represent before taking the ceiling.
    """
    x = alpha * (m + 1)
    k = math.ceil(x)
    if k > 1 and k - x > 1 - 1e-12 * max(1.0, x):
        k -= 1
    return int(k)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def check_scores(scores: np.ndarray) -> None:
    if scores.size and not (np.all(scores >= 0.0) and np.all(scores <= 1.0)):
        bad = scores[~((scores >= 0.0) & (scores <= 1.0))]
        raise ScoreOutOfRange(f"score {bad.flat[0]!r} outside [0, 1]")


def check_labels(labels: np.ndarray) -> None:
    ok = (labels == NO_DATA) | (labels == NEGATIVE) | (labels == POSITIVE)
    if not np.all(ok):
        raise BadLabel(f"label {labels[~ok].flat[0]!r} not in {{-1, 0, 1}}")


@dataclass(frozen=True, eq=False)
class ScoreMap:
    """One image: a grid of probabilities with matching labels."""

    image_id: int
    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=SCORE_DTYPE)
        labels = np.asarray(self.labels)
        if scores.ndim != 2 or labels.shape != scores.shape:
            raise ValidationError(
                f"scores {scores.shape} and labels {labels.shape} must be equal 2-D grids"
            )
        if scores.shape[0] < 1 or scores.shape[1] < 1:
            raise ValidationError("grid dimensions must be positive")
        check_labels(labels)
        check_scores(scores)
        object.__setattr__(self, "image_id", int(self.image_id))
        object.__setattr__(self, "scores", _frozen(scores.copy()))
        object.__setattr__(self, "labels", _frozen(labels.astype(LABEL_DTYPE)))

    @property
    def height(self) -> int:
        return self.scores.shape[0]

    @property
    def width(self) -> int:
        return self.scores.shape[1]

    @property
    def valid(self) -> np.ndarray:
        return self.labels != NO_DATA


class ScoreMapSet:
    """An ordered collection of equally sized score maps.

    Stored as stacked arrays ``scores[n, h, w]`` (float32), ``labels[n, h, w]``
    (int8) and ``image_ids[n]`` (uint32). Instances are immutable.
    """

    __slots__ = ("image_ids", "scores", "labels")

    def __init__(self, image_ids, scores, labels):
        ids = np.asarray(image_ids)
        scores = np.asarray(scores, dtype=SCORE_DTYPE)
        labels = np.asarray(labels)
        if scores.ndim != 3 or labels.shape != scores.shape:
            raise ValidationError(
                f"scores {scores.shape} and labels {labels.shape} must be equal (n, h, w) stacks"
            )
        if ids.shape != (scores.shape[0],):
            raise ValidationError("one image_id per image required")
        if scores.shape[1] < 1 or scores.shape[2] < 1:
            raise ValidationError("grid dimensions must be positive")
        if ids.size and (ids.min() < 0 or ids.max() > np.iinfo(ID_DTYPE).max):
            raise ValidationError("image_id must fit an unsigned 32-bit integer")
        if np.unique(ids).size != ids.size:
            raise ValidationError("image_ids must be unique")
        check_labels(labels)
        check_scores(scores)
        object.__setattr__(self, "image_ids", _frozen(ids.astype(ID_DTYPE)))
        object.__setattr__(self, "scores", _frozen(np.ascontiguousarray(scores)))
        object.__setattr__(self, "labels", _frozen(np.ascontiguousarray(labels, dtype=LABEL_DTYPE)))

    def __setattr__(self, name, value):
        raise AttributeError("ScoreMapSet is immutable")

    @classmethod
    def from_maps(cls, maps: Iterable[ScoreMap]) -> "ScoreMapSet":
        maps = list(maps)
        if not maps:
            raise EmptyInput("no score maps given")
        shapes = {m.scores.shape for m in maps}
        if len(shapes) != 1:
            raise ValidationError(f"mixed image sizes in one set: {sorted(shapes)}")
        return cls(
            [m.image_id for m in maps],
            np.stack([m.scores for m in maps]),
            np.stack([m.labels for m in maps]),
        )

    @classmethod
    def from_flat(cls, scores, labels) -> "ScoreMapSet":
        """A single 1 x n image holding the given pixels."""
        scores = np.asarray(scores, dtype=SCORE_DTYPE).reshape(1, 1, -1)
        labels = np.asarray(labels).reshape(1, 1, -1)
        return cls([0], scores, labels)

    def __len__(self) -> int:
        return self.scores.shape[0]

    def __iter__(self):
        return iter(self.maps)

    def __eq__(self, other):
        if not isinstance(other, ScoreMapSet):
            return NotImplemented
        return (
            self.scores.shape == other.scores.shape
            and np.array_equal(self.image_ids, other.image_ids)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.scores.view(np.uint32), other.scores.view(np.uint32))
        )

    def __repr__(self):
        n, h, w = self.scores.shape
        return f"ScoreMapSet(n_images={n}, height={h}, width={w})"

    @property
    def maps(self) -> tuple:
        return tuple(
            ScoreMap(int(i), self.scores[k], self.labels[k]) for k, i in enumerate(self.image_ids)
        )

    @property
    def height(self) -> int:
        return self.scores.shape[1]

    @property
    def width(self) -> int:
        return self.scores.shape[2]

    def subset(self, indices: Sequence[int]) -> "ScoreMapSet":
        idx = np.asarray(indices, dtype=np.intp)
        return ScoreMapSet(self.image_ids[idx], self.scores[idx], self.labels[idx])

    def valid_pixels(self) -> tuple[np.ndarray, np.ndarray]:
        """Flat (scores, labels) over valid pixels, pooled across images."""
        labels = self.labels.reshape(-1)
        mask = labels != NO_DATA
        return self.scores.reshape(-1)[mask], labels[mask]

    def positive_scores(self) -> np.ndarray:
        return self.scores[self.labels == POSITIVE]

    def counts(self) -> tuple[int, int]:
        """(# positive, # negative) valid pixels."""
        pos = int(np.count_nonzero(self.labels == POSITIVE))
        neg = int(np.count_nonzero(self.labels == NEGATIVE))
        return pos, neg


@dataclass(frozen=True)
class RiskSpec:
    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class CostSpec:
    c_fn: float = 5.0
    c_fp: float = 1.0

    def __post_init__(self):
        if not (self.c_fn > 0 and self.c_fp > 0) or not (
            math.isfinite(self.c_fn) and math.isfinite(self.c_fp)
        ):
            raise ValidationError("costs must be finite and strictly positive")

    @property
    def c_max(self) -> float:
        return max(self.c_fn, self.c_fp)


@dataclass(frozen=True)
class ShiftInterval:
    rho_lo: float = 0.9
    rho_hi: float = 1.1

    def __post_init__(self):
        if not (0.0 < self.rho_lo <= self.rho_hi) or not math.isfinite(self.rho_hi):
            raise ValidationError(f"need 0 < rho_lo <= rho_hi, got [{self.rho_lo}, {self.rho_hi}]")


@dataclass(frozen=True)
class Prevalence:
    pi1: float

    def __post_init__(self):
        if not (0.0 <= self.pi1 <= 1.0):
            raise ValidationError(f"pi1 must lie in [0, 1], got {self.pi1}")

    @property
    def pi0(self) -> float:
        return 1.0 - self.pi1


@dataclass(frozen=True)
class CalibrationResult:
    lambda_hat: float
    alpha_used: float
    m_positives: int
    quantile_index: int
    n_valid: int

    def __post_init__(self):
        if self.quantile_index != quantile_index(self.alpha_used, self.m_positives):
            raise ValidationError("quantile_index inconsistent with alpha and m")
        if not (1 <= self.quantile_index <= self.m_positives):
            raise ValidationError("quantile_index outside [1, m]")


@dataclass(frozen=True)
class ZoneThresholds:
    lambda_min: float
    lambda_max: float
    lambda_hat: float
    alpha_cw: float
    alpha_safe: float
    eps_max: float
    b_pw: float
    shift_scale_s: float
    delta_lo_l1: float
    delta_hi_l1: float
    pi1: float = float("nan")
    n_valid: int = 0
    c_fn: float = float("nan")
    c_fp: float = float("nan")
    rho_lo: float = float("nan")
    rho_hi: float = float("nan")

    def __post_init__(self):
        if not (0.0 <= self.lambda_min <= self.lambda_max <= 1.0):
            raise ValidationError(
                f"need 0 <= lambda_min <= lambda_max <= 1, got {self.lambda_min}, {self.lambda_max}"
            )
        if self.delta_lo_l1 < 0 or self.delta_hi_l1 < 0:
            raise ValidationError("shift mismatches must be nonnegative")


@dataclass(frozen=True)
class MetricsReport:
    """Threshold metrics plus optional ranking metrics and CIs.

    Fields that are undefined for the data (0/0 ratios) are ``None``.
    """

    coverage: Optional[float] = None
    fnr: Optional[float] = None
    set_size: Optional[float] = None
    precision: Optional[float] = None
    f1: Optional[float] = None
    iou: Optional[float] = None
    auroc: Optional[float] = None
    auprc: Optional[float] = None
    ci: dict = field(default_factory=dict)


def prevalence_of(scores: ScoreMapSet) -> Prevalence:
    pos, neg = scores.counts()
    if pos + neg == 0:
        raise EmptyInput("no valid pixels")
    return Prevalence(pos / (pos + neg))
