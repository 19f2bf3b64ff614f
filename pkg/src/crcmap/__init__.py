"""Distribution-free false-negative-rate control for pixel score maps."""

__version__ = "0.1.0"

from .bootstrap import BootstrapSpec, bootstrap_ci
from .crc_binary import calibrate_fnr, fnr_at, fnr_sweep, set_size_at
from .crc_threeway import (
    assign_zones,
    calibrate_cost_weighted,
    calibrate_three_way,
    prevalence_weighted_bound,
    shift_diagnostics,
)
from .domain import (
    CalibrationResult,
    CostSpec,
    MetricsReport,
    Prevalence,
    RiskSpec,
    ScoreMap,
    ScoreMapSet,
    ShiftInterval,
    Zone,
    ZoneThresholds,
    prevalence_of,
)
from .metrics import auprc, auroc, confusion_at, point_metrics

__all__ = [
    "BootstrapSpec",
    "CalibrationResult",
    "CostSpec",
    "MetricsReport",
    "Prevalence",
    "RiskSpec",
    "ScoreMap",
    "ScoreMapSet",
    "ShiftInterval",
    "Zone",
    "ZoneThresholds",
    "assign_zones",
    "auprc",
    "auroc",
    "bootstrap_ci",
    "calibrate_cost_weighted",
    "calibrate_fnr",
    "calibrate_three_way",
    "confusion_at",
    "fnr_at",
    "fnr_sweep",
    "point_metrics",
    "prevalence_of",
    "prevalence_weighted_bound",
    "set_size_at",
    "shift_diagnostics",
]
