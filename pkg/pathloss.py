#!/usr/bin/env python3
"""Log-distance path-loss model: RSSI <-> slant distance.

    rssi = -10 * exponent * log10(d) + intercept_db

The intercept is the regression intercept of RSSI on log10(distance), so a
model calibrated at -56.134 dB predicts -56.134 dB at one metre.
"""
import logging
import math
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.linear_model import LinearRegression
from sklearn.metrics import r2_score

import config
from errors import (DegenerateModel, DistanceOutOfRange, EmptyWindow,
                    InsufficientPoints, MixedSource, NonPositiveDistance, TooFewSamples,
                    ZeroVarianceInDistance)

log = logging.getLogger(__name__)

MAX_DECADES = math.log10(sys.float_info.max)


@dataclass(frozen=True)
class RssiSample:
    station_id: str
    uav_id: str
    rssi_db: float
    timestamp_s: float

    def __post_init__(self):
        if not math.isfinite(self.rssi_db):
            raise ValueError(f"rssi_db must be finite, got {self.rssi_db}")
        if not math.isfinite(self.timestamp_s) or self.timestamp_s < 0:
            raise ValueError(f"timestamp_s must be finite and >= 0, got {self.timestamp_s}")


@dataclass(frozen=True)
class MeanRssi:
    value_db: float
    sample_count: int
    window_start_s: float
    window_end_s: float

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if self.window_end_s < self.window_start_s:
            raise ValueError("window_end_s precedes window_start_s")


@dataclass(frozen=True)
class PathLossModel:
    exponent: float      # L, dB per decade / 10
    intercept_db: float  # C

    def __post_init__(self):
        if not (math.isfinite(self.exponent) and math.isfinite(self.intercept_db)):
            raise ValueError("model parameters must be finite")

    def to_text(self):
        return f"L={self.exponent!r}\nC={self.intercept_db!r}\n"

    @classmethod
    def from_text(cls, text):
        values = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            key, sep, value = line.partition('=')
            if not sep:
                raise ValueError(f"model line without '=': {line!r}")
            values[key.strip().upper()] = float(value)
        try:
            return cls(exponent=values['L'], intercept_db=values['C'])
        except KeyError as missing:
            raise ValueError(f"model file lacks {missing.args[0]}") from None


PAPER_MODEL = PathLossModel(config.PAPER_MODEL['L'], config.PAPER_MODEL['C'])


@dataclass(frozen=True)
class CalibrationPoint:
    slant_distance_m: float
    mean_rssi_db: float

    def __post_init__(self):
        if not self.slant_distance_m > 0:
            raise NonPositiveDistance(f"slant distance must be > 0, got {self.slant_distance_m}")


@dataclass(frozen=True)
class RegressionReport:
    slope: float
    intercept: float
    r_squared: float
    n_points: int
    residuals_db: Tuple[float, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class DistanceEstimate:
    distance_m: float
    low_confidence: bool


@dataclass(frozen=True)
class CalibrationVerdict:
    usable: bool
    reason: Optional[str] = None


@dataclass(frozen=True)
class SampleStats:
    n: int
    mean: float
    sample_variance: float
    std_dev: float
    std_err: float
    ci95_lo: float
    ci95_hi: float

    @classmethod
    def from_summary(cls, n, mean, std_dev, z=config.Z_95):
        """Rebuild stats from a printed (n, mean, std dev) summary."""
        if n < 2:
            raise TooFewSamples(f"need at least 2 samples, got {n}")
        std_err = std_dev / math.sqrt(n)
        half = z * std_err
        return cls(n=n, mean=mean, sample_variance=std_dev ** 2, std_dev=std_dev,
                   std_err=std_err, ci95_lo=mean - half, ci95_hi=mean + half)


def mean_rssi(samples: Sequence[RssiSample]) -> MeanRssi:
    if not samples:
        raise EmptyWindow("cannot average an empty window")
    first = samples[0]
    for s in samples[1:]:
        if s.station_id != first.station_id or s.uav_id != first.uav_id:
            raise MixedSource(
                f"window mixes {first.station_id}/{first.uav_id} with {s.station_id}/{s.uav_id}")
    values = np.array([s.rssi_db for s in samples])
    stamps = [s.timestamp_s for s in samples]
    return MeanRssi(value_db=float(values.mean()), sample_count=len(samples),
                    window_start_s=min(stamps), window_end_s=max(stamps))


def predict_rssi(model: PathLossModel, distance_m: float) -> float:
    if not distance_m > 0:
        raise NonPositiveDistance(f"distance must be > 0, got {distance_m}")
    return -10.0 * model.exponent * math.log10(distance_m) + model.intercept_db


def estimate_distance(model: PathLossModel, mean_rssi_db: float,
                      low_confidence_below_m=config.LOW_CONFIDENCE_DISTANCE_M) -> DistanceEstimate:
    """Invert the model. Distances under the threshold are flagged, not rejected."""
    if model.exponent == 0:
        raise DegenerateModel("path-loss exponent is zero")
    exponent = -(mean_rssi_db - model.intercept_db) / (10.0 * model.exponent)
    if exponent > MAX_DECADES:
        raise DistanceOutOfRange(f"{mean_rssi_db} dB inverts to 10**{exponent:.0f} m "
                                 f"under L={model.exponent}, C={model.intercept_db}")
    distance = 10.0 ** exponent
    low = distance < low_confidence_below_m
    if low:
        log.warning("estimated distance %.1f m is below the %.0f m usable range",
                    distance, low_confidence_below_m)
    return DistanceEstimate(distance_m=distance, low_confidence=low)


def fit_model(points: Sequence[CalibrationPoint]) -> Tuple[PathLossModel, RegressionReport]:
    """Ordinary least squares of mean RSSI on log10(slant distance)."""
    if len(points) < 2:
        raise InsufficientPoints(f"need at least 2 calibration points, got {len(points)}")
    distances = np.array([p.slant_distance_m for p in points], dtype=float)
    rssi = np.array([p.mean_rssi_db for p in points], dtype=float)
    if np.ptp(distances) == 0:
        raise ZeroVarianceInDistance("all calibration points share one distance")

    X = np.log10(distances).reshape(-1, 1)
    reg = LinearRegression()
    reg.fit(X, rssi)
    fitted = reg.predict(X)

    slope = float(reg.coef_[0])
    intercept = float(reg.intercept_)
    if np.ptp(rssi) == 0:
        r_squared = 1.0  # flat data lies exactly on the fitted flat line
    else:
        r_squared = float(np.clip(r2_score(rssi, fitted), 0.0, 1.0))

    report = RegressionReport(slope=slope, intercept=intercept, r_squared=r_squared,
                              n_points=len(points),
                              residuals_db=tuple(float(r) for r in rssi - fitted))
    model = PathLossModel(exponent=-slope / 10.0, intercept_db=intercept)
    log.info("fitted L=%.4f C=%.3f R2=%.4f over %d points",
             model.exponent, model.intercept_db, r_squared, len(points))
    return model, report


def assess_calibration(report: RegressionReport, model: PathLossModel,
                       thresholds: config.CalibrationThresholds = config.CalibrationThresholds()
                       ) -> CalibrationVerdict:
    if model.exponent <= thresholds.min_exponent:
        reason = (f"path-loss exponent {model.exponent:.4f} <= {thresholds.min_exponent}: "
                  "RSSI barely changes with distance")
    elif report.r_squared < thresholds.min_r_squared:
        reason = f"R^2 {report.r_squared:.3f} < {thresholds.min_r_squared}: poor linear fit"
    else:
        return CalibrationVerdict(usable=True)
    log.warning("calibration rejected: %s", reason)
    return CalibrationVerdict(usable=False, reason=reason)


def describe_samples(values: Sequence[float], z=config.Z_95) -> SampleStats:
    series = pd.Series(values, dtype=float)
    n = len(series)
    if n < 2:
        raise TooFewSamples(f"need at least 2 samples, got {n}")
    mean = float(series.mean())
    variance = float(series.var(ddof=1))
    std_dev = math.sqrt(variance)
    std_err = std_dev / math.sqrt(n)
    half = z * std_err
    return SampleStats(n=n, mean=mean, sample_variance=variance, std_dev=std_dev,
                       std_err=std_err, ci95_lo=mean - half, ci95_hi=mean + half)


def ci_overlap(a: SampleStats, b: SampleStats, decimals: Optional[int] = None) -> bool:
    """True when the two 95% intervals intersect with positive width or coincide.

    Strict intersection: max(lo) < min(hi). Intervals touching at a single
    endpoint do not overlap. With `decimals`, bounds are rounded first and the
    same strict rule applies to the rounded bounds (compare at printed
    precision).
    """
    bounds = [a.ci95_lo, a.ci95_hi, b.ci95_lo, b.ci95_hi]
    if decimals is not None:
        bounds = [round(v, decimals) for v in bounds]
    a_lo, a_hi, b_lo, b_hi = bounds
    if (a_lo, a_hi) == (b_lo, b_hi):
        return True
    return max(a_lo, b_lo) < min(a_hi, b_hi)


def calibration_points_from_frame(df: pd.DataFrame) -> List[CalibrationPoint]:
    """Calibration CSV frame (distance_m, mean_rssi_db) -> points."""
    missing = {'distance_m', 'mean_rssi_db'} - set(df.columns)
    if missing:
        raise ValueError(f"calibration CSV missing columns: {sorted(missing)}")
    return [CalibrationPoint(float(d), float(r))
            for d, r in zip(df['distance_m'], df['mean_rssi_db'])]
