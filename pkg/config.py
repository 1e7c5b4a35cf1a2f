#!/usr/bin/env python3
"""Default settings for the UAV localization toolkit.

Values match the field experiment: Seeeduino LoRaWAN modules, five-message
windows sent two seconds apart, calibration at 100-600 m slant distance.
"""
from dataclasses import dataclass

# Broadcast schedule
WINDOW_SIZE = 5
MESSAGE_INTERVAL_S = 2.0  # module minimum, shorter gaps lose messages

# Distance estimation
LOW_CONFIDENCE_DISTANCE_M = 100.0
Z_95 = 1.96

# Calibration quality gate
MIN_PATH_LOSS_EXPONENT = 0.1
MIN_R_SQUARED = 0.8

# Trilateration
COPLANAR_REL_TOLERANCE = 1e-6
MIN_STATIONS = 4

# Collector
FUSION_MAX_AGE_S = 30.0
COHORT_SPAN_S = WINDOW_SIZE * MESSAGE_INTERVAL_S  # reports this far apart belong to different windows

# Remote ID airtime
FRAME_OVERHEAD_BYTES = 2

# Calibrated model from the Seeeduino field data
PAPER_MODEL = {'L': 1.165, 'C': -56.134}

# (slant distance m, sample std dev dB) per calibration distance
TABLE3_NOISE_ANCHORS = [
    (102.97, 2.19),
    (199.19, 1.53),
    (298.19, 1.62),
    (398.15, 1.21),
    (498.34, 1.14),
    (598.29, 1.10),
]


@dataclass(frozen=True)
class CalibrationThresholds:
    min_exponent: float = MIN_PATH_LOSS_EXPONENT
    min_r_squared: float = MIN_R_SQUARED


@dataclass(frozen=True)
class FusionSettings:
    max_age_s: float = FUSION_MAX_AGE_S
    cohort_span_s: float = COHORT_SPAN_S
    min_stations: int = MIN_STATIONS
