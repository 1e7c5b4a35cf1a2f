#!/usr/bin/env python3
"""Recompute the published calibration and field tables and diff them.

Each replay returns a frame with the recomputed value, the printed value and
whether the difference sits inside the tolerance implied by the printed
rounding.
"""
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from errors import LocalizationError
from geometry import Position3D, distance_error_pct, slant_distance
from pathloss import (PAPER_MODEL, CalibrationPoint, SampleStats,
                      assess_calibration, ci_overlap, estimate_distance,
                      fit_model, predict_rssi)
from trilateration import SphereConstraint, locate

log = logging.getLogger(__name__)

PAPER_DATA = Path(__file__).resolve().parent / 'paper_data'

# Table 2 angles are printed to 0.1 deg and ground distances to 0.1 m
SLANT_TOL_M = 0.1
CI_TOL_DB = 0.01
STD_ERR_TOL_DB = 0.006
FIT_TOL = {'L': 0.005, 'C': 0.10, 'r_squared': 0.005}
EST_SD_TOL_M = 1.0
ERROR_PCT_TOL = 1.0
FIG6_TOL_DB = 0.1

WHICH = ('table2', 'table3', 'table4', 'table5', 'fig6')


@dataclass
class ReplayResult:
    name: str
    frame: pd.DataFrame
    notes: list

    @property
    def passed(self):
        return bool(self.frame['ok'].all())


def load_table(name) -> pd.DataFrame:
    return pd.read_csv(PAPER_DATA / f'{name}.csv')


def _check(rows, quantity, computed, printed, tol, key=''):
    rows.append({'key': key, 'quantity': quantity, 'computed': computed, 'printed': printed,
                 'diff': abs(computed - printed), 'tolerance': tol,
                 'ok': abs(computed - printed) <= tol})


def table3_stats():
    t3 = load_table('table3_seeeduino')
    return [SampleStats.from_summary(int(r.n), float(r.mean_db), float(r.std_dev))
            for r in t3.itertuples()]


def table3_points():
    t2 = load_table('table2_slant')
    t3 = load_table('table3_seeeduino')
    merged = t2.merge(t3, on='nominal_m')
    return [CalibrationPoint(float(r.sd_m), float(r.mean_db)) for r in merged.itertuples()]


def replay_table2():
    rows = []
    for r in load_table('table2_slant').itertuples():
        _check(rows, 'sd_m', slant_distance(r.gd_m, r.h_m, r.beta_deg), r.sd_m,
               SLANT_TOL_M, f'{r.nominal_m} m')
        _check(rows, 'beta_deg', 90.0 - r.alpha_deg, r.beta_deg, 1e-9, f'{r.nominal_m} m')
    return ReplayResult('table2', pd.DataFrame(rows), [])


def replay_table3():
    rows, notes = [], []
    t3 = load_table('table3_seeeduino')
    stats = table3_stats()
    for r, s in zip(t3.itertuples(), stats):
        key = f'{r.nominal_m} m'
        _check(rows, 'std_dev_from_variance', float(np.sqrt(r.sample_variance)), r.std_dev,
               STD_ERR_TOL_DB, key)
        _check(rows, 'std_err', s.std_err, r.std_err, STD_ERR_TOL_DB, key)
        _check(rows, 'ci95_lo', s.ci95_lo, r.ci95_lo, CI_TOL_DB, key)
        _check(rows, 'ci95_hi', s.ci95_hi, r.ci95_hi, CI_TOL_DB, key)

    model, report = fit_model(table3_points())
    printed = load_table('table3_fit').iloc[0]
    _check(rows, 'L', model.exponent, printed['L'], FIT_TOL['L'], 'fit')
    _check(rows, 'C', model.intercept_db, printed['C'], FIT_TOL['C'], 'fit')
    _check(rows, 'r_squared', report.r_squared, printed['r_squared'], FIT_TOL['r_squared'], 'fit')

    # only the 300/400 m intervals overlap at the printed precision
    nominal = list(t3['nominal_m'])
    for i in range(len(stats) - 1):
        overlap = ci_overlap(stats[i], stats[i + 1], decimals=2)
        expected = (nominal[i], nominal[i + 1]) == (300, 400)
        _check(rows, 'ci_overlap', float(overlap), float(expected), 0.0,
               f'{nominal[i]}/{nominal[i + 1]} m')
        if overlap:
            notes.append(f'{nominal[i]} m and {nominal[i + 1]} m intervals overlap')
    return ReplayResult('table3', pd.DataFrame(rows), notes)


def replay_table4():
    t4 = load_table('table4_moteino')
    points = [CalibrationPoint(float(r.nominal_m), float(r.mean_db)) for r in t4.itertuples()]
    model, report = fit_model(points)
    verdict = assess_calibration(report, model)
    rows = [{'key': 'fit', 'quantity': 'usable', 'computed': float(verdict.usable),
             'printed': 0.0, 'diff': float(verdict.usable), 'tolerance': 0.0,
             'ok': not verdict.usable}]
    notes = [f'L={model.exponent:.4f} C={model.intercept_db:.3f} R2={report.r_squared:.3f}',
             verdict.reason or 'usable']
    return ReplayResult('table4', pd.DataFrame(rows), notes)


def field_constraints(model=PAPER_MODEL):
    t5 = load_table('table5_field')
    stations = load_table('field_stations').set_index('station_id')
    constraints = []
    for r in t5.itertuples():
        s = stations.loc[r.station_id]
        constraints.append(SphereConstraint(
            Position3D(float(s.x_m), float(s.y_m), float(s.z_m)),
            estimate_distance(model, float(r.mean_rssi_db)).distance_m, r.station_id))
    return constraints


def replay_table5():
    rows, notes = [], []
    for r in load_table('table5_field').itertuples():
        est = estimate_distance(PAPER_MODEL, float(r.mean_rssi_db))
        _check(rows, 'est_sd_m', est.distance_m, r.est_sd_m, EST_SD_TOL_M, r.station_id)
        _check(rows, 'error_pct', distance_error_pct(est.distance_m, r.real_sd_m), r.error_pct,
               ERROR_PCT_TOL, r.station_id)
        if est.low_confidence:
            notes.append(f'{r.station_id}: {est.distance_m:.0f} m is inside the unusable <100 m range')
    try:
        fix = locate(field_constraints())
        p = fix.position
        notes.append(f'field fix ({p.x:.1f}, {p.y:.1f}, {p.z:.1f}) via {fix.path}, '
                     f'RMS radius mismatch {fix.residual_norm_m:.1f} m')
    except LocalizationError as exc:
        notes.append(f'field fix failed: {type(exc).__name__}: {exc}')
    return ReplayResult('table5', pd.DataFrame(rows), notes)


def fig6_frame(step_m=10.0):
    """Measured means with CIs and the fitted regression line on a distance grid."""
    model, _ = fit_model(table3_points())
    points = table3_points()
    stats = table3_stats()
    measured = pd.DataFrame({
        'series': 'measured',
        'distance_m': [p.slant_distance_m for p in points],
        'log10_distance': np.log10([p.slant_distance_m for p in points]),
        'rssi_db': [p.mean_rssi_db for p in points],
        'ci95_lo': [s.ci95_lo for s in stats],
        'ci95_hi': [s.ci95_hi for s in stats],
    })
    grid = np.arange(100.0, 600.0 + step_m / 2, step_m)
    fitted = pd.DataFrame({
        'series': 'fitted',
        'distance_m': grid,
        'log10_distance': np.log10(grid),
        'rssi_db': [predict_rssi(model, d) for d in grid],
        'ci95_lo': np.nan,
        'ci95_hi': np.nan,
    })
    return pd.concat([measured, fitted], ignore_index=True), model


def replay_fig6():
    frame, model = fig6_frame()
    rows = []
    for d in frame.loc[frame['series'] == 'measured', 'distance_m']:
        _check(rows, 'fitted_rssi_db', predict_rssi(model, d), predict_rssi(PAPER_MODEL, d),
               FIG6_TOL_DB, f'{d:.2f} m')
    return ReplayResult('fig6', pd.DataFrame(rows), [f'{len(frame)} plot points']), frame


def replay(which, out_dir=None) -> ReplayResult:
    if which not in WHICH:
        raise ValueError(f"unknown reproduction {which!r}; choose from {', '.join(WHICH)}")
    if which == 'fig6':
        result, plot_frame = replay_fig6()
    else:
        replays = {'table2': replay_table2, 'table3': replay_table3,
                   'table4': replay_table4, 'table5': replay_table5}
        result, plot_frame = replays[which](), None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        result.frame.to_csv(out / f'replay_{which}.csv', index=False)
        if plot_frame is not None:
            plot_frame.to_csv(out / 'fig6_points.csv', index=False)
    log.info("replay %s: %s", which, 'pass' if result.passed else 'FAIL')
    return result
