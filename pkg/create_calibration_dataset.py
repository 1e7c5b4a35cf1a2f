#!/usr/bin/env python3
"""Build calibration datasets from raw RSSI sample logs.

Input is a sample log with a distance per sample (`distance_m` for surveyed
field logs, `truth_distance_m` for simulator output). Samples are grouped by
distance, and by message format when the log carries one, and turned into:

    calibration_points.csv   distance_m,mean_rssi_db (input of `fit`)
    calibration_stats.csv    per-distance variance, std dev/err, mean, 95% CI
    calibration_fits.csv     L, C, R^2 and the usability verdict per format
    model.txt / model_<fmt>.txt
"""
import argparse
import logging
import sys
from pathlib import Path

import pandas as pd

from pathloss import (CalibrationPoint, assess_calibration, ci_overlap,
                      describe_samples, fit_model)

log = logging.getLogger(__name__)

DISTANCE_COLUMNS = ('distance_m', 'truth_distance_m')


def _distance_column(df):
    for col in DISTANCE_COLUMNS:
        if col in df.columns:
            return col
    raise ValueError(f"sample log needs one of {DISTANCE_COLUMNS}")


def create_calibration_dataset(samples: pd.DataFrame, out_dir=None, decimals=2):
    """Per-distance statistics, calibration points and fitted models."""
    dist_col = _distance_column(samples)
    df = samples.copy()
    df['distance_m'] = df[dist_col].astype(float).round(decimals)
    df['rssi_db'] = pd.to_numeric(df['rssi_db'], errors='coerce')
    df = df.dropna(subset=['rssi_db', 'distance_m'])
    df = df[df['distance_m'] > 0]
    if 'message_format' not in df.columns:
        df['message_format'] = 'all'

    stats_rows = []
    for (fmt, distance), group in df.groupby(['message_format', 'distance_m'], sort=True):
        if len(group) < 2:
            log.warning("skipping %s m (%s): only %d sample", distance, fmt, len(group))
            continue
        s = describe_samples(group['rssi_db'].tolist())
        stats_rows.append({
            'message_format': fmt,
            'distance_m': distance,
            'n': s.n,
            'sample_variance': s.sample_variance,
            'std_dev': s.std_dev,
            'std_err': s.std_err,
            'mean_rssi_db': s.mean,
            'ci95_lo': s.ci95_lo,
            'ci95_hi': s.ci95_hi,
            '_stats': s,
        })
    if not stats_rows:
        raise ValueError("no calibration distance has two or more samples")
    stats_df = pd.DataFrame(stats_rows)

    fit_rows, models = [], {}
    for fmt, group in stats_df.groupby('message_format', sort=True):
        stats = list(group['_stats'])
        overlaps = [ci_overlap(a, b, decimals=2) for a, b in zip(stats, stats[1:])]
        stats_df.loc[group.index, 'overlaps_next'] = overlaps + [False]
        if len(group) < 2:
            log.warning("format %s has a single calibration distance; no fit", fmt)
            continue
        points = [CalibrationPoint(d, m) for d, m in zip(group['distance_m'], group['mean_rssi_db'])]
        model, report = fit_model(points)
        verdict = assess_calibration(report, model)
        models[fmt] = model
        fit_rows.append({
            'message_format': fmt,
            'L': model.exponent,
            'C': model.intercept_db,
            'r_squared': report.r_squared,
            'n_points': report.n_points,
            'usable': verdict.usable,
            'reason': verdict.reason or '',
        })

    stats_df = stats_df.drop(columns=['_stats'])
    if 'overlaps_next' in stats_df.columns:
        stats_df['overlaps_next'] = stats_df['overlaps_next'].astype(bool)
    points_df = stats_df[['message_format', 'distance_m', 'mean_rssi_db']]
    fits_df = pd.DataFrame(fit_rows, columns=['message_format', 'L', 'C', 'r_squared',
                                              'n_points', 'usable', 'reason'])

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        single = points_df['message_format'].nunique() == 1
        if single:
            points_df[['distance_m', 'mean_rssi_db']].to_csv(out / 'calibration_points.csv', index=False)
        else:
            points_df.to_csv(out / 'calibration_points.csv', index=False)
        stats_df.to_csv(out / 'calibration_stats.csv', index=False)
        fits_df.to_csv(out / 'calibration_fits.csv', index=False)
        for fmt, model in models.items():
            name = 'model.txt' if single else f'model_{fmt}.txt'
            (out / name).write_text(model.to_text(), encoding='utf-8')
        log.info("calibration dataset written to %s", out)

    return {
        'calibration_points': points_df,
        'calibration_stats': stats_df,
        'calibration_fits': fits_df,
        'models': models,
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument('samples_csv')
    parser.add_argument('--out', default='.')
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format='%(levelname)s %(name)s: %(message)s')

    datasets = create_calibration_dataset(pd.read_csv(args.samples_csv), args.out)
    print("✅ Calibration datasets created")
    print(f"   • calibration_points.csv ({len(datasets['calibration_points'])} rows)")
    print(f"   • calibration_stats.csv ({len(datasets['calibration_stats'])} rows)")
    for row in datasets['calibration_fits'].itertuples():
        status = '🟢 usable' if row.usable else f'🔴 rejected ({row.reason})'
        print(f"   • {row.message_format}: L={row.L:.3f} C={row.C:.3f} R²={row.r_squared:.3f} {status}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
