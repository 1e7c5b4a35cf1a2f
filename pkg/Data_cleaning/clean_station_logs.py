#!/usr/bin/env python3
"""Clean raw ground-station RSSI exports into the sample-log format.

Each station laptop writes its own export; delimiters, column names and
junk rows vary. Output columns: station_id,uav_id,timestamp_s,rssi_db
(plus distance_m when the export carries surveyed distances).
"""
import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

COLUMN_ALIASES = {
    'station': 'station_id', 'gs': 'station_id', 'gs_id': 'station_id',
    'uav': 'uav_id', 'id': 'uav_id', 'remote_id': 'uav_id',
    'time': 'timestamp_s', 'timestamp': 'timestamp_s', 't': 'timestamp_s',
    'rssi': 'rssi_db', 'rssi_dbm': 'rssi_db',
    'distance': 'distance_m', 'sd_m': 'distance_m',
}
OUTPUT_COLUMNS = ['station_id', 'uav_id', 'timestamp_s', 'rssi_db']


def _read_any(file_path):
    with open(file_path, encoding='utf-8') as fh:
        header = fh.readline()
    delimiter = ';' if header.count(';') > header.count(',') else ','
    return pd.read_csv(file_path, delimiter=delimiter, dtype=str, skipinitialspace=True)


def clean_station_log(file_path, station_id=None):
    """Normalize one raw export; returns the cleaned frame."""
    df = _read_any(file_path)
    df = df.dropna(axis=1, how='all')
    df.columns = [c.strip().lower() for c in df.columns]
    df = df.rename(columns={c: COLUMN_ALIASES.get(c, c) for c in df.columns})

    if station_id is not None:
        df['station_id'] = station_id
    missing = set(OUTPUT_COLUMNS) - set(df.columns)
    if missing:
        raise ValueError(f"{file_path}: missing columns {sorted(missing)}")

    for col in ('station_id', 'uav_id'):
        df[col] = df[col].astype(str).str.strip()
    numeric = ['timestamp_s', 'rssi_db'] + (['distance_m'] if 'distance_m' in df.columns else [])
    for col in numeric:
        df[col] = pd.to_numeric(df[col].astype(str).str.strip(), errors='coerce')

    before = len(df)
    df = df.replace([np.inf, -np.inf], np.nan).dropna(subset=numeric)
    df = df[(df['timestamp_s'] >= 0) & (df['station_id'] != '') & (df['uav_id'] != '')]
    df = df.drop_duplicates()
    df = df.sort_values(['timestamp_s', 'station_id'], kind='mergesort').reset_index(drop=True)
    dropped = before - len(df)
    if dropped:
        log.warning("%s: dropped %d unusable rows", file_path, dropped)
    return df[[c for c in OUTPUT_COLUMNS + ['distance_m'] if c in df.columns]]


def clean_station_logs(paths, output_path):
    frames = [clean_station_log(p) for p in paths]
    df = pd.concat(frames, ignore_index=True)
    df = df.sort_values(['timestamp_s', 'station_id'], kind='mergesort').reset_index(drop=True)
    df.to_csv(output_path, index=False)
    log.info("cleaned %d files into %s (%d rows)", len(frames), output_path, len(df))
    return df


def main(argv=None):
    parser = argparse.ArgumentParser(description="Merge and clean ground-station RSSI exports")
    parser.add_argument('exports', nargs='+', type=Path)
    parser.add_argument('--output', type=Path, default=Path('samples.csv'))
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format='%(levelname)s %(name)s: %(message)s')

    print("Starting station log cleaning...")
    print("=" * 50)
    missing = [p for p in args.exports if not p.exists()]
    for p in missing:
        print(f"File not found: {p}")
    present = [p for p in args.exports if p.exists()]
    if not present:
        return 2
    df = clean_station_logs(present, args.output)
    print("=" * 50)
    print(f"Cleaning complete: {len(present)} files, {len(df)} samples -> {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
