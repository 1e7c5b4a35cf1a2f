#!/usr/bin/env python3
"""Command-line front end of the UAV RSSI localization toolkit.

    uav_locate.py fit calibration.csv
    uav_locate.py distance -80 -86 -79 -81
    uav_locate.py slant 100 50 --beta 79.1
    uav_locate.py locate stations.csv reports.csv
    uav_locate.py --seed 7 --out run1 simulate scenario.json
    uav_locate.py replay-paper table3

Exit codes: 0 success, 1 domain error, 2 usage, file or parse error.
"""
import argparse
import logging
import sys
from pathlib import Path

import pandas as pd

import config
import paper_replay
from create_calibration_dataset import create_calibration_dataset
from errors import LocalizationError, MalformedLine, TooFewStations
from geometry import beta_from_alpha, slant_distance
from pathloss import (PAPER_MODEL, PathLossModel, RssiSample, assess_calibration,
                      calibration_points_from_frame, estimate_distance,
                      fit_model, predict_rssi)
from simulator import load_scenario, samples_frame, simulate
from station_net import (Collector, encode_report, fix_log_frame,
                         load_registry, merge_reports, parse_report,
                         reports_from_samples)

log = logging.getLogger('uav_locate')

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load_model(args):
    if args.model is None:
        return PAPER_MODEL
    return PathLossModel.from_text(Path(args.model).read_text(encoding='utf-8'))


def _out_dir(args):
    out = Path(args.out or '.')
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_fit(args):
    df = pd.read_csv(args.calibration_csv)
    model, report = fit_model(calibration_points_from_frame(df))
    verdict = assess_calibration(report, model)
    model_path = Path(args.model) if args.model else _out_dir(args) / 'model.txt'
    model_path.write_text(model.to_text(), encoding='utf-8')

    print("📈 PATH-LOSS CALIBRATION")
    print("=" * 50)
    print(f"   Points:    {report.n_points}")
    print(f"   Slope:     {report.slope:.4f} dB/decade")
    print(f"   Intercept: {report.intercept:.4f} dB")
    print(f"   L:         {model.exponent:.4f}")
    print(f"   C:         {model.intercept_db:.4f}")
    print(f"   R²:        {report.r_squared:.4f}")
    if verdict.usable:
        print("🟢 Calibration usable")
    else:
        print(f"🔴 Calibration rejected: {verdict.reason}")
    print(f"Model written to {model_path}")
    return EXIT_OK


def cmd_predict(args):
    model = _load_model(args)
    rows = [{'distance_m': d, 'rssi_db': predict_rssi(model, d)} for d in args.distances]
    print(pd.DataFrame(rows).to_string(index=False, float_format=lambda v: f"{v:.2f}"))
    return EXIT_OK


def cmd_distance(args):
    model = _load_model(args)
    rows = []
    for rssi in args.rssi:
        est = estimate_distance(model, rssi)
        rows.append({'mean_rssi_db': rssi, 'distance_m': est.distance_m,
                     'confidence': 'LOW (<100 m)' if est.low_confidence else 'ok'})
    print(pd.DataFrame(rows).to_string(index=False, float_format=lambda v: f"{v:.2f}"))
    return EXIT_OK


def cmd_slant(args):
    if (args.beta is None) == (args.alpha is None):
        raise UsageError("give exactly one of --beta or --alpha")
    beta = args.beta if args.beta is not None else beta_from_alpha(args.alpha)
    sd = slant_distance(args.gd, args.h, beta)
    print(f"GD {args.gd:.2f} m, H {args.h:.2f} m, β {beta:.2f}° -> SD {sd:.2f} m")
    return EXIT_OK


def _read_report_lines(path):
    reports = []
    for raw in Path(path).read_text(encoding='utf-8').splitlines():
        if not raw.strip() or raw.startswith('station_id,'):
            continue
        try:
            reports.append(parse_report(raw))
        except MalformedLine as exc:
            raise UsageError(f"{path}: {exc}") from None
    return merge_reports(reports)


def _print_fix(fix):
    table = pd.DataFrame([{'station': r.station_id, 'mean_rssi_db': r.mean_rssi_db}
                          for r in fix.reports])
    if fix.estimates:
        table['est_sd_m'] = [e.distance_m for e in fix.estimates]
        table['note'] = ['low confidence' if e.low_confidence else '' for e in fix.estimates]
    print(f"\n📡 UAV {fix.uav_id}")
    print(table.to_string(index=False, float_format=lambda v: f"{v:.2f}"))
    if fix.ok:
        p = fix.outcome.position
        print(f"📍 Fix: x={p.x:.2f} y={p.y:.2f} z={p.z:.2f} m "
              f"({fix.outcome.path}, residual {fix.outcome.residual_norm_m:.3f} m)")
    else:
        print(f"🔴 Fix failed: {fix.failure}")


def cmd_locate(args):
    registry = load_registry(args.stations_csv)
    if len(registry) < config.MIN_STATIONS:
        raise TooFewStations(f"registry lists {len(registry)} stations; "
                             f"at least {config.MIN_STATIONS} ground stations are required")
    reports = _read_report_lines(args.reports_csv)
    collector = Collector(registry, _load_model(args))
    fixes = [f for f in (collector.ingest_report(r) for r in reports) if f is not None]
    if not fixes:
        reporting = len({r.station_id for r in reports if r.station_id in registry})
        raise TooFewStations(f"reports from {reporting} stations; "
                             f"at least {config.MIN_STATIONS} ground stations are required")
    for fix in fixes:
        _print_fix(fix)
    if args.out is not None:
        fix_log_frame(fixes).to_csv(_out_dir(args) / 'fixes.csv', index=False)
    return EXIT_OK if all(f.ok for f in fixes) else EXIT_DOMAIN


def run_simulation(scenario, out, model=None, workers=1):
    """simulate -> station windows -> collector; writes samples, reports and fixes."""
    streams = simulate(scenario, workers=workers)
    samples_df = samples_frame(streams)
    samples_df.to_csv(out / 'samples.csv', index=False)

    samples = [RssiSample(r.station_id, r.uav_id, r.rssi_db, r.timestamp_s)
               for r in samples_df.itertuples(index=False)]
    reports = reports_from_samples(samples, window_size=scenario.schedule.window_size,
                                   interval_s=scenario.schedule.interval_s)
    (out / 'reports.csv').write_text(''.join(encode_report(r) for r in reports), encoding='utf-8')

    registry = {s.id: s.position for s in scenario.stations}
    settings = config.FusionSettings(cohort_span_s=scenario.schedule.dwell_requirement_s)
    collector = Collector(registry, model or scenario.truth_model, settings)
    fixes = [f for f in (collector.ingest_report(r) for r in reports) if f is not None]
    fix_log_frame(fixes).to_csv(out / 'fixes.csv', index=False)
    return samples_df, reports, fixes


def cmd_simulate(args):
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    out = _out_dir(args)
    model = _load_model(args) if args.model else None
    samples_df, reports, fixes = run_simulation(scenario, out, model, args.workers)

    print(f"🛰️ SIMULATION seed={scenario.seed}")
    print("=" * 50)
    print(f"   Samples: {len(samples_df)}  Reports: {len(reports)}  Fixes: {len(fixes)}")
    for fix in fixes:
        if fix.ok:
            p = fix.outcome.position
            print(f"   📍 {fix.uav_id}: ({p.x:.2f}, {p.y:.2f}, {p.z:.2f}) "
                  f"residual {fix.outcome.residual_norm_m:.3f} m")
        else:
            print(f"   🔴 {fix.uav_id}: {fix.failure}")
    print(f"Outputs in {out}")
    return EXIT_OK


def cmd_replay_paper(args):
    result = paper_replay.replay(args.which, _out_dir(args))
    print(f"📊 REPLAY {args.which}")
    print("=" * 50)
    print(result.frame.to_string(index=False))
    for note in result.notes:
        print(f"   • {note}")
    print("🟢 PASS" if result.passed else "🔴 FAIL")
    return EXIT_OK if result.passed else EXIT_DOMAIN


def cmd_calibrate(args):
    datasets = create_calibration_dataset(pd.read_csv(args.samples_csv), _out_dir(args))
    print(datasets['calibration_stats'].to_string(index=False))
    print(datasets['calibration_fits'].to_string(index=False))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog='uav_locate', description="GPS-free UAV localization from RSSI")
    parser.add_argument('--model', help="model file (L=..., C=...); output path for fit")
    parser.add_argument('--seed', type=int, help="simulation seed override (unsigned 64-bit)")
    parser.add_argument('--out', help="output directory (default: current directory)")
    parser.add_argument('-v', '--verbose', action='count', default=0)
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('fit', help="fit L and C from a calibration CSV")
    p.add_argument('calibration_csv')
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser('predict', help="RSSI expected at distances")
    p.add_argument('distances', nargs='+', type=float)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser('distance', help="slant distance from mean RSSI values")
    p.add_argument('rssi', nargs='+', type=float)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser('slant', help="slant distance from ground distance, height and angle")
    p.add_argument('gd', type=float)
    p.add_argument('h', type=float)
    p.add_argument('--beta', type=float)
    p.add_argument('--alpha', type=float)
    p.set_defaults(func=cmd_slant)

    p = sub.add_parser('locate', help="locate UAVs from a station registry and report log")
    p.add_argument('stations_csv')
    p.add_argument('reports_csv')
    p.set_defaults(func=cmd_locate)

    p = sub.add_parser('simulate', help="run a scenario end to end")
    p.add_argument('scenario')
    p.add_argument('--workers', type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('replay-paper', help="recompute the published tables")
    p.add_argument('which', choices=paper_replay.WHICH)
    p.set_defaults(func=cmd_replay_paper)

    p = sub.add_parser('calibrate', help="calibration dataset from a raw sample log")
    p.add_argument('samples_csv')
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        parser.error("--seed must be an unsigned 64-bit integer")

    try:
        return args.func(args)
    except LocalizationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (UsageError, OSError, ValueError, pd.errors.ParserError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
