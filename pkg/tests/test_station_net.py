import asyncio

import numpy as np
import pandas as pd
import pytest

from conftest import UNEVEN, make_scenario
from config import FusionSettings
from errors import MalformedLine
from geometry import Position3D
from pathloss import PAPER_MODEL, PathLossModel, RssiSample, predict_rssi
from simulator import NoiseProfile, Station, Waypoint, samples_frame, simulate
from station_net import (FIX_LOG_COLUMNS, Collector, FusionWindow, ReportWindower,
                         StationReport, TcpCollector, encode_report,
                         fix_log_frame, ingest, load_registry, merge_reports,
                         parse_report, reports_from_samples)
from trilateration import COPLANAR, FULL_3D, forward_constraints


def _reports_for(truth, registry, t=8.0, uav='FF1'):
    """Noise-free reports whose inverted distances are the true ranges."""
    return [StationReport(c.station_id, uav, t, predict_rssi(PAPER_MODEL, c.radius_m), 5)
            for c in forward_constraints(truth, list(registry.items()))]


def test_report_line_format():
    line = encode_report(StationReport('GS1', 'FF1', 8.0, -80.0, 5))
    assert line == 'GS1,FF1,8.0,-80.00,5\n'


def test_report_line_keeps_full_precision():
    report = StationReport('GS2', 'FF1', 1234.5678901, -81.123456789012, 4)
    assert parse_report(encode_report(report)) == report


@pytest.mark.parametrize('line', [
    'GS1,FF1,8.0,-80.0',
    'GS1,FF1,8.0,-80.0,5,extra',
    'GS1,FF1,eight,-80.0,5',
    'GS1,FF1,8.0,nan,5',
    'GS1,FF1,8.0,-80.0,0',
    ',FF1,8.0,-80.0,5',
])
def test_malformed_lines(line):
    with pytest.raises(MalformedLine):
        parse_report(line)


def test_merge_orders_by_time_then_station():
    reports = [StationReport('GS2', 'FF1', 10.0, -80.0, 5),
               StationReport('GS1', 'FF1', 10.0, -80.0, 5),
               StationReport('GS3', 'FF1', 8.0, -80.0, 5)]
    assert [r.station_id for r in merge_reports(reports)] == ['GS3', 'GS1', 'GS2']


def _samples(values, start=0.0, station='GS1'):
    return [RssiSample(station, 'FF1', v, start + 2.0 * i) for i, v in enumerate(values)]


def test_windower_emits_one_report_per_full_window():
    windower = ReportWindower()
    out = []
    for s in _samples([-80, -81, -82, -83, -84, -85]):
        out.extend(windower.add(s))
    assert len(out) == 1
    assert out[0].mean_rssi_db == pytest.approx(-82.0)
    assert out[0].window_end_s == 8.0
    assert out[0].sample_count == 5
    assert windower.flush() == []
    assert windower.dropped_partials == 1


def test_windower_flushes_stale_partials_with_enough_samples():
    windower = ReportWindower(min_samples=3)
    out = []
    for s in _samples([-80, -82, -84]) + _samples([-90], start=20.0):
        out.extend(windower.add(s))
    assert [(r.sample_count, r.mean_rssi_db) for r in out] == [(3, -82.0)]


def test_windower_keeps_stations_apart():
    samples = _samples([-80] * 5) + _samples([-90] * 5, station='GS2')
    reports = reports_from_samples(sorted(samples, key=lambda s: s.timestamp_s))
    assert [(r.station_id, r.mean_rssi_db) for r in reports] == [('GS1', -80.0), ('GS2', -90.0)]


def test_collector_fixes_after_four_stations(square_registry):
    collector = Collector(square_registry, PAPER_MODEL)
    truth = Position3D(60.0, 140.0, 90.0)
    fixes = [collector.ingest_report(r) for r in _reports_for(truth, square_registry)]
    assert fixes[:3] == [None, None, None]
    fix = fixes[3]
    assert fix.ok
    assert fix.outcome.path == COPLANAR
    np.testing.assert_allclose(fix.outcome.position.as_array(), truth.as_array(), atol=1e-6)
    assert collector.windows['FF1'].reports == {}


def test_uneven_stations_use_full_solution(uneven_registry):
    collector = Collector(uneven_registry, PAPER_MODEL)
    truth = Position3D(200.0, 150.0, 70.0)
    fix = [f for f in map(collector.ingest_report, _reports_for(truth, uneven_registry)) if f][0]
    assert fix.outcome.path == FULL_3D
    np.testing.assert_allclose(fix.outcome.position.as_array(), truth.as_array(), atol=1e-6)


def test_three_stations_never_fix(square_registry):
    collector = Collector(square_registry, PAPER_MODEL)
    reports = _reports_for(Position3D(60.0, 140.0, 90.0), square_registry)[:3]
    assert all(collector.ingest_report(r) is None for r in reports)


def test_stale_reports_are_evicted(square_registry):
    collector = Collector(square_registry, PAPER_MODEL, FusionSettings(max_age_s=30.0))
    first, *rest = _reports_for(Position3D(60.0, 140.0, 90.0), square_registry)
    assert collector.ingest_report(first) is None
    late = [StationReport(r.station_id, r.uav_id, 40.0, r.mean_rssi_db, 5) for r in rest]
    assert all(collector.ingest_report(r) is None for r in late)
    assert sorted(collector.windows['FF1'].reports) == ['GS2', 'GS3', 'GS4']


def test_uavs_are_fused_separately(square_registry):
    collector = Collector(square_registry, PAPER_MODEL)
    a = _reports_for(Position3D(60.0, 140.0, 90.0), square_registry, uav='AA1')
    b = _reports_for(Position3D(120.0, 40.0, 70.0), square_registry, uav='BB2')
    interleaved = [r for pair in zip(a, b) for r in pair]
    fixes = [f for f in map(collector.ingest_report, interleaved) if f]
    assert [f.uav_id for f in fixes] == ['AA1', 'BB2']


def test_unknown_and_malformed_input_is_dropped(square_registry):
    collector = Collector(square_registry, PAPER_MODEL)
    assert collector.ingest_line('GS9,FF1,8.0,-80.00,5\n') is None
    assert collector.ingest_line('garbage\n') is None
    assert collector.ingest_line('\n') is None
    assert (collector.dropped_unknown, collector.dropped_malformed) == (1, 1)


def test_failed_fix_is_recorded(square_registry):
    collector = Collector(square_registry, PAPER_MODEL)
    rssi = predict_rssi(PAPER_MODEL, 100.0)
    lines = [encode_report(StationReport(sid, 'FF1', 8.0, rssi, 5)) for sid in square_registry]
    fixes = list(ingest(lines, square_registry, PAPER_MODEL, collector=collector))
    assert len(fixes) == 1
    assert not fixes[0].ok
    assert fixes[0].failure == 'ImaginaryHeight'
    row = fix_log_frame(fixes).iloc[0]
    assert row['status'] == 'ImaginaryHeight'
    assert row['x_m'] == ''


def test_fix_log_frame_columns(square_registry):
    fixes = list(ingest([encode_report(r) for r in
                         _reports_for(Position3D(100.0, 100.0, 50.0), square_registry)],
                        square_registry, PAPER_MODEL))
    df = fix_log_frame(fixes)
    assert list(df.columns) == FIX_LOG_COLUMNS
    assert df.iloc[0]['status'] == 'ok'
    assert float(df.iloc[0]['z_m']) == pytest.approx(50.0, abs=1e-5)


def test_load_registry(tmp_path):
    path = tmp_path / 'stations.csv'
    path.write_text('station_id,x_m,y_m,z_m\nGS1,0,0,0\nGS2,200,0,1.5\n')
    assert load_registry(path) == {'GS1': Position3D(0.0, 0.0, 0.0),
                                   'GS2': Position3D(200.0, 0.0, 1.5)}
    path.write_text('station_id,x_m,y_m,z_m\nGS1,0,0,0\nGS1,200,0,0\n')
    with pytest.raises(ValueError):
        load_registry(path)


def _simulated_lines(scenario):
    df = samples_frame(simulate(scenario))
    samples = [RssiSample(r.station_id, r.uav_id, r.rssi_db, r.timestamp_s)
               for r in df.itertuples(index=False)]
    return [encode_report(r) for r in reports_from_samples(samples)]


def test_live_collector_matches_batch(scenario):
    registry = {s.id: s.position for s in scenario.stations}
    lines = _simulated_lines(scenario)
    batch = fix_log_frame(ingest(lines, registry, PAPER_MODEL))
    assert len(batch) == 2

    async def run_live():
        server = TcpCollector(Collector(registry, PAPER_MODEL))
        await server.start()
        _, writer = await asyncio.open_connection(server.host, server.port)
        writer.write(''.join(lines).encode('utf-8'))
        await writer.drain()
        writer.close()
        await writer.wait_closed()
        await server.wait_idle(connections=1)
        await server.stop()
        return server.fixes

    live = fix_log_frame(asyncio.run(run_live()))
    pd.testing.assert_frame_equal(live, batch)


def test_zero_noise_pipeline_recovers_every_waypoint():
    waypoints = [Waypoint(Position3D(200.0, 200.0, 60.0), 10.0),
                 Waypoint(Position3D(50.0, 320.0, 120.0), 10.0),
                 Waypoint(Position3D(380.0, 30.0, 25.0), 10.0)]
    scenario = make_scenario(waypoints=waypoints, noise=NoiseProfile(((1.0, 0.0),)))
    registry = {s.id: s.position for s in scenario.stations}
    fixes = list(ingest(_simulated_lines(scenario), registry, PAPER_MODEL))
    assert len(fixes) == len(waypoints)
    for fix, waypoint in zip(fixes, waypoints):
        np.testing.assert_allclose(fix.outcome.position.as_array(),
                                   waypoint.position.as_array(), atol=1e-6)


def test_zero_noise_pipeline_with_five_stations():
    stations = [Station(sid, pos) for sid, pos in UNEVEN.items()]
    stations.append(Station('GS5', Position3D(200.0, -150.0, 3.0)))
    waypoints = [Waypoint(Position3D(200.0, 200.0, 60.0), 10.0),
                 Waypoint(Position3D(50.0, 320.0, 120.0), 10.0),
                 Waypoint(Position3D(380.0, 30.0, 25.0), 10.0)]
    scenario = make_scenario(stations=stations, waypoints=waypoints,
                             noise=NoiseProfile(((1.0, 0.0),)))
    registry = {s.id: s.position for s in scenario.stations}
    fixes = list(ingest(_simulated_lines(scenario), registry, PAPER_MODEL))
    assert len(fixes) == len(waypoints)
    for fix, waypoint in zip(fixes, waypoints):
        assert len({r.window_end_s for r in fix.reports}) == 1
        np.testing.assert_allclose(fix.outcome.position.as_array(),
                                   waypoint.position.as_array(), atol=1e-6)


def test_previous_window_reports_are_not_fused():
    window = FusionWindow('FF1', max_age_s=30.0, cohort_span_s=10.0)
    window.update(StationReport('GS5', 'FF1', 8.0, -80.0, 5))
    window.update(StationReport('GS1', 'FF1', 16.0, -80.0, 5))
    assert sorted(window.reports) == ['GS1', 'GS5']
    window.update(StationReport('GS2', 'FF1', 18.0, -80.0, 5))
    assert sorted(window.reports) == ['GS1', 'GS2']


def test_unrepresentable_distance_is_a_failed_fix(square_registry):
    collector = Collector(square_registry, PathLossModel(0.01, -56.134))
    lines = [encode_report(StationReport(sid, 'FF1', 8.0, -130.0, 5)) for sid in square_registry]
    fixes = list(ingest(lines, square_registry, collector.model, collector=collector))
    assert [f.failure for f in fixes] == ['DistanceOutOfRange']
    assert fixes[0].estimates == ()


@pytest.mark.parametrize('min_samples', [0, 6])
def test_windower_rejects_min_samples_outside_the_window(min_samples):
    with pytest.raises(ValueError):
        ReportWindower(window_size=5, min_samples=min_samples)
