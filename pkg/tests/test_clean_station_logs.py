import pandas as pd
import pytest

from clean_station_logs import clean_station_log, clean_station_logs, main


def test_semicolon_export_with_aliases(tmp_path):
    raw = tmp_path / 'gs1.csv'
    raw.write_text('Time;UAV;RSSI;Distance\n'
                   '4;FF1;-81;146\n'
                   '0;FF1;-80;146\n'
                   '2;FF1;bad;146\n'
                   '-1;FF1;-79;146\n'
                   '0;FF1;-80;146\n')
    df = clean_station_log(raw, station_id='GS1')
    assert list(df.columns) == ['station_id', 'uav_id', 'timestamp_s', 'rssi_db', 'distance_m']
    assert df['timestamp_s'].tolist() == [0.0, 4.0]
    assert df['rssi_db'].tolist() == [-80.0, -81.0]
    assert set(df['station_id']) == {'GS1'}


def test_missing_columns(tmp_path):
    raw = tmp_path / 'gs1.csv'
    raw.write_text('time,rssi\n0,-80\n')
    with pytest.raises(ValueError):
        clean_station_log(raw)


def test_merge_exports(tmp_path):
    for sid, t in (('GS1', 2), ('GS2', 0)):
        (tmp_path / f'{sid}.csv').write_text(f'station,id,timestamp,rssi_dbm\n{sid},FF1,{t},-80\n')
    out = tmp_path / 'samples.csv'
    df = clean_station_logs([tmp_path / 'GS1.csv', tmp_path / 'GS2.csv'], out)
    assert df['station_id'].tolist() == ['GS2', 'GS1']
    assert pd.read_csv(out)['rssi_db'].tolist() == [-80.0, -80.0]


def test_main_without_files(tmp_path):
    assert main([str(tmp_path / 'missing.csv')]) == 2
