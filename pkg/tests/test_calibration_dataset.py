import math

import pandas as pd
import pytest

from create_calibration_dataset import create_calibration_dataset, main
from pathloss import PathLossModel


def _samples(model=PathLossModel(2.0, -40.0), distances=(100.0, 200.0, 400.0, 800.0), fmt=None):
    rows = []
    for d in distances:
        for e in (-0.5, 0.0, 0.5):
            row = {'distance_m': d, 'rssi_db': model.intercept_db - 10 * model.exponent * math.log10(d) + e}
            if fmt:
                row['message_format'] = fmt
            rows.append(row)
    return pd.DataFrame(rows)


def test_single_format_dataset(tmp_path):
    datasets = create_calibration_dataset(_samples(), tmp_path)
    model = datasets['models']['all']
    assert model.exponent == pytest.approx(2.0)
    assert model.intercept_db == pytest.approx(-40.0)

    stats = datasets['calibration_stats']
    assert list(stats['n']) == [3, 3, 3, 3]
    assert stats['sample_variance'].tolist() == pytest.approx([0.25] * 4)
    assert not stats['overlaps_next'].any()

    points = pd.read_csv(tmp_path / 'calibration_points.csv')
    assert list(points.columns) == ['distance_m', 'mean_rssi_db']
    assert PathLossModel.from_text((tmp_path / 'model.txt').read_text()) == model
    assert pd.read_csv(tmp_path / 'calibration_fits.csv')['usable'].all()


def test_formats_are_fitted_separately(tmp_path):
    samples = pd.concat([_samples(fmt='M1'), _samples(PathLossModel(0.05, -100.0), fmt='M3')])
    datasets = create_calibration_dataset(samples, tmp_path)
    fits = datasets['calibration_fits'].set_index('message_format')
    assert bool(fits.loc['M1', 'usable'])
    assert not bool(fits.loc['M3', 'usable'])
    assert (tmp_path / 'model_M1.txt').exists()
    assert (tmp_path / 'model_M3.txt').exists()


def test_simulator_truth_distance_column():
    samples = _samples().rename(columns={'distance_m': 'truth_distance_m'})
    assert len(create_calibration_dataset(samples)['calibration_points']) == 4


def test_single_samples_are_not_enough():
    with pytest.raises(ValueError):
        create_calibration_dataset(pd.DataFrame({'distance_m': [100.0, 200.0],
                                                 'rssi_db': [-80.0, -84.0]}))


def test_main(tmp_path, capsys):
    path = tmp_path / 'samples.csv'
    _samples().to_csv(path, index=False)
    assert main([str(path), '--out', str(tmp_path / 'out')]) == 0
    assert 'usable' in capsys.readouterr().out
