import numpy as np
import pytest

from calibration.fitting import FITTED_STATS_COLUMNS, fit_gaussian, fit_variation_model
from calibration.io import (
    MEASUREMENT_HEADER,
    export_macro_model,
    import_macro_model,
    parse_measurement_csv,
    write_measurement_csv,
)
from device_model.models.device_data import MEASUREMENT_COLUMNS, MacroModel
from device_model.protocol import frame_to_records, run_calibration_protocol
from shared.errors import DomainError, FormatError
from shared.rng import RngKey


def _write(path, text):
    path.write_text(text, encoding='utf-8')
    return str(path)


def test_parse_header_only_is_empty(tmp_path):
    frame = parse_measurement_csv(_write(tmp_path / 'm.csv', MEASUREMENT_HEADER + '\n'))
    assert len(frame) == 0
    assert list(frame.columns) == MEASUREMENT_COLUMNS


def test_parse_single_row(tmp_path):
    frame = parse_measurement_csv(_write(tmp_path / 'm.csv', MEASUREMENT_HEADER + '\n7,1,3,1,42,9.8125\n'))
    (record,) = frame_to_records(frame)
    assert (record.device_id, record.row, record.col, record.target_level, record.cycle) == (7, 1, 3, 1, 42)
    assert record.conductance_uS == 9.8125


def test_parse_rejects_bad_header(tmp_path):
    with pytest.raises(FormatError, match='header'):
        parse_measurement_csv(_write(tmp_path / 'm.csv', 'device,row\n1,2\n'))


def test_parse_reports_line_numbers(tmp_path):
    body = MEASUREMENT_HEADER + '\n0,0,0,0,1,1.0\n1,0,1,0,1,abc\n2,0,2,x,1,1.0\n3,0,3\n'
    with pytest.raises(FormatError) as error:
        parse_measurement_csv(_write(tmp_path / 'm.csv', body))
    message = str(error.value)
    assert 'line 3' in message and 'line 4' in message and 'line 5' in message
    assert 'line 2:' not in message


def test_parse_accepts_trailing_blank_line(tmp_path):
    frame = parse_measurement_csv(_write(tmp_path / 'm.csv', MEASUREMENT_HEADER + '\n7,1,3,1,42,9.8125\n\n'))
    assert len(frame) == 1


def test_parse_reports_blank_line_inside_body(tmp_path):
    body = MEASUREMENT_HEADER + '\n0,0,0,0,1,1.0\n\n1,0,1,0,1,2.0\n'
    with pytest.raises(FormatError, match='line 3: expected 6 fields, got 0'):
        parse_measurement_csv(_write(tmp_path / 'm.csv', body))


def test_protocol_output_round_trips(tmp_path, default_model):
    frame = run_calibration_protocol((3, 3), default_model, RngKey(5), cycles=4)
    path = write_measurement_csv(frame, str(tmp_path / 'measurements.csv'))
    assert parse_measurement_csv(path).equals(frame)


def test_fit_gaussian_cases():
    assert fit_gaussian([5, 5, 5, 5]) == (5.0, 0.0)
    mean, sigma = fit_gaussian([1, 3])
    assert mean == 2.0
    assert sigma == pytest.approx(np.sqrt(2))
    with pytest.raises(DomainError):
        fit_gaussian([1.0])


def test_fit_gaussian_large_sample():
    samples = np.random.default_rng(0).normal(5.0, 1.0, size=100_000)
    mean, sigma = fit_gaussian(samples)
    assert mean == pytest.approx(5.0, rel=0.01)
    assert sigma == pytest.approx(1.0, rel=0.02)


def test_fit_noiseless_records_is_exact(noiseless):
    frame = run_calibration_protocol((4, 4), noiseless, RngKey(1), cycles=10)
    stats, model = fit_variation_model(frame)
    assert (model.g_off, model.g_on, model.levels) == (1.0, 10.0, 2)
    assert model.sigma_d2d == 0.0 and model.sigma_c2c == 0.0
    assert stats.n_devices == 16 and stats.n_records == 320


def test_fit_recovers_known_sigmas():
    # g_off = 5 keeps level-0 readings clear of the clamp floor.
    source = MacroModel(g_off=5.0, g_on=15.0, sigma_d2d=0.5, sigma_c2c=0.2)
    frame = run_calibration_protocol((100, 100), source, RngKey(77), cycles=100)
    stats, model = fit_variation_model(frame, levels=2)
    assert model.sigma_d2d == pytest.approx(0.5, rel=0.05)
    assert model.sigma_c2c == pytest.approx(0.2, rel=0.01)
    assert model.g_off == pytest.approx(5.0, abs=0.03)
    assert model.g_on == pytest.approx(15.0, abs=0.03)
    assert stats.per_level[0].n_records == 10_000 * 100


def test_fit_default_sigmas_within_ten_percent():
    frame = run_calibration_protocol((64, 64), MacroModel(), RngKey(3), cycles=100)
    _, model = fit_variation_model(frame)
    assert model.sigma_d2d == pytest.approx(0.45, rel=0.1)
    assert model.sigma_c2c == pytest.approx(0.45, rel=0.1)


def test_fit_names_missing_level(default_model):
    frame = run_calibration_protocol((2, 2), default_model, RngKey(1), cycles=3)
    with pytest.raises(DomainError, match='level 1'):
        fit_variation_model(frame[frame['target_level'] == 0], levels=2)


def test_fit_rejects_single_cycle(default_model):
    frame = run_calibration_protocol((2, 2), default_model, RngKey(1), cycles=1)
    with pytest.raises(DomainError, match='fewer than 2 cycles'):
        fit_variation_model(frame)


def test_fitted_stats_frame(default_model):
    frame = run_calibration_protocol((3, 3), default_model, RngKey(2), cycles=5)
    stats, _ = fit_variation_model(frame)
    table = stats.to_frame()
    assert list(table.columns) == FITTED_STATS_COLUMNS
    assert table['scope'].tolist() == ['level_0', 'level_1', 'pooled']


def test_macro_model_file_round_trip(tmp_path):
    model = MacroModel(g_off=1.25, g_on=9.5, levels=4, sigma_d2d=0.1, sigma_c2c=0.3)
    path = export_macro_model(model, str(tmp_path / 'model.yaml'))
    assert import_macro_model(path) == model
    assert len(open(path, encoding='utf-8').read().splitlines()) == 5


def test_macro_model_file_literal(tmp_path):
    text = 'g_off_uS: 1.0\ng_on_uS: 10.0\nlevels: 2\nsigma_d2d_uS: 0.45\nsigma_c2c_uS: 0.45\n'
    assert import_macro_model(_write(tmp_path / 'model.yaml', text)) == MacroModel()


def test_macro_model_file_missing_key(tmp_path):
    text = 'g_off_uS: 1.0\ng_on_uS: 10.0\nlevels: 2\nsigma_d2d_uS: 0.45\n'
    with pytest.raises(FormatError, match='sigma_c2c_uS'):
        import_macro_model(_write(tmp_path / 'model.yaml', text))


def test_macro_model_file_unknown_key(tmp_path):
    text = 'g_off_uS: 1.0\ng_on_uS: 10.0\nlevels: 2\nsigma_d2d_uS: 0.45\nsigma_c2c_uS: 0.45\ntemp_K: 300\n'
    with pytest.raises(FormatError, match='temp_K'):
        import_macro_model(_write(tmp_path / 'model.yaml', text))


def _rms_fit_errors(shape, source, seeds):
    g_off, c2c = [], []
    for seed in seeds:
        _, model = fit_variation_model(run_calibration_protocol(shape, source, RngKey(seed), cycles=5), levels=2)
        g_off.append(model.g_off - source.g_off)
        c2c.append(model.sigma_c2c - source.sigma_c2c)
    return np.sqrt(np.mean(np.square(g_off))), np.sqrt(np.mean(np.square(c2c)))


def test_fit_error_halves_when_devices_quadruple():
    source = MacroModel(g_off=5.0, g_on=15.0, sigma_d2d=0.45, sigma_c2c=0.45)
    small = _rms_fit_errors((8, 8), source, range(1000, 1400))
    large = _rms_fit_errors((16, 16), source, range(5000, 5400))
    for small_error, large_error in zip(small, large):
        assert large_error / small_error == pytest.approx(0.5, rel=0.2)
