import numpy as np
import pandas as pd
import pytest

from crossbar.array import DUMP_COLUMNS, MINUS, PLUS, CrossbarArray, weights_from_dump
from device_model.models.device_data import MacroModel
from shared.errors import DomainError
from shared.rng import RngKey


def _random_signs(rng, shape):
    return rng.choice(np.array([-1, 1]), size=shape)


def test_build_starts_at_minus_one(noiseless):
    array = CrossbarArray.build(1, 1, noiseless, RngKey(1))
    np.testing.assert_array_equal(array.effective_weights(), [[-1.0]])
    np.testing.assert_array_equal(array.signs(), [[-1]])


def test_build_rejects_zero_dimension(noiseless):
    with pytest.raises(DomainError):
        CrossbarArray.build(0, 3, noiseless, RngKey(1))


def test_build_is_deterministic(default_model):
    a = CrossbarArray.build(4, 4, default_model, RngKey(5))
    b = CrossbarArray.build(4, 4, default_model, RngKey(5))
    np.testing.assert_array_equal(a.conductances, b.conductances)


def test_build_seeds_differ(default_model):
    a = CrossbarArray.build(4, 4, default_model, RngKey(5))
    b = CrossbarArray.build(4, 4, default_model, RngKey(6))
    assert not np.array_equal(a.d2d_offsets, b.d2d_offsets)


def test_reprogram_identical_matrix_costs_nothing(default_model):
    array = CrossbarArray.build(3, 3, default_model, RngKey(2))
    before = array.conductances.copy()
    assert array.program_weight_matrix(-np.ones((3, 3))) == 0
    np.testing.assert_array_equal(array.conductances, before)


def test_single_flip_programs_both_devices(noiseless):
    array = CrossbarArray.build(2, 2, noiseless, RngKey(2))
    w = -np.ones((2, 2))
    w[1, 0] = 1
    assert array.program_weight_matrix(w) == 2
    assert array.cell(PLUS, 1, 0).level == 1
    assert array.cell(MINUS, 1, 0).level == 0
    assert array.effective_weights()[1, 0] == 1.0


def test_random_flips_cost_two_events_each(default_model):
    rng = np.random.default_rng(0)
    array = CrossbarArray.build(8, 8, default_model, RngKey(3))
    first = _random_signs(rng, (8, 8))
    array.program_weight_matrix(first)
    second = _random_signs(rng, (8, 8))
    flips = int(np.count_nonzero(first != second))
    assert array.program_weight_matrix(second) == 2 * flips
    np.testing.assert_array_equal(array.signs(), second)


def test_program_weight_matrix_rejects_bad_input(noiseless):
    array = CrossbarArray.build(2, 2, noiseless, RngKey(1))
    with pytest.raises(DomainError):
        array.program_weight_matrix(np.ones((2, 3)))
    with pytest.raises(DomainError):
        array.program_weight_matrix(np.zeros((2, 2)))


def test_effective_weights_noiseless_signs(noiseless):
    array = CrossbarArray.build(2, 2, noiseless, RngKey(1))
    array.program_weight_matrix(np.array([[1, -1], [-1, 1]]))
    np.testing.assert_array_equal(array.effective_weights(), [[1.0, -1.0], [-1.0, 1.0]])


def test_effective_weights_c2c_spread():
    model = MacroModel(sigma_d2d=0.0, sigma_c2c=0.45)
    array = CrossbarArray.build(100, 100, model, RngKey(21))
    array.program_weight_matrix(np.ones((100, 100)))
    w = array.effective_weights()
    assert w.mean() == pytest.approx(1.0, rel=0.02)
    assert w.std(ddof=1) == pytest.approx(0.45 * np.sqrt(2) / 9, rel=0.1)


def test_effective_weights_snapshot_is_read_only_and_refreshed(noiseless):
    array = CrossbarArray.build(2, 2, noiseless, RngKey(1))
    snapshot = array.effective_weights()
    with pytest.raises(ValueError):
        snapshot[0, 0] = 3.0
    array.program_weight_matrix(np.ones((2, 2)))
    assert snapshot[0, 0] == -1.0
    assert array.effective_weights()[0, 0] == 1.0


def test_vmm_forward_cases(noiseless):
    array = CrossbarArray.build(1, 1, noiseless, RngKey(1))
    array.program_weight_matrix(np.ones((1, 1)))
    np.testing.assert_array_equal(array.vmm_forward(np.array([0.5])), [0.5])
    np.testing.assert_array_equal(array.vmm_forward(np.zeros(1)), [0.0])


def test_vmm_backward_cases(noiseless):
    array = CrossbarArray.build(1, 1, noiseless, RngKey(1))
    np.testing.assert_array_equal(array.vmm_backward(np.array([2.0])), [-2.0])
    np.testing.assert_array_equal(array.vmm_backward(np.zeros(1)), [0.0])


def test_vmm_matches_dense_matmul(default_model):
    rng = np.random.default_rng(4)
    array = CrossbarArray.build(16, 16, default_model, RngKey(4))
    array.program_weight_matrix(_random_signs(rng, (16, 16)))
    w = np.array(array.effective_weights())
    x, delta = rng.normal(size=16), rng.normal(size=16)
    np.testing.assert_allclose(array.vmm_forward(x), w.T @ x, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(array.vmm_backward(delta), w @ delta, rtol=1e-12, atol=1e-12)


def test_vmm_rejects_length_mismatch(noiseless):
    array = CrossbarArray.build(3, 2, noiseless, RngKey(1))
    with pytest.raises(DomainError):
        array.vmm_forward(np.ones(2))
    with pytest.raises(DomainError):
        array.vmm_backward(np.ones(3))


def test_signed_pulses_move_multilevel_pairs():
    model = MacroModel.noiseless(levels=4)
    array = CrossbarArray.build(1, 3, model, RngKey(1))
    # Construction state is k = -3 everywhere.
    absorbed, events = array.apply_signed_pulses(np.array([[1, 4, 0]]))
    np.testing.assert_array_equal(absorbed, [[1, 4, 0]])
    np.testing.assert_array_equal(array.signed_levels(), [[-2, 1, -3]])
    # k=-3 -> -2 touches one device; k=-3 -> +1 touches both.
    assert events == 3
    absorbed, _ = array.apply_signed_pulses(np.array([[0, 5, -1]]))
    np.testing.assert_array_equal(absorbed, [[0, 2, 0]])
    np.testing.assert_array_equal(array.signed_levels(), [[-2, 3, -3]])


def test_dump_round_trip(tmp_path, default_model):
    rng = np.random.default_rng(9)
    array = CrossbarArray.build(3, 4, default_model, RngKey(9))
    array.program_weight_matrix(_random_signs(rng, (3, 4)))
    path = array.dump_csv(str(tmp_path / 'dump.csv'))
    frame = pd.read_csv(path, float_precision='round_trip')
    assert list(frame.columns) == DUMP_COLUMNS
    assert len(frame) == 3 * 4 * 2
    np.testing.assert_allclose(weights_from_dump(frame, default_model), array.effective_weights(), rtol=0, atol=0)


def test_weights_from_dump_rejects_gaps(default_model):
    frame = CrossbarArray.build(2, 2, default_model, RngKey(1)).dump_frame().iloc[1:]
    with pytest.raises(DomainError):
        weights_from_dump(frame, default_model)


def test_vmm_oracle_over_many_cases(noiseless):
    rng = np.random.default_rng(1000)
    array = CrossbarArray.build(16, 16, noiseless, RngKey(1))
    worst = 0.0
    for _ in range(1000):
        array.program_weight_matrix(_random_signs(rng, (16, 16)))
        w = np.array(array.effective_weights())
        x, delta = rng.normal(size=16), rng.normal(size=16)
        for got, want in ((array.vmm_forward(x), w.T @ x), (array.vmm_backward(delta), w @ delta)):
            worst = max(worst, float(np.max(np.abs(got - want)) / np.max(np.abs(want))))
    assert worst <= 1e-12


def test_vmm_forward_is_linear(default_model):
    rng = np.random.default_rng(8)
    array = CrossbarArray.build(12, 7, default_model, RngKey(8))
    array.program_weight_matrix(_random_signs(rng, (12, 7)))
    for _ in range(20):
        x, z = rng.normal(size=12), rng.normal(size=12)
        a, b = rng.normal(size=2)
        combined = array.vmm_forward(a * x + b * z)
        expected = a * array.vmm_forward(x) + b * array.vmm_forward(z)
        assert np.linalg.norm(combined - expected) <= 1e-12 * max(np.linalg.norm(expected), 1.0)


def test_vmm_backward_is_transpose_of_forward(default_model):
    rng = np.random.default_rng(9)
    array = CrossbarArray.build(10, 6, default_model, RngKey(9))
    array.program_weight_matrix(_random_signs(rng, (10, 6)))
    for _ in range(20):
        x, delta = rng.normal(size=10), rng.normal(size=6)
        left = float(array.vmm_forward(x) @ delta)
        right = float(x @ array.vmm_backward(delta))
        assert left == pytest.approx(right, rel=1e-12, abs=1e-12)


def test_c2c_sigma_increases_weight_error():
    rng = np.random.default_rng(10)
    target = _random_signs(rng, (8, 8))
    distances = []
    for sigma in np.linspace(0.0, 0.45, 10):
        model = MacroModel(sigma_d2d=0.0, sigma_c2c=float(sigma))
        trials = []
        for trial in range(100):
            array = CrossbarArray.build(8, 8, model, RngKey(1000 + trial))
            array.program_weight_matrix(target)
            trials.append(np.linalg.norm(array.effective_weights() - target))
        distances.append(np.mean(trials))
    assert distances[0] == 0.0
    assert np.all(np.diff(distances) > 0)
