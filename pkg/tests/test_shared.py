import numpy as np
import pandas as pd
import pytest

from shared.csv_io import write_csv
from shared.errors import DomainError
from shared.rng import PURPOSE_C2C, PURPOSE_D2D, RngKey, keyed_normal, keyed_uniform, normal_for_key


def test_rng_key_validation():
    with pytest.raises(DomainError):
        RngKey(-1)
    with pytest.raises(DomainError):
        RngKey(1, (0, 0, 0))
    with pytest.raises(DomainError):
        RngKey(1, event_counter=-2)


def test_rng_key_event_helpers():
    key = RngKey(5, (1, 2, 3, 0), 4)
    assert key.for_event(9) == RngKey(5, (1, 2, 3, 0), 9)


def test_scalar_and_vector_draws_agree():
    rows = np.arange(10)
    vector = keyed_normal(7, 1, rows, 4, 1, 3, PURPOSE_C2C)
    for row in range(10):
        assert normal_for_key(RngKey(7, (1, row, 4, 1), 3), PURPOSE_C2C) == pytest.approx(vector[row], rel=1e-14)


def test_purposes_are_independent_streams():
    rows = np.arange(10_000)
    d2d = keyed_normal(1, 0, rows, 0, 0, 0, PURPOSE_D2D)
    c2c = keyed_normal(1, 0, rows, 0, 0, 0, PURPOSE_C2C)
    assert abs(np.corrcoef(d2d, c2c)[0, 1]) < 0.05


def test_keyed_normal_moments():
    draws = keyed_normal(42, 0, np.arange(200_000), 0, 0, 0, PURPOSE_C2C)
    assert abs(draws.mean()) < 0.01
    assert draws.std() == pytest.approx(1.0, rel=0.01)


def test_keyed_uniform_open_interval():
    u = keyed_uniform(3, 0, np.arange(100_000), 0, 0, 0, PURPOSE_D2D, 0)
    assert u.min() > 0.0 and u.max() < 1.0


def test_write_csv_uses_lf_and_no_index(tmp_path):
    path = write_csv(pd.DataFrame({'b': [0.1, 2.0], 'a': [1, 2]}), str(tmp_path / 'x' / 'out.csv'), ['a', 'b'])
    assert open(path, 'rb').read() == b'a,b\n1,0.1\n2,2.0\n'
