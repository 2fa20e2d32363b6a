"""Shared fixtures for the ferrosim test suite."""
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from cli.mnist import write_synthetic_mnist
from device_model.models.device_data import MacroModel


@pytest.fixture
def noiseless():
    return MacroModel.noiseless()


@pytest.fixture
def default_model():
    return MacroModel()


@pytest.fixture
def synthetic_mnist(tmp_path):
    """Small synthetic IDX dataset; returns {train_images, train_labels, test_images, test_labels}."""
    return write_synthetic_mnist(str(tmp_path / 'data'), train_count=400, test_count=100, seed=3)


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch):
    monkeypatch.delenv('FERROSIM_DATA_DIR', raising=False)
    monkeypatch.delenv('FERROSIM_OUT_DIR', raising=False)
