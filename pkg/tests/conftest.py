import numpy as np
import pytest

from faceforge.adapter import AdapterConfig, TrainConfig, train
from faceforge.datagen import generate_dataset
from faceforge.model import generate_synthetic_model
from faceforge.rig import generate_synthetic_rig


@pytest.fixture(scope="session")
def small_model():
    return generate_synthetic_model(seed=7, vertex_count=120, id_dim=16)


@pytest.fixture(scope="session")
def small_rig(small_model):
    return generate_synthetic_rig(small_model, k=5, seed=3)


@pytest.fixture(scope="session")
def small_dataset(small_model, small_rig):
    return generate_dataset(small_rig, small_model, count=700,
                            split=(500, 100, 100), seed=11)


@pytest.fixture(scope="session")
def trained_net(small_dataset):
    config = AdapterConfig(hidden_dim=64, out_dim=5)
    net, report = train(config, TrainConfig(epochs=40, seed=0), small_dataset)
    assert report.test_mae < 0.05
    return net, report


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
