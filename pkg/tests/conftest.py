import warnings

import pytest

from metric_thresholds import ThresholdConfig, generate_synthetic, load_spec
from metric_thresholds.fixtures import data_path
from metric_thresholds.pipeline import read_corpus


@pytest.fixture(scope="session")
def toy_corpus():
    return read_corpus(data_path("toy_corpus.csv"))


@pytest.fixture(scope="session")
def planted_spec():
    return load_spec(data_path("synthetic_specs/planted_line.json"))


@pytest.fixture(scope="session")
def planted_corpus(planted_spec):
    return generate_synthetic(planted_spec)


@pytest.fixture(scope="session")
def imbalance_corpus():
    return generate_synthetic(load_spec(data_path("synthetic_specs/imbalance.json")))


@pytest.fixture()
def no_correction_cfg():
    return ThresholdConfig(apply_correction=False)


@pytest.fixture()
def quiet():
    # several stages warn on small samples by design; tests that do not
    # assert on warnings silence them to keep output readable
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield
