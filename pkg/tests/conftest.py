import numpy as np
import pytest

from possim.likelihood_im import CalibrationConfig
from possim.models import (
    BinomialData,
    BinomialModel,
    BivariateCorrelationModel,
    NormalData,
    NormalMeanModel,
    TwoByTwoModel,
    load_clinical_trial,
    load_law_school,
)


@pytest.fixture(scope="session")
def normal_model():
    return NormalMeanModel(1.0)


@pytest.fixture(scope="session")
def binom_model():
    return BinomialModel(20)


@pytest.fixture(scope="session")
def binom_data():
    return BinomialData(8)


@pytest.fixture(scope="session")
def law_school():
    return load_law_school()


@pytest.fixture(scope="session")
def clinical():
    return load_clinical_trial()


@pytest.fixture(scope="session")
def fast_cfg():
    return CalibrationConfig(mc_samples=2000, seed=11)
