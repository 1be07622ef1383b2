import numpy as np
import pytest

from lossbudget import LossBasis, LossVector, convert_loss_vector
from lossbudget.fixtures import p_ani, p_ideal, p_iso, reference_loss_tangents


@pytest.fixture(scope="session")
def iso_dataset():
    return p_iso()


@pytest.fixture(scope="session")
def ani_dataset():
    return p_ani()


@pytest.fixture(scope="session")
def ideal_dataset():
    return p_ideal()


@pytest.fixture(scope="session")
def reference_tangents():
    vector, half_widths = reference_loss_tangents()
    return vector, half_widths


@pytest.fixture(scope="session")
def x_star(iso_dataset, reference_tangents):
    """Reference loss tangents converted into the loss-factor basis."""
    vector, _ = reference_tangents
    factors = convert_loss_vector(iso_dataset.regions, vector, LossBasis.LOSS_FACTOR)
    return np.asarray(factors.values)


@pytest.fixture(scope="session")
def x_star_vector(iso_dataset, reference_tangents) -> LossVector:
    vector, _ = reference_tangents
    return convert_loss_vector(iso_dataset.regions, vector, LossBasis.LOSS_FACTOR)
