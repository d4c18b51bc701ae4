import numpy as np
import pytest

from faircert.probability import DiscreteJoint

ADULT_CSV = "data/adult.csv"
PROPUBLICA_CSV = "data/compas-scores-two-years.csv"


@pytest.fixture
def two_point_joint() -> DiscreteJoint:
    """Two equiprobable points with conditionals 0.8 / 0.2: every
    extremal quantity on it is computable by hand (marginal 0.5, max
    statistical parity 0.6, min balanced error 0.2, max disparate
    impact 0.75)."""
    return DiscreteJoint(px=[0.5, 0.5], ps_given_x=[0.8, 0.2])


@pytest.fixture
def two_point_joint_with_y() -> DiscreteJoint:
    return DiscreteJoint(px=[0.5, 0.5], ps_given_x=[0.8, 0.2], py_given_x=[1.0, 0.0])


def random_rule(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.random(size)
