import pytest
import numpy as np
from worthwhile.objectives import AbsoluteValue, DoubleWell, Quadratic
from worthwhile.prox_solver import LambdaSchedule, SolverConfig
from worthwhile.quasi_metric import AsymmetricWeightedL1, ScaledEuclidean
from worthwhile.resistance import PowerResistance
from testing_utils import logger


@pytest.fixture
def rng() -> np.random.Generator:
    """A seeded generator so sampled checks are reproducible"""
    return np.random.default_rng(20240601)


@pytest.fixture
def quadratic() -> Quadratic:
    """f(x) = x^2 on [-2, 2]"""
    logger.info("Creating the quadratic objective")
    return Quadratic(1, lower=[-2.0], upper=[2.0])


@pytest.fixture
def absolute() -> AbsoluteValue:
    """f(x) = |x| on [-2, 2]"""
    logger.info("Creating the absolute value objective")
    return AbsoluteValue(1, lower=[-2.0], upper=[2.0])


@pytest.fixture
def double_well() -> DoubleWell:
    """f(x) = (x^2 - 1)^2 on [-2, 2]"""
    logger.info("Creating the double well objective")
    return DoubleWell(1, lower=[-2.0], upper=[2.0])


@pytest.fixture
def euclid() -> ScaledEuclidean:
    return ScaledEuclidean(1.0, 1)


@pytest.fixture
def hiring() -> AsymmetricWeightedL1:
    """Hiring one unit costs 2, firing one unit costs 1"""
    return AsymmetricWeightedL1([2.0], [1.0])


@pytest.fixture
def power2() -> PowerResistance:
    return PowerResistance(2.0)


@pytest.fixture
def unit_lambda() -> SolverConfig:
    """lambda_k = 1 for every k, exact descent (sigma = 0) and b = 2"""
    logger.info("Creating a constant lambda solver config")
    return SolverConfig(lambda_lo=1.0, lambda_hi=1.0, lambda_schedule=LambdaSchedule("constant", (1.0,)))


@pytest.fixture
def well_config() -> SolverConfig:
    """lambda_k = 2 with sigma = 0.1: steps stay inside the basin they start in"""
    return SolverConfig(lambda_lo=2.0, lambda_hi=2.0, lambda_schedule=LambdaSchedule("constant", (2.0,)),
                        sigma=0.1)
