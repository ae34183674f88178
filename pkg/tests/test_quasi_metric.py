import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from worthwhile.quasi_metric import (AsymmetricWeightedL1, NormEquivalenceBounds, ScaledEuclidean,
                                     asymmetry_witness, build_quasi_distance, verify_axioms)
from worthwhile.utils import InvalidInputError, box_sampler
from testing_utils import AXIOM_SAMPLES, logger


coords = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)
weights = st.floats(min_value=0.1, max_value=5.0)


def test_hiring_costs_more_than_firing(hiring: AsymmetricWeightedL1) -> None:
    assert hiring.evaluate([0.0], [1.0]) == 2.0
    assert hiring.evaluate([1.0], [0.0]) == 1.0
    assert hiring.evaluate([0.5], [0.5]) == 0.0


def test_evaluate_is_vectorised_over_batches() -> None:
    q = AsymmetricWeightedL1([1.0, 3.0], [2.0, 0.5])
    x = np.zeros((4, 2))
    y = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -2.0]])
    np.testing.assert_allclose(q.evaluate(x, y), [1.0, 2.0, 3.0, 1.0])


@pytest.mark.parametrize("q", [AsymmetricWeightedL1([2.0, 1.0, 0.5], [1.0, 3.0, 0.5]),
                               ScaledEuclidean(1.5, 3)])
def test_axioms_on_sampled_triples(q, rng: np.random.Generator) -> None:
    sampler = box_sampler([-5.0] * 3, [5.0] * 3, rng)
    report = verify_axioms(q, sampler, AXIOM_SAMPLES)
    logger.info(f"max triangle violation {report.max_triangle_violation}")
    assert report.passed
    assert report.samples == AXIOM_SAMPLES


def test_asymmetry_witness(rng: np.random.Generator) -> None:
    sampler = box_sampler([-1.0, -1.0], [1.0, 1.0], rng)
    q = AsymmetricWeightedL1([2.0, 2.0], [1.0, 1.0])
    witness = asymmetry_witness(q, sampler, 100)
    assert witness is not None
    x, y = witness
    assert q.evaluate(x, y) != q.evaluate(y, x)
    assert asymmetry_witness(ScaledEuclidean(1.0, 2), sampler, 100) is None


@settings(max_examples=200, deadline=None)
@given(x=st.lists(coords, min_size=2, max_size=2), y=st.lists(coords, min_size=2, max_size=2),
       h_plus=st.lists(weights, min_size=2, max_size=2), h_minus=st.lists(weights, min_size=2, max_size=2))
def test_norm_sandwich(x, y, h_plus, h_minus) -> None:
    q = AsymmetricWeightedL1(h_plus, h_minus)
    bounds = q.equivalence_bounds()
    violation = bounds.max_violation(q, np.array([x]), np.array([y]))
    assert violation <= 1e-9 * (1.0 + np.linalg.norm(np.subtract(x, y)))


def test_equivalence_constants() -> None:
    q = AsymmetricWeightedL1([2.0, 4.0], [1.0, 3.0])
    bounds = q.equivalence_bounds()
    assert bounds.beta1 == 1.0
    assert bounds.beta2 == pytest.approx(np.sqrt(2.0) * 4.0)
    with pytest.raises(InvalidInputError):
        NormEquivalenceBounds(2.0, 1.0)


def test_subgradient_second_picks_the_cost_of_the_direction(hiring: AsymmetricWeightedL1) -> None:
    np.testing.assert_array_equal(hiring.subgradient_second([0.0], [1.0]), [2.0])
    np.testing.assert_array_equal(hiring.subgradient_second([1.0], [0.0]), [-1.0])
    # ties take 0, the minimal-norm element of [-h_minus, h_plus]
    np.testing.assert_array_equal(hiring.subgradient_second([1.0], [1.0]), [0.0])
    np.testing.assert_array_equal(hiring.subgradient_second([1.0], [1.0], toward=[-3.0]), [-1.0])


def test_euclidean_subgradient_is_a_unit_vector() -> None:
    q = ScaledEuclidean(2.0, 2)
    v = q.subgradient_second([0.0, 0.0], [3.0, 4.0])
    np.testing.assert_allclose(v, [1.2, 1.6])
    np.testing.assert_array_equal(q.subgradient_second([1.0, 1.0], [1.0, 1.0]), [0.0, 0.0])


@pytest.mark.parametrize("h_plus, h_minus", [([0.0], [1.0]), ([1.0], [-1.0]), ([1.0, 2.0], [1.0]),
                                             ([np.inf], [1.0])])
def test_invalid_costs(h_plus, h_minus) -> None:
    with pytest.raises(InvalidInputError):
        AsymmetricWeightedL1(h_plus, h_minus)


def test_dimension_mismatch(hiring: AsymmetricWeightedL1) -> None:
    with pytest.raises(InvalidInputError):
        hiring.evaluate([0.0, 1.0], [1.0, 0.0])


def test_build_from_spec() -> None:
    q = AsymmetricWeightedL1([2.0, 1.0], [1.0, 1.0])
    rebuilt = build_quasi_distance(q.to_spec())
    np.testing.assert_array_equal(rebuilt.h_plus, q.h_plus)
    assert isinstance(build_quasi_distance({"kind": "euclidean"}, 2), ScaledEuclidean)
    with pytest.raises(InvalidInputError, match="allowed"):
        build_quasi_distance({"kind": "manhattan"})
