import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from worthwhile.resistance import (CallableResistance, PowerResistance, build_curve, curvature_bound,
                                   curvature_rate, elasticity, gamma, gamma_prime, gamma_second,
                                   is_strictly_convex_on, validate_hypotheses)
from worthwhile.utils import InvalidInputError
from testing_utils import finite_difference, logger


alphas = st.floats(min_value=1.05, max_value=6.0)
distances = st.floats(min_value=1e-4, max_value=10.0)
rates = st.floats(min_value=0.05, max_value=0.95)


def test_power_curve_values() -> None:
    curve = PowerResistance(2.0)
    assert gamma(curve, 3.0) == 9.0
    assert gamma_prime(curve, 3.0) == 6.0
    assert gamma_second(curve, 3.0) == 2.0
    assert gamma(curve, 0.0) == 0.0
    np.testing.assert_allclose(gamma(curve, np.array([0.5, 2.0])), [0.25, 4.0])


@pytest.mark.parametrize("alpha", [1.0, 0.5, -2.0, float("nan")])
def test_alpha_must_exceed_one(alpha: float) -> None:
    with pytest.raises(InvalidInputError, match="alpha must exceed 1"):
        PowerResistance(alpha)


def test_negative_distance_is_rejected() -> None:
    with pytest.raises(InvalidInputError):
        PowerResistance(2.0).value(-0.1)


def test_second_derivative_blows_up_below_two() -> None:
    with pytest.raises(InvalidInputError):
        PowerResistance(1.5).second_derivative(0.0)
    assert PowerResistance(3.0).second_derivative(0.0) == 0.0


@settings(max_examples=100, deadline=None)
@given(alpha=alphas, q=distances, r=rates)
def test_curvature_rate_of_power_curves(alpha: float, q: float, r: float) -> None:
    # Gamma'[q/r] * q / Gamma[q] = alpha * r**(1 - alpha) for every q
    rate = curvature_rate(PowerResistance(alpha), q, r)
    assert rate == pytest.approx(alpha * r ** (1.0 - alpha), rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(alpha=alphas, q=distances)
def test_elasticity_is_the_exponent(alpha: float, q: float) -> None:
    assert elasticity(PowerResistance(alpha), q) == pytest.approx(alpha, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(alpha=alphas, q=st.floats(min_value=0.1, max_value=5.0))
def test_derivatives_match_finite_differences(alpha: float, q: float) -> None:
    curve = PowerResistance(alpha)
    assert curve.derivative(q) == pytest.approx(finite_difference(curve.value, q), rel=1e-6)
    assert curve.second_derivative(q) == pytest.approx(finite_difference(curve.derivative, q), rel=1e-5)


@settings(max_examples=100, deadline=None)
@given(alpha=alphas, q1=distances, q2=distances, t=st.floats(min_value=0.05, max_value=0.95))
def test_power_curves_are_convex(alpha: float, q1: float, q2: float, t: float) -> None:
    if abs(q1 - q2) < 1e-3:
        return
    assert is_strictly_convex_on(PowerResistance(alpha), q1, q2, t)


def test_curvature_bound() -> None:
    bound = curvature_bound(PowerResistance(3.0), 0.5)
    assert bound.rho_bar == pytest.approx(3.0 * 4.0)
    with pytest.raises(InvalidInputError):
        curvature_rate(PowerResistance(2.0), 1.0, 1.0)
    with pytest.raises(InvalidInputError):
        curvature_rate(PowerResistance(2.0), 0.0, 0.5)


@pytest.mark.parametrize("alpha", [1.5, 2.0, 4.0])
def test_validate_power_curves(alpha: float) -> None:
    report = validate_hypotheses(PowerResistance(alpha))
    logger.info(f"alpha={alpha}: rho_bar={report.rho_bar}")
    assert report.passed, report.violations
    assert report.rho_bar == pytest.approx(alpha * 0.5 ** (1.0 - alpha))


def test_validate_rejects_a_curve_with_a_corner_at_zero() -> None:
    curve = CallableResistance(np.expm1, np.exp, np.exp, name="expm1")
    report = validate_hypotheses(curve)
    assert not report.passed
    assert "gamma_prime_zero" in report.violations


def test_validate_rejects_a_concave_curve() -> None:
    curve = CallableResistance(lambda q: q ** 2 - q ** 3 / 3.0, lambda q: 2.0 * q - q ** 2,
                               lambda q: 2.0 - 2.0 * q, name="cubic")
    report = validate_hypotheses(curve, q_bar=3.0)
    assert not report.checks["gamma_second_positive"]
    assert not report.checks["strictly_convex"]


def test_build_curve() -> None:
    assert build_curve({"kind": "power", "alpha": 2.5}).to_spec() == {"kind": "power", "alpha": 2.5}
    with pytest.raises(InvalidInputError, match="allowed: power"):
        build_curve({"kind": "log", "alpha": 2.0})
