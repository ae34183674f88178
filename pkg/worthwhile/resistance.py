from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Union

import numpy as np
import numpy.typing as npt

from worthwhile.utils import InvalidInputError


ArrayOrFloat = Union[float, npt.NDArray[np.float64]]

CURVATURE_GRID_SIZE = 512
CURVATURE_GRID_FLOOR = 1e-6  # grid starts at this fraction of q_bar


def _as_q(q: Any) -> npt.NDArray[np.float64]:
    arr = np.asarray(q, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise InvalidInputError("the quasi distance argument of a resistance curve must be >= 0")
    return arr


def _out(value: npt.NDArray[np.float64]) -> ArrayOrFloat:
    return float(value) if value.ndim == 0 else value


class ResistanceCurve(ABC):
    """relative resistance to change Gamma: a twice differentiable, increasing, convex
    perturbation applied to the quasi distance. Values are vectorised over q >= 0."""

    @abstractmethod
    def value(self, q: ArrayOrFloat) -> ArrayOrFloat:
        """returns Gamma[q]."""

    @abstractmethod
    def derivative(self, q: ArrayOrFloat) -> ArrayOrFloat:
        """returns Gamma'[q]."""

    @abstractmethod
    def second_derivative(self, q: ArrayOrFloat) -> ArrayOrFloat:
        """returns Gamma''[q]."""

    @abstractmethod
    def to_spec(self) -> Dict[str, Any]:
        """returns the config table describing this curve."""


class PowerResistance(ResistanceCurve):
    """Gamma[q] = q**alpha with alpha > 1 (weak resistance to change)."""

    def __init__(self, alpha: float) -> None:
        if not np.isfinite(alpha) or alpha <= 1:
            raise InvalidInputError(f"alpha must exceed 1, got {alpha}")
        self._alpha = float(alpha)

    @property
    def alpha(self) -> float:
        return self._alpha

    def value(self, q: ArrayOrFloat) -> ArrayOrFloat:
        return _out(np.power(_as_q(q), self._alpha))

    def derivative(self, q: ArrayOrFloat) -> ArrayOrFloat:
        return _out(self._alpha * np.power(_as_q(q), self._alpha - 1))

    def second_derivative(self, q: ArrayOrFloat) -> ArrayOrFloat:
        arr = _as_q(q)
        if self._alpha < 2 and np.any(arr == 0):
            raise InvalidInputError("Gamma'' is unbounded at q = 0 when alpha < 2")
        return _out(self._alpha * (self._alpha - 1) * np.power(arr, self._alpha - 2))

    def to_spec(self) -> Dict[str, Any]:
        return {"kind": "power", "alpha": self._alpha}

    def __repr__(self) -> str:
        return f"PowerResistance(alpha={self._alpha})"


class CallableResistance(ResistanceCurve):
    """a user-supplied curve given by its value and two derivatives.
    Nothing is checked at construction; run validate_hypotheses on it."""

    def __init__(self, value: Callable[[Any], Any], derivative: Callable[[Any], Any],
                 second_derivative: Callable[[Any], Any], name: str = "custom") -> None:
        self._value = value
        self._derivative = derivative
        self._second = second_derivative
        self._name = name

    def value(self, q: ArrayOrFloat) -> ArrayOrFloat:
        return _out(np.asarray(self._value(_as_q(q)), dtype=float))

    def derivative(self, q: ArrayOrFloat) -> ArrayOrFloat:
        return _out(np.asarray(self._derivative(_as_q(q)), dtype=float))

    def second_derivative(self, q: ArrayOrFloat) -> ArrayOrFloat:
        return _out(np.asarray(self._second(_as_q(q)), dtype=float))

    def to_spec(self) -> Dict[str, Any]:
        return {"kind": self._name}


@dataclass(frozen=True)
class CurvatureBound:
    """rho_bar bounds the generalized rate of curvature rho(q, r) on (0, q_bar]."""
    r: float
    q_bar: float
    rho_bar: float


@dataclass(frozen=True)
class HypothesisReport:
    checks: Dict[str, bool]
    rho_bar: float
    violations: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def gamma(curve: ResistanceCurve, q: ArrayOrFloat) -> ArrayOrFloat:
    return curve.value(q)


def gamma_prime(curve: ResistanceCurve, q: ArrayOrFloat) -> ArrayOrFloat:
    return curve.derivative(q)


def gamma_second(curve: ResistanceCurve, q: ArrayOrFloat) -> ArrayOrFloat:
    return curve.second_derivative(q)


def _check_rate_args(q: ArrayOrFloat, r: float) -> npt.NDArray[np.float64]:
    arr = np.asarray(q, dtype=float)
    if np.any(~(arr > 0)):
        raise InvalidInputError("the curvature rate needs q > 0")
    if not 0 < r < 1:
        raise InvalidInputError(f"r must lie in (0, 1), got {r}")
    return arr


def curvature_rate(curve: ResistanceCurve, q: ArrayOrFloat, r: float) -> ArrayOrFloat:
    """returns rho(q, r) = Gamma'[q/r] / (Gamma[q]/q)."""
    arr = _check_rate_args(q, r)
    rate = np.asarray(curve.derivative(arr / r)) * arr / np.asarray(curve.value(arr))
    return _out(rate)


def elasticity(curve: ResistanceCurve, q: ArrayOrFloat) -> ArrayOrFloat:
    """returns Gamma'[q] * q / Gamma[q], the r = 1 reading of the curvature rate."""
    arr = np.asarray(q, dtype=float)
    if np.any(~(arr > 0)):
        raise InvalidInputError("the elasticity needs q > 0")
    return _out(np.asarray(curve.derivative(arr)) * arr / np.asarray(curve.value(arr)))


def curvature_grid(q_bar: float, grid_size: int = CURVATURE_GRID_SIZE) -> npt.NDArray[np.float64]:
    if grid_size < 2:
        raise InvalidInputError("grid_size must be at least 2")
    if not q_bar > 0:
        raise InvalidInputError("q_bar must be positive")
    return np.geomspace(CURVATURE_GRID_FLOOR * q_bar, q_bar, grid_size)


def curvature_bound(curve: ResistanceCurve, r: float, q_bar: float = 1.0,
                    grid_size: int = CURVATURE_GRID_SIZE) -> CurvatureBound:
    """returns the supremum of the curvature rate over a log-spaced grid on (0, q_bar]."""
    rates = np.asarray(curvature_rate(curve, curvature_grid(q_bar, grid_size), r))
    return CurvatureBound(r=r, q_bar=q_bar, rho_bar=float(np.max(rates)))


def validate_hypotheses(curve: ResistanceCurve, q_bar: float = 1.0, r: float = 0.5,
                        grid_size: int = CURVATURE_GRID_SIZE) -> HypothesisReport:
    """checks Gamma[0] = Gamma'[0] = 0, Gamma' > 0 and Gamma'' > 0 on the grid,
    monotonicity, and finiteness of rho_bar(r)."""
    grid = curvature_grid(q_bar, grid_size)
    violations: List[str] = []
    checks: Dict[str, bool] = {}

    checks["gamma_zero"] = float(curve.value(0.0)) == 0.0
    checks["gamma_prime_zero"] = float(curve.derivative(0.0)) == 0.0
    d1 = np.asarray(curve.derivative(grid))
    d2 = np.asarray(curve.second_derivative(grid))
    values = np.asarray(curve.value(grid))
    checks["gamma_prime_positive"] = bool(np.all(d1 > 0))
    checks["gamma_second_positive"] = bool(np.all(d2 > 0))
    checks["increasing"] = bool(np.all(np.diff(values) > 0))
    checks["strictly_convex"] = all(is_strictly_convex_on(curve, float(a), float(b), 0.5)
                                    for a, b in zip(grid[::64], grid[32::64]))

    try:
        rho_bar = curvature_bound(curve, r, q_bar, grid_size).rho_bar
    except InvalidInputError as exc:
        violations.append(str(exc))
        rho_bar = float("inf")
    checks["rho_bar_finite"] = bool(np.isfinite(rho_bar))

    for name, ok in checks.items():
        if not ok:
            violations.append(name)
    return HypothesisReport(checks=checks, rho_bar=rho_bar, violations=violations)


def build_curve(spec: Dict[str, Any]) -> ResistanceCurve:
    kind = spec.get("kind", "power")
    if kind != "power":
        raise InvalidInputError(f"unknown gamma kind {kind!r}; allowed: power")
    return PowerResistance(float(spec["alpha"]))


def is_strictly_convex_on(curve: ResistanceCurve, q1: float, q2: float, t: float) -> bool:
    """Gamma[t q1 + (1 - t) q2] < t Gamma[q1] + (1 - t) Gamma[q2] for q1 != q2 and t in (0, 1)."""
    if q1 == q2 or not 0 < t < 1:
        raise InvalidInputError("need q1 != q2 and t in (0, 1)")
    mid = float(curve.value(t * q1 + (1.0 - t) * q2))
    return mid < t * float(curve.value(q1)) + (1.0 - t) * float(curve.value(q2))
