from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
from scipy import optimize

from worthwhile.quasi_metric import AsymmetricWeightedL1
from worthwhile.utils import (EmptySubgradientError, InvalidInputError, Point, PointSampler,
                              as_point, check_dimension, logger)


Array = npt.NDArray[np.float64]

KL_PASS_TOL = 1e-9
MAX_ENTREPRENEUR_DIM = 4
BOUND_TOL = 1e-10  # a worker count this close to a box bound, scaled by 1+|bound|, sits on it


class Objective(ABC):
    """a proper lower semicontinuous "to be decreased" payoff f on R^n with an oracle
    returning one element of its limiting subdifferential. Oracles accept points with
    leading batch axes. The domain box bounds the grid oracles and the inner solver."""

    kind = "objective"

    def __init__(self, dimension: int, lower: Optional[Sequence[float]] = None,
                 upper: Optional[Sequence[float]] = None) -> None:
        if dimension < 1:
            raise InvalidInputError("dimension must be at least 1")
        self._dimension = dimension
        if (lower is None) != (upper is None):
            raise InvalidInputError("give both box bounds or neither")
        self._lower: Optional[Point] = None
        self._upper: Optional[Point] = None
        if lower is not None and upper is not None:
            lo = as_point(lower, dimension)
            hi = as_point(upper, dimension)
            if np.any(hi <= lo):
                raise InvalidInputError("every upper box bound must exceed the lower one")
            self._lower, self._upper = lo, hi

    @property
    def dimension(self) -> int:
        return self._dimension

    @property
    def has_box(self) -> bool:
        return self._lower is not None

    @property
    def lower(self) -> Optional[Point]:
        return self._lower

    @property
    def upper(self) -> Optional[Point]:
        return self._upper

    @property
    def bounded_below(self) -> bool:
        return True

    @property
    def kinks(self) -> Tuple[Tuple[float, ...], ...]:
        """per-coordinate values at which f may fail to be differentiable."""
        return tuple(() for _ in range(self._dimension))

    @abstractmethod
    def value(self, x: Any) -> Any:
        """returns f(x), +inf outside the representable domain."""

    @abstractmethod
    def subgradient_element(self, x: Any) -> Array:
        """returns the minimal-norm element of the limiting subdifferential at x.
        Raises EmptySubgradientError outside dom f."""

    @abstractmethod
    def params(self) -> Dict[str, Any]:
        """returns the per-kind parameter table."""

    def to_spec(self) -> Dict[str, Any]:
        spec: Dict[str, Any] = {"kind": self.kind, "params": self.params()}
        if self._lower is not None and self._upper is not None:
            spec["lower"] = self._lower.tolist()
            spec["upper"] = self._upper.tolist()
        return spec

    def _points(self, x: Any) -> Array:
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        check_dimension(arr, self._dimension)
        return arr

    def _finite_or_raise(self, arr: Array) -> None:
        if not np.all(np.isfinite(arr)):
            raise EmptySubgradientError("subgradient requested outside dom f")


def _out(value: Array) -> Any:
    return float(value) if value.ndim == 0 else value


def _finite_value(arr: Array, value: Array) -> Any:
    return _out(np.where(np.all(np.isfinite(arr), axis=-1), value, np.inf))


class Quadratic(Objective):
    """f(x) = weight * ||x - center||^2."""

    kind = "quadratic"

    def __init__(self, dimension: int = 1, weight: float = 1.0,
                 center: Optional[Sequence[float]] = None, **box: Any) -> None:
        super().__init__(dimension, **box)
        if weight <= 0:
            raise InvalidInputError("weight must be positive")
        self._weight = float(weight)
        self._center = np.zeros(dimension) if center is None else as_point(center, dimension)

    def value(self, x: Any) -> Any:
        arr = self._points(x)
        with np.errstate(invalid="ignore", over="ignore"):
            v = self._weight * np.sum((arr - self._center) ** 2, axis=-1)
        return _finite_value(arr, v)

    def subgradient_element(self, x: Any) -> Array:
        arr = self._points(x)
        self._finite_or_raise(arr)
        return 2.0 * self._weight * (arr - self._center)

    def params(self) -> Dict[str, Any]:
        return {"weight": self._weight, "center": self._center.tolist()}


class AbsoluteValue(Objective):
    """f(x) = weight * ||x - center||_1, kinked wherever a coordinate meets the center."""

    kind = "abs"

    def __init__(self, dimension: int = 1, weight: float = 1.0,
                 center: Optional[Sequence[float]] = None, **box: Any) -> None:
        super().__init__(dimension, **box)
        if weight <= 0:
            raise InvalidInputError("weight must be positive")
        self._weight = float(weight)
        self._center = np.zeros(dimension) if center is None else as_point(center, dimension)

    @property
    def kinks(self) -> Tuple[Tuple[float, ...], ...]:
        return tuple((float(c),) for c in self._center)

    def value(self, x: Any) -> Any:
        arr = self._points(x)
        with np.errstate(invalid="ignore"):
            v = self._weight * np.sum(np.abs(arr - self._center), axis=-1)
        return _finite_value(arr, v)

    def subgradient_element(self, x: Any) -> Array:
        arr = self._points(x)
        self._finite_or_raise(arr)
        return self._weight * np.sign(arr - self._center)

    def params(self) -> Dict[str, Any]:
        return {"weight": self._weight, "center": self._center.tolist()}


class DoubleWell(Objective):
    """f(x) = sum_j (x_j^2 - well^2)^2: minimisers at +-well per coordinate, a local max at 0."""

    kind = "double_well"

    def __init__(self, dimension: int = 1, well: float = 1.0, **box: Any) -> None:
        super().__init__(dimension, **box)
        if well <= 0:
            raise InvalidInputError("well must be positive")
        self._well = float(well)

    def value(self, x: Any) -> Any:
        arr = self._points(x)
        with np.errstate(invalid="ignore", over="ignore"):
            v = np.sum((arr ** 2 - self._well ** 2) ** 2, axis=-1)
        return _finite_value(arr, v)

    def subgradient_element(self, x: Any) -> Array:
        arr = self._points(x)
        self._finite_or_raise(arr)
        return 4.0 * arr * (arr ** 2 - self._well ** 2)

    def params(self) -> Dict[str, Any]:
        return {"well": self._well}


class L1Quadratic(Objective):
    """f(x) = 0.5 * ||x - center||^2 + mu * ||x||_1; its minimiser is the soft threshold of center."""

    kind = "l1_quadratic"

    def __init__(self, dimension: int = 1, mu: float = 1.0,
                 center: Optional[Sequence[float]] = None, **box: Any) -> None:
        super().__init__(dimension, **box)
        if mu <= 0:
            raise InvalidInputError("mu must be positive")
        self._mu = float(mu)
        self._center = np.zeros(dimension) if center is None else as_point(center, dimension)

    @property
    def kinks(self) -> Tuple[Tuple[float, ...], ...]:
        return tuple((0.0,) for _ in range(self.dimension))

    def minimizer(self) -> Point:
        return np.sign(self._center) * np.maximum(np.abs(self._center) - self._mu, 0.0)

    def value(self, x: Any) -> Any:
        arr = self._points(x)
        with np.errstate(invalid="ignore", over="ignore"):
            v = (0.5 * np.sum((arr - self._center) ** 2, axis=-1)
                 + self._mu * np.sum(np.abs(arr), axis=-1))
        return _finite_value(arr, v)

    def subgradient_element(self, x: Any) -> Array:
        arr = self._points(x)
        self._finite_or_raise(arr)
        smooth = arr - self._center
        # at x_j = 0 pick the element of -c_j + mu*[-1, 1] closest to zero
        at_kink = -self._center + self._mu * np.clip(self._center / self._mu, -1.0, 1.0)
        return np.where(arr == 0, at_kink, smooth + self._mu * np.sign(arr))

    def params(self) -> Dict[str, Any]:
        return {"mu": self._mu, "center": self._center.tolist()}


@dataclass(frozen=True)
class KLDescriptor:
    """desingularizer phi(s) = c * s**(1 - theta), claimed valid on f(x_bar) < f < f(x_bar) + eta."""
    theta: float
    c: float
    eta: float
    x_bar: Tuple[float, ...]

    def __post_init__(self) -> None:
        if not 0 < self.theta < 1:
            raise InvalidInputError("theta must lie in (0, 1)")
        if self.c <= 0 or self.eta <= 0:
            raise InvalidInputError("c and eta must be positive")

    def phi(self, s: Any) -> Any:
        return self.c * np.power(np.asarray(s, dtype=float), 1.0 - self.theta)

    def phi_prime(self, s: Any) -> Any:
        return self.c * (1.0 - self.theta) * np.power(np.asarray(s, dtype=float), -self.theta)


class KLStatus(Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class KLReport:
    status: KLStatus
    min_statistic: float
    valid_samples: int


def value(obj: Objective, x: Any) -> Any:
    return obj.value(x)


def subgradient_element(obj: Objective, x: Any) -> Array:
    return obj.subgradient_element(x)


def critical_residual(obj: Objective, x: Any) -> float:
    """returns ||w|| for the oracle's minimal-norm element w of the subdifferential at x."""
    return float(np.linalg.norm(obj.subgradient_element(as_point(x, obj.dimension))))


def kl_empirical_check(obj: Objective, desc: KLDescriptor, sampler: PointSampler,
                       count: int) -> KLReport:
    """evaluates phi'(f(x) - f(x_bar)) * dist(0, df(x)) on the sampled points lying in the
    band f(x_bar) < f(x) < f(x_bar) + eta; passes iff the minimum is at least 1."""
    x_bar = as_point(desc.x_bar, obj.dimension)
    f_bar = float(obj.value(x_bar))
    points = sampler(count, 1)[:, 0, :]
    values = np.asarray(obj.value(points))
    band = (values > f_bar) & (values < f_bar + desc.eta)
    if not np.any(band):
        return KLReport(KLStatus.INCONCLUSIVE, float("nan"), 0)
    inside = points[band]
    dist = np.linalg.norm(obj.subgradient_element(inside), axis=-1)
    stats = desc.phi_prime(values[band] - f_bar) * dist
    min_stat = float(np.min(stats))
    status = KLStatus.PASS if min_stat >= 1.0 - KL_PASS_TOL else KLStatus.FAIL
    return KLReport(status, min_stat, int(np.count_nonzero(band)))


def grid_critical_points(obj: Objective, resolution: int = 10001) -> Point:
    """returns the critical points of a 1-D objective on its box, located by sign changes of
    the derivative element on a grid and polished with a bracketing root finder."""
    if obj.dimension != 1 or obj.lower is None or obj.upper is None:
        raise InvalidInputError("grid_critical_points needs a 1-D objective with a domain box")
    grid = np.linspace(obj.lower[0], obj.upper[0], resolution)
    deriv = obj.subgradient_element(grid[:, None])[:, 0]

    def slope(t: float) -> float:
        return float(obj.subgradient_element(np.array([t]))[0])

    roots = [float(t) for t, d in zip(grid, deriv) if d == 0.0]
    for i in np.nonzero(deriv[:-1] * deriv[1:] < 0)[0]:
        roots.append(float(optimize.brentq(slope, grid[i], grid[i + 1], xtol=1e-15)))
    return np.unique(np.array(roots))


@dataclass(frozen=True)
class EntrepreneurScenario:
    """knowledge-management firm hiring skilled workers of `dimension` types.
    Quantity is sum_j x_j, quality prod_j (1 - exp(-x_j)); revenue is
    (price - demand_slope * quantity) * quantity * quality; wages are paid per worker."""
    h_plus: Tuple[float, ...]
    h_minus: Tuple[float, ...]
    wages: Tuple[float, ...]
    price: float
    upper: Tuple[float, ...]
    demand_slope: float = 0.0
    grid_resolution: int = 0  # 0 picks 201 per axis up to 3 types and 41 for 4

    def __post_init__(self) -> None:
        n = len(self.wages)
        if not 1 <= n <= MAX_ENTREPRENEUR_DIM:
            raise InvalidInputError(
                f"the entrepreneur scenario supports 1 to {MAX_ENTREPRENEUR_DIM} skill types, got {n}")
        if not len(self.h_plus) == len(self.h_minus) == len(self.upper) == n:
            raise InvalidInputError("h_plus, h_minus, wages and upper must have the same length")
        if any(w < 0 for w in self.wages) or self.price < 0 or self.demand_slope < 0:
            raise InvalidInputError("wages, price and demand_slope must be nonnegative")
        if any(u <= 0 for u in self.upper):
            raise InvalidInputError("upper box bounds must be positive")
        if self.grid_resolution < 0 or self.grid_resolution == 1:
            raise InvalidInputError("grid_resolution must be 0 (default) or at least 2")

    @property
    def dimension(self) -> int:
        return len(self.wages)

    @property
    def resolution(self) -> int:
        if self.grid_resolution:
            return self.grid_resolution
        return 201 if self.dimension <= 3 else 41

    def quasi_distance(self) -> AsymmetricWeightedL1:
        return AsymmetricWeightedL1(self.h_plus, self.h_minus)

    def profit(self, x: Any) -> Any:
        """returns g(x); -inf where some worker count is negative."""
        arr = np.asarray(x, dtype=float)
        quantity = np.sum(arr, axis=-1)
        quality = np.prod(-np.expm1(-arr), axis=-1)
        revenue = (self.price - self.demand_slope * quantity) * quantity * quality
        g = revenue - arr @ np.asarray(self.wages, dtype=float)
        return np.where(np.all(arr >= 0, axis=-1), g, -np.inf)

    def profit_gradient(self, x: Any) -> Array:
        arr = np.asarray(x, dtype=float)
        n = arr.shape[-1]
        quantity = np.sum(arr, axis=-1, keepdims=True)
        gain = -np.expm1(-arr)
        quality = np.prod(gain, axis=-1, keepdims=True)
        others = np.stack([np.prod(np.delete(gain, i, axis=-1), axis=-1) for i in range(n)],
                          axis=-1)
        scale = self.price - self.demand_slope * quantity
        d_revenue = ((self.price - 2.0 * self.demand_slope * quantity) * quality
                     + scale * quantity * np.exp(-arr) * others)
        return d_revenue - np.asarray(self.wages, dtype=float)


class EntrepreneurObjective(Objective):
    """f(x) = g_bar - g(x) >= 0, the residual profit still to be exhausted."""

    kind = "entrepreneur"

    def __init__(self, scenario: EntrepreneurScenario, g_bar: float, argmax: Point) -> None:
        super().__init__(scenario.dimension, lower=[0.0] * scenario.dimension,
                         upper=list(scenario.upper))
        self._scenario = scenario
        self._g_bar = float(g_bar)
        self._argmax = argmax

    @property
    def scenario(self) -> EntrepreneurScenario:
        return self._scenario

    @property
    def g_bar(self) -> float:
        return self._g_bar

    @property
    def argmax(self) -> Point:
        return self._argmax

    def profit_gap(self, x: Any) -> float:
        return float(self._g_bar - self._scenario.profit(as_point(x, self.dimension)))

    def value(self, x: Any) -> Any:
        """returns g_bar - g(x) on the hiring box [0, upper], +inf off it."""
        arr = self._points(x)
        with np.errstate(invalid="ignore", over="ignore"):
            f = self._g_bar - self._scenario.profit(arr)
        inside = np.all(np.isfinite(arr) & (arr <= self.upper), axis=-1)
        return _out(np.where(inside, f, np.inf))

    def subgradient_element(self, x: Any) -> Array:
        """returns the minimal-norm element of grad f + N_box: where a worker count sits on a
        bound and the gradient pushes out of the box, that coordinate is zero."""
        arr = self._points(x)
        self._finite_or_raise(arr)
        upper = np.asarray(self.upper, dtype=float)
        if np.any(arr < 0) or np.any(arr > upper):
            raise EmptySubgradientError("worker counts must lie in [0, upper]")
        grad = -self._scenario.profit_gradient(arr)
        at_lower = arr <= BOUND_TOL
        at_upper = arr >= upper - BOUND_TOL * (1.0 + upper)
        return np.where((at_lower & (grad > 0)) | (at_upper & (grad < 0)), 0.0, grad)

    def params(self) -> Dict[str, Any]:
        s = self._scenario
        return {"h_plus": list(s.h_plus), "h_minus": list(s.h_minus), "wages": list(s.wages),
                "price": s.price, "demand_slope": s.demand_slope,
                "grid_resolution": s.grid_resolution}


def _grid_maximum(scenario: EntrepreneurScenario) -> Tuple[float, Point]:
    axes = [np.linspace(0.0, u, scenario.resolution) for u in scenario.upper]
    best, best_point = -np.inf, np.zeros(scenario.dimension)
    if scenario.dimension == 1:
        slabs = [axes[0][:, None]]
    else:
        rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), axis=-1).reshape(-1, scenario.dimension - 1)
        slabs = [np.column_stack([np.full(rest.shape[0], x0), rest]) for x0 in axes[0]]
    for slab in slabs:
        g = scenario.profit(slab)
        i = int(np.argmax(g))
        if g[i] > best:
            best, best_point = float(g[i]), slab[i].copy()
    return best, best_point


def build_entrepreneur(scenario: EntrepreneurScenario) -> EntrepreneurObjective:
    """computes g_bar by a dense grid over the box, polished by a bounded local maximisation
    from the grid argmax, and returns f = g_bar - g."""
    grid_best, grid_point = _grid_maximum(scenario)
    if not np.isfinite(grid_best):
        raise InvalidInputError("the profit is not bounded above on the domain box")

    bounds = [(0.0, u) for u in scenario.upper]
    result = optimize.minimize(lambda x: -float(scenario.profit(x)), grid_point,
                               jac=lambda x: -scenario.profit_gradient(x),
                               method="L-BFGS-B", bounds=bounds)
    g_bar, argmax = grid_best, grid_point
    if np.isfinite(result.fun) and -result.fun > grid_best:
        g_bar, argmax = float(-result.fun), np.asarray(result.x, dtype=float)
    logger.info(f"entrepreneur g_bar={g_bar:.12g} at {argmax.tolist()} (grid max {grid_best:.12g})")
    return EntrepreneurObjective(scenario, g_bar, argmax)


def build_objective(spec: Dict[str, Any]) -> Objective:
    kind = spec.get("kind")
    params = dict(spec.get("params") or {})
    box: Dict[str, Any] = {}
    if spec.get("lower") is not None:
        box = {"lower": spec["lower"], "upper": spec["upper"]}
    dimension = len(spec["lower"]) if spec.get("lower") is not None else int(params.pop("dimension", 1))
    if kind == "quadratic":
        return Quadratic(dimension, **params, **box)
    if kind == "abs":
        return AbsoluteValue(dimension, **params, **box)
    if kind == "double_well":
        return DoubleWell(dimension, **params, **box)
    if kind == "l1_quadratic":
        return L1Quadratic(dimension, **params, **box)
    if kind == "entrepreneur":
        scenario = EntrepreneurScenario(
            h_plus=tuple(params["h_plus"]), h_minus=tuple(params["h_minus"]),
            wages=tuple(params["wages"]), price=float(params["price"]),
            upper=tuple(spec["upper"]), demand_slope=float(params.get("demand_slope", 0.0)),
            grid_resolution=int(params.get("grid_resolution", 0)))
        return build_entrepreneur(scenario)
    raise InvalidInputError(
        f"unknown objective kind {kind!r}; allowed: quadratic, abs, double_well, l1_quadratic, entrepreneur")
