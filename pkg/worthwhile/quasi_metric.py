from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt

from worthwhile.utils import InvalidInputError, Point, PointSampler, check_dimension


ArrayOrFloat = Union[float, npt.NDArray[np.float64]]


@dataclass(frozen=True)
class NormEquivalenceBounds:
    """constants with beta1*||x-y||_2 <= q(x,y) <= beta2*||x-y||_2 for all x, y."""
    beta1: float
    beta2: float

    def __post_init__(self) -> None:
        if not 0 < self.beta1 <= self.beta2:
            raise InvalidInputError(
                f"need 0 < beta1 <= beta2, got beta1={self.beta1}, beta2={self.beta2}")

    def max_violation(self, q: "QuasiDistance", x: Point, y: Point) -> float:
        """largest amount by which sampled pairs (rows of x and y) break the sandwich; <= 0 means it holds."""
        dist = np.linalg.norm(np.asarray(y) - np.asarray(x), axis=-1)
        value = np.asarray(q.evaluate(x, y))
        below = self.beta1 * dist - value
        above = value - self.beta2 * dist
        return float(np.max(np.maximum(below, above)))


@dataclass(frozen=True)
class AxiomReport:
    samples: int
    max_triangle_violation: float
    identity_ok: bool  # q(x,x) == 0 exactly
    separation_ok: bool  # q(x,y) > 0 whenever x != y
    nonnegative_ok: bool
    tolerance: float

    @property
    def passed(self) -> bool:
        return (self.max_triangle_violation <= self.tolerance and self.identity_ok
                and self.separation_ok and self.nonnegative_ok)


class QuasiDistance(ABC):
    """an asymmetric cost-to-be-able-to-change q on R^n: q(x,y) >= 0, q(x,y) = 0 iff x = y,
    and q(x,z) <= q(x,y) + q(y,z). Instances are immutable and all methods are pure.
    Points may carry leading batch axes; the last axis holds the coordinates."""

    @property
    @abstractmethod
    def dimension(self) -> Optional[int]:
        """returns the fixed dimension n, or None if any dimension is accepted."""

    @abstractmethod
    def evaluate(self, x: Point, y: Point) -> ArrayOrFloat:
        """returns q(x,y), the cost of being able to change from x to y.
        Raises InvalidInputError on a dimension mismatch."""

    @abstractmethod
    def subgradient_second(self, x: Point, y: Point, toward: Optional[Point] = None) -> Point:
        """returns one element v of the subdifferential of y -> q(x,y) at y.
        Where that map is kinked (coordinates with y[j] == x[j]) the element 0 is returned,
        unless `toward` is given, in which case the endpoint of the subdifferential interval
        matching the sign of `toward` is selected instead."""

    @abstractmethod
    def equivalence_bounds(self) -> NormEquivalenceBounds:
        """returns constants beta1 <= beta2 sandwiching q between multiples of the Euclidean norm."""

    @abstractmethod
    def to_spec(self) -> Dict[str, Any]:
        """returns the config table describing this quasi distance."""

    def _pair(self, x: Any, y: Any) -> Tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
        x_arr = np.asarray(x, dtype=float)
        y_arr = np.asarray(y, dtype=float)
        if x_arr.ndim == 0 or y_arr.ndim == 0:
            raise InvalidInputError("points must be vectors")
        if x_arr.shape[-1] != y_arr.shape[-1]:
            raise InvalidInputError(
                f"points have different dimensions {x_arr.shape[-1]} and {y_arr.shape[-1]}")
        if self.dimension is not None:
            check_dimension(x_arr, self.dimension)
        return x_arr, y_arr


def _scalar_or_array(value: npt.NDArray[np.float64]) -> ArrayOrFloat:
    return float(value) if value.ndim == 0 else value


class AsymmetricWeightedL1(QuasiDistance):
    """hiring/firing costs: increasing coordinate j costs h_plus[j] per unit,
    decreasing it costs h_minus[j] per unit; conservation costs are zero."""

    def __init__(self, h_plus: Sequence[float], h_minus: Sequence[float]) -> None:
        h_plus_arr = np.array(h_plus, dtype=float, ndmin=1)
        h_minus_arr = np.array(h_minus, dtype=float, ndmin=1)
        if h_plus_arr.ndim != 1 or h_plus_arr.shape != h_minus_arr.shape:
            raise InvalidInputError("h_plus and h_minus must be vectors of the same length")
        if not (np.all(np.isfinite(h_plus_arr)) and np.all(np.isfinite(h_minus_arr))):
            raise InvalidInputError("hiring and firing costs must be finite")
        if np.any(h_plus_arr <= 0) or np.any(h_minus_arr <= 0):
            raise InvalidInputError("hiring and firing costs must be positive")
        h_plus_arr.setflags(write=False)
        h_minus_arr.setflags(write=False)
        self._h_plus = h_plus_arr
        self._h_minus = h_minus_arr

    @property
    def h_plus(self) -> Point:
        return self._h_plus

    @property
    def h_minus(self) -> Point:
        return self._h_minus

    @property
    def dimension(self) -> int:
        return int(self._h_plus.shape[0])

    def evaluate(self, x: Point, y: Point) -> ArrayOrFloat:
        x_arr, y_arr = self._pair(x, y)
        d = y_arr - x_arr
        costs = np.where(d > 0, self._h_plus * d, -self._h_minus * d)
        return _scalar_or_array(np.sum(costs, axis=-1))

    def subgradient_second(self, x: Point, y: Point, toward: Optional[Point] = None) -> Point:
        x_arr, y_arr = self._pair(x, y)
        d = y_arr - x_arr
        if toward is None:
            tie = np.zeros_like(d)
        else:
            t = np.broadcast_to(np.asarray(toward, dtype=float), d.shape)
            tie = np.where(t > 0, self._h_plus, np.where(t < 0, -self._h_minus, 0.0))
        return np.where(d > 0, self._h_plus, np.where(d < 0, -self._h_minus, tie))

    def equivalence_bounds(self) -> NormEquivalenceBounds:
        beta1 = float(np.min(np.minimum(self._h_plus, self._h_minus)))
        beta2 = float(np.sqrt(self.dimension) * np.max(np.maximum(self._h_plus, self._h_minus)))
        return NormEquivalenceBounds(beta1, beta2)

    def to_spec(self) -> Dict[str, Any]:
        return {"kind": "asym_l1",
                "h_plus": [float(h) for h in self._h_plus],
                "h_minus": [float(h) for h in self._h_minus]}

    def __repr__(self) -> str:
        return f"AsymmetricWeightedL1(h_plus={self._h_plus.tolist()}, h_minus={self._h_minus.tolist()})"


class ScaledEuclidean(QuasiDistance):
    """the symmetric special case q(x,y) = scale * ||x - y||_2."""

    def __init__(self, scale: float = 1.0, dimension: Optional[int] = None) -> None:
        if not np.isfinite(scale) or scale <= 0:
            raise InvalidInputError("scale must be a positive real")
        if dimension is not None and dimension < 1:
            raise InvalidInputError("dimension must be at least 1")
        self._scale = float(scale)
        self._dimension = dimension

    @property
    def scale(self) -> float:
        return self._scale

    @property
    def dimension(self) -> Optional[int]:
        return self._dimension

    def evaluate(self, x: Point, y: Point) -> ArrayOrFloat:
        x_arr, y_arr = self._pair(x, y)
        return _scalar_or_array(self._scale * np.linalg.norm(y_arr - x_arr, axis=-1))

    def subgradient_second(self, x: Point, y: Point, toward: Optional[Point] = None) -> Point:
        x_arr, y_arr = self._pair(x, y)
        d = y_arr - x_arr
        norm = np.linalg.norm(d, axis=-1, keepdims=True)
        if toward is None:
            tie = np.zeros_like(d)
        else:
            t = np.broadcast_to(np.asarray(toward, dtype=float), d.shape)
            t_norm = np.linalg.norm(t, axis=-1, keepdims=True)
            tie = np.divide(t, t_norm, out=np.zeros_like(d), where=t_norm > 0)
        unit = np.divide(d, norm, out=np.zeros_like(d), where=norm > 0)
        return self._scale * np.where(norm > 0, unit, tie)

    def equivalence_bounds(self) -> NormEquivalenceBounds:
        return NormEquivalenceBounds(self._scale, self._scale)

    def to_spec(self) -> Dict[str, Any]:
        return {"kind": "euclidean", "scale": self._scale}

    def __repr__(self) -> str:
        return f"ScaledEuclidean(scale={self._scale})"


def evaluate(q: QuasiDistance, x: Point, y: Point) -> ArrayOrFloat:
    return q.evaluate(x, y)


def subgradient_second(q: QuasiDistance, x: Point, y: Point) -> Point:
    return q.subgradient_second(x, y)


def equivalence_bounds(q: QuasiDistance) -> NormEquivalenceBounds:
    return q.equivalence_bounds()


def verify_axioms(q: QuasiDistance, sampler: PointSampler, count: int,
                  tolerance: float = 1e-12) -> AxiomReport:
    """checks the quasi-distance axioms on `count` sampled triples (x, y, z)."""
    if count < 1:
        raise InvalidInputError("count must be at least 1")
    triples = sampler(count, 3)
    x, y, z = triples[:, 0], triples[:, 1], triples[:, 2]
    q_xy = np.asarray(q.evaluate(x, y))
    q_yz = np.asarray(q.evaluate(y, z))
    q_xz = np.asarray(q.evaluate(x, z))
    q_xx = np.asarray(q.evaluate(x, x))
    distinct = np.any(x != y, axis=-1)
    return AxiomReport(
        samples=count,
        max_triangle_violation=float(np.max(q_xz - q_xy - q_yz)),
        identity_ok=bool(np.all(q_xx == 0.0)),
        separation_ok=bool(np.all(q_xy[distinct] > 0)),
        nonnegative_ok=bool(np.all(q_xy >= 0) and np.all(q_yz >= 0) and np.all(q_xz >= 0)),
        tolerance=tolerance,
    )


def asymmetry_witness(q: QuasiDistance, sampler: PointSampler,
                      count: int) -> Optional[Tuple[Point, Point]]:
    """returns a sampled pair with q(x,y) != q(y,x), or None if every sampled pair is symmetric."""
    pairs = sampler(count, 2)
    x, y = pairs[:, 0], pairs[:, 1]
    gap = np.abs(np.asarray(q.evaluate(x, y)) - np.asarray(q.evaluate(y, x)))
    idx = int(np.argmax(gap))
    if gap[idx] <= 0:
        return None
    return x[idx].copy(), y[idx].copy()


def build_quasi_distance(spec: Dict[str, Any], dimension: Optional[int] = None) -> QuasiDistance:
    kind = spec.get("kind")
    if kind == "asym_l1":
        return AsymmetricWeightedL1(spec["h_plus"], spec["h_minus"])
    if kind == "euclidean":
        return ScaledEuclidean(float(spec.get("scale", 1.0)), dimension)
    raise InvalidInputError(f"unknown quasi distance kind {kind!r}; allowed: asym_l1, euclidean")
