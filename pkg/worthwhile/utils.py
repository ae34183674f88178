import logging
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import numpy.typing as npt


STRICT_TOL = 1e-12  # additive slack for the per-step inequality checks, scaled by 1+|f|
TRAP_TOL = 1e-10  # strict-vs-weak gap for trap certificates, scaled by 1+|f(x*)|
TAIL_WINDOW = 10  # iterations used for habituation tails and the lambda_infinity estimate

Point = npt.NDArray[np.float64]

# draws `count` tuples of `k` points, returned with shape (count, k, n)
PointSampler = Callable[[int, int], Point]

logger = logging.getLogger("worthwhile")


class InvalidInputError(ValueError):
    """raised when an operation receives arguments outside its documented domain."""


class EmptySubgradientError(InvalidInputError):
    """raised when a subgradient element is requested at a point outside dom f."""


class ConfigurationError(ValueError):
    """carries every validation problem found, each prefixed by its key path (or line/column)."""

    def __init__(self, errors: Sequence[str]) -> None:
        self.errors: List[str] = list(errors)
        super().__init__("; ".join(self.errors))


class StepFailure(Exception):
    """raised by a single solver step when no candidate satisfies the regime's conditions."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.diagnostics: Dict[str, Any] = dict(diagnostics or {})


def as_point(x: Any, dimension: Optional[int] = None) -> Point:
    """returns x as a 1-D float array, checking finiteness and (optionally) its dimension."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise InvalidInputError(f"a point must be a vector, got shape {arr.shape}")
    if dimension is not None and arr.shape[0] != dimension:
        raise InvalidInputError(f"expected a point of dimension {dimension}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("point coordinates must be finite")
    return arr


def check_dimension(arr: npt.NDArray[np.float64], dimension: int, name: str = "point") -> None:
    if arr.shape[-1] != dimension:
        raise InvalidInputError(
            f"{name} has dimension {arr.shape[-1]} but {dimension} was expected")


def scaled_tol(scale: float, tol: float = STRICT_TOL) -> float:
    return tol * (1.0 + abs(float(scale)))


def box_sampler(lower: Sequence[float], upper: Sequence[float],
                rng: np.random.Generator) -> PointSampler:
    """returns a sampler of uniform points in the box [lower, upper]."""
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    if lo.shape != hi.shape or np.any(hi < lo):
        raise InvalidInputError("box bounds must have equal shape and lower <= upper")

    def sample(count: int, k: int) -> Point:
        return rng.uniform(lo, hi, size=(count, k, lo.shape[0]))

    return sample


def format_float(value: float) -> str:
    """shortest round-tripping text for a float, so artifacts are byte-stable across runs."""
    return repr(float(value))
