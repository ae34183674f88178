from dataclasses import dataclass, field
from enum import Enum
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from worthwhile.objectives import Objective
from worthwhile.prox_solver import Status, Trace
from worthwhile.quasi_metric import QuasiDistance
from worthwhile.resistance import ResistanceCurve
from worthwhile.utils import (STRICT_TOL, TAIL_WINDOW, TRAP_TOL, InvalidInputError, Point,
                              as_point, scaled_tol)


DEFAULT_RADII = (1e-4, 1e-2, 1e-1, 1.0)
DEFAULT_LAMBDA_FACTOR = 1.1


@dataclass(frozen=True)
class WorthwhileResult:
    worthwhile: bool
    margin: float  # f(x) - f(y) - lam * Gamma[q(x, y)]


class TrapKind(Enum):
    STRONG = "strong"
    WEAK = "weak"
    REFUTED = "refuted"


@dataclass(frozen=True, eq=False)
class TrapCertificate:
    """sampled evidence (not proof) about x* at rate lambda_star. worst_violation is the max over
    samples of f(x*) - f(y) - lambda_star * Gamma[q(x*, y)]."""
    point: Point
    lambda_star: float
    kind: TrapKind
    samples: int
    worst_violation: float
    tolerance: float
    witness: Optional[Point] = None  # the maximising sample; a worthwhile move when refuted


class Habituation(Enum):
    HABITUATING = "habituating"
    OSCILLATING = "oscillating"
    STALLED = "stalled"


@dataclass(frozen=True)
class HabituationProfile:
    q_steps: Tuple[float, ...]
    classification: Habituation
    tail_max: float
    monotone_f: bool


@dataclass(frozen=True)
class MarginalStopReport:
    samples: int
    worthwhile_moves: int
    best_margin: float

    @property
    def passed(self) -> bool:
        return self.worthwhile_moves == 0


@dataclass(frozen=True, eq=False)
class VariationalTrapReport:
    path_ok: bool
    failing_steps: List[int]
    certificate: TrapCertificate
    converged: bool
    notes: List[str] = field(default_factory=list)


def is_worthwhile_change(f: Objective, q: QuasiDistance, gamma: ResistanceCurve, lam: float,
                         x: Any, y: Any) -> WorthwhileResult:
    """moving from x to y is worthwhile at rate lam iff f(x) - f(y) >= lam * Gamma[q(x, y)]."""
    if lam <= 0:
        raise InvalidInputError("lambda must be positive")
    x_arr = as_point(x, f.dimension)
    y_arr = as_point(y, f.dimension)
    f_x = float(f.value(x_arr))
    margin = f_x - float(f.value(y_arr)) - lam * float(gamma.value(q.evaluate(x_arr, y_arr)))
    return WorthwhileResult(margin >= -scaled_tol(f_x, STRICT_TOL), margin)


def trap_samples(x_star: Any, lower: Sequence[float], upper: Sequence[float], count: int,
                 rng: np.random.Generator, radii: Sequence[float] = DEFAULT_RADII) -> Point:
    """half of the samples uniform on the box, the rest split over Euclidean shells around x*,
    the innermost shells taking one extra sample each when the split is uneven."""
    if count < 1:
        raise InvalidInputError("count must be positive")
    if not radii:
        raise InvalidInputError("at least one shell radius is needed")
    centre = np.asarray(x_star, dtype=float)
    n = centre.shape[0]
    n_box = count // 2
    box = rng.uniform(np.asarray(lower, dtype=float), np.asarray(upper, dtype=float), size=(n_box, n))
    shells = [box]
    per_shell, extra = divmod(count - n_box, len(radii))
    for i, radius in enumerate(sorted(radii)):
        directions = rng.standard_normal((per_shell + (i < extra), n))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        shells.append(centre + radius * directions)
    samples = np.concatenate(shells, axis=0)
    return samples[np.any(samples != centre, axis=1)]


def certify_trap(f: Objective, q: QuasiDistance, gamma: ResistanceCurve, lambda_star: float,
                 x_star: Any, samples: Point) -> TrapCertificate:
    """classifies x* as a strong trap (every sampled move strictly not worthwhile), a weak trap
    (no sampled move worthwhile beyond tolerance) or refuted (a worthwhile witness exists)."""
    if lambda_star <= 0:
        raise InvalidInputError("lambda_star must be positive")
    x = as_point(x_star, f.dimension)
    ys = np.asarray(samples, dtype=float).reshape(-1, f.dimension)
    ys = ys[np.any(ys != x, axis=1)]
    if ys.shape[0] == 0:
        raise InvalidInputError("no samples distinct from x_star")
    f_star = float(f.value(x))
    with np.errstate(invalid="ignore"):
        violation = f_star - np.asarray(f.value(ys)) - lambda_star * np.asarray(gamma.value(q.evaluate(x, ys)))
    violation = np.where(np.isnan(violation), -np.inf, violation)
    # argmax keeps the first index on ties
    i = int(np.argmax(violation))
    worst = float(violation[i])
    tol = scaled_tol(f_star, TRAP_TOL)
    if worst < -tol:
        kind = TrapKind.STRONG
    elif worst <= tol:
        kind = TrapKind.WEAK
    else:
        kind = TrapKind.REFUTED
    return TrapCertificate(point=x, lambda_star=float(lambda_star), kind=kind,
                           samples=int(ys.shape[0]), worst_violation=worst, tolerance=tol,
                           witness=ys[i].copy())


def lambda_infinity(trace: Trace, window: int = TAIL_WINDOW) -> float:
    """estimates the limit of lambda_k as the mean over the last `window` records."""
    if not trace.records:
        raise InvalidInputError("the trace has no records")
    return float(np.mean(trace.lambdas[-window:]))


def certify_ladder(f: Objective, q: QuasiDistance, gamma: ResistanceCurve, trace: Trace,
                   samples: Point,
                   factor: float = DEFAULT_LAMBDA_FACTOR) -> Tuple[TrapCertificate, TrapCertificate]:
    """certificates at lambda_infinity and at factor * lambda_infinity over the same samples."""
    assert trace.final_point is not None
    lam_inf = lambda_infinity(trace)
    return (certify_trap(f, q, gamma, lam_inf, trace.final_point, samples),
            certify_trap(f, q, gamma, factor * lam_inf, trace.final_point, samples))


def habituation_profile(trace: Trace, step_tol: float,
                        window: int = TAIL_WINDOW) -> HabituationProfile:
    """habituating: every q_step in the tail is at most step_tol.
    oscillating: the tail does not decay (its minimum is at least half its maximum).
    stalled: the tail decays but has not reached step_tol."""
    if not trace.records:
        raise InvalidInputError("the trace has no records")
    q_steps = trace.q_steps
    tail = q_steps[-window:]
    tail_max = float(np.max(tail))
    if tail_max <= step_tol:
        kind = Habituation.HABITUATING
    elif float(np.min(tail)) >= 0.5 * tail_max:
        kind = Habituation.OSCILLATING
    else:
        kind = Habituation.STALLED
    return HabituationProfile(q_steps=tuple(float(s) for s in q_steps), classification=kind,
                              tail_max=tail_max, monotone_f=trace.is_monotone())


def marginal_stop_check(f: Objective, q: QuasiDistance, gamma: ResistanceCurve, lam: float,
                        x_next: Any, radius: float, count: int,
                        rng: np.random.Generator) -> MarginalStopReport:
    """the "not worthwhile marginal change" rule: no sampled z within `radius` of x_next is a
    worthwhile change from x_next at rate lam."""
    x = as_point(x_next, f.dimension)
    directions = rng.standard_normal((count, f.dimension))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    zs = x + radius * rng.uniform(0.0, 1.0, size=(count, 1)) * directions
    f_x = float(f.value(x))
    with np.errstate(invalid="ignore"):
        margins = f_x - np.asarray(f.value(zs)) - lam * np.asarray(gamma.value(q.evaluate(x, zs)))
    margins = np.where(np.isnan(margins), -np.inf, margins)
    worthwhile = margins >= -scaled_tol(f_x, STRICT_TOL)
    return MarginalStopReport(samples=count, worthwhile_moves=int(np.count_nonzero(worthwhile)),
                              best_margin=float(np.max(margins)))


def variational_trap_report(trace: Trace, f: Objective, q: QuasiDistance, gamma: ResistanceCurve,
                            lambda_star: float, samples: Point,
                            sigma: float = 0.0) -> VariationalTrapReport:
    """path condition: every recorded step was worthwhile at rate lambda_k (1 - sigma);
    endpoint condition: a trap certificate at the final point."""
    if trace.final_point is None:
        raise InvalidInputError("the trace has no final point")
    failing = [r.k for r in trace.records
               if not is_worthwhile_change(f, q, gamma, r.lambda_k * (1.0 - sigma), r.x_k, r.x_next).worthwhile]
    certificate = certify_trap(f, q, gamma, lambda_star, trace.final_point, samples)
    notes = []
    if trace.status != Status.CONVERGED:
        notes.append(f"run ended with status {trace.status.value}; the endpoint is not a limit point")
    if all(r.is_stay for r in trace.records):
        notes.append("the path consists of stays only")
    return VariationalTrapReport(path_ok=not failing, failing_steps=failing, certificate=certificate,
                                 converged=trace.status == Status.CONVERGED, notes=notes)
