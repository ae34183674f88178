from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import numpy.typing as npt
from scipy import optimize

from worthwhile.objectives import Objective, critical_residual
from worthwhile.quasi_metric import QuasiDistance
from worthwhile.resistance import ResistanceCurve
from worthwhile.utils import (TAIL_WINDOW, ConfigurationError, InvalidInputError, Point,
                              StepFailure, as_point, logger, scaled_tol)


Array = npt.NDArray[np.float64]

MACHINE_EPS = float(np.finfo(float).eps)
RANDOM_SCAN_SIZE = 20000  # coarse scan size when the box is too high-dimensional to grid


class Regime(Enum):
    EXACT = "exact"
    EPS_INEXACT = "eps_inexact"
    ALGORITHM1 = "algorithm1"
    ALGORITHM2 = "algorithm2"


class Status(Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max-iters"
    STEP_FAILURE = "step-failure"


class TieBreak(Enum):
    """which element of the quasi-distance subdifferential v is taken where y_j = x_j."""
    ZERO = "zero"
    ALIGNED = "aligned"  # the interval endpoint matching the sign of -w


@dataclass(frozen=True)
class LambdaSchedule:
    """rule producing lambda_k: `constant` uses values[0], `periodic` cycles through values,
    `random` draws uniformly from [lambda_lo, lambda_hi] with a per-k seeded generator."""
    kind: str = "constant"
    values: Tuple[float, ...] = (1.0,)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "periodic", "random"):
            raise InvalidInputError(f"unknown lambda schedule {self.kind!r}")
        if self.kind != "random" and (not self.values or any(v <= 0 for v in self.values)):
            raise InvalidInputError("lambda schedule values must be positive")

    def at(self, k: int, lo: float, hi: float) -> float:
        if self.kind == "constant":
            return float(self.values[0])
        if self.kind == "periodic":
            return float(self.values[k % len(self.values)])
        return float(np.random.default_rng((self.seed, k)).uniform(lo, hi))


@dataclass(frozen=True)
class EpsilonSchedule:
    """rule producing epsilon_k >= 0: constant eps0, geometric eps0*ratio**k, or summable eps0/(k+1)**2."""
    kind: str = "constant"
    eps0: float = 0.0
    ratio: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "geometric", "summable"):
            raise InvalidInputError(f"unknown epsilon schedule {self.kind!r}")
        if self.eps0 < 0:
            raise InvalidInputError("eps0 must be nonnegative")
        if not 0 < self.ratio < 1:
            raise InvalidInputError("ratio must lie in (0, 1)")

    def at(self, k: int) -> float:
        if self.kind == "constant":
            return self.eps0
        if self.kind == "geometric":
            return self.eps0 * self.ratio ** k
        return self.eps0 / (k + 1) ** 2


@dataclass(frozen=True)
class InnerSettings:
    grid_resolution: int = 2001  # points of the 1-D coarse grid
    grid_resolution_nd: int = 201  # points per axis for 2-D and 3-D boxes
    grid_points_cap: int = 2_000_000
    retries: int = 3  # refinement levels after the coarse scan
    max_sweeps: int = 200
    subgradient_iters: int = 500
    seed: int = 0

    def __post_init__(self) -> None:
        if self.grid_resolution < 2 or self.grid_resolution_nd < 2:
            raise InvalidInputError("grid resolutions must be at least 2")
        if self.retries < 1:
            raise InvalidInputError("at least one refinement level is needed")
        if self.max_sweeps < 1 or self.subgradient_iters < 1:
            raise InvalidInputError("max_sweeps and subgradient_iters must be positive")


@dataclass(frozen=True)
class SolverConfig:
    lambda_lo: float = 1.0
    lambda_hi: float = 1.0
    lambda_schedule: LambdaSchedule = LambdaSchedule()
    sigma: float = 0.0
    b: float = 2.0
    epsilon_schedule: EpsilonSchedule = EpsilonSchedule()
    max_iters: int = 10000
    step_tol: float = 1e-6
    residual_tol: float = 1e-6
    inner: InnerSettings = InnerSettings()

    def __post_init__(self) -> None:
        if not 0 < self.lambda_lo <= self.lambda_hi < np.inf:
            raise InvalidInputError("need 0 < lambda_lo <= lambda_hi < inf")
        if not 0 <= self.sigma < 1:
            raise InvalidInputError("sigma must lie in [0, 1)")
        if self.b <= 0:
            raise InvalidInputError("b must be positive")
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be positive")
        if self.step_tol < 0 or self.residual_tol < 0:
            raise InvalidInputError("tolerances must be nonnegative")
        if self.lambda_schedule.kind != "random":
            for v in self.lambda_schedule.values:
                if not self.lambda_lo <= v <= self.lambda_hi:
                    raise InvalidInputError(
                        f"lambda value {v} lies outside [{self.lambda_lo}, {self.lambda_hi}]")

    def lambda_at(self, k: int) -> float:
        return self.lambda_schedule.at(k, self.lambda_lo, self.lambda_hi)

    def epsilon_at(self, k: int) -> float:
        return self.epsilon_schedule.at(k)


@dataclass(frozen=True, eq=False)
class IterationRecord:
    k: int
    x_k: Point
    x_next: Point
    f_k: float
    f_next: float
    lambda_k: float
    q_step: float
    gamma_step: float
    w_norm: float
    v_norm: float
    descent_ok: bool
    stop_rule_ok: bool
    global_slack: float  # P(x_next) - certified reference minimum; nan where not computed
    epsilon_k: float = 0.0
    level: int = 0  # 0 = coarse scan, higher = more refined inner solve
    v_tie: TieBreak = TieBreak.ZERO

    @property
    def is_stay(self) -> bool:
        return self.q_step == 0.0


@dataclass
class Trace:
    regime: Regime
    x0: Point
    records: List[IterationRecord] = field(default_factory=list)
    status: Status = Status.MAX_ITERS
    final_point: Optional[Point] = None
    final_residual: float = float("nan")
    box_certified: bool = True
    failure: Dict[str, Any] = field(default_factory=dict)

    @property
    def f_values(self) -> Array:
        if not self.records:
            return np.array([])
        return np.array([r.f_k for r in self.records] + [self.records[-1].f_next])

    @property
    def q_steps(self) -> Array:
        return np.array([r.q_step for r in self.records])

    @property
    def lambdas(self) -> Array:
        return np.array([r.lambda_k for r in self.records])

    @property
    def sum_gamma(self) -> float:
        return float(sum(r.gamma_step for r in self.records))

    def is_monotone(self, tol: float = 1e-12) -> bool:
        return all(r.f_next <= r.f_k + scaled_tol(r.f_k, tol) for r in self.records)

    def summability_slack(self, lambda_lo: float, sigma: float, f_star: float) -> float:
        """(f(x0) - f*) / (lambda_lo (1 - sigma)) - sum Gamma[q_step]; nonnegative when the
        telescoped descent inequality holds."""
        if not self.records:
            return 0.0
        bound = (self.records[0].f_k - f_star) / (lambda_lo * (1.0 - sigma))
        return float(bound - self.sum_gamma)


@dataclass(frozen=True, eq=False)
class Candidate:
    level: int
    point: Point
    value: float


@dataclass(frozen=True, eq=False)
class SubproblemResult:
    point: Point
    value: float
    grid_min: float  # minimum of P over the coarse scan and the stay point x_k
    certified_slack: float  # grid_min - value
    candidates: Tuple[Candidate, ...]
    box_certified: bool

    @property
    def reference(self) -> float:
        return min(self.grid_min, min(c.value for c in self.candidates))


@dataclass(frozen=True, eq=False)
class ScanGrid:
    lower: Point
    upper: Point
    points: Array
    cell: Point
    certified: bool  # False when the scan is random rather than a full grid


def build_scan_grid(lower: Point, upper: Point, inner: InnerSettings) -> ScanGrid:
    n = lower.shape[0]
    if n == 1:
        axis = np.linspace(lower[0], upper[0], inner.grid_resolution)
        return ScanGrid(lower, upper, axis[:, None], (upper - lower) / (inner.grid_resolution - 1), True)
    per_axis = min(inner.grid_resolution_nd, int(inner.grid_points_cap ** (1.0 / n)))
    if n <= 3 and per_axis >= 2:
        axes = [np.linspace(lo, hi, per_axis) for lo, hi in zip(lower, upper)]
        points = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        return ScanGrid(lower, upper, points, (upper - lower) / (per_axis - 1), True)
    rng = np.random.default_rng(inner.seed)
    points = rng.uniform(lower, upper, size=(min(RANDOM_SCAN_SIZE, inner.grid_points_cap), n))
    return ScanGrid(lower, upper, points, (upper - lower) / 10.0, False)


def _domain_box(f: Objective) -> Tuple[Point, Point]:
    if f.lower is None or f.upper is None:
        raise ConfigurationError(["objective: a domain box (lower/upper) is required by the inner solver"])
    return f.lower, f.upper


class ProximalSubproblem:
    """the proximal payoff P(y) = f(y) + lam * Gamma[q(x_k, y)] over the domain box."""

    def __init__(self, f: Objective, q: QuasiDistance, gamma: ResistanceCurve, lam: float,
                 x_k: Point, inner: InnerSettings, grid: Optional[ScanGrid] = None) -> None:
        if lam <= 0:
            raise InvalidInputError("lambda must be positive")
        self.lower, self.upper = _domain_box(f)
        self.f, self.q, self.gamma, self.lam = f, q, gamma, float(lam)
        self.x_k = as_point(x_k, f.dimension)
        self.inner = inner
        self.grid = grid if grid is not None else build_scan_grid(self.lower, self.upper, inner)

    def payoff(self, y: Any) -> Any:
        arr = np.asarray(y, dtype=float)
        with np.errstate(invalid="ignore", over="ignore"):
            return self.f.value(arr) + self.lam * np.asarray(self.gamma.value(self.q.evaluate(self.x_k, arr)))

    def slope(self, y: Point) -> Point:
        """w + lam * Gamma'[q] * v at y, the derivative of P where it exists."""
        w = self.f.subgradient_element(y)
        v = self.q.subgradient_second(self.x_k, y)
        return w + self.lam * float(self.gamma.derivative(float(self.q.evaluate(self.x_k, y)))) * v

    def _scan(self) -> Tuple[Candidate, float]:
        values = np.asarray(self.payoff(self.grid.points))
        values = np.where(np.isnan(values), np.inf, values)
        i = int(np.argmin(values))
        stay_value = float(self.payoff(self.x_k))
        grid_min = min(float(values[i]), stay_value)
        if stay_value <= values[i]:
            return Candidate(0, self.x_k.copy(), stay_value), grid_min
        return Candidate(0, self.grid.points[i].copy(), float(values[i])), grid_min

    def _line_values(self, y: Point, j: int, ts: List[float]) -> List[float]:
        trial = np.repeat(y[None, :], len(ts), axis=0)
        trial[:, j] = ts
        return [float(v) for v in np.atleast_1d(self.payoff(trial))]

    def _line_minimize(self, y: Point, j: int, half: float, xatol: float) -> float:
        lo_b, hi_b = float(self.lower[j]), float(self.upper[j])

        def line(t: float) -> float:
            z = y.copy()
            z[j] = t
            return float(self.payoff(z))

        center = float(y[j])
        while True:
            a, b = max(lo_b, center - half), min(hi_b, center + half)
            if b <= a:
                return center
            t = float(optimize.minimize_scalar(line, bounds=(a, b), method="bounded",
                                               options={"xatol": xatol}).x)
            edge = 10.0 * (xatol + 1.5e-8 * abs(t))
            hit_wall = (t - a <= edge and a > lo_b) or (b - t <= edge and b < hi_b)
            if not hit_wall or half >= hi_b - lo_b:
                return t
            center, half = t, 2.0 * half

    def _polish(self, y: Point, j: int, t: float) -> Optional[float]:
        h = 1e-6 * (1.0 + abs(t))
        a, b = max(float(self.lower[j]), t - h), min(float(self.upper[j]), t + h)

        def slope_j(s: float) -> float:
            z = y.copy()
            z[j] = s
            return float(self.slope(z)[j])

        try:
            da, db = slope_j(a), slope_j(b)
        except InvalidInputError:
            return None
        if not (da < 0 < db):
            return None
        try:
            return float(optimize.brentq(slope_j, a, b, xtol=1e-16, rtol=4 * MACHINE_EPS,
                                         maxiter=200))
        except (RuntimeError, InvalidInputError):
            return None

    def _coordinate_refine(self, start: Point, xatol: float, polish: bool) -> Point:
        y = start.copy()
        kinks = self.f.kinks
        current = float(self.payoff(y))
        for _ in range(self.inner.max_sweeps):
            previous_y, previous = y.copy(), current
            for j in range(y.shape[0]):
                t = self._line_minimize(y, j, float(self.grid.cell[j]), xatol)
                # candidates in order of preference: structural anchors, polished root, line minimum, current
                anchors = [float(self.x_k[j])] + [float(a) for a in kinks[j]]
                anchors = [a for a in anchors if self.lower[j] <= a <= self.upper[j]]
                ranked = anchors[:]
                if polish:
                    root = self._polish(y, j, t)
                    if root is not None:
                        ranked.append(root)
                ranked += [t, float(y[j])]
                values = self._line_values(y, j, ranked)
                best = min(values)
                slack = 8.0 * MACHINE_EPS * max(1.0, abs(best))
                y[j] = next(tv for tv, v in zip(ranked, values) if v <= best + slack)
            current = float(self.payoff(y))
            if np.max(np.abs(y - previous_y)) <= xatol or current >= previous:
                break
        return y

    def _subgradient_refine(self, start: Point, xatol: float) -> Point:
        y, best_y = start.copy(), start.copy()
        best = float(self.payoff(y))
        radius = float(np.max(self.grid.cell))
        for i in range(self.inner.subgradient_iters):
            g = self.slope(y)
            norm = float(np.linalg.norm(g))
            if norm == 0.0:
                break
            step = radius / (i + 1)
            if step < xatol:
                break
            y = np.clip(y - step * g / norm, self.lower, self.upper)
            value = float(self.payoff(y))
            if value < best:
                best, best_y = value, y.copy()
        return best_y

    def solve(self) -> SubproblemResult:
        coarse, grid_min = self._scan()
        candidates = [coarse]
        point = coarse.point
        retries = self.inner.retries
        for level in range(1, retries + 1):
            xatol = max(10.0 ** (-4 * level), 1e-12)
            if self.f.dimension <= 3:
                refined = self._coordinate_refine(point, xatol, polish=(level == retries))
            else:
                refined = self._subgradient_refine(point, xatol)
            value = float(self.payoff(refined))
            if value > candidates[-1].value + 8.0 * MACHINE_EPS * max(1.0, abs(value)):
                refined, value = point, candidates[-1].value
            candidates.append(Candidate(level, refined, value))
            point = refined
        final = candidates[-1]
        return SubproblemResult(point=final.point, value=final.value, grid_min=grid_min,
                                certified_slack=grid_min - final.value,
                                candidates=tuple(candidates), box_certified=self.grid.certified)


def prox_subproblem_min(f: Objective, q: QuasiDistance, gamma: ResistanceCurve, lam: float,
                        x_k: Any, inner: InnerSettings = InnerSettings(),
                        grid: Optional[ScanGrid] = None) -> SubproblemResult:
    """approximately minimises P(y) = f(y) + lam * Gamma[q(x_k, y)] by a coarse scan of the
    domain box followed by increasingly tight coordinate-wise line refinements."""
    return ProximalSubproblem(f, q, gamma, lam, x_k, inner, grid).solve()


def evaluate_step(f: Objective, q: QuasiDistance, gamma: ResistanceCurve, lam: float,
                  x_k: Any, x_next: Any, sigma: float = 0.0, b: float = 1.0,
                  residual_tol: float = 1e-6, k: int = 0, reference: Optional[float] = None,
                  epsilon: float = 0.0, level: int = 0) -> IterationRecord:
    """builds the record of the move x_k -> x_next and checks the sufficient descent condition
    f(x_k) - f(x_next) >= lam (1 - sigma) Gamma[q] and the stopping rule
    ||w|| <= b Gamma'[q] ||v||. A stay (x_next == x_k) passes the stopping rule iff ||w|| <= residual_tol.
    v is zero at tied coordinates unless only the endpoint aligned with -w meets the rule;
    `v_tie` records which one was used."""
    x_k = as_point(x_k, f.dimension)
    x_next = as_point(x_next, f.dimension)
    f_k, f_next = float(f.value(x_k)), float(f.value(x_next))
    q_step = float(q.evaluate(x_k, x_next))
    gamma_step = float(gamma.value(q_step))
    w = f.subgradient_element(x_next)
    w_norm = float(np.linalg.norm(w))
    v_norm = float(np.linalg.norm(q.subgradient_second(x_k, x_next)))
    v_tie = TieBreak.ZERO
    tol = scaled_tol(f_k)
    descent_ok = f_k - f_next >= lam * (1.0 - sigma) * gamma_step - tol
    if q_step == 0.0:
        stop_rule_ok = w_norm <= residual_tol
    else:
        slope = b * float(gamma.derivative(q_step))
        stop_rule_ok = w_norm <= slope * v_norm + tol
        if not stop_rule_ok:
            aligned = float(np.linalg.norm(q.subgradient_second(x_k, x_next, toward=-w)))
            if w_norm <= slope * aligned + tol:
                stop_rule_ok, v_norm, v_tie = True, aligned, TieBreak.ALIGNED
    slack = float("nan")
    if reference is not None:
        slack = f_next + lam * gamma_step - reference
    return IterationRecord(k=k, x_k=x_k, x_next=x_next, f_k=f_k, f_next=f_next, lambda_k=lam,
                           q_step=q_step, gamma_step=gamma_step, w_norm=w_norm, v_norm=v_norm,
                           descent_ok=bool(descent_ok), stop_rule_ok=bool(stop_rule_ok),
                           global_slack=slack, epsilon_k=epsilon, level=level, v_tie=v_tie)


def check_algorithm1(f: Objective, q: QuasiDistance, gamma: ResistanceCurve, lam: float,
                     x_k: Any, x_next: Any, sigma: float, b: float,
                     residual_tol: float = 1e-6) -> bool:
    rec = evaluate_step(f, q, gamma, lam, x_k, x_next, sigma, b, residual_tol)
    return rec.descent_ok and rec.stop_rule_ok


def global_condition_holds(record: IterationRecord, reference: float, allowance: float) -> bool:
    """P(x_k, x_next) <= reference + allowance, with reference a certified lower value of P over the box."""
    payoff = record.f_next + record.lambda_k * record.gamma_step
    return payoff <= reference + allowance + scaled_tol(record.f_k)


def check_algorithm2(f: Objective, q: QuasiDistance, gamma: ResistanceCurve, lam: float,
                     x_k: Any, x_next: Any, sigma: float, b: float, reference: float,
                     residual_tol: float = 1e-6) -> bool:
    """f(y) - f(x_next) >= lam [(1 - sigma) Gamma[q(x_k, x_next)] - Gamma[q(x_k, y)]] for every y
    whose payoff is at least `reference`, plus the stopping rule."""
    rec = evaluate_step(f, q, gamma, lam, x_k, x_next, sigma, b, residual_tol, reference=reference)
    return global_condition_holds(rec, reference, lam * sigma * rec.gamma_step) and rec.stop_rule_ok


def check_epsilon(f: Objective, q: QuasiDistance, gamma: ResistanceCurve, lam: float,
                  x_k: Any, x_next: Any, epsilon: float, reference: float) -> bool:
    """x_next is an epsilon-approximate minimiser of the payoff relative to `reference`."""
    rec = evaluate_step(f, q, gamma, lam, x_k, x_next, reference=reference, epsilon=epsilon)
    return global_condition_holds(rec, reference, epsilon)


def satisficing_set_contains(f: Objective, q: QuasiDistance, gamma: ResistanceCurve, lam: float,
                             x: Any, y: Any, epsilon: float, p_inf: float) -> bool:
    """y lies in S_{lam, eps}(x) = {y : P_lam(x, y) <= inf P_lam(x, .) + eps}."""
    x_arr = as_point(x, f.dimension)
    payoff = float(f.value(y)) + lam * float(gamma.value(q.evaluate(x_arr, as_point(y, f.dimension))))
    return payoff <= p_inf + epsilon


def _solve(f: Objective, q: QuasiDistance, gamma: ResistanceCurve, config: SolverConfig,
           x_k: Any, lam: float, grid: Optional[ScanGrid]) -> SubproblemResult:
    return prox_subproblem_min(f, q, gamma, lam, x_k, config.inner, grid)


def exact_prox_step(f: Objective, q: QuasiDistance, gamma: ResistanceCurve, config: SolverConfig,
                    x_k: Any, k: int = 0, grid: Optional[ScanGrid] = None,
                    lam: Optional[float] = None) -> IterationRecord:
    lam = config.lambda_at(k) if lam is None else lam
    result = _solve(f, q, gamma, config, x_k, lam, grid)
    return evaluate_step(f, q, gamma, lam, x_k, result.point, 0.0, config.b, config.residual_tol,
                         k, reference=result.reference, level=result.candidates[-1].level)


def epsilon_inexact_step(f: Objective, q: QuasiDistance, gamma: ResistanceCurve,
                         config: SolverConfig, x_k: Any, k: int = 0,
                         grid: Optional[ScanGrid] = None, lam: Optional[float] = None,
                         epsilon: Optional[float] = None) -> IterationRecord:
    """accepts the least refined candidate whose payoff is within epsilon_k of the certified minimum."""
    lam = config.lambda_at(k) if lam is None else lam
    epsilon = config.epsilon_at(k) if epsilon is None else epsilon
    if epsilon < 0:
        raise InvalidInputError("epsilon_k must be nonnegative")
    result = _solve(f, q, gamma, config, x_k, lam, grid)
    reference = result.reference
    for cand in result.candidates:
        rec = evaluate_step(f, q, gamma, lam, x_k, cand.point, 0.0, config.b, config.residual_tol,
                            k, reference=reference, epsilon=epsilon, level=cand.level)
        if global_condition_holds(rec, reference, epsilon):
            return rec
    raise StepFailure("no candidate is epsilon-optimal", {"k": k, "epsilon": epsilon,
                                                         "reference": reference})


def algorithm1_step(f: Objective, q: QuasiDistance, gamma: ResistanceCurve, config: SolverConfig,
                    x_k: Any, k: int = 0, grid: Optional[ScanGrid] = None,
                    lam: Optional[float] = None) -> IterationRecord:
    """accepts the least refined candidate satisfying sufficient descent and the stopping rule."""
    lam = config.lambda_at(k) if lam is None else lam
    result = _solve(f, q, gamma, config, x_k, lam, grid)
    last: Optional[IterationRecord] = None
    for cand in result.candidates:
        last = evaluate_step(f, q, gamma, lam, x_k, cand.point, config.sigma, config.b,
                             config.residual_tol, k, reference=result.reference, level=cand.level)
        if last.descent_ok and last.stop_rule_ok:
            return last
    assert last is not None
    raise StepFailure("no candidate satisfies sufficient descent and the stopping rule",
                      _diagnostics(last, config))


def algorithm2_step(f: Objective, q: QuasiDistance, gamma: ResistanceCurve, config: SolverConfig,
                    x_k: Any, k: int = 0, grid: Optional[ScanGrid] = None,
                    lam: Optional[float] = None) -> IterationRecord:
    """accepts the least refined candidate with P(x_next) <= P(y) + lam sigma Gamma[q_step] for all
    scanned y, that also satisfies the stopping rule."""
    lam = config.lambda_at(k) if lam is None else lam
    result = _solve(f, q, gamma, config, x_k, lam, grid)
    last: Optional[IterationRecord] = None
    for cand in result.candidates:
        last = evaluate_step(f, q, gamma, lam, x_k, cand.point, config.sigma, config.b,
                             config.residual_tol, k, reference=result.reference, level=cand.level)
        allowance = lam * config.sigma * last.gamma_step
        if global_condition_holds(last, result.reference, allowance) and last.stop_rule_ok:
            return last
    assert last is not None
    raise StepFailure("no candidate satisfies the global worthwhile condition and the stopping rule",
                      _diagnostics(last, config))


def _diagnostics(rec: IterationRecord, config: SolverConfig) -> Dict[str, Any]:
    return {"k": rec.k, "x_k": rec.x_k.tolist(), "candidate": rec.x_next.tolist(),
            "w_norm": rec.w_norm, "v_norm": rec.v_norm, "q_step": rec.q_step,
            "descent_ok": rec.descent_ok, "stop_rule_ok": rec.stop_rule_ok,
            "global_slack": rec.global_slack, "b": config.b, "sigma": config.sigma}


StepFunction = Callable[..., IterationRecord]

STEPS: Dict[Regime, StepFunction] = {
    Regime.EXACT: exact_prox_step,
    Regime.EPS_INEXACT: epsilon_inexact_step,
    Regime.ALGORITHM1: algorithm1_step,
    Regime.ALGORITHM2: algorithm2_step,
}


def run(regime: Regime, f: Objective, q: QuasiDistance, gamma: ResistanceCurve,
        config: SolverConfig, x0: Any) -> Trace:
    """iterates the regime's step from x0 until the last min(TAIL_WINDOW, k) steps all have
    q_step <= step_tol and the critical residual is <= residual_tol, max_iters steps, or a step failure."""
    lower, upper = _domain_box(f)
    x = as_point(x0, f.dimension)
    if np.any(x < lower) or np.any(x > upper):
        raise InvalidInputError("x0 must lie inside the domain box")
    if not np.isfinite(f.value(x)):
        raise InvalidInputError("x0 must lie in dom f")

    grid = build_scan_grid(lower, upper, config.inner)
    trace = Trace(regime=regime, x0=x.copy(), box_certified=grid.certified)
    step = STEPS[regime]
    logger.info(f"{regime.value} run from x0={x.tolist()} (f={float(f.value(x)):.6g})")

    for k in range(config.max_iters):
        try:
            record = step(f, q, gamma, config, x, k=k, grid=grid)
        except StepFailure as exc:
            trace.status = Status.STEP_FAILURE
            trace.failure = {"message": str(exc), **exc.diagnostics}
            logger.warning(f"step {k} failed: {exc}")
            break
        trace.records.append(record)
        logger.debug(f"k={k} f={record.f_next:.6g} q_step={record.q_step:.3g} level={record.level}")
        x = record.x_next
        tail = trace.records[-TAIL_WINDOW:]
        if (max(r.q_step for r in tail) <= config.step_tol
                and critical_residual(f, x) <= config.residual_tol):
            trace.status = Status.CONVERGED
            break

    trace.final_point = x
    trace.final_residual = critical_residual(f, x)
    logger.info(f"{regime.value} run ended: {trace.status.value} after {len(trace.records)} steps, "
                f"residual {trace.final_residual:.3g}")
    return trace


def recheck_trace(trace: Trace, f: Objective, q: QuasiDistance, gamma: ResistanceCurve,
                  config: SolverConfig, regime: Regime = Regime.ALGORITHM1) -> List[int]:
    """re-verifies every record against a regime's per-step conditions; returns failing k."""
    sigma = config.sigma if regime in (Regime.ALGORITHM1, Regime.ALGORITHM2) else 0.0
    failing = []
    for r in trace.records:
        rec = evaluate_step(f, q, gamma, r.lambda_k, r.x_k, r.x_next, sigma, config.b,
                            config.residual_tol, r.k)
        ok = rec.descent_ok
        if regime in (Regime.ALGORITHM1, Regime.ALGORITHM2):
            ok = ok and rec.stop_rule_ok
        if not ok:
            failing.append(r.k)
    return failing
