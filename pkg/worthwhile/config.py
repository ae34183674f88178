"""Scenario files.

A scenario is a YAML mapping:

    name: double_well            # optional label, used for output folders
    seed: 0                      # drives every sampler and random lambda schedule
    regime: algorithm2           # exact | eps_inexact | algorithm1 | algorithm2
    x0: [0.2]
    output_dir: out/double_well
    objective:
      kind: double_well          # quadratic | abs | double_well | l1_quadratic | entrepreneur
      lower: [-2.0]
      upper: [2.0]
      params: {well: 1.0}
    quasi_distance: {kind: asym_l1, h_plus: [2.0], h_minus: [1.0]}   # or {kind: euclidean, scale: 1.0}
    gamma: {kind: power, alpha: 2.0, q_bar: 1.0, r: 0.5}
    solver:
      lambda_lo: 0.3
      lambda_hi: 0.3
      lambda_schedule: {kind: constant, values: [0.3]}   # constant | periodic | random
      sigma: 0.0
      b: 2.0
      epsilon_schedule: {kind: constant, eps0: 0.0, ratio: 0.5}   # constant | geometric | summable
      max_iters: 10000
      step_tol: 1.0e-6
      residual_tol: 1.0e-6
      inner: {grid_resolution: 2001, grid_resolution_nd: 201, retries: 3, max_sweeps: 200}
    certification:
      samples: 10000
      radii: [1.0e-4, 1.0e-2, 0.1, 1.0]
      lambda_factor: 1.1
      kl: {theta: 0.5, c: 1.0, eta: 1.0, x_bar: [0.0]}   # optional
    sweep:                        # optional; the cross product of the non-empty axes
      alpha: [1.5, 2.0]
      sigma: []
      lambda: []
      x0: [[-0.2], [0.2]]
      cap: 64

Every section except objective and x0 has defaults. The entrepreneur objective takes its
box from `upper` (lower is fixed at zero) and, when quasi_distance is omitted, uses its own
hiring/firing costs.
"""
import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import yaml

from worthwhile.objectives import EntrepreneurObjective, EntrepreneurScenario, KLDescriptor, Objective, build_objective
from worthwhile.prox_solver import (EpsilonSchedule, InnerSettings, LambdaSchedule, Regime,
                                    SolverConfig)
from worthwhile.quasi_metric import QuasiDistance, build_quasi_distance
from worthwhile.resistance import ResistanceCurve, build_curve
from worthwhile.traps import DEFAULT_LAMBDA_FACTOR, DEFAULT_RADII
from worthwhile.utils import ConfigurationError, InvalidInputError


OBJECTIVE_PARAMS: Dict[str, Tuple[str, ...]] = {
    "quadratic": ("weight", "center"),
    "abs": ("weight", "center"),
    "double_well": ("well",),
    "l1_quadratic": ("mu", "center"),
    "entrepreneur": ("h_plus", "h_minus", "wages", "price", "demand_slope", "grid_resolution"),
}
DEFAULT_SWEEP_CAP = 64


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: str
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return len(self.upper)


@dataclass(frozen=True)
class QuasiDistanceSpec:
    kind: str = "euclidean"
    h_plus: Tuple[float, ...] = ()
    h_minus: Tuple[float, ...] = ()
    scale: float = 1.0


@dataclass(frozen=True)
class GammaSpec:
    kind: str = "power"
    alpha: float = 2.0
    q_bar: float = 1.0
    r: float = 0.5


@dataclass(frozen=True)
class KLSpec:
    theta: float
    c: float
    eta: float
    x_bar: Optional[Tuple[float, ...]] = None


@dataclass(frozen=True)
class CertificationSpec:
    samples: int = 10000
    radii: Tuple[float, ...] = DEFAULT_RADII
    lambda_factor: float = DEFAULT_LAMBDA_FACTOR
    kl: Optional[KLSpec] = None


@dataclass(frozen=True)
class SweepSpec:
    alpha: Tuple[float, ...] = ()
    sigma: Tuple[float, ...] = ()
    lam: Tuple[float, ...] = ()
    x0: Tuple[Tuple[float, ...], ...] = ()
    cap: int = DEFAULT_SWEEP_CAP

    @property
    def size(self) -> int:
        return math.prod(max(1, len(axis)) for axis in (self.alpha, self.sigma, self.lam, self.x0))


@dataclass(frozen=True)
class ScenarioConfig:
    objective: ObjectiveSpec
    x0: Tuple[float, ...]
    quasi_distance: Optional[QuasiDistanceSpec] = None
    gamma: GammaSpec = GammaSpec()
    solver: SolverConfig = SolverConfig()
    regime: Regime = Regime.ALGORITHM2
    output_dir: str = "out"
    seed: int = 0
    name: str = "scenario"
    certification: CertificationSpec = CertificationSpec()
    sweep: Optional[SweepSpec] = None


class _Reader:
    """pulls typed values out of nested tables, recording every problem with its key path."""

    def __init__(self) -> None:
        self.errors: List[str] = []

    def table(self, parent: Dict[str, Any], key: str, path: str, required: bool = False) -> Dict[str, Any]:
        value = parent.get(key)
        if value is None:
            if required:
                self.errors.append(f"{path}: missing required table")
            return {}
        if not isinstance(value, dict):
            self.errors.append(f"{path}: expected a table")
            return {}
        return value

    def number(self, table: Dict[str, Any], key: str, path: str, default: Any = None,
               check: Optional[Callable[[float], bool]] = None, message: str = "") -> Any:
        value = table.get(key, default)
        if value is None:
            self.errors.append(f"{path}: missing required number")
            return default
        try:
            # YAML 1.1 reads 1e-6 (no dot) as a string
            number = float(value) if not isinstance(value, bool) else math.nan
        except (TypeError, ValueError):
            self.errors.append(f"{path}: expected a number, got {value!r}")
            return default
        if not math.isfinite(number):
            self.errors.append(f"{path}: expected a finite number, got {value!r}")
            return default
        if check is not None and not check(number):
            self.errors.append(f"{path}: {message}")
        return number

    def integer(self, table: Dict[str, Any], key: str, path: str, default: Any = None,
                minimum: int = 0) -> Any:
        value = table.get(key, default)
        if isinstance(value, bool) or not isinstance(value, int):
            self.errors.append(f"{path}: expected an integer, got {value!r}")
            return default
        if value < minimum:
            self.errors.append(f"{path}: must be at least {minimum}")
        return value

    def vector(self, table: Dict[str, Any], key: str, path: str, default: Any = None,
               required: bool = True) -> Optional[Tuple[float, ...]]:
        value = table.get(key, default)
        if value is None:
            if required:
                self.errors.append(f"{path}: missing required list of numbers")
            return None
        if not isinstance(value, (list, tuple)) or not value:
            self.errors.append(f"{path}: expected a non-empty list of numbers")
            return None
        out = []
        for i, item in enumerate(value):
            number = self.number({"v": item}, "v", f"{path}[{i}]")
            if number is None:
                return None
            out.append(number)
        return tuple(out)

    def choice(self, table: Dict[str, Any], key: str, path: str, allowed: Tuple[str, ...],
               default: Optional[str] = None) -> Optional[str]:
        value = table.get(key, default)
        if value not in allowed:
            self.errors.append(f"{path}: unknown value {value!r}; allowed: {', '.join(allowed)}")
            return None
        return str(value)

    def attempt(self, path: str, build: Callable[[], Any]) -> Any:
        try:
            return build()
        except (InvalidInputError, TypeError, ValueError, KeyError) as exc:
            self.errors.append(f"{path}: {exc}")
            return None


def _load(text: str) -> Dict[str, Any]:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        problem = getattr(exc, "problem", None) or str(exc)
        if mark is not None:
            raise ConfigurationError([f"line {mark.line + 1}, column {mark.column + 1}: {problem}"])
        raise ConfigurationError([f"syntax error: {problem}"])
    if not isinstance(data, dict):
        raise ConfigurationError(["the scenario must be a mapping at the top level"])
    return data


def _read_objective(r: _Reader, data: Dict[str, Any]) -> Optional[ObjectiveSpec]:
    table = r.table(data, "objective", "objective", required=True)
    if not table:
        return None
    kind = r.choice(table, "kind", "objective.kind", tuple(OBJECTIVE_PARAMS))
    params = table.get("params") or {}
    if not isinstance(params, dict):
        r.errors.append("objective.params: expected a table")
        params = {}
    if kind is not None:
        for key in sorted(params):
            if key not in OBJECTIVE_PARAMS[kind]:
                r.errors.append(f"objective.params.{key}: unknown parameter for {kind}; "
                                f"allowed: {', '.join(OBJECTIVE_PARAMS[kind])}")
    upper = r.vector(table, "upper", "objective.upper")
    if kind == "entrepreneur":
        lower = r.vector(table, "lower", "objective.lower", required=False)
        if upper is not None and lower is None:
            lower = tuple(0.0 for _ in upper)
        if lower is not None and any(v != 0.0 for v in lower):
            r.errors.append("objective.lower: the entrepreneur box starts at zero workers")
    else:
        lower = r.vector(table, "lower", "objective.lower")
    if lower is None or upper is None:
        return None
    if len(lower) != len(upper):
        r.errors.append("objective.upper: lower and upper must have the same length")
        return None
    if any(hi <= lo for lo, hi in zip(lower, upper)):
        r.errors.append("objective.upper: every upper bound must exceed its lower bound")
    spec = ObjectiveSpec(kind or "", lower, upper, dict(params))
    if kind == "entrepreneur":
        r.attempt("objective.params", lambda: _entrepreneur_scenario(spec))
    elif kind is not None:
        r.attempt("objective.params", lambda: build_objective(_objective_table(spec)))
    return spec


def _read_quasi(r: _Reader, data: Dict[str, Any], dimension: Optional[int]) -> Optional[QuasiDistanceSpec]:
    if data.get("quasi_distance") is None:
        return None
    table = r.table(data, "quasi_distance", "quasi_distance")
    kind = r.choice(table, "kind", "quasi_distance.kind", ("asym_l1", "euclidean"))
    if kind == "asym_l1":
        h_plus = r.vector(table, "h_plus", "quasi_distance.h_plus")
        h_minus = r.vector(table, "h_minus", "quasi_distance.h_minus")
        if h_plus is None or h_minus is None:
            return None
        spec = QuasiDistanceSpec("asym_l1", h_plus, h_minus)
        q = r.attempt("quasi_distance", lambda: build_quasi_distance(_quasi_table(spec)))
        if q is not None and dimension is not None and q.dimension != dimension:
            r.errors.append(f"quasi_distance.h_plus: has dimension {q.dimension}, the objective has {dimension}")
        return spec
    if kind == "euclidean":
        scale = r.number(table, "scale", "quasi_distance.scale", 1.0, lambda s: s > 0, "scale must be positive")
        return QuasiDistanceSpec("euclidean", scale=scale)
    return None


def _read_gamma(r: _Reader, data: Dict[str, Any]) -> GammaSpec:
    table = r.table(data, "gamma", "gamma")
    r.choice(table, "kind", "gamma.kind", ("power",), "power")
    alpha = r.number(table, "alpha", "gamma.alpha", 2.0, lambda a: a > 1, "alpha must exceed 1")
    q_bar = r.number(table, "q_bar", "gamma.q_bar", 1.0, lambda v: v > 0, "q_bar must be positive")
    r_value = r.number(table, "r", "gamma.r", 0.5, lambda v: 0 < v < 1, "r must lie in (0, 1)")
    return GammaSpec("power", alpha, q_bar, r_value)


def _read_solver(r: _Reader, data: Dict[str, Any], seed: int) -> SolverConfig:
    table = r.table(data, "solver", "solver")
    lo = r.number(table, "lambda_lo", "solver.lambda_lo", 1.0, lambda v: v > 0, "lambda_lo must be positive")
    hi = r.number(table, "lambda_hi", "solver.lambda_hi", lo, lambda v: v > 0, "lambda_hi must be positive")
    sched = r.table(table, "lambda_schedule", "solver.lambda_schedule")
    kind = r.choice(sched, "kind", "solver.lambda_schedule.kind", ("constant", "periodic", "random"), "constant")
    values = r.vector(sched, "values", "solver.lambda_schedule.values", [lo], required=False) or (lo,)
    eps = r.table(table, "epsilon_schedule", "solver.epsilon_schedule")
    eps_kind = r.choice(eps, "kind", "solver.epsilon_schedule.kind", ("constant", "geometric", "summable"), "constant")
    eps0 = r.number(eps, "eps0", "solver.epsilon_schedule.eps0", 0.0, lambda v: v >= 0, "eps0 must be nonnegative")
    ratio = r.number(eps, "ratio", "solver.epsilon_schedule.ratio", 0.5, lambda v: 0 < v < 1, "ratio must lie in (0, 1)")
    inner = r.table(table, "inner", "solver.inner")
    defaults = InnerSettings()
    inner_settings = r.attempt("solver.inner", lambda: InnerSettings(
        grid_resolution=r.integer(inner, "grid_resolution", "solver.inner.grid_resolution", defaults.grid_resolution, 2),
        grid_resolution_nd=r.integer(inner, "grid_resolution_nd", "solver.inner.grid_resolution_nd", defaults.grid_resolution_nd, 2),
        grid_points_cap=r.integer(inner, "grid_points_cap", "solver.inner.grid_points_cap", defaults.grid_points_cap, 2),
        retries=r.integer(inner, "retries", "solver.inner.retries", defaults.retries, 1),
        max_sweeps=r.integer(inner, "max_sweeps", "solver.inner.max_sweeps", defaults.max_sweeps, 1),
        subgradient_iters=r.integer(inner, "subgradient_iters", "solver.inner.subgradient_iters", defaults.subgradient_iters, 1),
        seed=seed))
    config = r.attempt("solver", lambda: SolverConfig(
        lambda_lo=lo, lambda_hi=hi,
        lambda_schedule=LambdaSchedule(kind or "constant", values, seed),
        sigma=r.number(table, "sigma", "solver.sigma", 0.0, lambda v: 0 <= v < 1, "sigma must lie in [0, 1)"),
        b=r.number(table, "b", "solver.b", 2.0, lambda v: v > 0, "b must be positive"),
        epsilon_schedule=EpsilonSchedule(eps_kind or "constant", eps0, ratio),
        max_iters=r.integer(table, "max_iters", "solver.max_iters", 10000, 1),
        step_tol=r.number(table, "step_tol", "solver.step_tol", 1e-6, lambda v: v >= 0, "step_tol must be nonnegative"),
        residual_tol=r.number(table, "residual_tol", "solver.residual_tol", 1e-6, lambda v: v >= 0, "residual_tol must be nonnegative"),
        inner=inner_settings or defaults))
    return config or SolverConfig()


def _read_certification(r: _Reader, data: Dict[str, Any], dimension: Optional[int]) -> CertificationSpec:
    table = r.table(data, "certification", "certification")
    samples = r.integer(table, "samples", "certification.samples", 10000, 1)
    radii = r.vector(table, "radii", "certification.radii", list(DEFAULT_RADII)) or DEFAULT_RADII
    if any(v <= 0 for v in radii):
        r.errors.append("certification.radii: radii must be positive")
    factor = r.number(table, "lambda_factor", "certification.lambda_factor", DEFAULT_LAMBDA_FACTOR,
                      lambda v: v > 0, "lambda_factor must be positive")
    kl = None
    if table.get("kl") is not None:
        kl_table = r.table(table, "kl", "certification.kl")
        x_bar = r.vector(kl_table, "x_bar", "certification.kl.x_bar", required=False)
        if x_bar is not None and dimension is not None and len(x_bar) != dimension:
            r.errors.append(f"certification.kl.x_bar: expected {dimension} coordinates")
        kl = KLSpec(r.number(kl_table, "theta", "certification.kl.theta", None),
                    r.number(kl_table, "c", "certification.kl.c", None),
                    r.number(kl_table, "eta", "certification.kl.eta", None), x_bar)
        if None not in (kl.theta, kl.c, kl.eta):
            r.attempt("certification.kl", lambda: KLDescriptor(kl.theta, kl.c, kl.eta, x_bar or ()))
    return CertificationSpec(samples, radii, factor, kl)


def _read_sweep(r: _Reader, data: Dict[str, Any], dimension: Optional[int]) -> Optional[SweepSpec]:
    if data.get("sweep") is None:
        return None
    table = r.table(data, "sweep", "sweep")

    def axis(key: str) -> Tuple[float, ...]:
        if not table.get(key):
            return ()
        return r.vector(table, key, f"sweep.{key}") or ()

    x0s = []
    for i, point in enumerate(table.get("x0") or []):
        vec = r.vector({"x": point}, "x", f"sweep.x0[{i}]")
        if vec is not None:
            if dimension is not None and len(vec) != dimension:
                r.errors.append(f"sweep.x0[{i}]: expected {dimension} coordinates")
            x0s.append(vec)
    spec = SweepSpec(alpha=axis("alpha"), sigma=axis("sigma"), lam=axis("lambda"), x0=tuple(x0s),
                     cap=r.integer(table, "cap", "sweep.cap", DEFAULT_SWEEP_CAP, 1))
    if any(a <= 1 for a in spec.alpha):
        r.errors.append("sweep.alpha: alpha must exceed 1")
    if any(not 0 <= s < 1 for s in spec.sigma):
        r.errors.append("sweep.sigma: sigma must lie in [0, 1)")
    if any(v <= 0 for v in spec.lam):
        r.errors.append("sweep.lambda: lambda must be positive")
    if spec.size > spec.cap:
        r.errors.append(f"sweep: {spec.size} scenarios exceed the cap of {spec.cap}")
    return spec


def parse_config(text: str) -> ScenarioConfig:
    """parses and validates a scenario; raises ConfigurationError listing every problem found."""
    data = _load(text)
    r = _Reader()
    known = {"name", "seed", "regime", "x0", "output_dir", "objective", "quasi_distance", "gamma",
             "solver", "certification", "sweep"}
    for key in sorted(set(data) - known):
        r.errors.append(f"{key}: unknown key")
    seed = r.integer(data, "seed", "seed", 0, 0)
    name = str(data.get("name", "scenario"))
    output_dir = str(data.get("output_dir", "out"))
    regime = r.choice(data, "regime", "regime", tuple(reg.value for reg in Regime), Regime.ALGORITHM2.value)
    objective = _read_objective(r, data)
    dimension = objective.dimension if objective is not None else None
    x0 = r.vector(data, "x0", "x0")
    if x0 is not None and objective is not None:
        if len(x0) != objective.dimension:
            r.errors.append(f"x0: expected {objective.dimension} coordinates, got {len(x0)}")
        elif any(not lo <= v <= hi for v, lo, hi in zip(x0, objective.lower, objective.upper)):
            r.errors.append("x0: must lie inside the objective box")
    quasi = _read_quasi(r, data, dimension)
    if quasi is None and objective is not None and objective.kind != "entrepreneur" \
            and data.get("quasi_distance") is None:
        quasi = QuasiDistanceSpec("euclidean")
    gamma = _read_gamma(r, data)
    solver = _read_solver(r, data, seed)
    certification = _read_certification(r, data, dimension)
    sweep = _read_sweep(r, data, dimension)
    if r.errors or objective is None or x0 is None or regime is None:
        raise ConfigurationError(r.errors or ["incomplete scenario"])
    return ScenarioConfig(objective=objective, x0=x0, quasi_distance=quasi, gamma=gamma,
                          solver=solver, regime=Regime(regime), output_dir=output_dir, seed=seed,
                          name=name, certification=certification, sweep=sweep)


def _objective_table(spec: ObjectiveSpec) -> Dict[str, Any]:
    return {"kind": spec.kind, "lower": list(spec.lower), "upper": list(spec.upper),
            "params": dict(spec.params)}


def _quasi_table(spec: QuasiDistanceSpec) -> Dict[str, Any]:
    if spec.kind == "asym_l1":
        return {"kind": "asym_l1", "h_plus": list(spec.h_plus), "h_minus": list(spec.h_minus)}
    return {"kind": "euclidean", "scale": spec.scale}


def _entrepreneur_scenario(spec: ObjectiveSpec) -> EntrepreneurScenario:
    p = spec.params
    missing = [key for key in ("h_plus", "h_minus", "wages", "price") if key not in p]
    if missing:
        raise InvalidInputError(f"missing entrepreneur parameters: {', '.join(missing)}")
    return EntrepreneurScenario(
        h_plus=tuple(float(v) for v in p["h_plus"]), h_minus=tuple(float(v) for v in p["h_minus"]),
        wages=tuple(float(v) for v in p["wages"]), price=float(p["price"]), upper=spec.upper,
        demand_slope=float(p.get("demand_slope", 0.0)),
        grid_resolution=int(p.get("grid_resolution", 0)))


def to_dict(config: ScenarioConfig) -> Dict[str, Any]:
    s = config.solver
    data: Dict[str, Any] = {
        "name": config.name,
        "seed": config.seed,
        "regime": config.regime.value,
        "x0": list(config.x0),
        "output_dir": config.output_dir,
        "objective": _objective_table(config.objective),
        "gamma": dataclasses.asdict(config.gamma),
        "solver": {
            "lambda_lo": s.lambda_lo, "lambda_hi": s.lambda_hi,
            "lambda_schedule": {"kind": s.lambda_schedule.kind, "values": list(s.lambda_schedule.values)},
            "sigma": s.sigma, "b": s.b,
            "epsilon_schedule": {"kind": s.epsilon_schedule.kind, "eps0": s.epsilon_schedule.eps0,
                                 "ratio": s.epsilon_schedule.ratio},
            "max_iters": s.max_iters, "step_tol": s.step_tol, "residual_tol": s.residual_tol,
            "inner": {"grid_resolution": s.inner.grid_resolution,
                      "grid_resolution_nd": s.inner.grid_resolution_nd,
                      "grid_points_cap": s.inner.grid_points_cap, "retries": s.inner.retries,
                      "max_sweeps": s.inner.max_sweeps, "subgradient_iters": s.inner.subgradient_iters},
        },
        "certification": {"samples": config.certification.samples,
                          "radii": list(config.certification.radii),
                          "lambda_factor": config.certification.lambda_factor},
    }
    if config.quasi_distance is not None:
        data["quasi_distance"] = _quasi_table(config.quasi_distance)
    kl = config.certification.kl
    if kl is not None:
        kl_table: Dict[str, Any] = {"theta": kl.theta, "c": kl.c, "eta": kl.eta}
        if kl.x_bar is not None:
            kl_table["x_bar"] = list(kl.x_bar)
        data["certification"]["kl"] = kl_table
    if config.sweep is not None:
        sw = config.sweep
        data["sweep"] = {"alpha": list(sw.alpha), "sigma": list(sw.sigma), "lambda": list(sw.lam),
                         "x0": [list(p) for p in sw.x0], "cap": sw.cap}
    return data


def print_config(config: ScenarioConfig) -> str:
    return yaml.safe_dump(to_dict(config), sort_keys=True, default_flow_style=None)


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise OSError(f"cannot read scenario {path}: {exc.strerror}") from exc
    return parse_config(text)


def with_seed(config: ScenarioConfig, seed: int) -> ScenarioConfig:
    """re-derives every seeded component from a new top-level seed."""
    solver = dataclasses.replace(
        config.solver,
        lambda_schedule=dataclasses.replace(config.solver.lambda_schedule, seed=seed),
        inner=dataclasses.replace(config.solver.inner, seed=seed))
    return dataclasses.replace(config, seed=seed, solver=solver)


@dataclass(frozen=True)
class Components:
    objective: Objective
    quasi_distance: QuasiDistance
    gamma: ResistanceCurve
    solver: SolverConfig


def build_components(config: ScenarioConfig) -> Components:
    try:
        objective = build_objective(_objective_table(config.objective))
        if config.quasi_distance is None:
            if not isinstance(objective, EntrepreneurObjective):
                raise InvalidInputError("a quasi distance is required")
            q: QuasiDistance = objective.scenario.quasi_distance()
        else:
            q = build_quasi_distance(_quasi_table(config.quasi_distance), objective.dimension)
        gamma = build_curve(dataclasses.asdict(config.gamma))
    except InvalidInputError as exc:
        raise ConfigurationError([str(exc)]) from exc
    return Components(objective, q, gamma, config.solver)


def kl_descriptor(config: ScenarioConfig, x_bar: Tuple[float, ...]) -> Optional[KLDescriptor]:
    kl = config.certification.kl
    if kl is None:
        return None
    return KLDescriptor(kl.theta, kl.c, kl.eta, kl.x_bar if kl.x_bar is not None else x_bar)


def sweep_configs(config: ScenarioConfig) -> List[Tuple[str, ScenarioConfig]]:
    """expands the sweep axes into labelled scenarios, in a fixed order."""
    sweep = config.sweep or SweepSpec()
    points: List[Tuple[str, ScenarioConfig]] = [("", config)]

    def expand(label: str, values: Tuple[Any, ...], apply: Callable[[ScenarioConfig, Any], ScenarioConfig]) -> None:
        nonlocal points
        if not values:
            return
        points = [(f"{tag}{label}{i}_", apply(cfg, v)) for tag, cfg in points for i, v in enumerate(values)]

    expand("alpha", sweep.alpha, lambda c, a: dataclasses.replace(c, gamma=dataclasses.replace(c.gamma, alpha=a)))
    expand("sigma", sweep.sigma, lambda c, s: dataclasses.replace(c, solver=dataclasses.replace(c.solver, sigma=s)))
    expand("lambda", sweep.lam, lambda c, v: dataclasses.replace(c, solver=dataclasses.replace(
        c.solver, lambda_lo=v, lambda_hi=v, lambda_schedule=LambdaSchedule("constant", (v,), c.seed))))
    expand("x0_", sweep.x0, lambda c, x: dataclasses.replace(c, x0=tuple(x)))
    out = []
    for tag, cfg in points:
        label = tag.rstrip("_") or "base"
        out.append((label, dataclasses.replace(cfg, sweep=None, name=f"{config.name}-{label}")))
    return out
