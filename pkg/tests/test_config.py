import pytest

from worthwhile.config import (CertificationSpec, GammaSpec, QuasiDistanceSpec, build_components,
                               kl_descriptor, load_config, parse_config, print_config, sweep_configs,
                               with_seed)
from worthwhile.prox_solver import Regime, SolverConfig
from worthwhile.quasi_metric import AsymmetricWeightedL1
from worthwhile.utils import ConfigurationError
from testing_utils import SCENARIOS, logger


MINIMAL = """
x0: [1.0]
objective: {kind: quadratic, lower: [-2.0], upper: [2.0]}
"""

FIRM = """
x0: [0.5, 0.5]
objective:
  kind: entrepreneur
  upper: [4.0, 4.0]
  params: {h_plus: [1.0, 1.0], h_minus: [2.0, 2.0], wages: [1.0, 1.0], price: 4.0}
"""


def errors_of(text: str) -> list:
    with pytest.raises(ConfigurationError) as info:
        parse_config(text)
    logger.info(f"configuration errors: {info.value.errors}")
    return info.value.errors


def test_minimal_scenario_takes_the_defaults() -> None:
    config = parse_config(MINIMAL)
    assert config.regime == Regime.ALGORITHM2
    assert config.x0 == (1.0,)
    assert config.quasi_distance == QuasiDistanceSpec("euclidean")
    assert config.gamma == GammaSpec()
    assert config.solver == SolverConfig()
    assert config.certification == CertificationSpec()
    assert config.sweep is None


def test_numbers_written_without_a_dot() -> None:
    # PyYAML reads 1e-6 as a string
    config = parse_config(MINIMAL + "solver: {step_tol: 1e-6, residual_tol: 1e-8}\n")
    assert config.solver.step_tol == 1e-6
    assert config.solver.residual_tol == 1e-8


def test_alpha_must_exceed_one() -> None:
    assert errors_of(MINIMAL + "gamma: {alpha: 1.0}\n") == ["gamma.alpha: alpha must exceed 1"]


def test_unknown_objective_lists_the_allowed_kinds() -> None:
    errors = errors_of("x0: [0.0]\nobjective: {kind: rosenbrock, lower: [-1.0], upper: [1.0]}\n")
    assert errors == ["objective.kind: unknown value 'rosenbrock'; "
                      "allowed: quadratic, abs, double_well, l1_quadratic, entrepreneur"]


def test_every_problem_is_reported() -> None:
    errors = errors_of("""
x0: [5.0]
colour: blue
objective: {kind: quadratic, lower: [-2.0], upper: [2.0], params: {wells: 2}}
gamma: {alpha: 0.5}
solver: {lambda_lo: -1.0, max_iters: 1.5}
""")
    assert "colour: unknown key" in errors
    assert "x0: must lie inside the objective box" in errors
    assert "gamma.alpha: alpha must exceed 1" in errors
    assert "solver.lambda_lo: lambda_lo must be positive" in errors
    assert "solver.max_iters: expected an integer, got 1.5" in errors
    assert any(e.startswith("objective.params.wells: unknown parameter for quadratic") for e in errors)


def test_syntax_errors_carry_their_position() -> None:
    errors = errors_of("name: a: b\n")
    assert len(errors) == 1
    assert errors[0].startswith("line 1, column ")


def test_scenario_must_be_a_mapping() -> None:
    assert errors_of("- 1\n- 2\n") == ["the scenario must be a mapping at the top level"]


def test_missing_objective() -> None:
    assert "objective: missing required table" in errors_of("x0: [1.0]\n")


def test_x0_dimension_must_match() -> None:
    errors = errors_of(MINIMAL.replace("x0: [1.0]", "x0: [1.0, 0.0]"))
    assert errors == ["x0: expected 1 coordinates, got 2"]


def test_entrepreneur_parameters_are_checked() -> None:
    errors = errors_of(FIRM.replace("price: 4.0", "demand_slope: 0.5"))
    assert errors == ["objective.params: missing entrepreneur parameters: price"]


def test_entrepreneur_uses_its_own_costs() -> None:
    config = parse_config(FIRM)
    assert config.quasi_distance is None
    assert config.objective.lower == (0.0, 0.0)
    parts = build_components(config)
    assert isinstance(parts.quasi_distance, AsymmetricWeightedL1)
    assert parts.quasi_distance.evaluate([0.0, 0.0], [0.0, 1.0]) == 1.0
    assert parts.quasi_distance.evaluate([0.0, 1.0], [0.0, 0.0]) == 2.0


def test_quasi_distance_dimension_must_match() -> None:
    errors = errors_of(MINIMAL + "quasi_distance: {kind: asym_l1, h_plus: [1.0, 1.0], h_minus: [1.0, 1.0]}\n")
    assert errors == ["quasi_distance.h_plus: has dimension 2, the objective has 1"]


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.yaml")), ids=lambda p: p.stem)
def test_printed_scenarios_parse_back(path) -> None:
    config = load_config(str(path))
    assert parse_config(print_config(config)) == config
    build_components(config)


def test_sweep_cap() -> None:
    errors = errors_of(MINIMAL + "sweep: {alpha: [1.5, 2.0, 3.0], sigma: [0.0, 0.1, 0.2], cap: 8}\n")
    assert errors == ["sweep: 9 scenarios exceed the cap of 8"]


def test_sweep_labels_and_values() -> None:
    config = load_config(str(SCENARIOS / "alpha_sweep.yaml"))
    points = sweep_configs(config)
    assert [label for label, _ in points] == ["alpha0_sigma0", "alpha0_sigma1", "alpha1_sigma0", "alpha1_sigma1"]
    last = points[-1][1]
    assert last.gamma.alpha == 3.0
    assert last.solver.sigma == 0.3
    assert last.sweep is None
    assert last.name == "alpha_sweep-alpha1_sigma1"

    wells = sweep_configs(load_config(str(SCENARIOS / "double_well.yaml")))
    assert [(label, cfg.x0) for label, cfg in wells] == [("x0_0", (-0.2,)), ("x0_1", (0.2,))]
    assert [label for label, _ in sweep_configs(parse_config(MINIMAL))] == ["base"]


def test_with_seed_reseeds_every_component() -> None:
    config = with_seed(load_config(str(SCENARIOS / "alpha_sweep.yaml")), 9)
    assert config.seed == 9
    assert config.solver.lambda_schedule.seed == 9
    assert config.solver.inner.seed == 9
    assert config.solver.lambda_at(4) == with_seed(config, 9).solver.lambda_at(4)


def test_kl_descriptor_falls_back_to_the_endpoint() -> None:
    config = parse_config(MINIMAL + "certification: {kl: {theta: 0.5, c: 1.0, eta: 2.0}}\n")
    kl = kl_descriptor(config, (0.25,))
    assert kl is not None and kl.x_bar == (0.25,)
    assert kl_descriptor(parse_config(MINIMAL), (0.0,)) is None


def test_unreadable_scenario(tmp_path) -> None:
    with pytest.raises(OSError, match="missing.yaml"):
        load_config(str(tmp_path / "missing.yaml"))
