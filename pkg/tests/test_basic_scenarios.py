import csv
from dataclasses import replace
from pathlib import Path

import pytest
import yaml

from worthwhile.cli import ENV_OUT, ENV_WORKERS, ExitCode, main, run_scenario, run_sweep
from worthwhile.config import load_config, sweep_configs
from worthwhile.prox_solver import Regime
from testing_utils import LOG_QUARTER, SCENARIOS, logger


# here are end-to-end runs of the shipped scenarios, through run_scenario and the command line.

def read_summary(out: Path) -> dict:
    with open(out / "summary.txt", encoding="utf-8") as handle:
        return yaml.safe_load(handle)


def read_rows(path: Path) -> list:
    with open(path, encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def scenario_file(tmp_path: Path, text: str) -> str:
    path = tmp_path / "scenario.yaml"
    path.write_text(text, encoding="utf-8")
    return str(path)


QUADRATIC = """
regime: exact
x0: [1.0]
objective: {{kind: quadratic, lower: [-2.0], upper: [2.0]}}
gamma: {{alpha: 2.0}}
solver: {{lambda_lo: 1.0, lambda_hi: 1.0, {solver}}}
certification: {{samples: 500{certification}}}
"""


def test_quadratic_halves_each_step(tmp_path: Path) -> None:
    outcome = run_scenario(load_config(str(SCENARIOS / "quadratic.yaml")), str(tmp_path))
    assert outcome.exit_code == ExitCode.OK
    assert outcome.status == "converged"

    rows = read_rows(tmp_path / "trace.csv")
    assert list(rows[0]) == ["k", "x_1", "f", "q_step", "w_norm", "v_norm", "descent_ok", "stop_rule_ok",
                             "global_slack", "lambda_k"]
    assert len(rows) == outcome.iterations + 1
    for row in rows:
        assert float(row["x_1"]) == pytest.approx(0.5 ** int(row["k"]), rel=1e-6, abs=1e-12)
    assert rows[-1]["q_step"] == "" and rows[-1]["lambda_k"] == ""
    assert all(row["descent_ok"] == "true" for row in rows[:-1])

    summary = read_summary(tmp_path)
    logger.info(f"quadratic summary: {summary['rate']}")
    assert summary["exit_code"] == 0
    assert summary["kl_check"]["status"] == "pass"
    assert summary["rate"]["status"] == "fitted"
    assert summary["rate"]["label"] == "empirical"
    assert summary["rate"]["empirical_tail_slope"] == pytest.approx(LOG_QUARTER, rel=0.02)
    assert summary["habituation"] == "habituating"
    assert summary["variational_trap"]["path_ok"]
    assert summary["summability_slack"] >= 0.0
    assert summary["aligned_v_steps"] == 0

    certificates = yaml.safe_load((tmp_path / "certificate.txt").read_text(encoding="utf-8"))
    assert certificates["evidence"] == "sampled"
    assert [c["kind"] for c in certificates["certificates"]][-1] in ("strong", "weak")
    assert certificates["certificates"][-1]["lambda_star"] == pytest.approx(1.1)


def test_absolute_value_arrives_in_finitely_many_steps(tmp_path: Path) -> None:
    outcome = run_scenario(load_config(str(SCENARIOS / "abs.yaml")), str(tmp_path))
    assert outcome.exit_code == ExitCode.OK
    assert outcome.final_point == (0.0,)
    rate = read_summary(tmp_path)["rate"]
    assert rate["status"] == "finite_arrival"
    assert rate["arrival_k"] == 2
    gaps = read_rows(tmp_path / "rate.csv")
    values = [float(g["f_gap"]) for g in gaps]
    assert values[:3] == pytest.approx([1.0, 0.5, 0.0], abs=1e-12)
    assert all(v == 0.0 for v in values[2:])


def test_double_well_starts_settle_in_different_wells(tmp_path: Path) -> None:
    outcomes = run_sweep(load_config(str(SCENARIOS / "double_well.yaml")), str(tmp_path))
    assert [o.label for o in outcomes] == ["x0_0", "x0_1"]
    left, right = outcomes
    logger.info(f"wells: {left.final_point}, {right.final_point}")
    assert left.final_point[0] == pytest.approx(-1.0, abs=1e-3)
    assert right.final_point[0] == pytest.approx(1.0, abs=1e-3)
    assert all(o.certificate == "strong" and o.exit_code == ExitCode.OK for o in outcomes)
    summary = read_rows(tmp_path / "sweep_summary.csv")
    assert [row["label"] for row in summary] == ["x0_0", "x0_1"]
    assert (tmp_path / "x0_1" / "habituation.csv").exists()


def test_entrepreneur_exhausts_the_profit(tmp_path: Path) -> None:
    outcome = run_scenario(load_config(str(SCENARIOS / "entrepreneur.yaml")), str(tmp_path))
    summary = read_summary(tmp_path)
    logger.info(f"g_bar={summary['g_bar']} profit_gap={summary['profit_gap']} status={outcome.status}")
    assert outcome.status == "converged"
    assert outcome.certificate == "strong"
    assert summary["g_bar"] > 0
    assert abs(summary["profit_gap"]) < 1e-3
    assert summary["variational_trap"]["path_ok"]
    assert outcome.final_point[0] == pytest.approx(outcome.final_point[1], abs=1e-2)


@pytest.mark.parametrize("name", ["quadratic", "abs", "double_well", "l1_quadratic", "entrepreneur"])
def test_algorithm2_ends_in_a_strong_trap(name: str, tmp_path: Path) -> None:
    config = replace(load_config(str(SCENARIOS / f"{name}.yaml")), regime=Regime.ALGORITHM2)
    outcome = run_scenario(config, str(tmp_path))
    certificates = yaml.safe_load((tmp_path / "certificate.txt").read_text(encoding="utf-8"))["certificates"]
    decisive = certificates[-1]
    logger.info(f"{name}: {outcome.status} after {outcome.iterations} steps, worst {decisive['worst_violation']}")
    assert outcome.status == "converged"
    assert outcome.exit_code == ExitCode.OK
    assert decisive["kind"] == "strong"
    assert decisive["worst_violation"] < 0.0
    assert decisive["samples"] >= 10_000
    assert decisive["lambda_star"] == pytest.approx(1.1 * certificates[0]["lambda_star"])
    assert read_summary(tmp_path)["habituation"] == "habituating"


def test_identical_runs_write_identical_files(tmp_path: Path) -> None:
    label, config = sweep_configs(load_config(str(SCENARIOS / "alpha_sweep.yaml")))[1]
    run_scenario(config, str(tmp_path / "first"), label)
    run_scenario(config, str(tmp_path / "second"), label)
    for name in ("trace.csv", "rate.csv", "certificate.txt", "summary.txt", "habituation.csv"):
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()


def test_parallel_sweep_matches_the_serial_one(tmp_path: Path) -> None:
    config = load_config(str(SCENARIOS / "alpha_sweep.yaml"))
    serial = run_sweep(config, str(tmp_path / "serial"), workers=1)
    parallel = run_sweep(config, str(tmp_path / "parallel"), workers=2)
    assert serial == parallel
    assert (tmp_path / "serial" / "sweep_summary.csv").read_bytes() == \
        (tmp_path / "parallel" / "sweep_summary.csv").read_bytes()


def test_run_and_certify_from_the_command_line(tmp_path: Path, capsys) -> None:
    out = tmp_path / "run"
    assert main(["--quiet", "run", "--config", str(SCENARIOS / "quadratic.yaml"), "--out", str(out)]) == 0
    assert main(["--quiet", "certify", "--trace", str(out)]) == 0
    printed = yaml.safe_load(capsys.readouterr().out)
    assert printed["evidence"] == "sampled"
    assert len(printed["certificates"]) == 2
    assert printed["certificates"][1]["lambda_star"] == pytest.approx(1.1 * printed["certificates"][0]["lambda_star"])


def test_validate_prints_the_normalised_scenario(capsys) -> None:
    assert main(["--quiet", "validate", "--config", str(SCENARIOS / "double_well.yaml")]) == 0
    printed = yaml.safe_load(capsys.readouterr().out)
    assert printed["gamma_hypotheses"]["passed"] is True
    assert printed["quasi_distance"] == {"kind": "asym_l1", "h_plus": [2.0], "h_minus": [1.0]}
    assert printed["solver"]["sigma"] == 0.1


def test_max_iters_exit_code(tmp_path: Path) -> None:
    path = scenario_file(tmp_path, QUADRATIC.format(solver="max_iters: 3", certification=""))
    assert main(["--quiet", "run", "--config", path, "--out", str(tmp_path / "out")]) == ExitCode.MAX_ITERS
    summary = read_summary(tmp_path / "out")
    assert summary["status"] == "max-iters"
    assert summary["rate"]["status"] == "inconclusive"


def test_refuted_endpoint_exit_code(tmp_path: Path) -> None:
    # loose tolerances stop the run at 0.5, which is no trap at a tenth of the rate
    path = scenario_file(tmp_path, QUADRATIC.format(solver="step_tol: 1.0, residual_tol: 10.0",
                                                    certification=", lambda_factor: 0.1"))
    assert main(["--quiet", "run", "--config", path, "--out", str(tmp_path / "out")]) == ExitCode.REFUTED
    summary = read_summary(tmp_path / "out")
    assert summary["iterations"] == 1
    assert summary["variational_trap"]["endpoint"] == "refuted"


def test_step_failure_exit_code(tmp_path: Path) -> None:
    path = scenario_file(tmp_path, """
regime: algorithm1
x0: [0.2]
objective: {kind: double_well, lower: [-2.0], upper: [2.0]}
quasi_distance: {kind: asym_l1, h_plus: [2.0], h_minus: [1.0]}
solver: {lambda_lo: 0.5, lambda_hi: 0.5, b: 0.05}
""")
    assert main(["--quiet", "run", "--config", path, "--out", str(tmp_path / "out")]) == ExitCode.STEP_FAILURE
    summary = read_summary(tmp_path / "out")
    assert summary["failure"]["b"] == 0.05
    assert "certificate" not in [p.stem for p in (tmp_path / "out").iterdir()]


def test_configuration_error_exit_code(tmp_path: Path, caplog) -> None:
    path = scenario_file(tmp_path, "x0: [1.0]\nobjective: {kind: quadratic, lower: [-2.0], upper: [2.0]}\n"
                                   "gamma: {alpha: 1.0}\n")
    assert main(["run", "--config", path]) == ExitCode.CONFIG_ERROR
    assert "gamma.alpha: alpha must exceed 1" in caplog.text


def test_io_error_exit_codes(tmp_path: Path) -> None:
    assert main(["--quiet", "run", "--config", str(tmp_path / "missing.yaml")]) == ExitCode.IO_ERROR
    blocked = tmp_path / "blocked"
    blocked.write_text("not a directory", encoding="utf-8")
    code = main(["--quiet", "run", "--config", str(SCENARIOS / "abs.yaml"), "--out", str(blocked / "sub")])
    assert code == ExitCode.IO_ERROR


def test_environment_overrides(tmp_path: Path, monkeypatch) -> None:
    monkeypatch.setenv(ENV_OUT, str(tmp_path / "from_env"))
    assert main(["--quiet", "run", "--config", str(SCENARIOS / "abs.yaml")]) == 0
    assert (tmp_path / "from_env" / "trace.csv").exists()
    # the command line beats the environment
    assert main(["--quiet", "run", "--config", str(SCENARIOS / "abs.yaml"), "--out", str(tmp_path / "cli")]) == 0
    assert (tmp_path / "cli" / "trace.csv").exists()
    monkeypatch.setenv(ENV_WORKERS, "many")
    assert main(["--quiet", "sweep", "--config", str(SCENARIOS / "double_well.yaml")]) == ExitCode.CONFIG_ERROR


def test_seed_override_changes_random_rates(tmp_path: Path) -> None:
    base = ["--quiet", "run", "--config", str(SCENARIOS / "alpha_sweep.yaml")]
    assert main(base + ["--out", str(tmp_path / "a")]) == 0
    assert main(base + ["--out", str(tmp_path / "b"), "--seed", "11"]) == 0
    first = [row["lambda_k"] for row in read_rows(tmp_path / "a" / "trace.csv")]
    second = [row["lambda_k"] for row in read_rows(tmp_path / "b" / "trace.csv")]
    assert first[0] != second[0]
    assert all(0.5 <= float(v) <= 2.0 for v in first[:-1])
