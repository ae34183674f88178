import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import IntEnum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from worthwhile import artifacts
from worthwhile.config import (ScenarioConfig, build_components, kl_descriptor, load_config,
                               print_config, sweep_configs, with_seed)
from worthwhile.objectives import EntrepreneurObjective, kl_empirical_check
from worthwhile.prox_solver import Status, run
from worthwhile.resistance import validate_hypotheses
from worthwhile.traps import (TrapCertificate, TrapKind, certify_ladder, certify_trap,
                              habituation_profile, trap_samples, variational_trap_report)
from worthwhile.utils import (TAIL_WINDOW, ConfigurationError, InvalidInputError, box_sampler,
                              format_float, logger)


ENV_OUT = "WORTHWHILE_OUT"
ENV_WORKERS = "WORTHWHILE_WORKERS"
KL_CHECK_SAMPLES = 2000


class ExitCode(IntEnum):
    OK = 0
    MAX_ITERS = 2
    STEP_FAILURE = 3
    REFUTED = 4
    CONFIG_ERROR = 5
    IO_ERROR = 6


STATUS_CODES = {
    Status.MAX_ITERS: ExitCode.MAX_ITERS,
    Status.STEP_FAILURE: ExitCode.STEP_FAILURE,
}


@dataclass(frozen=True)
class ScenarioOutcome:
    label: str
    exit_code: ExitCode
    status: str
    iterations: int
    final_f: float
    final_point: Tuple[float, ...]
    certificate: str  # kind at lambda_factor * lambda_infinity, or "none"

    def row(self) -> Dict[str, Any]:
        return {"label": self.label, "exit_code": int(self.exit_code), "status": self.status,
                "iterations": self.iterations, "final_f": self.final_f,
                "certificate": self.certificate,
                "final_point": " ".join(format_float(v) for v in self.final_point)}


def _exit_code(status: Status, decisive: Optional[TrapCertificate]) -> ExitCode:
    if status in STATUS_CODES:
        return STATUS_CODES[status]
    if decisive is not None and decisive.kind == TrapKind.REFUTED:
        return ExitCode.REFUTED
    return ExitCode.OK


def run_scenario(config: ScenarioConfig, out_dir: Optional[str] = None, label: str = "") -> ScenarioOutcome:
    """runs one scenario and writes its artifacts; the exit code reflects the run status and,
    for converged runs, the trap certificate at lambda_factor * lambda_infinity."""
    out = out_dir or config.output_dir
    parts = build_components(config)
    f, q, gamma = parts.objective, parts.quasi_distance, parts.gamma
    rng = np.random.default_rng(config.seed)

    artifacts.write_text(os.path.join(out, "config.yaml"), print_config(config))
    trace = run(config.regime, f, q, gamma, parts.solver, config.x0)
    artifacts.write_trace(os.path.join(out, "trace.csv"), trace)

    summary = artifacts.summary_record(trace)
    decisive: Optional[TrapCertificate] = None
    if trace.records and trace.final_point is not None:
        cert = config.certification
        assert f.lower is not None and f.upper is not None
        samples = trap_samples(trace.final_point, f.lower, f.upper, cert.samples, rng, cert.radii)
        ladder = certify_ladder(f, q, gamma, trace, samples, cert.lambda_factor)
        decisive = ladder[-1]
        artifacts.write_certificates(os.path.join(out, "certificate.txt"), ladder)
        report = variational_trap_report(trace, f, q, gamma, decisive.lambda_star, samples,
                                         config.solver.sigma)
        summary["variational_trap"] = {"path_ok": report.path_ok, "failing_steps": report.failing_steps,
                                       "endpoint": decisive.kind.value, "notes": report.notes}
        profile = habituation_profile(trace, config.solver.step_tol)
        artifacts.write_habituation(os.path.join(out, "habituation.csv"), profile)
        summary["habituation"] = profile.classification.value

    f_star = None
    endpoint = trace.final_point if trace.final_point is not None else np.asarray(config.x0)
    kl = kl_descriptor(config, tuple(float(v) for v in endpoint))
    if kl is not None:
        f_star = float(f.value(np.asarray(kl.x_bar, dtype=float)))
        assert f.lower is not None and f.upper is not None
        kl_report = kl_empirical_check(f, kl, box_sampler(f.lower, f.upper, rng), KL_CHECK_SAMPLES)
        summary["kl_check"] = {"status": kl_report.status.value, "min_statistic": kl_report.min_statistic,
                               "valid_samples": kl_report.valid_samples}
    rate = artifacts.emit_rate_data(trace, f_star)
    artifacts.write_rate(os.path.join(out, "rate.csv"), rate)
    summary["rate"] = artifacts.rate_record(rate)
    if trace.records:
        floor = f_star if f_star is not None else float(np.min(trace.f_values))
        summary["summability_slack"] = trace.summability_slack(config.solver.lambda_lo,
                                                               config.solver.sigma, floor)
    if isinstance(f, EntrepreneurObjective) and trace.final_point is not None:
        summary["g_bar"] = f.g_bar
        summary["profit_gap"] = f.profit_gap(trace.final_point)

    code = _exit_code(trace.status, decisive)
    summary["exit_code"] = int(code)
    artifacts.write_record(os.path.join(out, "summary.txt"), summary)
    logger.info(f"scenario {config.name}: {trace.status.value}, exit {int(code)}, artifacts in {out}")

    return ScenarioOutcome(label=label or config.name, exit_code=code, status=trace.status.value,
                           iterations=len(trace.records),
                           final_f=float(f.value(endpoint)),
                           final_point=tuple(float(v) for v in endpoint),
                           certificate=decisive.kind.value if decisive is not None else "none")


def _sweep_worker(job: Tuple[str, ScenarioConfig, str]) -> ScenarioOutcome:
    label, config, out = job
    return run_scenario(config, out, label)


def run_sweep(config: ScenarioConfig, out_dir: Optional[str] = None,
              workers: int = 1) -> List[ScenarioOutcome]:
    """runs the sweep cross product, one subdirectory per point, and writes sweep_summary.csv
    in a fixed order regardless of completion order."""
    out = out_dir or config.output_dir
    jobs = [(label, cfg, os.path.join(out, label)) for label, cfg in sweep_configs(config)]
    logger.info(f"sweep {config.name}: {len(jobs)} scenarios on {workers} worker(s)")
    if workers <= 1:
        outcomes = [_sweep_worker(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_worker, jobs))
    artifacts.write_sweep_summary(os.path.join(out, "sweep_summary.csv"), [o.row() for o in outcomes])
    return outcomes


def recertify(trace_dir: str, seed: Optional[int] = None) -> Tuple[ExitCode, Dict[str, Any]]:
    """re-runs trap certification at the endpoint of a written trace."""
    config = load_config(os.path.join(trace_dir, "config.yaml"))
    if seed is not None:
        config = with_seed(config, seed)
    stored = artifacts.read_trace(os.path.join(trace_dir, "trace.csv"))
    if not stored.lambdas:
        raise InvalidInputError(f"{trace_dir} holds no steps to estimate lambda_infinity from")
    parts = build_components(config)
    f = parts.objective
    assert f.lower is not None and f.upper is not None
    cert = config.certification
    rng = np.random.default_rng(config.seed)
    samples = trap_samples(stored.endpoint, f.lower, f.upper, cert.samples, rng, cert.radii)
    lam_inf = float(np.mean(stored.lambdas[-TAIL_WINDOW:]))
    ladder = [certify_trap(f, parts.quasi_distance, parts.gamma, lam, stored.endpoint, samples)
              for lam in (lam_inf, cert.lambda_factor * lam_inf)]
    record = {"evidence": "sampled", "certificates": [artifacts.certificate_record(c) for c in ladder]}
    code = ExitCode.REFUTED if ladder[-1].kind == TrapKind.REFUTED else ExitCode.OK
    return code, record


def _resolve_out(args: argparse.Namespace, config: ScenarioConfig) -> str:
    return args.out or os.environ.get(ENV_OUT) or config.output_dir


def _resolve_workers(args: argparse.Namespace) -> int:
    if args.workers is not None:
        return args.workers
    env = os.environ.get(ENV_WORKERS)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigurationError([f"{ENV_WORKERS}: expected an integer, got {env!r}"])
    return 1


def _load(args: argparse.Namespace) -> ScenarioConfig:
    config = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        config = with_seed(config, args.seed)
    return config


def _cmd_run(args: argparse.Namespace) -> ExitCode:
    config = _load(args)
    return run_scenario(config, _resolve_out(args, config)).exit_code


def _cmd_sweep(args: argparse.Namespace) -> ExitCode:
    config = _load(args)
    outcomes = run_sweep(config, _resolve_out(args, config), _resolve_workers(args))
    # the worst outcome decides, so a sweep only passes when every point does
    return max((o.exit_code for o in outcomes), default=ExitCode.OK)


def _cmd_validate(args: argparse.Namespace) -> ExitCode:
    config = _load(args)
    parts = build_components(config)
    report = validate_hypotheses(parts.gamma, config.gamma.q_bar, config.gamma.r)
    sys.stdout.write(print_config(config))
    hypotheses = {"passed": report.passed, "rho_bar": report.rho_bar, "violations": report.violations}
    sys.stdout.write(yaml.safe_dump(artifacts.plain({"gamma_hypotheses": hypotheses}), sort_keys=True))
    return ExitCode.OK if report.passed else ExitCode.CONFIG_ERROR


def _cmd_certify(args: argparse.Namespace) -> ExitCode:
    code, record = recertify(args.trace, args.seed)
    sys.stdout.write(yaml.safe_dump(artifacts.plain(record), sort_keys=True, default_flow_style=None))
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="worthwhile",
                                     description="quasi-metric proximal runs and variational trap certificates")
    parser.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, handler, text in (("run", _cmd_run, "run one scenario"),
                                ("sweep", _cmd_sweep, "run the sweep cross product of a scenario"),
                                ("validate", _cmd_validate, "validate a scenario and print it normalised")):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", required=True, help="scenario YAML file")
        cmd.add_argument("--seed", type=int, help="override the scenario seed")
        if name != "validate":
            cmd.add_argument("--out", help=f"output directory (overrides {ENV_OUT} and the file)")
        if name == "sweep":
            cmd.add_argument("--workers", type=int, help=f"parallel scenarios (overrides {ENV_WORKERS})")
        cmd.set_defaults(handler=handler)

    certify = sub.add_parser("certify", help="re-run trap certification on a written trace")
    certify.add_argument("--trace", required=True, help="directory holding trace.csv and config.yaml")
    certify.add_argument("--seed", type=int, help="override the sampling seed")
    certify.set_defaults(handler=_cmd_certify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return int(args.handler(args))
    except ConfigurationError as exc:
        for message in exc.errors:
            logger.error(message)
        return int(ExitCode.CONFIG_ERROR)
    except InvalidInputError as exc:
        logger.error(str(exc))
        return int(ExitCode.CONFIG_ERROR)
    except OSError as exc:
        logger.error(str(exc))
        return int(ExitCode.IO_ERROR)

