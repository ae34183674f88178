"""Plain-text outputs of a run: CSV tables and YAML records.

Floats are written with repr so that identical runs produce byte-identical files.
The trace has one row per iterate x^0 .. x^N; the step columns of row k describe the move
x^k -> x^{k+1} and are empty on the final row.
"""
import csv
import math
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Sequence, TextIO, Tuple

import numpy as np
import yaml
from scipy import stats

from worthwhile.prox_solver import Status, TieBreak, Trace
from worthwhile.traps import HabituationProfile, TrapCertificate
from worthwhile.utils import InvalidInputError, Point, format_float, logger


STEP_COLUMNS = ["q_step", "w_norm", "v_norm", "descent_ok", "stop_rule_ok", "global_slack", "lambda_k"]
MIN_RATE_STEPS = 5
ARRIVAL_TOL = 1e-15  # gap below this (scaled by 1+|f*|) counts as having arrived


class RateStatus(Enum):
    FITTED = "fitted"
    FINITE_ARRIVAL = "finite_arrival"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class RateReport:
    """empirical convergence profile of f(x^k) - f*; the slope is a fitted observation, not a bound."""
    status: RateStatus
    f_star: float
    gaps: Tuple[float, ...]
    q_steps: Tuple[float, ...]
    slope: Optional[float] = None
    intercept: Optional[float] = None
    arrival_k: Optional[int] = None
    notes: List[str] = field(default_factory=list)


@contextmanager
def open_for_write(path: str) -> Iterator[TextIO]:
    try:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            yield handle
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format_float(value)


def plain(value: Any) -> Any:
    """converts numpy scalars and arrays so yaml.safe_dump accepts them."""
    if isinstance(value, np.ndarray):
        return [plain(v) for v in value.tolist()]
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    return value


def write_text(path: str, text: str) -> None:
    with open_for_write(path) as handle:
        handle.write(text)


def write_record(path: str, record: Dict[str, Any]) -> None:
    with open_for_write(path) as handle:
        yaml.safe_dump(plain(record), handle, sort_keys=True, default_flow_style=None)


def trace_rows(trace: Trace) -> List[List[str]]:
    rows = []
    for r in trace.records:
        rows.append([str(r.k)] + [format_float(v) for v in r.x_k] + [format_float(r.f_k)]
                    + [_cell(getattr(r, name)) for name in STEP_COLUMNS])
    if trace.final_point is not None:
        k = len(trace.records)
        f_final = trace.records[-1].f_next if trace.records else float("nan")
        rows.append([str(k)] + [format_float(v) for v in trace.final_point] + [format_float(f_final)]
                    + [""] * len(STEP_COLUMNS))
    return rows


def write_trace(path: str, trace: Trace) -> None:
    n = trace.x0.shape[0]
    header = ["k"] + [f"x_{j + 1}" for j in range(n)] + ["f"] + STEP_COLUMNS
    with open_for_write(path) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(trace_rows(trace))


@dataclass(frozen=True, eq=False)
class StoredTrace:
    """the parts of a written trace needed to re-run certification."""
    points: Point  # (N + 1, n)
    f_values: Tuple[float, ...]
    lambdas: Tuple[float, ...]

    @property
    def endpoint(self) -> Point:
        return self.points[-1]


def read_trace(path: str) -> StoredTrace:
    try:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            rows = list(csv.DictReader(handle))
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not rows:
        raise InvalidInputError(f"{path} holds no iterates")
    coords = sorted((c for c in rows[0] if c.startswith("x_")), key=lambda c: int(c[2:]))
    try:
        points = np.array([[float(row[c]) for c in coords] for row in rows])
        f_values = tuple(float(row["f"]) for row in rows)
        lambdas = tuple(float(row["lambda_k"]) for row in rows if row["lambda_k"])
    except (KeyError, ValueError) as exc:
        raise InvalidInputError(f"{path} is not a trace file: {exc}") from exc
    return StoredTrace(points, f_values, lambdas)


def write_habituation(path: str, profile: HabituationProfile) -> None:
    with open_for_write(path) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["k", "q_step", "log10_q_step"])
        for k, s in enumerate(profile.q_steps):
            writer.writerow([k, format_float(s), format_float(math.log10(s)) if s > 0 else ""])


def certificate_record(cert: TrapCertificate) -> Dict[str, Any]:
    return {"kind": cert.kind.value, "lambda_star": cert.lambda_star, "samples": cert.samples,
            "worst_violation": cert.worst_violation, "tolerance": cert.tolerance,
            "point": cert.point, "witness": cert.witness if cert.witness is not None else []}


def write_certificates(path: str, certificates: Sequence[TrapCertificate]) -> None:
    write_record(path, {"evidence": "sampled", "certificates": [certificate_record(c) for c in certificates]})


def summary_record(trace: Trace) -> Dict[str, Any]:
    record: Dict[str, Any] = {
        "regime": trace.regime.value,
        "status": trace.status.value,
        "iterations": len(trace.records),
        "x0": trace.x0,
        "final_point": trace.final_point if trace.final_point is not None else [],
        "final_f": trace.f_values[-1] if trace.records else None,
        "final_residual": trace.final_residual,
        "sum_gamma": trace.sum_gamma,
        "monotone_f": trace.is_monotone(),
        "box_certified": trace.box_certified,
        "aligned_v_steps": sum(1 for r in trace.records if r.v_tie == TieBreak.ALIGNED),
    }
    if trace.failure:
        record["failure"] = trace.failure
    return record


def emit_rate_data(trace: Trace, f_star: Optional[float] = None) -> RateReport:
    """builds the gap profile f(x^k) - f* with a least-squares fit of log(gap) over the tail.
    f* defaults to the final value. Reports inconclusive for short or unconverged traces, and
    finite_arrival when the iterates reach f* and stay there."""
    f_values = trace.f_values
    q_steps = tuple(float(s) for s in trace.q_steps)
    if f_values.size == 0:
        return RateReport(RateStatus.INCONCLUSIVE, float("nan"), (), q_steps, notes=["empty trace"])
    defaulted = f_star is None
    f_ref = float(f_values[-1]) if f_star is None else float(f_star)
    gaps = f_values - f_ref
    gap_tuple = tuple(float(g) for g in gaps)
    if trace.status != Status.CONVERGED:
        return RateReport(RateStatus.INCONCLUSIVE, f_ref, gap_tuple, q_steps,
                          notes=[f"run status {trace.status.value}"])
    arrived = np.abs(gaps) <= ARRIVAL_TOL * (1.0 + abs(f_ref))
    # first index after which every gap is zero
    settled = len(gaps)
    while settled > 0 and arrived[settled - 1]:
        settled -= 1
    if settled < len(gaps) - 1:
        return RateReport(RateStatus.FINITE_ARRIVAL, f_ref, gap_tuple, q_steps, arrival_k=settled)

    if len(trace.records) < MIN_RATE_STEPS:
        return RateReport(RateStatus.INCONCLUSIVE, f_ref, gap_tuple, q_steps,
                          notes=[f"fewer than {MIN_RATE_STEPS} steps"])

    usable = gaps[:-1] if defaulted else gaps
    ks = np.nonzero(usable > 0)[0]
    if ks.size < MIN_RATE_STEPS:
        return RateReport(RateStatus.INCONCLUSIVE, f_ref, gap_tuple, q_steps,
                          notes=["too few positive gaps to fit"])
    tail = ks[ks.size // 2:] if ks.size >= 2 * MIN_RATE_STEPS else ks
    fit = stats.linregress(tail.astype(float), np.log(usable[tail]))
    logger.debug(f"empirical tail slope {fit.slope:.6g} over {tail.size} iterates")
    return RateReport(RateStatus.FITTED, f_ref, gap_tuple, q_steps, slope=float(fit.slope),
                      intercept=float(fit.intercept))


def rate_record(report: RateReport) -> Dict[str, Any]:
    record: Dict[str, Any] = {"status": report.status.value, "f_star": report.f_star, "label": "empirical"}
    if report.slope is not None:
        record["empirical_tail_slope"] = report.slope
    if report.arrival_k is not None:
        record["arrival_k"] = report.arrival_k
    if report.notes:
        record["notes"] = list(report.notes)
    return record


def write_rate(path: str, report: RateReport) -> None:
    with open_for_write(path) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["k", "f_gap", "log_f_gap", "q_step"])
        for k, gap in enumerate(report.gaps):
            log_gap = format_float(math.log(gap)) if gap > 0 else ""
            step = format_float(report.q_steps[k]) if k < len(report.q_steps) else ""
            writer.writerow([k, format_float(gap), log_gap, step])


def write_sweep_summary(path: str, rows: Sequence[Dict[str, Any]]) -> None:
    columns = ["label", "exit_code", "status", "iterations", "final_f", "certificate", "final_point"]
    with open_for_write(path) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) if not isinstance(row[c], str) else row[c] for c in columns])
