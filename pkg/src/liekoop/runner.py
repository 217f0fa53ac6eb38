"""Command dispatch: turns a system and run settings into a report and CSV rows."""
from __future__ import annotations

import csv
import datetime as _dt
import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import RunConfig, SystemDefinition
from .errors import DirectionMismatch, DivisionNearZero
from .koopman import (alpha_from_values, check_rescalable, rescaled_field, semiconjugacy_profile,
                      verify_eigenfunction)
from .lift import lift_gap_check

SCHEMA = "liekoop.report/1"
EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2

REPORT_FIELDS = ("omega_hat", "max_deviation", "residual", "rescalable", "direction", "alpha",
                 "max_gap_tilde", "max_gap_canonical")


@dataclass
class RunResult:
    report: dict
    header: list[str]
    rows: list[list] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.report["passed"])

    @property
    def exit_code(self) -> int:
        return EXIT_PASS if self.passed else EXIT_FAIL

    def json_text(self, timestamp: bool = True) -> str:
        report = dict(self.report)
        report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds") if timestamp else None
        return json.dumps(_jsonable(report), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header)
        for row in self.rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
        return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _base(command, system: SystemDefinition, config: RunConfig) -> dict:
    report = {k: None for k in REPORT_FIELDS}
    report.update(
        schema=SCHEMA,
        version=__version__,
        command=command,
        system=system.id,
        group=system.group.name,
        basis=list(system.group.basis_names),
        settings={
            "tol": config.tol, "collin_tol": config.collin_tol, "zero_tol": config.zero_tol,
            "fd_step": config.fd_step, "rk4_step": config.rk4_step, "horizon": config.horizon,
            "residual_tol": config.residual_tol, "grid": system.grid, "random": system.random, "seed": system.seed,
        },
        passed=False,
        details={},
    )
    return report


def _coord_header(system):
    return list(system.chart.names)


def _dz_header(system, prefix="dzV"):
    return [f"{prefix}_{i + 1}" for i in range(system.group.d)]


def run_verify(system: SystemDefinition, config: RunConfig) -> RunResult:
    samples = system.samples()
    rep = verify_eigenfunction(system.map_z, system.field, samples, config.tol, config.fd_step,
                               horizon=config.horizon, step=config.rk4_step)
    report = _base("verify", system, config)
    report.update(
        passed=rep.is_eigenfunction,
        omega_hat=rep.omega_hat,
        max_deviation=rep.max_deviation,
        residual=rep.semiconjugacy_residual,
        details={"samples_used": rep.samples_used, "failing_samples": rep.failing[:50],
                 "failing_count": len(rep.failing), "residual_start": samples[0],
                 "nonvanishing_field_on_samples": system.field.min_norm(samples) > 0},
    )
    header = ["index", *_coord_header(system), *_dz_header(system), "deviation"]
    rows = [[i, *x, *v, d] for i, (x, v, d) in enumerate(zip(samples, rep.values, rep.deviations))]
    return RunResult(report, header, rows)


def run_rescale(system: SystemDefinition, config: RunConfig) -> RunResult:
    samples = system.samples()
    rep = check_rescalable(system.map_z, system.field, samples, config.collin_tol, config.zero_tol, config.fd_step)
    report = _base("rescale", system, config)
    details = {"collinearity_ratio": rep.collinearity_ratio, "min_norm": rep.min_norm,
               "singular_values": rep.singular_values, "reason": rep.reason, "omega_target": None,
               "rescaled_max_deviation": None}
    passed = rep.rescalable
    alpha = None
    if rep.rescalable:
        target = system.omega_target if system.omega_target is not None else rep.direction
        details["omega_target"] = target
        try:
            alpha = alpha_from_values(rep.values, np.asarray(target, dtype=float), rep.direction, config.zero_tol)
        except (DirectionMismatch, DivisionNearZero) as err:
            details["reason"] = str(err)
            report.update(passed=False, rescalable=rep.rescalable, direction=rep.direction, details=details)
            return RunResult(report, *_rescale_rows(system, samples, rep.values, None))
        scaled = rescaled_field(system.map_z, system.field, target, config.zero_tol, config.fd_step)
        check = verify_eigenfunction(system.map_z, scaled, samples, config.tol, config.fd_step)
        details["rescaled_max_deviation"] = check.max_deviation
        details["rescaled_omega_hat"] = check.omega_hat
        details["alpha_sign"] = "positive" if np.all(alpha > 0) else "negative" if np.all(alpha < 0) else "mixed"
        passed = check.is_eigenfunction
    report.update(passed=passed, rescalable=rep.rescalable, direction=rep.direction, alpha=alpha, details=details)
    return RunResult(report, *_rescale_rows(system, samples, rep.values, alpha))


def _rescale_rows(system, samples, values, alpha):
    header = ["index", *_coord_header(system), *_dz_header(system), "alpha"]
    rows = [[i, *x, *v, (alpha[i] if alpha is not None else "")] for i, (x, v) in enumerate(zip(samples, values))]
    return header, rows


def run_residual(system: SystemDefinition, config: RunConfig) -> RunResult:
    samples = system.samples()
    report = _base("residual", system, config)
    if system.omega_target is not None:
        omega, source = system.omega_target, "omega_target"
    else:
        rep = verify_eigenfunction(system.map_z, system.field, samples, config.tol, config.fd_step)
        omega, source = rep.omega_hat, "omega_hat"
        report["omega_hat"] = omega
    x0 = system.anchor()
    times, dist = semiconjugacy_profile(system.map_z, system.field, omega, x0, config.horizon, config.rk4_step)
    residual = float(dist.max())
    report.update(passed=residual <= config.residual_tol, residual=residual,
                  details={"omega": omega, "omega_source": source, "start": x0})
    rows = [[i, t, d] for i, (t, d) in enumerate(zip(times, dist))]
    return RunResult(report, ["index", "t", "distance"], rows)


def run_lift_check(system: SystemDefinition, config: RunConfig) -> RunResult:
    rep = lift_gap_check(system.map_z, system.anchor(), h=config.fd_step)
    report = _base("lift-check", system, config)
    report.update(passed=rep.passed, max_gap_tilde=rep.max_gap_tilde, max_gap_canonical=rep.max_gap_canonical,
                  details={"abelian": rep.abelian, "domain_radius": rep.domain_radius, "anchor": system.anchor(),
                           "gap_tol": rep.tol})
    header = ["index", *_coord_header(system), "gap_tilde", "gap_canonical"]
    rows = [[i, *y, a, b] for i, (y, a, b) in enumerate(zip(rep.probes, rep.gaps_tilde, rep.gaps_canonical))]
    return RunResult(report, header, rows)


def run_suite(systems: list[SystemDefinition], config: RunConfig) -> RunResult:
    """Run every command on every system and compare with the declared expectations."""
    checks = []
    for system in systems:
        expect = system.expect
        verify = run_verify(system, config)
        checks.append((system.id, "verify", expect.get("eigenfunction", True), verify.passed,
                       verify.report["max_deviation"]))
        rescale = run_rescale(system, config)
        checks.append((system.id, "rescale", expect.get("rescalable", True), rescale.passed,
                       rescale.report["details"]["collinearity_ratio"]))
        lift = run_lift_check(system, config)
        checks.append((system.id, "lift-check", True, lift.passed, lift.report["max_gap_tilde"]))
        if expect.get("eigenfunction", True):
            res = run_residual(system, config)
            checks.append((system.id, "residual", True, res.passed, res.report["residual"]))
    ok = [expected == observed for _, _, expected, observed, _ in checks]
    report = {k: None for k in REPORT_FIELDS}
    report.update(
        schema=SCHEMA, version=__version__, command="suite", system=[s.id for s in systems], group=None,
        basis=None, passed=all(ok),
        settings={"tol": config.tol, "collin_tol": config.collin_tol, "zero_tol": config.zero_tol,
                  "fd_step": config.fd_step, "rk4_step": config.rk4_step, "horizon": config.horizon,
                  "residual_tol": config.residual_tol},
        details={"checks": [{"system": s, "check": c, "expected": e, "observed": o, "metric": m, "ok": k}
                            for (s, c, e, o, m), k in zip(checks, ok)],
                 "failed": sum(not k for k in ok)},
    )
    rows = [[s, c, e, o, m, k] for (s, c, e, o, m), k in zip(checks, ok)]
    return RunResult(report, ["system", "check", "expected", "observed", "metric", "ok"], rows)


DISPATCH = {"verify": run_verify, "rescale": run_rescale, "residual": run_residual, "lift-check": run_lift_check}


def run(command: str, system: SystemDefinition, config: RunConfig) -> RunResult:
    if command == "suite":
        return run_suite([system], config)
    return DISPATCH[command](system, config)
