"""
Command-line harness: load charts, run one analysis, write a CSV report

Usage:
    lcextension jumps --chart config/charts/disc-basic.yaml
    lcextension lcv --chart battery --out lcv.csv
    lcextension verify-weights --sigma 2 --ell 0.1 --delta 0.1
"""

import argparse
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import pandas as pd
import yaml
from pydantic import ValidationError

from src import __version__
from src.core.estimates import check_main_estimate
from src.core.exceptions import InequalityViolation, LcExtensionError, PreconditionError
from src.core.integrability import (
    hormander_weight_check,
    ladder_side_conditions,
    log_pole_limit,
    log_weight_membership,
)
from src.core.lcv import QuadratureSpec, lcv_closed_form, lcv_limit
from src.core.multiplier import jumping_numbers, multiplier_ideal, sigma_f
from src.core.snc_model import (
    MultiMonomialSection,
    SncChart,
    sample_battery,
    section_in_ideal,
    validate_chart,
)
from src.core.weights import (
    AuxParams,
    budget_check,
    budget_grid,
    normalisation_constant,
    normalization_threshold,
)
from src.schemas.chart import load_chart
from src.utils.config import RuntimeSettings, expand_path, load_config
from src.utils.logger import configure_logging, get_logger


logger = get_logger(__name__)

BATTERY = "battery"
FLOAT_FORMAT = "%.12g"


@dataclass(frozen=True)
class RunConfig:
    """
    Everything a command needs; the hash of this (minus out and threads) heads every report

    Attributes:
        command: Subcommand name
        chart: Chart file path or "battery"
        out: Output path; stdout when None
        threads: Worker count
        options: Command-specific parameters
        settings: Merged application configuration
        seed: Reserved; every computation is deterministic
    """

    command: str
    chart: Optional[str]
    out: Optional[Path]
    threads: int
    options: Dict[str, Any] = field(default_factory=dict)
    settings: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None

    @property
    def quadrature(self) -> QuadratureSpec:
        settings = dict(self.settings)
        if self.options.get("eps_schedule"):
            settings["quadrature"] = {
                **settings.get("quadrature", {}),
                "eps_schedule": self.options["eps_schedule"],
            }
        return QuadratureSpec.from_config(settings, threads=self.threads)

    def digest(self) -> str:
        record = {
            "command": self.command,
            "chart": self.chart,
            "options": self.options,
            "quadrature": self.settings.get("quadrature", {}),
            "weights": self.settings.get("weights", {}),
            "estimates": self.settings.get("estimates", {}),
            "seed": self.seed,
        }
        if self.chart and self.chart != BATTERY:
            record["chart_sha256"] = hashlib.sha256(Path(self.chart).read_bytes()).hexdigest()
        stable = json.dumps(record, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(stable.encode("utf-8")).hexdigest()


# ----------------------------------------------------------------------------
# Helpers
# ----------------------------------------------------------------------------


def load_charts(source: Optional[str]) -> List[SncChart]:
    """
    Load and validate the charts named by --chart

    Raises:
        PreconditionError: no chart given, a chart is invalid, or m1 is not a jumping number
    """
    if not source:
        raise PreconditionError("this command needs --chart FILE (or --chart battery)")
    charts = sample_battery() if source == BATTERY else [load_chart(Path(source))]

    for chart in charts:
        label = chart.name or source
        violations = validate_chart(chart)
        if violations:
            raise PreconditionError(f"chart {label} is invalid: " + "; ".join(violations))
        if not jumping_numbers(chart, chart.m1).m1_is_jump:
            raise PreconditionError(
                f"chart {label}: m1 = {chart.m1} is not a jumping number of 𝓘(φ_L + mψ)"
            )
    return charts


def _rational(value) -> str:
    return str(value)


def _exponents(exponents: Sequence[int]) -> str:
    return " ".join(str(a) for a in exponents)


def write_report(config: RunConfig, frame: pd.DataFrame) -> str:
    """
    Render a report: a "#" comment block followed by CSV

    Returns:
        Report text (also written to config.out, or stdout)
    """
    buffer = io.StringIO()
    buffer.write(f"# lcextension {__version__}\n")
    buffer.write(f"# command: {config.command}\n")
    buffer.write(f"# config_sha256: {config.digest()}\n")
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    text = buffer.getvalue()

    if config.out is None:
        sys.stdout.write(text)
    else:
        config.out.parent.mkdir(parents=True, exist_ok=True)
        config.out.write_text(text, encoding="utf-8")
        logger.info("cli.report.written path=%s rows=%d", config.out, len(frame))
    return text


# ----------------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------------


def cmd_jumps(config: RunConfig) -> pd.DataFrame:
    rows = []
    for chart in load_charts(config.chart):
        m_max = config.options.get("m_max") or chart.m1
        report = jumping_numbers(chart, m_max)
        for m in report.jumps:
            rows.append(
                {
                    "chart": chart.name,
                    "jump": _rational(m),
                    "value": float(m),
                    "is_m1": m == chart.m1,
                    "S_components": _exponents(report.S_components),
                    "reduced": report.reduced,
                }
            )
    return pd.DataFrame(
        rows, columns=["chart", "jump", "value", "is_m1", "S_components", "reduced"]
    )


def cmd_ideal(config: RunConfig) -> pd.DataFrame:
    rows = []
    for chart in load_charts(config.chart):
        report = jumping_numbers(chart, chart.m1)
        lower = multiplier_ideal(chart.combined_weight(chart.m0)).generators[0]
        upper = multiplier_ideal(chart.combined_weight(chart.m1)).generators[0]
        for section in chart.sections:
            in_lower = section_in_ideal(chart, section, chart.m0)
            rows.append(
                {
                    "chart": chart.name,
                    "section": _exponents(section.exponents),
                    "generator_m0": _exponents(lower),
                    "generator_m1": _exponents(upper),
                    "in_m0": in_lower,
                    "in_m1": section_in_ideal(chart, section, chart.m1),
                    "sigma_f": sigma_f(chart, report, section).value if in_lower else None,
                }
            )
    columns = ["chart", "section", "generator_m0", "generator_m1", "in_m0", "in_m1", "sigma_f"]
    return pd.DataFrame(rows, columns=columns)


def cmd_lcv(config: RunConfig) -> pd.DataFrame:
    spec = config.quadrature
    rows = []
    for chart in load_charts(config.chart):
        if not chart.sections:
            raise PreconditionError(f"chart {chart.name} carries no section")
        f = MultiMonomialSection(chart.sections)
        top, closed = lcv_closed_form(chart, f)
        sigmas = config.options.get("sigma") or list(range(chart.n + 1))
        for sigma in sigmas:
            result = lcv_limit(chart, f, sigma, spec)
            diagnostics = result.diagnostics
            for eps, raw in zip(diagnostics.eps, diagnostics.values):
                rows.append(
                    {
                        "chart": chart.name,
                        "sigma": sigma,
                        "class": result.kind.value,
                        "value": result.value,
                        "eps": eps,
                        "raw_integral": raw,
                        "residual": diagnostics.residual,
                        "closed_form": closed.value if sigma == top else None,
                    }
                )
    columns = ["chart", "sigma", "class", "value", "eps", "raw_integral", "residual", "closed_form"]
    return pd.DataFrame(rows, columns=columns)


def _aux_params(options: Dict[str, Any]) -> AuxParams:
    return AuxParams(
        eps=options["eps"],
        ell=options["ell"],
        sigma=options["sigma"],
        delta=options["delta"],
    )


def cmd_verify_weights(config: RunConfig) -> pd.DataFrame:
    options = config.options
    params = _aux_params(options)
    weights_cfg = config.settings.get("weights", {})
    points = options.get("points") or int(weights_cfg.get("grid_points", 2000))
    decades = options.get("decades") or float(weights_cfg.get("t_span_decades", 6.0))

    psi_min = options.get("psi_min")
    if psi_min is None:
        psi_min = normalization_threshold(params)
    t_grid = budget_grid(params, psi_min, points, decades)
    report = budget_check(params, t_grid)

    frame = pd.DataFrame(report.to_records())
    frame.insert(0, "abs_psi_min", psi_min)
    frame.insert(0, "normalisation_constant", normalisation_constant())
    if not report.passed:
        write_report(config, frame)
        worst = report.failures[0]
        raise InequalityViolation(
            f"weight inequality {worst.name} fails with margin {worst.worst_margin:.3e}",
            witness=worst.witness,
        )
    return frame


def cmd_extend(config: RunConfig) -> pd.DataFrame:
    options = config.options
    params = _aux_params(options)
    spec = config.quadrature
    factor = float(config.settings.get("estimates", {}).get("tolerance_factor", 3.0))

    frames = []
    for chart in load_charts(config.chart):
        if not chart.sections:
            raise PreconditionError(f"chart {chart.name} carries no section")
        report = check_main_estimate(
            chart, MultiMonomialSection(chart.sections), params, spec, tolerance_factor=factor
        )
        records = report.to_records()
        for record in records:
            record["chart"] = chart.name
            record["shift"] = report.shift
        frames.append(pd.DataFrame(records))

    columns = ["chart", "shift", "sigma", "terms", "lhs", "rhs", "margin", "tolerance", "passed"]
    frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
    frame = frame.reindex(columns=columns)
    failed = frame[~frame["passed"].astype(bool)] if len(frame) else frame
    if len(failed):
        write_report(config, frame)
        row = failed.iloc[0]
        raise InequalityViolation(
            f"extension estimate fails on chart {row['chart']} at sigma={row['sigma']}: "
            f"lhs={row['lhs']:.6g} rhs={row['rhs']:.6g}",
            witness={"chart": row["chart"], "sigma": int(row["sigma"])},
        )
    return frame


def cmd_integrability(config: RunConfig) -> pd.DataFrame:
    options = config.options
    rows: List[Dict[str, Any]] = []

    for step, item in enumerate(ladder_side_conditions(options["s"], options["delta"])):
        rows.append(
            {
                "check": "ladder",
                "parameter": f"step={step} next={item.next_exponent:.12g}",
                "value": item.exponent,
                "passed": item.auxiliary_finite,
            }
        )

    for r0 in options["r0"]:
        limit = log_pole_limit(r0, config.quadrature.eps_schedule)
        rows.append(
            {
                "check": "log_pole",
                "parameter": f"r0={r0:g}",
                "value": limit.value,
                "passed": abs(limit.value - math.pi / 2) <= 0.01 * math.pi / 2,
            }
        )

    for a in (-1, 0, 1):
        for p in (0.0, 0.5):
            for s in (0.0, 1.0, 2.0, 3.0):
                result = log_weight_membership(a, p, s)
                rows.append(
                    {
                        "check": "membership",
                        "parameter": f"a={a} p={p:g} s={s:g}",
                        "value": result.value,
                        "passed": result.agrees,
                    }
                )

    if config.chart:
        for chart in load_charts(config.chart):
            for sigma in range(1, chart.n + 1):
                report = hormander_weight_check(chart, sigma, options["eps"], options["ell"])
                rows.append(
                    {
                        "check": "hormander",
                        "parameter": f"chart={chart.name} sigma={sigma}",
                        "value": report.c_prime,
                        "passed": report.passed,
                    }
                )

    return pd.DataFrame(rows, columns=["check", "parameter", "value", "passed"])


COMMANDS: Dict[str, Callable[[RunConfig], pd.DataFrame]] = {
    "jumps": cmd_jumps,
    "ideal": cmd_ideal,
    "lcv": cmd_lcv,
    "verify-weights": cmd_verify_weights,
    "extend": cmd_extend,
    "integrability": cmd_integrability,
}


# ----------------------------------------------------------------------------
# Argument parsing
# ----------------------------------------------------------------------------


def _float_list(text: str) -> List[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _int_list(text: str) -> List[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--chart", help="Chart file, or 'battery' for the built-in battery")
    common.add_argument("--out", type=Path, help="Output CSV (stdout when omitted)")
    common.add_argument("--threads", type=int, help="Worker threads (LCEXT_THREADS overrides)")
    common.add_argument("--config", type=Path, help="Extra YAML configuration file")

    weight = argparse.ArgumentParser(add_help=False)
    weight.add_argument("--eps", type=float, default=0.01, help="ε in (0, 1)")
    weight.add_argument("--ell", type=float, default=1.0, help="ℓ > 0")
    weight.add_argument("--sigma", type=int, default=1, help="σ ≥ 1")
    weight.add_argument("--delta", type=float, default=1.0, help="δ > 0")

    parser = argparse.ArgumentParser(
        prog="lcextension",
        description="Multiplier ideals, lc-measures and L² extension estimates on model charts",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    jumps = sub.add_parser("jumps", parents=[common], help="Jumping numbers up to m_max")
    jumps.add_argument("--m-max", dest="m_max", help="Upper end (p/q); m1 when omitted")

    sub.add_parser("ideal", parents=[common], help="Multiplier ideals and section classes")

    lcv = sub.add_parser("lcv", parents=[common], help="lc-measure trichotomy table")
    lcv.add_argument("--sigma", type=_int_list, help="Comma-separated σ values (default 0..n)")
    lcv.add_argument("--eps-schedule", dest="eps_schedule", type=_float_list)

    verify = sub.add_parser(
        "verify-weights", parents=[common, weight], help="Curvature budget margin table"
    )
    verify.add_argument("--points", type=int, help="Grid points")
    verify.add_argument("--decades", type=float, help="Decades of |ψ| covered")
    verify.add_argument(
        "--psi-min", dest="psi_min", type=float, help="Smallest |ψ| (skips normalization)"
    )

    extend = sub.add_parser("extend", parents=[common, weight], help="Staged extension estimate")
    extend.add_argument("--eps-schedule", dest="eps_schedule", type=_float_list)

    integ = sub.add_parser(
        "integrability", parents=[common], help="Continuation-lemma integrals"
    )
    integ.add_argument("--s", type=float, default=3.0, help="Starting weight exponent")
    integ.add_argument("--delta", type=float, default=0.5, help="Ladder split δ in (0, 1)")
    integ.add_argument("--r0", type=_float_list, default=[0.1, 0.5, 0.9], help="Disc radii")
    integ.add_argument("--eps", type=float, default=0.01, help="ε of the Hörmander weight")
    integ.add_argument("--ell", type=float, default=1.0, help="ℓ of the Hörmander weight")

    return parser


def build_run_config(args: argparse.Namespace) -> RunConfig:
    settings = load_config(expand_path(str(args.config)) if args.config else None)
    log = settings.get("logging", {})
    configure_logging(
        level=log.get("level", "INFO"),
        log_file=expand_path(log["file"]) if log.get("file") else None,
        format_string=log.get("format"),
    )
    env = RuntimeSettings()
    threads = env.threads or args.threads or int(settings.get("runtime", {}).get("threads", 1))

    reserved = {"command", "chart", "out", "threads", "config"}
    options = {k: v for k, v in vars(args).items() if k not in reserved}
    return RunConfig(
        command=args.command,
        chart=args.chart,
        out=args.out,
        threads=max(1, int(threads)),
        options=options,
        settings=settings,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one command

    Returns:
        0 on success, 2 for invalid input, 3 for numeric non-convergence,
        4 for a violated inequality
    """
    args = build_parser().parse_args(argv)
    try:
        config = build_run_config(args)
        logger.info(
            "cli.start command=%s chart=%s threads=%d", config.command, config.chart, config.threads
        )
        frame = COMMANDS[config.command](config)
        write_report(config, frame)
        return 0
    except ValidationError as e:
        locations = "; ".join(
            ".".join(str(p) for p in error["loc"]) + ": " + error["msg"] for error in e.errors()
        )
        print(f"error: invalid chart file: {locations}", file=sys.stderr)
        return 2
    except (yaml.YAMLError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except LcExtensionError as e:
        logger.error("cli.failed command=%s exit_code=%d error=%s", args.command, e.exit_code, e)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


def run() -> None:
    """Console-script entry point"""
    sys.exit(main())


if __name__ == "__main__":
    run()
