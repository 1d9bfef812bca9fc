"""Command-line entry point.

Subcommands::

    glshrink compare --config cfg.json [--out DIR] [--seed S] [--threads N|auto]
    glshrink prop1 --config cfg.json ...
    glshrink shrinkage-curve --kernel horseshoe --tau 0.01 --x-grid 0:10:0.1
    glshrink validate-kernel --kernel horseshoe

Exit codes: 0 success, 2 invalid input, 3 output could not be written.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import asdict

import numpy as np

from ._errors import GLShrinkError, UsageError
from .config import ConfigError, ExperimentConfig, parse_rule
from .kernels import horseshoe, kernel_from_name, validate_kernel
from .risk import BetaMin, ThetaSpec, estimate_risk
from .shrinkage import ShrinkageQuery, shrinkage_integrals

log = logging.getLogger("glshrink")

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 3

CSV_COLUMNS = [
    "rule_id", "n", "q_n", "b_or_signal_id", "replicates",
    "fdr", "se_fdr", "fnr", "se_fnr", "risk", "se_risk",
    "hamming_norm", "se_hamming", "target", "seed",
]


class OutputError(GLShrinkError):
    pass


def risk_row(estimate, spec: ThetaSpec, signal_id, seed) -> dict:
    return {
        "rule_id": estimate.rule_id,
        "n": spec.n,
        "q_n": spec.q_n,
        "b_or_signal_id": signal_id,
        "replicates": estimate.replicates,
        "fdr": estimate.fdr,
        "se_fdr": estimate.se_fdr,
        "fnr": estimate.fnr,
        "se_fnr": estimate.se_fnr,
        "risk": estimate.risk,
        "se_risk": estimate.se_risk,
        "hamming_norm": estimate.hamming_normalized,
        "se_hamming": estimate.se_hamming,
        "target": estimate.target,
        "seed": seed,
    }


def rows_to_csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def atomic_write(path, text):
    """Write via a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _output_path(config: ExperimentConfig, out_dir):
    if out_dir:
        return os.path.join(out_dir, os.path.basename(config.output_path))
    return config.output_path


def write_results(rows, csv_path):
    atomic_write(csv_path, rows_to_csv(rows, CSV_COLUMNS))
    json_path = os.path.splitext(csv_path)[0] + ".json"
    atomic_write(json_path, json.dumps(rows, indent=2) + "\n")
    return csv_path, json_path


def _theta_spec(config: ExperimentConfig, b) -> ThetaSpec:
    return ThetaSpec(
        n=config.n,
        q_n=config.resolved_q_n,
        signal=BetaMin(b),
        sign_mode=config.sign_mode,
        placement=config.placement,
    )


def _load_config(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required", "--config")
    try:
        config = ExperimentConfig.load(args.config)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", args.config) from exc
    if args.seed is not None:
        config.seed = args.seed
    if args.threads is not None:
        config.threads = args.threads
    return config


def run_compare(config: ExperimentConfig, out_dir=None):
    kernel = config.kernel_object()
    q_n = config.resolved_q_n
    rules = [parse_rule(tok, kernel, config.n, q_n, config.tau_constant) for tok in config.rules]
    rows = []
    for rule in rules:
        for b in config.b_list:
            spec = _theta_spec(config, b)
            log.info("rule %s, b=%g", rule.rule_id, b)
            estimate = estimate_risk(rule, spec, config.replicates, config.seed, config.threads)
            rows.append(risk_row(estimate, spec, b, config.seed))
    return write_results(rows, _output_path(config, out_dir)), rows


def run_proposition1(config: ExperimentConfig, out_dir=None):
    """Fixed-tau rule for an ``a > 1/2`` kernel beside the horseshoe control."""
    kernel = config.kernel_object()
    if not kernel.a > 0.5:
        raise ConfigError(f"prop1 needs a kernel with a > 1/2, got {kernel.name} (a={kernel.a:g})", config.kernel)
    q_n = config.resolved_q_n
    rows = []
    for k in (kernel, horseshoe()):
        rule = parse_rule("fixed:auto", k, config.n, q_n, config.tau_constant)
        rule = type(rule)(rule.variant, k, rule.threshold, label=f"fixed:auto[{k.name}]")
        for b in config.b_list:
            spec = _theta_spec(config, b)
            estimate = estimate_risk(rule, spec, config.replicates, config.seed, config.threads)
            rows.append(risk_row(estimate, spec, b, config.seed))
    return write_results(rows, _output_path(config, out_dir)), rows


def parse_x_grid(text: str) -> np.ndarray:
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise ConfigError(f"x grid must be LO:HI:STEP, got {text!r}", text) from exc
    if not (math.isfinite(lo) and math.isfinite(hi) and math.isfinite(step)) or step <= 0 or hi < lo:
        raise ConfigError(f"invalid x grid {text!r}", text)
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(count), 12)


def run_shrinkage_curve(kernel_name: str, tau: float, x_grid: str, out_dir=None):
    try:
        kernel = kernel_from_name(kernel_name)
    except UsageError as exc:
        raise ConfigError(str(exc), kernel_name) from exc
    if not 0.0 < tau < 1.0:
        raise ConfigError(f"tau must lie in (0, 1), got {tau}", str(tau))
    rows = []
    for x in parse_x_grid(x_grid):
        num, den, _ = shrinkage_integrals(ShrinkageQuery(float(x), tau, kernel))
        weight = num / den
        rows.append({"x": float(x), "e_one_minus_kappa": weight, "e_kappa": 1.0 - weight})
    text = rows_to_csv(rows, ["x", "e_one_minus_kappa", "e_kappa"])
    if out_dir is None:
        sys.stdout.write(text)
        return None, rows
    path = os.path.join(out_dir, "shrinkage_curve.csv")
    atomic_write(path, text)
    return path, rows


def _threads_arg(text):
    if text == "auto":
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("thread count must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--threads", type=_threads_arg, help="worker threads, N or 'auto'")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="glshrink", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("compare", parents=[common], help="risk table for several rules")
    sub.add_parser("prop1", parents=[common], help="a > 1/2 kernel versus horseshoe")
    curve = sub.add_parser("shrinkage-curve", parents=[common], help="E(1-kappa|x,tau) on a grid")
    curve.add_argument("--kernel", default="horseshoe")
    curve.add_argument("--tau", type=float, required=True)
    curve.add_argument("--x-grid", required=True, help="LO:HI:STEP")
    check = sub.add_parser("validate-kernel", parents=[common], help="grid check of the bounds on L")
    check.add_argument("--kernel", default="horseshoe")
    check.add_argument("--M", type=float)
    check.add_argument("--c0", type=float)
    check.add_argument("--t0", type=float)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.threads is None and "GLSHRINK_THREADS" in os.environ:
        try:
            args.threads = _threads_arg(os.environ["GLSHRINK_THREADS"])
        except argparse.ArgumentTypeError as exc:
            print(f"error: GLSHRINK_THREADS: {exc}", file=sys.stderr)
            return EXIT_USAGE

    try:
        if args.command == "compare":
            (csv_path, _), _ = run_compare(_load_config(args), args.out)
            print(csv_path)
        elif args.command == "prop1":
            (csv_path, _), _ = run_proposition1(_load_config(args), args.out)
            print(csv_path)
        elif args.command == "shrinkage-curve":
            path, _ = run_shrinkage_curve(args.kernel, args.tau, args.x_grid, args.out)
            if path:
                print(path)
        else:
            kernel = kernel_from_name(args.kernel)
            report = validate_kernel(kernel, M=args.M, c0=args.c0, t0=args.t0)
            print(json.dumps({"kernel": kernel.name, **asdict(report)}, indent=2))
            return EXIT_OK if report.passed else EXIT_USAGE
    except OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        token = f" [{exc.token}]" if exc.token else ""
        print(f"error{token}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GLShrinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
