"""Command line: run the test on data, run the simulation study, emit critical values."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from .config import resolve_seed
from .errors import UsageError, VarformError
from .families import resolve_family
from .formats import critval_csv, emit, load_sample, rejection_table_csv, report_json, write_trajectory
from .limits import Law, critical_values
from .montecarlo import rejection_rates, table_scenarios
from .pipeline import TestRun, execute_test
from .schemas import RejectionTable, RunConfig

logger = logging.getLogger(__name__)

# flag dest -> RunConfig field
_FLAG_FIELDS = {
    "family": "family",
    "order": "order",
    "kernel": "kernel",
    "method": "method",
    "bandwidth": "bandwidth",
    "t0": "t0",
    "beta_method": "beta_method",
    "beta_bandwidth_factor": "beta_bandwidth_factor",
    "studentize": "studentize",
    "alpha": "alphas",
    "reps": "reps",
    "model": "models",
    "c": "c",
    "n": "n",
    "law": "law",
    "samples": "samples",
    "workers": "workers",
    "negative_variance": "negative_variance",
    "out": "out",
    "trajectory_out": "trajectory_out",
}


def _bandwidth(text: str) -> float | str:
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("bandwidth must be 'auto' or a positive number") from exc


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    parser.add_argument("--seed", type=int, help="seed (fallback: VARFORM_SEED, then the builtin default)")
    parser.add_argument("--alpha", type=float, action="append", help="test level; repeatable")
    parser.add_argument("--samples", type=int, help="draws for the limit-law simulation")
    parser.add_argument("--workers", type=int, help="worker threads")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--log-level", default="WARNING", help="logging level for stderr")


def _add_test_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--family", help="basis names, e.g. 'const,t2', 't2@const' or 'exp_t'")
    parser.add_argument("--order", type=int, help="order r of the builtin difference sequence")
    parser.add_argument("--kernel", help="kernel shape (epanechnikov, biweight, triangular)")
    parser.add_argument("--method", choices=["nw", "local_linear"], help="smoother")
    parser.add_argument("--bandwidth", type=_bandwidth, help="'auto' (cross-validation) or a fixed h")
    parser.add_argument("--t0", type=float, help="right end of the transformed process, in (0, 1)")
    parser.add_argument("--beta-method", dest="beta_method", choices=["nw", "local_linear"], help="outer smoother of beta_hat")
    parser.add_argument(
        "--beta-bandwidth-factor", dest="beta_bandwidth_factor", type=float, help="beta_hat bandwidth as a multiple of h_CV"
    )
    parser.add_argument(
        "--studentize", action=argparse.BooleanOptionalAction, default=None, help="divide residuals by their leverage in beta_hat"
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varform", description="Martingale-transform test for the form of a variance function")
    sub = parser.add_subparsers(dest="command", required=True)

    test = sub.add_parser("test", help="test a variance family on a 't,y' CSV")
    test.add_argument("input", help="CSV with header 't,y'")
    test.add_argument("--trajectory-out", dest="trajectory_out", help="CSV of (t, Lambda_n, C_n, D_n, T_n Lambda_n)")
    _add_test_options(test)
    _add_common(test)

    simulate = sub.add_parser("simulate", help="rejection rates over simulated scenarios")
    simulate.add_argument("--model", action="append", choices=["sin", "exp", "sqrt"], help="variance model; repeatable")
    simulate.add_argument("--c", type=float, action="append", help="deviation size c; repeatable")
    simulate.add_argument("--n", type=int, action="append", help="sample size; repeatable")
    simulate.add_argument("--reps", type=int, help="replications per scenario")
    simulate.add_argument(
        "--negative-variance", dest="negative_variance", choices=["error", "fold"], help="policy for negative variance"
    )
    _add_test_options(simulate)
    _add_common(simulate)

    critval = sub.add_parser("critval", help="quantiles of the limit laws")
    critval.add_argument("--law", choices=[law.value for law in Law], help="int_W2 (default) or sup_W")
    _add_common(critval)
    return parser


def load_run_config(args: argparse.Namespace) -> tuple[RunConfig, int]:
    """Merge config file and flags (flags win) and resolve the seed."""

    values: dict = {}
    if args.config:
        path = Path(args.config)
        try:
            values = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file {args.config}: {exc}") from exc
        if not isinstance(values, dict):
            raise UsageError(f"config file {args.config} must hold a JSON object")

    for dest, name in _FLAG_FIELDS.items():
        value = getattr(args, dest, None)
        if value is not None:
            values[name] = value

    file_seed = values.pop("seed", None)
    try:
        config = RunConfig(**values)
    except ValidationError as exc:
        raise UsageError(f"invalid configuration: {exc.errors()[0]['loc']}: {exc.errors()[0]['msg']}") from exc
    seed = resolve_seed(args.seed, file_seed)
    return config.model_copy(update={"seed": seed}), seed


def cmd_test(input_path: str, config: RunConfig, seed: int) -> TestRun:
    sample = load_sample(input_path)
    family = resolve_family(config.family)
    return execute_test(sample, family, config.test_config(seed))


def cmd_simulate(config: RunConfig, seed: int) -> RejectionTable:
    scenarios = table_scenarios(config.models, config.c, config.n, negative_variance=config.negative_variance)
    return rejection_rates(
        scenarios,
        resolve_family(config.family),
        config.test_config(seed),
        replications=config.reps,
        seed=seed,
        workers=config.workers,
    )


def cmd_critval(config: RunConfig, seed: int) -> dict[float, float]:
    return critical_values(config.alphas, config.law, config.samples, seed, workers=config.workers)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s %(message)s", stream=sys.stderr)

    try:
        config, seed = load_run_config(args)
        if args.command == "test":
            run = cmd_test(args.input, config, seed)
            emit(report_json(run.report), config.out)
            if config.trajectory_out:
                write_trajectory(config.trajectory_out, run)
            smallest = min(config.alphas)
            return 1 if run.report.rejects(smallest) else 0

        if args.command == "simulate":
            table = cmd_simulate(config, seed)
            emit(rejection_table_csv(table), config.out)
            print(f"[VF][SIM] Completed | cells={len(table.cells)} reps={table.replications} seed={seed}", file=sys.stderr)
            return 0

        quantiles = cmd_critval(config, seed)
        emit(critval_csv(config.law, quantiles, config.samples, seed), config.out)
        return 0
    except VarformError as exc:
        print(f"varform: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
