"""Batch validation runner: reproduce the published rejection-rate table and check it."""

from __future__ import annotations

import argparse
import csv
import html
import json
import logging
import time
from pathlib import Path

from validation_suite.config import ALPHAS, REFERENCE_RATES, THRESHOLDS, reference_rate
from validation_suite.metrics.rates import check_level, check_monotone, check_power
from varform.config import DEFAULTS, resolve_seed
from varform.montecarlo import rejection_rates, table_scenarios
from varform.schemas import RejectionTable, TestConfig

logger = logging.getLogger(__name__)

MODELS = ("sin", "exp", "sqrt")
C_VALUES = (0.0, 0.5, 1.0)
SIZES = (50, 100, 200)


def run_sweep(reps: int, seed: int, samples: int, workers: int, models: tuple[str, ...] = MODELS) -> RejectionTable:
    """Simulate every (model, c, n) cell of the reference table."""

    config = TestConfig(alphas=list(ALPHAS), critval_samples=samples, critval_seed=seed, workers=workers)
    scenarios = table_scenarios(models, C_VALUES, SIZES, negative_variance="fold")
    return rejection_rates(scenarios, "const,t2", config, replications=reps, seed=seed, workers=workers)


def evaluate(table: RejectionTable) -> list[dict]:
    """One row per check: level cells at c=0, power at the headline cell, monotonicity in c.

    Power rows of models with no tolerance are reported with gating=False.
    """

    rows: list[dict] = []
    models = sorted({cell.model for cell in table.cells}, key=MODELS.index)

    for model in models:
        for n in SIZES:
            for alpha in ALPHAS:
                cell = table.lookup(model, 0.0, n, alpha)
                result = check_level(cell.proportion, reference_rate(model, 0.0, n, alpha), cell.replications,
                                     THRESHOLDS.level_allowance)
                rows.append(_row("level", cell, reference_rate(model, 0.0, n, alpha), result))

                cells = [table.lookup(model, c, n, alpha) for c in C_VALUES]
                monotone = check_monotone(
                    [c.proportion for c in cells], [c.std_error for c in cells], THRESHOLDS.monotonicity_slack_se
                )
                rows.append(
                    {
                        "check": "monotone",
                        "model": model,
                        "c": "0/0.5/1",
                        "n": n,
                        "alpha": alpha,
                        "proportion": "/".join(f"{c.proportion:.3f}" for c in cells),
                        "reference": "",
                        "band": f"{THRESHOLDS.monotonicity_slack_se:g} se",
                        "passed": monotone,
                        "gating": True,
                    }
                )

        cell = table.lookup(model, THRESHOLDS.power_c, THRESHOLDS.power_n, THRESHOLDS.power_alpha)
        reference = reference_rate(model, cell.c, cell.n, cell.alpha)
        tolerance = THRESHOLDS.power_tolerance.get(model)
        if tolerance is None:
            result = check_power(cell.proportion, reference, 0.0)
            rows.append(_row("power_reference", cell, reference, result, gating=False))
        else:
            rows.append(_row("power", cell, reference, check_power(cell.proportion, reference, tolerance)))
    return rows


def _row(check: str, cell, reference: float, result: dict, gating: bool = True) -> dict:
    return {
        "check": check,
        "model": cell.model,
        "c": f"{cell.c:g}",
        "n": cell.n,
        "alpha": cell.alpha,
        "proportion": f"{cell.proportion:.3f}",
        "reference": f"{reference:.3f}",
        "band": f"{result['band']:.3f}",
        "passed": bool(result["passed"]),
        "gating": gating,
    }


def _status(row: dict) -> str:
    if not row["gating"]:
        return "INFO"
    return "PASS" if row["passed"] else "FAIL"


def _write_csv(output_path: Path, rows: list[dict]) -> None:
    fieldnames = ["check", "model", "c", "n", "alpha", "proportion", "reference", "band", "passed", "gating"]
    with output_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def _write_html_report(output_path: Path, rows: list[dict], pass_rate: float, reps: int, seed: int) -> None:
    table_rows = "\n".join(
        (
            f"<tr><td>{html.escape(row['check'])}</td>"
            f"<td>{html.escape(row['model'])}</td>"
            f"<td>{html.escape(str(row['c']))}</td>"
            f"<td>{row['n']}</td>"
            f"<td>{row['alpha']:g}</td>"
            f"<td>{html.escape(str(row['proportion']))}</td>"
            f"<td>{html.escape(str(row['reference']))}</td>"
            f"<td>{html.escape(str(row['band']))}</td>"
            f"<td>{_status(row)}</td></tr>"
        )
        for row in rows
    )

    output_path.write_text(
        """<!doctype html>
<html>
<head><meta charset=\"utf-8\"><title>Variance-Form Test Validation Report</title></head>
<body>
<h1>Variance-Form Test Validation Report</h1>
<p>Replications per cell = {reps}, seed = {seed}; level allowance = {allowance:.3f}, monotonicity slack = {slack:g} s.e.</p>
<p>Overall pass rate: {pass_rate:.2%}</p>
<table border=\"1\" cellpadding=\"6\" cellspacing=\"0\">
<thead><tr><th>Check</th><th>Model</th><th>c</th><th>n</th><th>alpha</th><th>Rate</th><th>Reference</th><th>Band</th><th>Status</th></tr></thead>
<tbody>
{rows}
</tbody>
</table>
</body>
</html>
""".format(
            reps=reps,
            seed=seed,
            allowance=THRESHOLDS.level_allowance,
            slack=THRESHOLDS.monotonicity_slack_se,
            pass_rate=pass_rate,
            rows=table_rows,
        ),
        encoding="utf-8",
    )


def run_validation(reps: int, seed: int, samples: int, workers: int, out_dir: str) -> int:
    start = time.perf_counter()
    table = run_sweep(reps, seed, samples, workers)
    rows = evaluate(table)

    gated = [row for row in rows if row["gating"]]
    check_count = len(gated)
    pass_rate = sum(1 for row in gated if row["passed"]) / check_count if check_count else 0.0

    output_dir = Path(out_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    csv_path = output_dir / "validation_summary.csv"
    html_path = output_dir / "validation_report.html"
    _write_csv(csv_path, rows)
    _write_html_report(html_path, rows, pass_rate, reps, seed)

    elapsed = time.perf_counter() - start
    print(f"[VF][VALIDATION] Completed | checks={check_count} pass_rate={pass_rate:.2%} elapsed_s={elapsed:.1f}")
    print(json.dumps({"csv": str(csv_path), "html": str(html_path)}, indent=2))

    if any(not row["passed"] for row in gated):
        return 1
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varform-validate")
    parser.add_argument("--reps", type=int, default=1000, help="replications per table cell")
    parser.add_argument("--seed", type=int, help="master seed (fallback: VARFORM_SEED, then the builtin default)")
    parser.add_argument("--samples", type=int, default=DEFAULTS.critval_samples, help="limit-law draws")
    parser.add_argument("--workers", type=int, default=1, help="worker threads")
    parser.add_argument("--out-dir", default="validation_suite/reports", help="directory for CSV and HTML output")
    parser.add_argument("--log-level", default="WARNING")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s %(message)s")
    if len(REFERENCE_RATES) != len(MODELS) * len(C_VALUES) * len(SIZES):
        raise SystemExit("reference table is incomplete")
    return run_validation(args.reps, resolve_seed(args.seed), args.samples, args.workers, args.out_dir)


if __name__ == "__main__":
    raise SystemExit(main())
