"""CSV and JSON formats for samples, reports, trajectories and tables."""

from __future__ import annotations

import csv
import io
import json
import math
import re
from pathlib import Path
from typing import Iterable

from .core import DesignGrid, Sample
from .errors import ContractError, UsageError
from .pipeline import TestRun
from .schemas import RejectionTable, TestReport


def load_sample(path: str | Path) -> Sample:
    """Read a two-column CSV with header 't,y' into a Sample."""

    csv_path = Path(path)
    if not csv_path.exists():
        raise UsageError(f"input file not found: {path}")

    with csv_path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [cell.strip().lower() for cell in header] != ["t", "y"]:
            raise UsageError(f"{path}: header must be 't,y', got {header!r}")

        points: list[float] = []
        responses: list[float] = []
        for row_number, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise UsageError(f"{path}: row {row_number} must have two columns, got {len(row)}")
            try:
                t, y = float(row[0]), float(row[1])
            except ValueError as exc:
                raise UsageError(f"{path}: row {row_number} is not numeric: {row!r}") from exc
            if not (math.isfinite(t) and math.isfinite(y)):
                raise UsageError(f"{path}: row {row_number} has a non-finite value")
            if not 0.0 <= t <= 1.0:
                raise UsageError(f"{path}: row {row_number} has t={t} outside [0, 1]")
            if points and t <= points[-1]:
                raise UsageError(f"{path}: row {row_number} breaks strictly increasing t ({t} after {points[-1]})")
            points.append(t)
            responses.append(y)

    if not points:
        raise UsageError(f"{path}: no data rows")
    try:
        return Sample(DesignGrid.from_points(points), responses)
    except ContractError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def write_sample(path: str | Path, sample: Sample) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "y"])
        for t, y in zip(sample.points, sample.responses):
            writer.writerow([repr(float(t)), repr(float(y))])


_FLOAT_TOKEN = re.compile(r'"@float:(\d+)@"')


def _float17(value: float) -> str:
    if not math.isfinite(value):
        return json.dumps(value)
    text = f"{value:.17g}"
    return text if any(ch in text for ch in ".eE") else text + ".0"


def _tokenize(value, floats: list[str]):
    if isinstance(value, float):
        floats.append(_float17(value))
        return f"@float:{len(floats) - 1}@"
    if isinstance(value, dict):
        return {key: _tokenize(item, floats) for key, item in value.items()}
    if isinstance(value, list):
        return [_tokenize(item, floats) for item in value]
    return value


def report_json(report: TestReport) -> str:
    """Report as JSON with every float written to 17 significant digits."""

    floats: list[str] = []
    text = json.dumps(_tokenize(report.model_dump(mode="json"), floats), indent=2, sort_keys=True)
    return _FLOAT_TOKEN.sub(lambda match: floats[int(match.group(1))], text) + "\n"


def trajectory_rows(run: TestRun) -> list[dict]:
    parts, transformed = run.parts, run.transformed
    rows = []
    for j, t in enumerate(parts.lambda_.points):
        rows.append(
            {
                "t": repr(float(t)),
                "lambda": repr(float(parts.lambda_.values[j])),
                "c_part": repr(float(parts.c_part.values[j])),
                "d_part": repr(float(parts.d_part.values[j])),
                "transformed": repr(float(transformed.values[j])) if j < transformed.values.size else "",
            }
        )
    return rows


def write_trajectory(path: str | Path, run: TestRun) -> None:
    _write_rows(path, ["t", "lambda", "c_part", "d_part", "transformed"], trajectory_rows(run))


def _write_rows(path: str | Path, fieldnames: list[str], rows: Iterable[dict]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        handle.write(_rows_text(fieldnames, rows))


def _rows_text(fieldnames: list[str], rows: Iterable[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def _g6(value: float) -> str:
    return f"{value:.6g}"


def rejection_table_csv(table: RejectionTable) -> str:
    """One row per (model, c); a proportion and a standard-error column per (n, alpha)."""

    sizes = sorted({cell.n for cell in table.cells})
    alphas = sorted({cell.alpha for cell in table.cells})
    fieldnames = ["model", "c"]
    for n in sizes:
        for alpha in alphas:
            fieldnames += [f"n{n}_a{alpha:g}", f"n{n}_a{alpha:g}_se"]
    fieldnames += ["replications", "failures", "bootstrap"]

    rows: list[dict] = []
    keys: list[tuple[str, float]] = []
    for cell in table.cells:
        if (cell.model, cell.c) not in keys:
            keys.append((cell.model, cell.c))
    for model, c in keys:
        row: dict = {"model": model, "c": _g6(c), "bootstrap": "not computed"}
        failures = 0
        for cell in table.cells:
            if cell.model == model and cell.c == c:
                row[f"n{cell.n}_a{cell.alpha:g}"] = _g6(cell.proportion)
                row[f"n{cell.n}_a{cell.alpha:g}_se"] = _g6(cell.std_error)
                failures += cell.failures if cell.alpha == alphas[0] else 0
        row["replications"] = table.replications
        row["failures"] = failures
        rows.append(row)
    return _rows_text(fieldnames, rows)


def critval_csv(law: str, quantiles: dict[float, float], samples: int, seed: int) -> str:
    rows = [
        {"law": law, "alpha": _g6(alpha), "quantile": _g6(value), "samples": samples, "seed": seed}
        for alpha, value in sorted(quantiles.items())
    ]
    return _rows_text(["law", "alpha", "quantile", "samples", "seed"], rows)


def emit(text: str, out: str | None) -> None:
    """Write text to a file, or to stdout when no path is given."""

    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
