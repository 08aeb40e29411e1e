import csv

from validation_suite.config import ALPHAS, REFERENCE_RATES, THRESHOLDS, reference_rate
from validation_suite.metrics.rates import check_level, check_monotone, check_power, mc_standard_error
from validation_suite.runner import C_VALUES, MODELS, SIZES, _write_csv, _write_html_report, evaluate
from varform.schemas import RejectionCell, RejectionTable


def _reference_table(replications=1000, override=None):
    cells = []
    for (model, c, n), rates in REFERENCE_RATES.items():
        for alpha, rate in zip(ALPHAS, rates):
            proportion = (override or {}).get((model, c, n, alpha), rate)
            cells.append(
                RejectionCell(
                    model=model,
                    c=c,
                    n=n,
                    alpha=alpha,
                    rejections=round(proportion * replications),
                    replications=replications,
                    failures=0,
                    proportion=proportion,
                    std_error=mc_standard_error(proportion, replications),
                )
            )
    return RejectionTable(cells=cells, replications=replications, seed=1, family="span(const,t2)")


def test_reference_table_is_complete():
    assert len(REFERENCE_RATES) == len(MODELS) * len(C_VALUES) * len(SIZES)
    assert reference_rate("sin", 0.0, 100, 0.05) == 0.042
    assert reference_rate("sqrt", 0.0, 200, 0.10) == 0.094
    assert reference_rate("sin", 1.0, 200, 0.05) == 0.987


def test_level_band_includes_allowance():
    result = check_level(0.06, 0.042, 1000, THRESHOLDS.level_allowance)
    assert result["passed"]
    assert not check_level(0.10, 0.042, 1000, THRESHOLDS.level_allowance)["passed"]


def test_power_band():
    assert check_power(0.96, 0.987, 0.03)["passed"]
    assert not check_power(0.90, 0.987, 0.03)["passed"]


def test_monotone_allows_noise_within_slack():
    assert check_monotone([0.05, 0.2, 0.19], [0.007, 0.013, 0.012], 2.0)
    assert not check_monotone([0.05, 0.3, 0.1], [0.007, 0.014, 0.009], 2.0)


def test_reference_rates_pass_every_check():
    rows = evaluate(_reference_table())
    assert rows
    assert all(row["passed"] for row in rows)
    checks = {row["check"] for row in rows}
    assert checks == {"level", "monotone", "power", "power_reference"}


def test_inflated_level_fails():
    rows = evaluate(_reference_table(override={("exp", 0.0, 100, 0.05): 0.12}))
    failed = [row for row in rows if not row["passed"]]
    assert len(failed) == 1
    assert (failed[0]["check"], failed[0]["model"], failed[0]["n"]) == ("level", "exp", 100)


def test_reports_written(tmp_path):
    rows = evaluate(_reference_table())
    csv_path = tmp_path / "summary.csv"
    html_path = tmp_path / "report.html"
    _write_csv(csv_path, rows)
    _write_html_report(html_path, rows, 1.0, 1000, 1)

    with csv_path.open(encoding="utf-8", newline="") as handle:
        assert len(list(csv.DictReader(handle))) == len(rows)
    assert "PASS" in html_path.read_text(encoding="utf-8")


def test_only_sin_power_gates_the_run():
    weak = {
        ("exp", 0.5, 200, 0.05): 0.05,
        ("exp", 1.0, 200, 0.05): 0.05,
        ("sqrt", 0.5, 200, 0.05): 0.12,
        ("sqrt", 1.0, 200, 0.05): 0.19,
    }
    rows = evaluate(_reference_table(override=weak))
    power = {row["model"]: row for row in rows if row["check"].startswith("power")}
    assert power["sin"]["check"] == "power" and power["sin"]["gating"]
    for model in ("exp", "sqrt"):
        assert power[model]["check"] == "power_reference"
        assert not power[model]["gating"]
        assert not power[model]["passed"]
    assert all(row["passed"] for row in rows if row["gating"])


def test_low_sin_power_fails():
    rows = evaluate(_reference_table(override={("sin", 1.0, 200, 0.05): 0.90}))
    failed = [row for row in rows if row["gating"] and not row["passed"]]
    assert [(row["check"], row["model"]) for row in failed] == [("power", "sin")]
