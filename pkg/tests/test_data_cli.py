"""Count-series loader, bundled fixtures and the command-line front end."""

import csv
import io
import json
import math
import subprocess
import sys
from datetime import date

import numpy as np
import pytest

from ingarch_lab.bounds import corollary31_bound
from ingarch_lab.cli import main
from ingarch_lab.data import CountSeries, load_counts_csv, make_fixture, sample_fixture_path, save_counts_csv
from ingarch_lab.exceptions import DataError, ParameterError
from ingarch_lab.experiments import McDesign, McReport
from ingarch_lab.models import ModelSpec, CovariateSpec, model_to_config


def _write(tmp_path, text, name="c.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


# ---------------------------------------------------------------------------
# loader


def test_load_three_rows(tmp_path):
    p = _write(tmp_path, "date,count\n2021-01-01,3\n2021-01-02,0\n2021-01-03,7\n")
    s = load_counts_csv(p)
    np.testing.assert_array_equal(s.counts, [3, 0, 7])
    assert s.dates == (date(2021, 1, 1), date(2021, 1, 2), date(2021, 1, 3))
    assert not s.filled.any() and len(s) == 3 and s.label == "c"


def test_counts_only_file(tmp_path):
    s = load_counts_csv(_write(tmp_path, "count\n1\n2\n"))
    assert s.dates is None
    np.testing.assert_array_equal(s.counts, [1, 2])


@pytest.mark.parametrize("bad,msg", [
    ("-1", r"row 3: count -1 is negative"),
    ("2.5", r"row 3: count '2.5' is not an integer"),
    ("x", r"row 3: count 'x' is not an integer"),
    ("", r"row 3: missing count"),
])
def test_bad_count_names_row(tmp_path, bad, msg):
    p = _write(tmp_path, f"date,count\n2021-01-01,3\n2021-01-02,{bad}\n")
    with pytest.raises(DataError, match=msg):
        load_counts_csv(p)


def test_date_problems(tmp_path):
    with pytest.raises(DataError, match="row 3"):
        load_counts_csv(_write(tmp_path, "date,count\n2021-01-02,1\n2021-01-01,2\n"))
    with pytest.raises(DataError, match="ISO-8601"):
        load_counts_csv(_write(tmp_path, "date,count\n01/02/2021,1\n"))
    with pytest.raises(DataError, match="no column"):
        load_counts_csv(_write(tmp_path, "day,n\n1,2\n"))
    with pytest.raises(DataError, match="no data rows"):
        load_counts_csv(_write(tmp_path, "date,count\n"))
    with pytest.raises(DataError, match="cannot read"):
        load_counts_csv(tmp_path / "missing.csv")


def test_gaps_rejected_or_filled(tmp_path):
    p = _write(tmp_path, "date,count\n2021-01-01,4\n2021-01-04,9\n2021-01-05,1\n")
    with pytest.raises(DataError, match="2 missing day"):
        load_counts_csv(p)
    s = load_counts_csv(p, allow_gaps=True)
    np.testing.assert_array_equal(s.counts, [4, 4, 4, 9, 1])
    np.testing.assert_array_equal(s.filled, [False, True, True, False, False])
    assert s.dates[1] == date(2021, 1, 2)
    text = save_counts_csv(s)
    assert text.splitlines()[0] == "date,count,filled"
    assert text.splitlines()[2] == "2021-01-02,4,1"


def test_custom_columns(tmp_path):
    s = load_counts_csv(_write(tmp_path, "day,cases\n2021-03-01,5\n2021-03-02,6\n"),
                        date_col="day", count_col="cases")
    np.testing.assert_array_equal(s.counts, [5, 6])


def test_count_series_is_immutable():
    s = CountSeries(np.array([1, 2, 3]))
    with pytest.raises(ValueError):
        s.counts[0] = 5
    with pytest.raises(DataError):
        CountSeries(np.array([1, -2]))


@pytest.mark.parametrize("name,trend", [("sample_counts.csv", 0.0), ("sample_counts_trend.csv", 0.1)])
def test_bundled_fixtures(name, trend, tmp_path):
    path = sample_fixture_path(name)
    text = path.read_text()
    series = load_counts_csv(path)
    assert len(series) == 63 and series.dates[0] == date(2020, 7, 15)
    assert save_counts_csv(series) == text
    assert save_counts_csv(make_fixture(0, trend=trend)) == text
    out = tmp_path / "again.csv"
    save_counts_csv(series, out)
    assert load_counts_csv(out) == load_counts_csv(path, label="again")


def test_make_fixture_arguments():
    with pytest.raises(ParameterError):
        make_fixture(0, n_days=1)
    assert make_fixture(3) == make_fixture(3)
    assert make_fixture(3) != make_fixture(4)


# ---------------------------------------------------------------------------
# CLI


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_usage_errors(capsys):
    assert run([], capsys)[0] == 1
    assert run(["bound", "--a", "0.3", "--b", "0.2", "--bogus"], capsys)[0] == 1
    assert run(["bound", "--a", "0.3"], capsys)[0] == 1
    assert run(["simulate", "--workers", "0", "--seed", "1"], capsys)[0] == 1
    assert run(["simulate", "--a", "-0.5", "--seed", "1"], capsys)[0] == 1


def test_bound_table_matches_closed_form(capsys):
    code, out, _ = run(["bound", "--a", "0.3", "--b", "0.2", "--ez", "0.5", "--elam0", "1",
                        "--n-max", "12"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [int(r["n"]) for r in rows] == list(range(1, 13))
    for r in rows:
        ref = corollary31_bound(0.3, 0.2, 0.5, 1.0, int(r["n"]))
        assert float(r["raw_bound"]) == ref
        assert float(r["clamped"]) == min(ref, 1.0)


def test_bound_json_and_non_contraction(capsys):
    code, out, _ = run(["bound", "--a", "0.3", "--b", "0.2", "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["schema_version"] == 1 and len(doc["rows"]) == 20
    code, _, err = run(["bound", "--a", "0.6", "--b", "0.4"], capsys)
    assert code == 3 and "computation error" in err


def test_bound_rate_only_models(capsys):
    code, out, err = run(["bound", "--model", "loglinear", "--a", "0.3", "--b", "0.2",
                          "--n-max", "3"], capsys)
    assert code == 0 and err.strip()
    rows = list(csv.DictReader(io.StringIO(out)))
    assert float(rows[2]["raw_bound"]) == pytest.approx(0.5**3)
    code, out, err = run(["bound", "--model", "hybrid", "--a", "0.3", "--b", "0.2",
                          "--n-max", "2", "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0 and 0 < doc["rho"] < 1 and doc["certified"] is False


def test_trend_test_json(capsys):
    code, out, _ = run(["trend-test", "--input", str(sample_fixture_path("sample_counts_trend.csv")),
                        "--seasonal-period", "7"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == 1 and doc["kind"] == "trend-test"
    assert doc["n"] == 62 and doc["seasonal_period"] == 7
    for key in ("statistic", "critical", "p_value", "reject", "theta_hat", "sigma_hat"):
        assert key in doc
    assert doc["reject"] is True


def test_trend_test_csv_and_bad_data(tmp_path, capsys):
    code, out, _ = run(["trend-test", "--input", str(sample_fixture_path()), "--format", "csv"], capsys)
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert float(row["alpha"]) == 0.1
    bad = _write(tmp_path, "date,count\n2021-01-01,1\n2021-01-02,-1\n")
    code, _, err = run(["trend-test", "--input", str(bad)], capsys)
    assert code == 2 and "row 3" in err
    code, _, _ = run(["trend-test", "--input", str(tmp_path / "nope.csv")], capsys)
    assert code == 2
    const = _write(tmp_path, "count\n" + "4\n" * 30, "const.csv")
    assert run(["trend-test", "--input", str(const)], capsys)[0] == 3


def test_trend_test_invalid_plugin_writes_null(tmp_path, capsys):
    p = _write(tmp_path, "count\n" + "".join(f"{2**t}\n" for t in range(13)))
    code, out, _ = run(["trend-test", "--input", str(p)], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["statistic"] is None and doc["reject"] is None
    assert "invalid-plugin" in doc["flags"]


def test_simulate_seed_reporting_and_out(tmp_path, capsys):
    code, out, err = run(["simulate", "--n", "5"], capsys)
    assert code == 0 and err.startswith("seed: ")
    seed = int(err.split()[1])
    code, out2, err2 = run(["simulate", "--n", "5", "--seed", str(seed)], capsys)
    assert out2 == out and err2 == ""
    target = tmp_path / "path.csv"
    code, out3, _ = run(["simulate", "--n", "5", "--seed", str(seed), "--out", str(target)], capsys)
    assert code == 0 and out3 == "" and target.read_text() == out
    assert out.splitlines()[0] == "t,y,lambda,z" and len(out.splitlines()) == 7


def test_simulate_from_config(tmp_path, capsys):
    cfg = tmp_path / "m.ini"
    cfg.write_text(model_to_config(ModelSpec.softplus(0.2, 0.3, 2.0, CovariateSpec.constant(1.0))))
    code, out, _ = run(["simulate", "--config", str(cfg), "--n", "4", "--seed", "2",
                        "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0 and len(doc["y"]) == 5 and doc["seed"] == 2
    assert run(["simulate", "--config", str(tmp_path / "x.ini"), "--seed", "1"], capsys)[0] == 2


def test_beta_estimate(capsys):
    argv = ["beta-estimate", "--k", "2", "--n-max", "3", "--reps", "300", "--seed", "5"]
    code, out, _ = run(argv, capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [int(r["n"]) for r in rows] == [1, 2, 3]
    for r in rows:
        assert 0 <= float(r["estimate"]) <= 1
        assert float(r["bound"]) == corollary31_bound(0.3, 0.2, 0.5, 1.0, int(r["n"]))
    assert run(argv + ["--workers", "3"], capsys)[1] == out
    assert run(["beta-estimate", "--n-min", "4", "--n-max", "2", "--seed", "1"], capsys)[0] == 1


def test_power_study_fast_from_config(tmp_path, capsys):
    cfg = tmp_path / "design.ini"
    cfg.write_text(McDesign((0.2,), (40,), b1_values=(0.0, 0.1), reps=50, seed=7).to_config())
    code, out, err = run(["power-study", "--config", str(cfg), "--format", "json"], capsys)
    assert code == 0 and "wall time" in err
    rep = McReport.from_json(out)
    assert rep.seed == 7 and all(c.reps + c.invalid == 50 for c in rep.cells)
    code, out_fast, _ = run(["power-study", "--config", str(cfg), "--fast"], capsys)
    rows = list(csv.DictReader(io.StringIO(out_fast)))
    assert code == 0 and all(int(r["reps"]) <= 500 for r in rows) and len(rows) == 2
    bad = _write(tmp_path, "[design]\na = 2\nn = 5\n", "bad.ini")
    assert run(["power-study", "--config", str(bad)], capsys)[0] == 1


def test_validate_couplings(capsys):
    code, out, err = run(["validate-couplings", "--reps", "20000", "--seed", "0", "--format", "json"],
                         capsys)
    doc = json.loads(out)
    assert code == 0 and doc["passed"] is True and len(doc["cells"]) == 5
    assert "all cells pass" in err


def test_console_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ingarch_lab", "bound", "--a", "0.3", "--b", "0.2",
                           "--n-max", "2"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "n,raw_bound,clamped"
    proc = subprocess.run([sys.executable, "-m", "ingarch_lab"], capture_output=True, text=True)
    assert proc.returncode == 1
    assert math.isfinite(float(proc.returncode))
