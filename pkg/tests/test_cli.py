import csv
import io
import math

import pytest

from osched.cli import EXIT_NUMERIC, EXIT_USAGE, EXIT_VALIDATION, build_parser, main
from osched.experiments import CSV_HEADER

import osched.cli as cli_mod


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_fig2_schema_and_count(capsys):
    assert main(["fig2", "--slots", "2000", "--seed", "1"]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    rows = _rows(text)
    assert len(rows) == 60
    assert {r["policy"] for r in rows} == {"unicast", "multicast", "median-user",
                                           "median-threshold", "optimal-threshold"}
    keys = [(r["policy"], float(r["var"])) for r in rows]
    assert keys == sorted(keys)
    assert all(r["source"] == "sim" and r["sweep"] == "snr_db" for r in rows)
    assert len({r["seed"] for r in rows}) == 60


def test_fig3_count_and_analytic_rows(capsys):
    assert main(["fig3", "--slots", "1000", "--with-analytic"]) == 0
    rows = _rows(capsys.readouterr().out)
    sim = [r for r in rows if r["source"] == "sim"]
    ana = [r for r in rows if r["source"] == "analytic"]
    assert len(sim) == 50 and len(ana) == 50
    assert all(float(r["std_err"]) == 0 and r["seed"] == "" for r in ana)
    assert sorted({int(r["var"]) for r in sim}) == list(range(5, 55, 5))


def test_six_significant_digits(capsys):
    main(["fig2", "--slots", "500", "--snr-list", "10"])
    for r in _rows(capsys.readouterr().out):
        mantissa = r["mean_goodput"].split("e")[0].replace(".", "").replace("-", "").lstrip("0")
        assert len(mantissa) <= 6


def test_fig2_byte_identical_across_parallelism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["fig2", "--slots", "3000", "--seed", "5", "--parallel", "1", "--out", str(a)]) == 0
    assert main(["fig2", "--slots", "3000", "--seed", "5", "--parallel", "4", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_optimal_p_table(capsys):
    assert main(["optimal-p", "--snr-min", "0", "--snr-max", "50", "--step", "5"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert float(rows[0]["p_star"]) == pytest.approx(0.533838, abs=1e-6)
    assert float(rows[-1]["p_star"]) == pytest.approx(0.102099, abs=1e-6)
    ps = [float(r["p_star"]) for r in rows]
    assert all(x > y for x, y in zip(ps, ps[1:]))


@pytest.mark.parametrize("argv", [
    ["validate", "--users", "1", "--snr-db", "0", "--p", "0", "--slots", "200000"],
    ["validate", "--users", "5", "--snr-db", "10", "--p", "0.99", "--slots", "100000"],
    ["validate", "--users", "6", "--snr-db", "3", "--policy", "median-user", "--slots", "100000"],
])
def test_validate_passes(argv, capsys):
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert "PASS" in out


def test_validate_single_user_reproduces_e1_value(capsys):
    main(["validate", "--users", "1", "--snr-db", "0", "--p", "0", "--slots", "1000"])
    line = next(l for l in capsys.readouterr().out.splitlines() if l.startswith("tx_rate"))
    assert float(line.split()[1]) == pytest.approx(0.860347, abs=1e-6)


def test_validate_failure_exit_code(monkeypatch, capsys):
    monkeypatch.setattr(cli_mod, "validation_report", lambda *a: (["fake"], 9.0))
    assert main(["validate", "--slots", "10"]) == EXIT_VALIDATION
    assert "FAIL" in capsys.readouterr().out


def test_numeric_failure_exit_code(monkeypatch, capsys):
    def boom(*a, **k):
        raise cli_mod.NumericFailureError("diverged")

    monkeypatch.setattr(cli_mod, "snr_sweep", boom)
    assert main(["fig2", "--slots", "10"]) == EXIT_NUMERIC
    assert "diverged" in capsys.readouterr().err


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["run", "--policy", "nope"])
    assert info.value.code == EXIT_USAGE
    assert main(["run", "--slots", "0"]) == EXIT_USAGE
    assert main(["optimal-p", "--step", "-1"]) == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == EXIT_USAGE


def test_run_command(capsys):
    assert main(["run", "--users", "4", "--snr-db", "5", "--policy", "threshold:0.3",
                 "--slots", "5000", "--seed", "2"]) == 0
    captured = capsys.readouterr()
    rows = _rows(captured.out)
    assert len(rows) == 1 and rows[0]["policy"] == "threshold:0.3"
    assert "mean_served" in captured.err


def test_environment_variables(monkeypatch, capsys):
    monkeypatch.setenv("OSCHED_SLOTS", "1234")
    monkeypatch.setenv("OSCHED_SEED", "77")
    monkeypatch.setenv("OSCHED_POLICY", "multicast")
    args = build_parser().parse_args(["run"])
    assert args.slots == 1234 and args.seed == 77 and args.policy.name == "multicast"
    # flags win over the environment
    args = build_parser().parse_args(["run", "--slots", "9"])
    assert args.slots == 9
    monkeypatch.setenv("OSCHED_WITH_ANALYTIC", "1")
    assert build_parser().parse_args(["fig2"]).with_analytic is True


def test_bad_environment_value_exits_2(monkeypatch):
    monkeypatch.setenv("OSCHED_SLOTS", "many")
    with pytest.raises(SystemExit) as info:
        build_parser()
    assert info.value.code == EXIT_USAGE
