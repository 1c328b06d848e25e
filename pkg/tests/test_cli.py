import csv
import io
import json
import math

import pytest

from heraldqkd import cli, validation
from heraldqkd.schemes import PAULI, amplifier_corrections, amplifier_closed_form_herald


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def point(argv, capsys):
    code, out, _ = run(["point", *argv], capsys)
    assert code == 0
    return json.loads(out)


def test_validate_passes_and_reports_deltas(capsys):
    code, out, _ = run(["validate"], capsys)
    assert code == cli.EXIT_OK
    lines = [l for l in out.splitlines() if l.startswith(("PASS", "FAIL"))]
    assert len(lines) == 8
    assert all(l.startswith("PASS") and "max|delta|=" in l for l in lines)


def test_injected_wrong_correction_fails_amplifier_check():
    wrong = dict(amplifier_corrections())
    wrong["h1v2"] = wrong["h1v2"] @ PAULI["Z"]
    results = validation.run_all(amplifier_corrections=wrong)
    by_name = {r.name: r for r in results}
    assert not by_name["amplifier conditional state"].passed
    assert by_name["relay conditional state"].passed


def test_validate_failure_exit_code(capsys, monkeypatch):
    wrong = dict(amplifier_corrections())
    wrong["h2v1"] = wrong["h2v1"] @ PAULI["X"]
    original = validation.run_all
    monkeypatch.setattr(validation, "run_all", lambda: original(amplifier_corrections=wrong))
    code, out, _ = run(["validate"], capsys)
    assert code == cli.EXIT_ORACLE
    assert "FAIL" in out


def test_point_relay_small_lambda(capsys):
    rec = point(["--scheme", "relay", "--lambda-ab", "1e-3", "--lambda-bb", "1e-3", "--analysis", "B"], capsys)
    assert rec["s_det"] == pytest.approx(1 + math.sqrt(2), abs=0.01)
    assert rec["rate_per_pulse"] == rec["rate_b"]


def test_point_amplifier_oracle(capsys):
    rec = point(["--scheme", "amplifier", "--source-model", "oracle", "--p", "0.5", "--t", "0.9",
                 "--eta-t", "0.1"], capsys)
    assert rec["herald_probability"] == pytest.approx(amplifier_closed_form_herald(0.5, 0.9, 0.1), abs=1e-12)


def test_point_zero_efficiency(capsys):
    rec = point(["--eta-det", "0"], capsys)
    assert rec["rate_per_pulse"] == 0
    assert rec["s_cc"] is None


def test_usage_errors(capsys):
    assert run(["point", "--bogus"], capsys)[0] == cli.EXIT_USAGE
    assert run(["point", "--scheme", "teleporter"], capsys)[0] == cli.EXIT_USAGE
    assert run(["point", "--eta-det", "1.5"], capsys)[0] == cli.EXIT_USAGE
    assert run(["sweep", "--step", "0"], capsys)[0] == cli.EXIT_USAGE
    assert run([], capsys)[0] == cli.EXIT_USAGE


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"scheme": "relay", "lambda-ab": 0.002, "lambda_bb": 0.003, "eta-det": 0.9}))
    rec = point(["--config", str(cfg)], capsys)
    assert rec["lambda_ab"] == 0.002 and rec["lambda_bb"] == 0.003 and rec["eta_det"] == 0.9
    assert rec["eta_c"] == 0.9
    rec = point(["--config", str(cfg), "--lambda-ab", "0.005"], capsys)
    assert rec["lambda_ab"] == 0.005 and rec["lambda_bb"] == 0.003


def test_bad_config_files(tmp_path, capsys):
    bad_key = tmp_path / "k.json"
    bad_key.write_text(json.dumps({"warp": 9}))
    assert run(["point", "--config", str(bad_key)], capsys)[0] == cli.EXIT_USAGE
    bad_json = tmp_path / "j.json"
    bad_json.write_text("{not json")
    assert run(["point", "--config", str(bad_json)], capsys)[0] == cli.EXIT_USAGE
    assert run(["point", "--config", str(tmp_path / "missing.json")], capsys)[0] == cli.EXIT_IO


def test_unwritable_output(tmp_path, capsys):
    target = tmp_path / "no" / "such" / "dir" / "out.csv"
    assert run(["sweep", "--output", str(target), "--stop", "0"], capsys)[0] == cli.EXIT_IO


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_sweep_csv_contract(tmp_path, capsys, monkeypatch):
    out = tmp_path / "s.csv"
    args = ["sweep", "--scheme", "relay", "--analysis", "A", "--eta-det", "0.99", "--stop", "20",
            "--multistart", "3", "--output", str(out)]
    assert run(args, capsys)[0] == 0
    raw = out.read_bytes()
    assert b"\r" not in raw
    assert raw.splitlines()[0].decode() == ",".join(cli.CSV_COLUMNS)
    rows = read_rows(out)
    assert [float(r["distance_km"]) for r in rows] == [0, 10, 20]
    rates = [float(r["rate_per_pulse"]) for r in rows]
    assert all(b <= a for a, b in zip(rates, rates[1:]))
    for r in rows:
        assert r["t_opt"] == "" and r["lambda_single_opt"] == ""
        assert float(r["log10_rate"]) == pytest.approx(math.log10(float(r["rate_per_pulse"])))
        assert len(r["rate_per_pulse"].replace("e", "E").split("E")[0].replace(".", "").lstrip("0")) <= 17
    # same request twice, then with worker processes: identical bytes
    assert run(args, capsys)[0] == 0
    assert out.read_bytes() == raw
    monkeypatch.setenv(cli.THREADS_ENV, "3")
    assert run(args, capsys)[0] == 0
    assert out.read_bytes() == raw


def test_sweep_below_threshold_emits_zero_rows(capsys):
    code, out, _ = run(["sweep", "--scheme", "relay", "--analysis", "B", "--eta-det", "0.9", "--stop", "20",
                        "--multistart", "2"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 3
    for r in rows:
        assert float(r["rate_per_pulse"]) == 0
        assert r["log10_rate"] == ""


def test_bad_thread_count(monkeypatch, capsys):
    monkeypatch.setenv(cli.THREADS_ENV, "zero")
    assert run(["sweep", "--stop", "0"], capsys)[0] == cli.EXIT_USAGE


def test_distances():
    assert cli.distances(0, 100, 10) == [float(d) for d in range(0, 101, 10)]
    assert cli.distances(5, 5, 1) == [5.0]
    with pytest.raises(cli.UsageError):
        cli.distances(10, 0, 1)
