import csv
import io
import json
import os
import subprocess
import sys

import pytest

from ewens_spectra import cli


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def strip_time(text):
    doc = json.loads(text)
    doc.pop("generated_at")
    return doc


def test_parse_clt_example():
    cfg = cli.parse_args("clt --statistic xtilde --theta 1 --a-grid 1e2,1e3,1e4 --replicates 10000 --seed 42".split())
    assert cfg.command == "clt" and cfg.theta == 1.0 and cfg.seed == 42
    assert cfg.options["a_grid"] == [100.0, 1000.0, 10000.0]
    assert cfg.options["replicates"] == 10000


def test_parse_constants_example():
    cfg = cli.parse_args("constants --kind c2 --alpha 0 --beta sqrt2 --n 1e7".split())
    assert cfg.options["kind"] == "c2" and cfg.options["n"] == 10**7 and cfg.options["beta"] == "sqrt2"


@pytest.mark.parametrize(
    "argv,needle",
    [
        ("clt --statistic xtilde --a-grid 10 --theta -1", "theta must be"),
        ("clt --statistic xtilde --a-grid 10,5", "strictly increasing"),
        ("za --a-grid 10 --replicates 0", "integer >= 1"),
        ("constants --kind c1 --beta notanumber", "expected a decimal"),
        ("za --a-grid 10 --bogus", "unrecognized arguments"),
    ],
)
def test_config_errors_exit_2(argv, needle, capsys):
    code, _, err = run(argv.split(), capsys)
    assert code == 2
    assert needle in err


def test_help_lists_flags(capsys):
    code, out, _ = run(["clt", "--help"], capsys)
    assert code == 0
    for flag in ("--statistic", "--a-grid", "--replicates", "--seed", "--theta", "--threads", "--format", "--dump", "--output"):
        assert flag in out
    code, out, _ = run(["--help"], capsys)
    for command in cli.COMMANDS:
        assert command in out


def test_verify_lemma_calcul3_csv(tmp_path, capsys):
    path = tmp_path / "c3.csv"
    code, out, _ = run(["verify-lemma", "--which", "calcul3", "--pmax", "50", "--format", "csv", "-o", str(path)], capsys)
    assert code == 0
    assert out.startswith("PASS")
    rows = list(csv.DictReader(io.StringIO(path.read_text())))
    assert len(rows) == 50 * 49 // 2
    assert list(rows[0]) == ["p", "q", "closed_form", "quadrature", "abs_diff"]
    assert max(float(r["abs_diff"]) for r in rows) < 1e-8


def test_constants_ell(capsys):
    code, out, _ = run(["constants", "--kind", "ell", "--kappa", "sqrt2", "--n", "1e6"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == cli.SCHEMA_VERSION
    assert abs(doc["record"]["value"] - 1 / 6) < 1e-3
    assert "certificate" in doc["record"]


def test_constants_var_rational(capsys):
    code, out, _ = run(["constants", "--kind", "var-rational", "--r", "3", "--s", "2", "--n", "1e5"], capsys)
    assert code == 0
    assert json.loads(out)["rows"][0]["value"] == pytest.approx(5 / 36)


def test_constants_not_coprime(capsys):
    code, _, err = run(["constants", "--kind", "var-rational", "--r", "4", "--s", "2", "--n", "1e3"], capsys)
    assert code == 2 and "gcd" in err


def test_rerun_identical_modulo_timestamp(tmp_path, capsys):
    argv = ["clt", "--statistic", "x-interval", "--a-grid", "10,100", "--replicates", "2000", "--seed", "5"]
    outs, codes = [], []
    for i, threads in enumerate(("1", "3")):
        path = tmp_path / f"r{i}.json"
        codes.append(run(argv + ["-o", str(path), "--threads", threads], capsys)[0])
        outs.append(strip_time(path.read_text()))
    assert codes[0] == codes[1] and codes[0] in (0, 1)
    assert outs[0] == outs[1]


def test_seventeen_digits():
    assert cli.to_json({"x": 0.1}) == '{"x": 0.10000000000000001}'
    assert cli.to_json([1, True, None, float("nan")]) == "[1, true, null, null]"


def test_verdict_failure_exit_1(capsys):
    # a tolerance nobody can meet
    code, _, err = run(["verify-lemma", "--which", "fourier", "--k-max", "10", "--tol", "1e-12"], capsys)
    assert code == 1
    assert "FAIL" in err


def test_io_error_exit_3(tmp_path, capsys):
    code, _, err = run(["verify-lemma", "--which", "fourier", "-o", str(tmp_path / "missing" / "x.json")], capsys)
    assert code == 3
    assert "missing" in err


def test_threads_env_fallback(monkeypatch):
    monkeypatch.setenv("EWENS_SPECTRA_THREADS", "3")
    assert cli.parse_args(["za", "--a-grid", "10"]).threads == 3
    assert cli.parse_args(["za", "--a-grid", "10", "--threads", "2"]).threads == 2


def test_sample_commands(capsys):
    code, out, _ = run(["sample-gem", "--count", "2", "--tail-bound", "1e-3", "--seed", "3"], capsys)
    doc = json.loads(out)
    assert code == 0 and len(doc["samples"]) == 2
    s = doc["samples"][0]
    assert len(s["sticks"]) == len(s["phases"])
    code, out, _ = run(["sample-poisson", "--epsilon", "0.01", "--x-max", "100", "--seed", "3"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["samples"][0]["epsilon"] == 0.01


def test_count_and_translate_and_za(capsys):
    code, out, _ = run(["count", "--a", "1", "--b", "10", "--replicates", "500", "--dump"], capsys)
    doc = json.loads(out)
    assert code == 0 and len(doc["values"]) == 500
    code, out, _ = run(["translate", "--s-grid", "10,1e4", "--replicates", "20000"], capsys)
    assert code == 0
    code, out, _ = run(["za", "--a-grid", "1e3,1e4", "--replicates", "2000", "--format", "csv"], capsys)
    assert out.splitlines()[0] == "A,median,iqr,target"


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "ewens_spectra.cli", "verify-lemma", "--which", "transfo"],
        capture_output=True,
        text=True,
        env={**os.environ},
    )
    assert proc.returncode == 0
    assert "PASS" in proc.stderr
