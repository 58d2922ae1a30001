import json
import subprocess
import sys

import pytest

from hinderfit.cli import main


def run(capsysbinary, *argv):
    code = main([str(a) for a in argv])
    out, err = capsysbinary.readouterr()
    return code, out.decode(), err.decode()


@pytest.fixture()
def synth_csv(tmp_path, capsysbinary):
    code, out, _ = run(capsysbinary, "synth", "--family", "sth", "--k", 1, "--gu", 0.05, "--qh", 1000,
                       "--th", 100, "--t0", 0, "--t1", 300, "--n", 200, "--sigma", 0.02, "--seed", 3)
    assert code == 0
    p = tmp_path / "s.csv"
    p.write_text(out)
    return p


def test_eval_boundary(capsysbinary):
    code, out, _ = run(capsysbinary, "eval", "--family", "sth", "--k", 2, "--x", 0)
    doc = json.loads(out)
    assert code == 0
    assert (doc["h"], doc["dh_dx"], doc["g_factor"], doc["f"]) == (1.0, 0.5, 0.5, 1.0)


def test_eval_logistic(capsysbinary):
    code, out, _ = run(capsysbinary, "eval", "--family", "logistic", "--x", 3)
    assert json.loads(out)["h"] == pytest.approx(1.905148, abs=1e-6)


def test_eval_multi_needs_weights(capsysbinary):
    code, _, err = run(capsysbinary, "eval", "--family", "multi", "--x", 1)
    assert code == 2 and json.loads(err)["error"] == "usage_error"
    code, out, _ = run(capsysbinary, "eval", "--family", "multi", "--weights", "1:0.5,8:0.5", "--x", 1)
    assert code == 0 and json.loads(out)["family"] == "multi(k=[1, 8])"


def test_trend_on_increasing_file(tmp_path, capsysbinary):
    p = tmp_path / "inc.csv"
    p.write_text("t,Q\n" + "".join(f"{i},{i}\n" for i in range(1, 9)))
    code, out, _ = run(capsysbinary, "trend", p)
    doc = json.loads(out)
    assert code == 0 and doc["passed"]
    assert doc["Z"] == pytest.approx(3.3404, abs=1e-4)


def test_trend_gate_failure_exit_code(tmp_path, capsysbinary):
    p = tmp_path / "dec.csv"
    p.write_text("t,Q\n" + "".join(f"{i},{20 - i}\n" for i in range(10)))
    code, out, err = run(capsysbinary, "trend", p)
    assert code == 2 and not json.loads(out)["passed"]
    assert json.loads(err)["error"] == "gate_failure"


def test_synth_is_byte_stable(capsysbinary):
    args = ("synth", "--family", "logistic", "--gu", 0.1, "--qh", 10, "--th", 5, "--t0", 0, "--t1", 10,
            "--n", 20, "--sigma", 0.1, "--seed", 7)
    assert run(capsysbinary, *args)[1] == run(capsysbinary, *args)[1]


def test_fit_forecast_pipeline(synth_csv, tmp_path, capsysbinary):
    report = tmp_path / "r.json"
    curves = tmp_path / "c.csv"
    code, _, err = run(capsysbinary, "fit", synth_csv, "--out", report, "--curves", curves, "--grid", 50)
    assert code == 0, err
    doc = json.loads(report.read_text())
    assert doc["chosen"]["label"] == "sth(k=1)"
    assert curves.read_text().splitlines()[0] == "t,x_minus_xh,Q_model,g_model,Q_data,rel_residual"
    first = report.read_bytes()
    assert run(capsysbinary, "fit", synth_csv, "--out", report)[0] == 0
    assert report.read_bytes() == first

    code, out, _ = run(capsysbinary, "forecast", report, "--to", 400, "--step", 50)
    lines = out.splitlines()
    assert code == 0 and lines[0] == "t,Q,g,x_minus_xh"
    assert [float(r.split(",")[0]) for r in lines[1:]] == [300.0, 350.0, 400.0]
    assert json.loads(report.read_text()) == doc


def test_fit_options(synth_csv, capsysbinary):
    code, out, _ = run(capsysbinary, "fit", synth_csv, "--families", "logistic", "--truncate", 100)
    doc = json.loads(out)
    assert code == 0
    assert [c["label"] for c in doc["candidates"]] == ["exponential", "logistic"]
    assert doc["input"]["n"] == 100


def test_fit_renamed_columns(tmp_path, synth_csv, capsysbinary):
    text = synth_csv.read_text().replace("t,Q", "year,pop", 1)
    p = tmp_path / "named.csv"
    p.write_text(text)
    code, out, _ = run(capsysbinary, "fit", p, "--t-col", "year", "--q-col", "pop", "--families", "sth",
                       "--k-max", 2)
    assert code == 0 and json.loads(out)["input"]["t_unit"] == "year"


@pytest.mark.parametrize("content,error", [
    ("t,Q\n0,1\n0,2\n", "duplicate_time"),
    ("t,Q\n0,1\nfoo,2\n", "parse_error"),
    ("t,Q\n0,1\n1,-2\n", "non_positive_q"),
    ("t,Q\n0,1\n", "too_few_rows"),
    ("x,y\n0,1\n", "parse_error"),
    ("t,Q\n" + "".join(f"{i},{i + 1}\n" for i in range(5)), "too_short"),
    ("t,Q\n" + "".join(f"{i},{30 - i}\n" for i in range(20)), "gate_failure"),
])
def test_malformed_input_exits_2(tmp_path, capsysbinary, content, error):
    p = tmp_path / "bad.csv"
    p.write_text(content)
    code, out, err = run(capsysbinary, "fit", p)
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == error


def test_usage_errors_exit_2(tmp_path, capsysbinary):
    assert run(capsysbinary, "fit", tmp_path / "missing.csv")[0] == 2
    assert run(capsysbinary, "eval", "--family", "sth", "--x", 1)[0] == 2
    assert run(capsysbinary, "nonsense")[0] == 2
    bad = tmp_path / "r.json"
    bad.write_text("{not json")
    code, _, err = run(capsysbinary, "forecast", bad, "--to", 10)
    assert code == 2 and json.loads(err)["error"] == "parse_error"
    bad.write_text('{"schema": "other"}')
    assert run(capsysbinary, "forecast", bad, "--to", 10)[0] == 2


def test_internal_errors_exit_1(monkeypatch, capsysbinary):
    import hinderfit.cli as cli

    def boom(args):
        raise RuntimeError("unexpected")

    parser = cli.build_parser
    monkeypatch.setattr(cli, "build_parser", lambda: _with_func(parser(), boom))
    code, _, err = run(capsysbinary, "eval", "--family", "logistic", "--x", 0)
    assert code == 1 and json.loads(err)["error"] == "internal_error"


def _with_func(parser, func):
    parser.set_defaults(func=func)
    for action in parser._subparsers._group_actions:
        for sub in action.choices.values():
            sub.set_defaults(func=func)
    return parser


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hinderfit.cli", "eval", "--family", "sth", "--k", "1", "--x", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["h"] == pytest.approx(1.557145598997611, rel=1e-13)
