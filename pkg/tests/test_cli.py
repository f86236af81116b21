import csv
import io
import json

import numpy as np
import pytest

from npsig import __version__
from npsig.cli import run
from npsig.dataset import Dataset, write_csv


@pytest.fixture
def data_file(tmp_path):
    rng = np.random.default_rng(12)
    n = 120
    x = rng.normal(size=(n, 4))
    y = 2 * x[:, 0] + np.sin(2 * x[:, 1]) + 0.5 * rng.normal(size=n)
    path = tmp_path / "d.csv"
    write_csv(Dataset(y, x, ("abdomen", "weight", "noise1", "noise2"), "fat"), path)
    return path


def _json(capsys, argv):
    code = run(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == 0 else None)


def test_test_command(capsys, data_file):
    code, rep = _json(capsys, ["test", "--data", str(data_file), "--response", "fat", "--test-var", "abdomen", "--p", "7"])
    assert code == 0
    assert rep["schema"] == "npsig/1" and rep["version"] == __version__
    assert rep["command"] == "test"
    assert rep["config"]["p"] == 7 and rep["config"]["test_var"] == "abdomen"
    assert rep["result"]["p_value"] < 0.05


def test_no_sir_two_columns_matches_plain_test(capsys, tmp_path):
    from npsig.dataset import split_columns
    from npsig.window_anova import anova_test

    rng = np.random.default_rng(3)
    x = rng.normal(size=(90, 2))
    ds = Dataset(x[:, 0] ** 2 + rng.normal(size=90), x, ("a", "b"), "y")
    path = tmp_path / "two.csv"
    write_csv(ds, path)
    code, rep = _json(capsys, ["test", "--data", str(path), "--response", "y", "--test-var", "a", "--no-sir", "--p", "5"])
    assert code == 0
    ref = anova_test(ds, split_columns(ds, 0), p=5)
    assert rep["result"]["z"] == pytest.approx(ref.z, rel=1e-12)


def test_screen_and_sir(capsys, data_file):
    code, rep = _json(capsys, ["screen", "--data", str(data_file), "--response", "fat"])
    assert code == 0 and "abdomen" in rep["result"]["kept"]
    code, rep = _json(capsys, ["sir", "--data", str(data_file), "--response", "fat", "--slices", "5"])
    assert code == 0 and rep["result"]["k"] >= 1
    assert len(rep["result"]["directions"][0]) == 4


def test_select_and_csv(capsys, data_file, tmp_path):
    code, rep = _json(capsys, ["select", "--data", str(data_file), "--response", "fat", "--p", "7"])
    assert code == 0 and "abdomen" in rep["result"]["selected"]
    out = tmp_path / "r.csv"
    assert run(["select", "--data", str(data_file), "--response", "fat", "--p", "7", "--format", "csv", "--out", str(out)]) == 0
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert rows[0] == ["key", "value"]
    keys = dict(rows[1:])
    assert keys["schema"] == "npsig/1"
    assert "abdomen" in keys["result.selected"].split(";")


def test_alpha_zero(capsys, data_file):
    code, rep = _json(capsys, ["select", "--data", str(data_file), "--response", "fat", "--alpha", "0"])
    assert code == 0
    assert len(rep["result"]["selected"]) <= 1


def test_slices_sweep(capsys, data_file):
    code, rep = _json(capsys, ["select", "--data", str(data_file), "--response", "fat", "--p", "7", "--slices-sweep", "2..12"])
    assert code == 0
    res = rep["result"]
    assert res["settings"] == 11
    assert rep["config"]["slices_sweep"] == "2..12"
    assert res["counts"]["abdomen"] >= 10
    assert max(res["counts"], key=res["counts"].get) == "abdomen"


def test_simulate_byte_identical(capsys, tmp_path, monkeypatch):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["simulate", "--scenario", "table2-f0", "--runs", "50", "--seed", "7"]
    assert run(argv + ["--out", str(a)]) == 0
    monkeypatch.setenv("NPSIG_THREADS", "2")
    assert run(argv + ["--out", str(b), "--threads", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    rep = json.loads(a.read_text())
    assert rep["result"]["runs"] == 50
    assert "threads" not in rep["config"]


def test_simulate_selection(capsys):
    code, rep = _json(capsys, ["simulate", "--scenario", "table5-g1", "--runs", "5", "--seed", "1", "--p", "7"])
    assert code == 0
    assert 0 <= rep["result"]["mean_correct"] <= 7


@pytest.mark.parametrize(
    "argv, flag",
    [
        (["test", "--data", "x.csv", "--response", "y", "--test-var", "a", "--p", "8"], "--p"),
        (["simulate", "--scenario", "table9", "--runs", "5", "--seed", "1"], "--scenario"),
        (["select", "--data", "x.csv", "--response", "y", "--alpha", "1.5"], "--alpha"),
        (["select", "--data", "x.csv", "--response", "y", "--slices-sweep", "5..2"], "--slices-sweep"),
        (["simulate", "--scenario", "table1", "--runs", "0", "--seed", "1"], "--runs"),
    ],
)
def test_usage_errors(capsys, argv, flag):
    with pytest.raises(SystemExit) as exc:
        run(argv)
    assert exc.value.code == 1
    assert flag in capsys.readouterr().err


def test_data_errors(capsys, tmp_path):
    assert run(["test", "--data", str(tmp_path / "missing.csv"), "--response", "y", "--test-var", "a"]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("y,a\n1,2\n3,NA\n")
    assert run(["screen", "--data", str(bad), "--response", "y"]) == 2
    assert "row 3" in capsys.readouterr().err


def test_unknown_test_var(capsys, data_file):
    assert run(["test", "--data", str(data_file), "--response", "fat", "--test-var", "zzz"]) == 2


def test_constant_response(capsys, tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "c.csv"
    write_csv(Dataset(np.full(40, 2.0), rng.normal(size=(40, 2)), ("a", "b"), "y"), path)
    assert run(["test", "--data", str(path), "--response", "y", "--test-var", "a"]) == 3
    assert "degenerate" in capsys.readouterr().err
