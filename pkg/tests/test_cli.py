import csv
import io
import json
import os
from importlib.resources import files

import jsonschema
import pytest

from thinlaw import cli, mc_oracle


def run(tmp_path, *argv, name="out"):
    path = tmp_path / name
    code = cli.main([*argv, "--out", str(path)])
    return code, (path.read_text(encoding="utf-8") if path.exists() else None)


def validate(text):
    doc = json.loads(text)
    schema = json.loads((files("thinlaw") / "schemas" / f"{doc['command']}.json").read_text())
    jsonschema.validate(doc, schema)
    return doc


def csv_rows(text):
    body = "".join(line + "\n" for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def csv_config(text):
    out = {}
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            out[key] = json.loads(value)
    return out


class TestFixedPoint:
    def test_csv(self, tmp_path):
        code, text = run(tmp_path, "fixed-point", "--m", "1", "--alpha", "0.5", "--n", "20", "--format", "csv")
        assert code == 0
        rows = csv_rows(text)
        assert len(rows) == 20
        row = next(r for r in rows if r["k"] == "2")
        assert float(row["pmf"]) == pytest.approx(0.125, rel=1e-15)
        assert csv_config(text)["n"] == 20

    def test_boundary_needs_flag(self, tmp_path, capsys):
        code, text = run(tmp_path, "fixed-point", "--m", "1", "--alpha", "1.0")
        assert code == 2 and text is None
        assert "0 < alpha < m" in capsys.readouterr().err

    def test_trivial_flag(self, tmp_path):
        code, text = run(tmp_path, "fixed-point", "--m", "1", "--alpha", "1.0", "--trivial")
        assert code == 0
        assert validate(text)["result"]["distribution"]["probs"] == [1.0]

    def test_json(self, tmp_path):
        code, text = run(tmp_path, "fixed-point", "--m", "2", "--alpha", "1.2", "--n", "50")
        doc = validate(text)
        assert code == 0 and doc["result"]["beta"] == pytest.approx(2.2)

    def test_alpha_above_m(self, tmp_path):
        assert run(tmp_path, "fixed-point", "--m", "1", "--alpha", "1.5")[0] == 2


class TestConverge:
    def test_fixed_point_floor(self, tmp_path):
        code, text = run(tmp_path, "converge", "--family", "fixed", "--param", "m=1", "--param", "alpha=0.5",
                         "--steps", "5")
        doc = validate(text)
        assert code == 0 and max(doc["result"]["tv_to_limit"]) <= 1e-8

    def test_yule(self, tmp_path):
        code, text = run(tmp_path, "converge", "--family", "yule", "--param", "beta=1.5", "--q", "0.5",
                         "--m", "1", "--steps", "12")
        assert code == 0
        assert validate(text)["result"]["tv_to_limit"][-1] <= 1e-3

    def test_geometric_csv(self, tmp_path):
        code, text = run(tmp_path, "converge", "--family", "geometric", "--param", "ratio=0.5",
                         "--steps", "10", "--format", "csv")
        mass = [float(r["value"]) for r in csv_rows(text) if r["metric"] == "mass_at_m"]
        assert code == 0 and mass[-1] > 0.998 and mass == sorted(mass)

    def test_degenerate_exit(self, tmp_path, capsys):
        code, _ = run(tmp_path, "converge", "--family", "point", "--param", "m=1", "--m", "2", "--steps", "2")
        assert code == 3 and "p = 0.5" in capsys.readouterr().err


class TestDecompose:
    def test_nonnegative(self, tmp_path):
        code, text = run(tmp_path, "decompose", "--m", "1", "--alpha", "0.5", "--n", "1000")
        doc = validate(text)
        assert code == 0 and doc["result"]["min_lambda"] >= -1e-12

    def test_round_trip(self, tmp_path):
        code, text = run(tmp_path, "decompose", "--m", "3", "--alpha", "2.9", "--n", "1000")
        assert code == 0 and validate(text)["result"]["reconstruction_tv"] <= 1e-10

    def test_invalid(self, tmp_path):
        assert run(tmp_path, "decompose", "--m", "1", "--alpha", "1.5")[0] == 2

    def test_csv(self, tmp_path):
        code, text = run(tmp_path, "decompose", "--m", "1", "--alpha", "0.5", "--n", "30", "--format", "csv",
                         "--compensated")
        assert code == 0 and len(csv_rows(text)) == 30


class TestMcCheck:
    ARGS = ("mc-check", "--family", "fixed", "--param", "m=1", "--param", "alpha=0.5", "--p", "0.3",
            "--n-samples", "1000000", "--seed", "42")

    def test_exit_zero_and_deterministic(self, tmp_path):
        code, first = run(tmp_path, *self.ARGS, name="a.json")
        code2, second = run(tmp_path, *self.ARGS, name="b.json")
        assert code == code2 == 0
        assert first == second
        assert validate(first)["result"]["within_bound"]

    def test_starved(self, tmp_path):
        code, _ = run(tmp_path, "mc-check", "--family", "fixed", "--p", "0.3", "--n-samples", "50")
        assert code == 3

    def test_raw_dump(self, tmp_path):
        raw = tmp_path / "raw.txt"
        code, text = run(tmp_path, "mc-check", "--family", "geometric", "--p", "0.5", "--n-samples", "1000",
                         "--raw-out", str(raw))
        accepted = validate(text)["result"]["n_accepted"]
        assert code == 0 and len(raw.read_text().splitlines()) == accepted

    def test_bound_violation(self, tmp_path, monkeypatch):
        monkeypatch.setattr(mc_oracle.SampleReport, "within_bound", property(lambda self: False))
        assert run(tmp_path, "mc-check", "--family", "geometric", "--p", "0.5", "--n-samples", "1000")[0] == 4


class TestOther:
    @pytest.mark.parametrize("argv", [
        ("yule", "--beta", "2", "--n", "10"),
        ("regvar", "--beta", "1.5", "--gamma", "1", "--n", "10"),
        ("thin", "--family", "poisson", "--param", "lam=2", "--p", "0.25", "--upto", "20"),
        ("transform", "--family", "point", "--param", "m=3", "--p", "0.5", "--m", "1"),
        ("pareto-check", "--alpha", "0.3", "--c", "0.01", "--x", "1", "2", "4", "8"),
    ])
    def test_schemas(self, tmp_path, argv):
        code, text = run(tmp_path, *argv)
        assert code == 0
        validate(text)

    def test_pareto_csv(self, tmp_path):
        code, text = run(tmp_path, "pareto-check", "--alpha", "1", "--c", "0.5", "--format", "csv")
        assert code == 0 and csv_config(text)["residual"] <= 1e-12

    @pytest.mark.parametrize("argv", [
        ("yule", "--beta", "1.0"),
        ("thin", "--family", "poisson", "--param", "mu=2", "--p", "0.5"),
        ("thin", "--family", "poisson", "--param", "lam", "--p", "0.5"),
        ("transform", "--family", "point", "--p", "1.5"),
    ])
    def test_param_errors(self, tmp_path, argv):
        assert run(tmp_path, *argv)[0] == 2

    def test_stdout(self, capsys):
        assert cli.main(["yule", "--beta", "2", "--n", "3", "--format", "csv"]) == 0
        assert "k,pmf,cdf_tail" in capsys.readouterr().out

    def test_atomic_write_leaves_no_temp(self, tmp_path):
        target = tmp_path / "x.json"
        target.write_text("old")
        cli.write_atomic(str(target), "new")
        assert target.read_text() == "new"
        assert os.listdir(tmp_path) == ["x.json"]

    def test_failed_write_keeps_original(self, tmp_path, monkeypatch):
        target = tmp_path / "x.json"
        target.write_text("old")
        monkeypatch.setattr(cli.os, "replace", lambda *a: (_ for _ in ()).throw(OSError("disk")))
        with pytest.raises(OSError):
            cli.write_atomic(str(target), "new")
        assert target.read_text() == "old" and os.listdir(tmp_path) == ["x.json"]
