from __future__ import annotations

import csv
import io
import json
import math
import re
import subprocess
import sys

import pytest
from conftest import FIXTURES, fixture_path

from dehnfill.cli import SWEEP_COLUMNS, dumps, fmt_float, main, parse_cone_range, parse_fill, parse_int_range, UsageError

FIG8 = str(fixture_path("figure_eight"))
FLOAT = re.compile(r"-?\d\.\d{16}e[+-]\d{2}")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_proc(*argv):
    return subprocess.run([sys.executable, "-m", "dehnfill.cli", *argv], capture_output=True, check=False)


def coprime_count(a, b):
    return sum(
        1 for p in range(a, b + 1) for q in range(a, b + 1) if (p, q) != (0, 0) and math.gcd(p, q) == 1
    )


class TestParsers:
    def test_fill(self):
        i, g = parse_fill("2:5,1,3")
        assert i == 1 and (g.p, g.q, g.r) == (5, 1, 3.0)

    @pytest.mark.parametrize("text", ["1:5", "0:5,1", "x:1,2", "1:0,0", "1:1,2,0"])
    def test_fill_errors(self, text):
        with pytest.raises(UsageError):
            parse_fill(text)

    def test_fill_normalizes(self):
        with pytest.warns(UserWarning):
            _, g = parse_fill("1:10,2")
        assert (g.p, g.q, g.r) == (5, 1, 2.0)

    def test_ranges(self):
        assert parse_int_range("-8..8") == (-8, 8)
        with pytest.raises(UsageError):
            parse_int_range("3..1")
        rs = parse_cone_range("1..32:6")
        assert rs == (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)

    def test_float_format(self):
        assert fmt_float(0.1) == "1.0000000000000001e-01"
        assert float(fmt_float(math.pi)) == math.pi
        assert dumps({"x": [1.5, float("nan")]}) == '{\n  "x": [1.5000000000000000e+00, null]\n}\n'


class TestInfoCheck:
    def test_info_fig8(self, capsys):
        code, out, _ = run(capsys, "info", FIG8)
        doc = json.loads(out)
        assert code == 0
        assert (doc["n"], doc["k"], doc["edges"]) == (2, 1, 2)

    @pytest.mark.parametrize("name", FIXTURES)
    def test_check_fixtures(self, capsys, name):
        code, out, _ = run(capsys, "check", str(fixture_path(name)))
        doc = json.loads(out)
        assert code == 0 and doc["ok"]
        lem = doc["lemmas"]
        assert len(lem["selected_rows"]) == lem["n"] - lem["k"]

    def test_check_corrupted(self, capsys, tmp_path):
        doc = json.loads(fixture_path("figure_eight").read_text())
        doc["tetrahedra"][0]["gluings"][0] = "1032"
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        code, out, _ = run(capsys, "check", str(bad))
        rep = json.loads(out)
        assert code == 1 and not rep["ok"]
        assert "tetrahedron 0 face 0" in rep["error"]

    def test_malformed(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"tetrahedra": [,]}')
        code, out, err = run(capsys, "info", str(bad))
        assert code == 2 and out == ""
        assert "line 1" in err

    def test_missing_file(self, capsys):
        assert run(capsys, "info", "/nonexistent.json")[0] == 2

    @pytest.mark.parametrize(
        "argv",
        [
            ["frobnicate", FIG8],
            ["solve", FIG8, "--fill", "2:1,0"],
            ["solve", FIG8, "--tol", "-1"],
            ["sweep", FIG8, "--pq-range", "1..x"],
            ["info", FIG8, "--format", "csv"],
        ],
    )
    def test_usage_errors(self, capsys, argv):
        assert run(capsys, *argv)[0] == 2


class TestSolve:
    def test_complete(self, capsys):
        code, out, _ = run(capsys, "solve", FIG8)
        doc = json.loads(out)
        assert code == 0 and doc["converged"]
        assert doc["volume"] == pytest.approx(2.029883212819307, abs=1e-12)
        tau = complex(*doc["cusps"][0]["tau"])
        assert tau == pytest.approx(1 + 2j * math.sqrt(3))

    def test_filled(self, capsys):
        code, out, _ = run(capsys, "solve", FIG8, "--fill", "1:5,1")
        doc = json.loads(out)
        assert code == 0
        assert doc["cusps"][0]["target"]["cone_angle"] == pytest.approx(2 * math.pi)
        assert doc["census"] == {"positive": 2, "flat": 0, "negative": 0}

    def test_failure_exit(self, capsys):
        code, out, _ = run(capsys, "solve", FIG8, "--fill", "1:5,1", "--max-iter", "1")
        assert code == 1
        assert json.loads(out)["converged"] is False

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "solve", FIG8, "--fill", "1:5,1", "--format", "csv")
        rows = list(csv.reader(io.StringIO(out)))
        assert code == 0
        assert tuple(rows[0]) == SWEEP_COLUMNS
        assert rows[1][:4] == ["5", "1", "1.0000000000000000e+00", "true"]

    def test_seventeen_digits(self, capsys):
        _, out, _ = run(capsys, "solve", FIG8, "--fill", "1:5,1")
        floats = re.findall(r"-?\d\.\d+e[+-]\d+", out)
        assert floats and all(FLOAT.fullmatch(f) for f in floats)

    def test_out_file(self, capsys, tmp_path):
        dest = tmp_path / "o.json"
        code, out, _ = run(capsys, "solve", FIG8, "--out", str(dest))
        assert code == 0 and out == ""
        json.loads(dest.read_text())

    def test_warning_on_stderr(self, capsys):
        code, out, err = run(capsys, "solve", FIG8, "--fill", "1:10,2")
        assert code == 0
        assert "not coprime" in err
        assert json.loads(out)["cusps"][0]["target"]["r"] == 2.0


class TestSweep:
    def test_rows(self, capsys):
        code, out, _ = run(capsys, "sweep", FIG8, "--cusp", "1", "--pq-range", "-8..8")
        rows = list(csv.reader(io.StringIO(out)))
        assert code == 0
        assert tuple(rows[0]) == SWEEP_COLUMNS
        assert len(rows) == 1 + 1 + coprime_count(-8, 8)
        assert rows[1][:3] == ["inf", "inf", "inf"]
        pairs = {(int(r[0]), int(r[1])) for r in rows[2:]}
        assert all(math.gcd(p, q) == 1 for p, q in pairs)

    def test_cone_ray(self, capsys):
        code, out, _ = run(capsys, "sweep", FIG8, "--fill", "1:5,1", "--cone-r", "1..32:6")
        rows = list(csv.DictReader(io.StringIO(out)))
        vols = [float(r["volume"]) for r in rows[1:]]
        assert code == 0 and len(rows) == 7
        assert vols == sorted(vols)

    def test_json(self, capsys):
        code, out, _ = run(capsys, "sweep", FIG8, "--pq-range", "1..3", "--format", "json")
        doc = json.loads(out)
        assert code == 0
        assert doc["rows"][0]["target"] == "inf"


class TestDevelop:
    def test_residuals(self, capsys):
        code, out, _ = run(capsys, "develop", FIG8, "--fill", "1:5,1")
        doc = json.loads(out)
        assert code == 0
        assert doc["tetrahedra"]["max_residual"] < 1e-9
        assert doc["volumes"]["total"] == pytest.approx(1.2844853004683539, abs=1e-12)

    def test_complete_tau(self, capsys):
        _, out, _ = run(capsys, "develop", str(fixture_path("whitehead")))
        doc = json.loads(out)
        assert len(doc["tori"]) == 2
        assert all("tau" in t for t in doc["tori"])


class TestDeterminism:
    @pytest.mark.parametrize(
        "argv",
        [
            ["solve", FIG8, "--fill", "1:5,1"],
            ["develop", str(fixture_path("whitehead_flat"))],
            ["sweep", FIG8, "--pq-range", "-5..5"],
        ],
    )
    def test_byte_identical(self, argv):
        a, b = run_proc(*argv), run_proc(*argv)
        assert a.returncode == 0
        assert a.stdout == b.stdout

    def test_jobs_independent(self):
        argv = ["sweep", FIG8, "--pq-range", "-6..6"]
        assert run_proc(*argv, "--jobs", "1").stdout == run_proc(*argv, "--jobs", "3").stdout
