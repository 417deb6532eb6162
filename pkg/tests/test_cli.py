import json
import subprocess
import sys

import pytest

from pumcodes import cli
from pumcodes.cli import main, render_csv, reparse_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    return reparse_csv(text)[1]


def roundtrip_identical(text):
    header, rows = reparse_csv(text)
    return render_csv(header, rows) == text


class TestAnalyze:
    def test_reference_row(self, capsys):
        code, out, _ = run(capsys, "analyze", "--grid", "0.5")
        assert code == 0
        (row,) = rows_of(out)
        assert row["failure_main_um"] == pytest.approx(0.0794773140435064, rel=1e-9)
        assert row["failure_exact_pum"] == pytest.approx(0.0135612992270332, rel=1e-9)
        assert roundtrip_identical(out)

    def test_noiseless_row(self, capsys):
        _, out, _ = run(capsys, "analyze", "--grid", "0")
        (row,) = rows_of(out)
        assert all(row[c] == 0 for c in ("failure_exact_pum", "failure_exact_um", "failure_ind"))

    def test_success_flag(self, capsys):
        _, out, _ = run(capsys, "analyze", "--grid", "0.4", "--success")
        (row,) = rows_of(out)
        assert 0 < row["success_exact_pum"] < 1

    def test_json(self, capsys):
        _, out, _ = run(capsys, "analyze", "--format", "json")
        doc = json.loads(out)
        assert doc["schema_version"] == 1 and len(doc["rows"]) == 6

    def test_custom_weights(self, capsys, tmp_path):
        from pumcodes.channel import binomial_weight_distribution, write_weight_distribution_csv
        path = tmp_path / "w.csv"
        write_weight_distribution_csv(binomial_weight_distribution(15, 0.5), path)
        _, out, _ = run(capsys, "analyze", "--weights", str(path))
        _, ref, _ = run(capsys, "analyze", "--grid", "0.5")
        got, want = rows_of(out)[0], rows_of(ref)[0]
        assert got["p"] == "custom"
        assert got["failure_exact_um"] == pytest.approx(want["failure_exact_um"], rel=1e-12)

    @pytest.mark.parametrize("argv", [
        ("analyze", "--grid", "1.5"),
        ("analyze", "--t", "200"),
        ("analyze", "--pum-radii", "8,10,9,12"),
        ("analyze", "--um-radii", "5,10,10,12"),
        ("analyze", "--weights", "/nonexistent.csv"),
    ])
    def test_config_errors(self, capsys, argv):
        code, out, err = run(capsys, *argv)
        assert code == 2 and out == ""
        assert err.count("\n") == 1


class TestSimulate:
    def test_deterministic_across_workers(self, capsys):
        args = ("simulate", "--grid", "0.5", "--trials", "30000", "--seed", "9", "--L", "20", "--t", "10")
        _, a, _ = run(capsys, *args)
        _, b, _ = run(capsys, *args, "--workers", "2")
        assert a == b
        assert roundtrip_identical(a)
        (row,) = rows_of(a)
        assert row["ci_low"] <= row["exact"] <= row["ci_high"]

    def test_bad_mode_radii(self, capsys):
        code, _, _ = run(capsys, "simulate", "--mode", "um", "--radii", "8,10,10,12")
        assert code == 2


class TestSweep:
    def test_k1_two_radii(self, capsys):
        _, out, _ = run(capsys, "sweep")
        rows = rows_of(out)
        k2 = next(r for r in rows if r["k1"] == 2)
        assert (k2["tau_alpha"], k2["tau_0"], k2["tau_1"], k2["tau_01"]) == (8, 10, 10, 12)
        fails = [r["failure"] for r in rows]
        assert fails == sorted(fails)
        assert roundtrip_identical(out)

    def test_bad_k1(self, capsys):
        code, _, _ = run(capsys, "sweep", "--k1s", "7")
        assert code == 2


class TestCrossover:
    def test_both_modes(self, capsys):
        _, out, _ = run(capsys, "crossover")
        rows = {r["mode"]: r for r in rows_of(out)}
        for r in rows.values():
            assert r["status"] == "ok" and r["p_prime"] > 0
            assert r["p_prime_lower_bound"] <= r["p_prime"]
        assert roundtrip_identical(out)

    def test_invalid_radii(self, capsys):
        code, _, _ = run(capsys, "crossover", "--mode", "pum", "--radii", "8,10,9,12")
        assert code == 2

    def test_no_crossover_is_reported(self, capsys):
        code, out, _ = run(capsys, "crossover", "--mode", "pum", "--radii", "10,10,10,10")
        (row,) = rows_of(out)
        assert code == 0 and row["p_prime"] is None and row["status"] != "ok"


class TestCodecSim:
    def test_noiseless(self, capsys, tmp_path):
        summary = tmp_path / "s.json"
        code, out, _ = run(capsys, "codec-sim", "--grid", "0", "--trials", "5", "--summary", str(summary))
        assert code == 0
        rows = rows_of(out)
        assert len(rows) == 50 and all(r["codec_success"] == 1 for r in rows)
        doc = json.loads(summary.read_text())
        assert doc["schema_version"] == 1 and doc["runs"][0]["implication_violations"] == 0

    def test_worker_independent(self, capsys, tmp_path):
        args = ("codec-sim", "--grid", "0.5", "--trials", "40", "--summary", str(tmp_path / "s.json"))
        _, a, _ = run(capsys, *args)
        _, b, _ = run(capsys, *args, "--workers", "2")
        assert a == b and roundtrip_identical(a)

    def test_violation_exit_code(self, capsys, monkeypatch):
        from pumcodes.codec import CodecSimSummary

        def fake(*a, **kw):
            s = CodecSimSummary(15, 5, 2, 4, 0.3, 1, 1, 1, blocks=1, predicted=1, implication_violations=1)
            s.rows.append((0, 1, 3, True, False))
            return s
        monkeypatch.setattr(cli, "codec_simulation", fake)
        code, _, err = run(capsys, "codec-sim", "--grid", "0.3", "--trials", "1")
        assert code == 3 and "invariant" in err

    def test_bad_code(self, capsys):
        code, _, _ = run(capsys, "codec-sim", "--k1", "6")
        assert code == 2


class TestConfig:
    def test_file_then_flags(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"grid": "0.3,0.4", "L": 20, "t": 10}))
        _, a, _ = run(capsys, "analyze", "--config", str(cfg))
        assert [r["p"] for r in rows_of(a)] == [0.3, 0.4]
        _, b, _ = run(capsys, "analyze", "--config", str(cfg), "--grid", "0.6")
        assert [r["p"] for r in rows_of(b)] == [0.6]
        _, c, _ = run(capsys, "analyze", "--grid", "0.3,0.4", "--L", "20", "--t", "10")
        assert a == c

    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text('{"bogus": 1}')
        assert run(capsys, "analyze", "--config", str(cfg))[0] == 2

    def test_output_file(self, capsys, tmp_path):
        out = tmp_path / "o.csv"
        code, stdout, _ = run(capsys, "analyze", "--grid", "0.5", "-o", str(out))
        assert code == 0 and stdout == "" and out.read_text().startswith("p,failure_exact_pum")

    def test_grid_range(self):
        assert cli.parse_grid("0.2:0.7:0.1") == [0.2, 0.3, 0.4, 0.5, 0.6, 0.7]


def test_export_code(capsys, tmp_path):
    code, _, _ = run(capsys, "export-code", "--outdir", str(tmp_path))
    assert code == 0
    assert (tmp_path / "g_diamond.csv").read_text().splitlines()[1] == "3,15"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "pumcodes", "analyze", "--grid", "0.2"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.startswith("p,failure_exact_pum")
