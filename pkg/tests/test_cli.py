import csv
import json
import subprocess
import sys

import pytest

from torsion_census.cli import (EXIT_BUDGET, EXIT_OK, EXIT_USAGE, RunConfig, UsageError, main,
                                parse_config, parse_height, plot_regions)


class TestParseHeight:
    @pytest.mark.parametrize("text,value", [("1e72", 10 ** 72), ("1E36", 10 ** 36), ("2.5e3", 2500),
                                            ("1000000", 10 ** 6), ("1_000", 1000)])
    def test_exact(self, text, value):
        assert parse_height(text) == value

    @pytest.mark.parametrize("text", ["abc", "0", "-5", "1.5", "1e-3", ""])
    def test_rejected(self, text):
        with pytest.raises(UsageError):
            parse_height(text)


class TestConfig:
    def test_budget_positive(self):
        with pytest.raises(UsageError):
            RunConfig("census", budget=0)

    def test_threads_from_environment(self, monkeypatch):
        monkeypatch.setenv("TORSION_CENSUS_THREADS", "3")
        assert parse_config(["census", "--m", "5", "--height", "1e12"]).threads == 3
        assert parse_config(["census", "--m", "5", "--height", "1e12", "--threads", "2"]).threads == 2

    def test_tolerance_floor(self):
        with pytest.raises(UsageError):
            parse_config(["constants", "--m", "5", "--tol", "1e-13"])


class TestExitCodes:
    def test_missing_suite(self):
        assert main(["verify"]) == EXIT_USAGE

    def test_unknown_flag(self):
        assert main(["census", "--m", "5", "--height", "1e6", "--bogus"]) == EXIT_USAGE

    def test_bad_m(self):
        assert main(["census", "--m", "6", "--height", "1e6"]) == EXIT_USAGE

    def test_no_command(self):
        assert main([]) == EXIT_USAGE

    def test_help(self, capsys):
        assert main(["--help"]) == 0

    def test_naive_cap(self):
        assert main(["scan", "--m", "3", "--height", "1e11"]) == EXIT_USAGE

    def test_budget(self, tmp_path):
        out = tmp_path / "r.json"
        code = main(["census", "--m", "7", "--height", "1e60", "--budget", "1e-9", "--out", str(out)])
        assert code == EXIT_BUDGET
        assert json.loads(out.read_text())["incomplete"] is True


class TestCensusCommand:
    def test_report_and_csv(self, tmp_path):
        out, table = tmp_path / "r.json", tmp_path / "c.csv"
        assert main(["census", "--m", "3", "--height", "1e8", "--out", str(out), "--csv", str(table)]) == EXIT_OK
        data = json.loads(out.read_text())
        rows = list(csv.reader(table.open()))
        assert rows[0] == ["A", "B", "height", "torsion", "defect"]
        assert len(rows) - 1 == data["total"] == sum(b["count"] for b in data["buckets"])
        assert all(int(r[2]) <= 10 ** 8 for r in rows[1:])

    def test_reproducible_is_byte_identical(self, tmp_path):
        paths = []
        for threads in ("1", "3"):
            out = tmp_path / f"r{threads}.json"
            assert main(["census", "--m", "5", "--height", "1e20", "--threads", threads,
                         "--reproducible", "--out", str(out)]) == EXIT_OK
            paths.append(out.read_bytes())
        assert paths[0] == paths[1]

    def test_naive_flag_matches_families(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["census", "--m", "4", "--height", "1e6", "--out", str(a), "--reproducible"])
        main(["census", "--m", "4", "--height", "1e6", "--naive", "--out", str(b), "--reproducible"])
        assert json.loads(a.read_text())["buckets"] == json.loads(b.read_text())["buckets"]

    def test_resume(self, tmp_path):
        ck, out = tmp_path / "ck.jsonl", tmp_path / "r.json"
        args = ["census", "--m", "5", "--height", "1e20", "--resume", str(ck), "--reproducible", "--out", str(out)]
        main(args)
        first = out.read_bytes()
        main(args)
        assert out.read_bytes() == first


class TestOtherCommands:
    def test_constants(self, tmp_path):
        out = tmp_path / "k.json"
        assert main(["constants", "--m", "5", "--out", str(out)]) == EXIT_OK
        data = json.loads(out.read_text())
        assert data["probability"]["exact"] == "25/34"
        assert data["sieve_tables"]["F5_isog"]["deltas"] == {"1": "29/30", "5": "1/30"}

    def test_scan_two(self, capsys):
        assert main(["scan", "--m", "2", "--height", "1e4"]) == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert data["total"] > 0

    @pytest.mark.parametrize("suite", ["sieves", "areas"])
    def test_verify(self, suite, tmp_path):
        out = tmp_path / "v.json"
        assert main(["verify", "--suite", suite, "--out", str(out)]) == EXIT_OK
        data = json.loads(out.read_text())
        assert data["suite"] == suite and data["failed"] == []
        assert data["checks"] == len(data["results"]) and all(c["pass"] for c in data["results"])

    def test_plot(self, tmp_path):
        out = tmp_path / "r.svg"
        assert main(["plot-regions", "--m", "5", "--height", "1e16", "--out", str(out)]) == EXIT_OK
        text = out.read_text()
        assert text.startswith("<svg") or text.startswith("<?xml")
        assert "F5_tors" in text and "F5_isog" in text and "<line" in text and "<circle" in text

    def test_plot_tiny_region(self, tmp_path):
        out = tmp_path / "tiny.svg"
        plot_regions(7, 1, str(out))
        assert "</svg>" in out.read_text()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "torsion_census", "verify"], capture_output=True, text=True)
    assert proc.returncode == EXIT_USAGE
