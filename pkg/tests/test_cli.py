import csv
import json
import math
import subprocess
import sys
from fractions import Fraction

import pytest
from argparse import ArgumentTypeError

from dualpe.cli import main, parse_angle, parse_angle_ratio, parse_int_list


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def read_sidecar(path):
    with open(str(path) + ".meta.json") as fh:
        return json.load(fh)


class TestParsers:
    @pytest.mark.parametrize(
        "text,value",
        [
            ("pi/9", math.pi / 9),
            ("3pi/8", 3 * math.pi / 8),
            ("-pi/4", -math.pi / 4),
            ("2pi", 2 * math.pi),
            ("pi", math.pi),
            ("3 * pi / 8", 3 * math.pi / 8),
            ("0.25", 0.25),
            ("0", 0.0),
        ],
    )
    def test_parse_angle(self, text, value):
        assert parse_angle(text) == pytest.approx(value, abs=0.0)

    def test_parse_angle_rejects_junk(self):
        with pytest.raises(ArgumentTypeError):
            parse_angle("one third")

    def test_parse_angle_ratio(self):
        assert parse_angle_ratio("pi/200") == Fraction(1, 200)
        assert parse_angle_ratio("3pi/8") == Fraction(3, 8)
        assert parse_angle_ratio("-pi/4") == Fraction(-1, 4)
        assert parse_angle_ratio("0") == Fraction(0)
        assert parse_angle_ratio("2pi") == Fraction(2)

    def test_parse_angle_ratio_requires_exact_fractions(self):
        for bad in ("0.5", "0.125pi", "about pi"):
            with pytest.raises(ArgumentTypeError):
                parse_angle_ratio(bad)

    def test_parse_int_list(self):
        assert parse_int_list("1-3,5") == [1, 2, 3, 5]
        assert parse_int_list("4") == [4]
        assert parse_int_list("2, 4") == [2, 4]


class TestDesignScan:
    def run_small(self, tmp_path, name="design.csv"):
        out = tmp_path / name
        code = main([
            "design-scan", "--na", "2", "--t", "1-2", "--nb", "2-4",
            "--k", "1-2", "--g", "pi/9", "--steps", "8", "--out", str(out),
        ])
        assert code == 0
        return out

    def test_row_grid_and_methods(self, tmp_path):
        rows = read_csv(self.run_small(tmp_path))
        # 2 depths x 2 moments + 3 bath sizes x 2 moments.
        assert len(rows) == 10
        t_panel = [r for r in rows if r["panel"] == "t"]
        nb_panel = [r for r in rows if r["panel"] == "n_b"]
        assert len(t_panel) == 4 and len(nb_panel) == 6
        assert all(r["method"] == "transfer" for r in rows if r["k"] == "1")
        assert all(r["method"] == "enumeration" for r in nb_panel if r["k"] == "2")
        assert all(r["t"] == "2" for r in nb_panel)  # n_b panel runs at t = na

    def test_k1_converges_in_nb_panel(self, tmp_path):
        rows = read_csv(self.run_small(tmp_path))
        hit = [r for r in rows if r["panel"] == "n_b" and r["k"] == "1" and r["n_b"] == "4"]
        assert len(hit) == 1
        assert float(hit[0]["delta"]) < 1e-10

    def test_shallow_depth_plateau(self, tmp_path):
        rows = read_csv(self.run_small(tmp_path))
        # t = 1 < n_a = 2: the image is too small, Delta^(1) sticks at 1/2.
        hit = [r for r in rows if r["panel"] == "t" and r["k"] == "1" and r["t"] == "1"]
        assert abs(float(hit[0]["delta"]) - 0.5) < 1e-10

    def test_sidecar_and_reproducibility(self, tmp_path):
        out = self.run_small(tmp_path)
        first = out.read_bytes()
        meta_first = (tmp_path / "design.csv.meta.json").read_bytes()
        self.run_small(tmp_path)
        assert out.read_bytes() == first
        assert (tmp_path / "design.csv.meta.json").read_bytes() == meta_first
        meta = read_sidecar(out)
        assert meta["schema_version"] == 1
        assert meta["command"] == "design-scan"
        assert meta["columns"][0] == "scan_index"
        assert meta["config"]["params"]["boundary"] == "open"

    def test_periodic_boundary_skips_depth_panel(self, tmp_path):
        out = tmp_path / "ring.csv"
        code = main([
            "design-scan", "--na", "2", "--nb", "2-3", "--k", "1",
            "--boundary", "periodic", "--g", "pi/9", "--out", str(out),
        ])
        assert code == 0
        rows = read_csv(out)
        assert len(rows) == 2
        assert all(r["method"] == "enumeration_ring" for r in rows)
        assert all(r["panel"] == "n_b" for r in rows)

    def test_threads_reproduce_serial(self, tmp_path):
        a = self.run_small(tmp_path, "serial.csv").read_bytes()
        out = tmp_path / "threaded.csv"
        main([
            "design-scan", "--na", "2", "--t", "1-2", "--nb", "2-4",
            "--k", "1-2", "--g", "pi/9", "--steps", "8", "--threads", "3",
            "--out", str(out),
        ])
        # Same rows; sidecars differ (they record the thread count).
        assert out.read_bytes() == a

    def test_moment_budget_rejected(self, tmp_path, capsys):
        code = main([
            "design-scan", "--na", "3", "--k", "1-5",
            "--out", str(tmp_path / "x.csv"),
        ])
        assert code == 2
        assert "budget" in capsys.readouterr().err


class TestGapScan:
    def test_grid_and_anchors(self, tmp_path):
        out = tmp_path / "gap.csv"
        code = main([
            "gap-scan", "--t", "2", "--k", "2",
            "--gmin", "0", "--gmax", "pi/4", "--gstep", "pi/36",
            "--out", str(out),
        ])
        assert code == 0
        rows = read_csv(out)
        assert len(rows) == 10
        assert [r["g_ratio"] for r in rows][:3] == ["0", "1/36", "1/18"]
        by_ratio = {r["g_ratio"]: r for r in rows}
        # pi/9 sits exactly on this grid.
        assert abs(float(by_ratio["1/9"]["gap"]) - 0.125424) < 1e-5
        assert by_ratio["1/9"]["unimodular_count"] == "2"
        # The quarter point is exceptional: gap closes, fixed space blows up.
        assert abs(float(by_ratio["1/4"]["gap"])) < 1e-8
        assert int(by_ratio["1/4"]["unimodular_count"]) == 16
        assert all(r["method"] == "transfer_block" for r in rows)

    def test_exact_grid_endpoint_is_included(self, tmp_path):
        out = tmp_path / "gap2.csv"
        main([
            "gap-scan", "--t", "1", "--k", "1",
            "--gmin", "pi/8", "--gmax", "pi/4", "--gstep", "pi/8",
            "--out", str(out),
        ])
        assert [r["g_ratio"] for r in read_csv(out)] == ["1/8", "1/4"]

    def test_bad_grid_rejected(self, tmp_path, capsys):
        code = main([
            "gap-scan", "--gstep", "0", "--out", str(tmp_path / "x.csv"),
        ])
        assert code == 2
        assert "gstep" in capsys.readouterr().err

    def test_dimension_budget(self, tmp_path, capsys):
        code = main([
            "gap-scan", "--t", "4", "--k", "2", "--out", str(tmp_path / "x.csv"),
        ])
        assert code == 2


class TestVerify:
    def test_all_checks_pass(self, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        code = main(["verify", "--out", str(report_path)])
        assert code == 0
        lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith(("PASS", "FAIL"))]
        assert len(lines) >= 9
        assert all(l.startswith("PASS") for l in lines)
        report = json.loads(report_path.read_text())
        assert report["passed"] is True
        assert report["schema_version"] == 1
        assert all("seconds" in c and "residual" in c for c in report["checks"])

    def test_negative_control_fails_one_check(self, capsys):
        code = main(["verify", "--negative-control"])
        assert code == 1
        lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith(("PASS", "FAIL"))]
        fails = [l for l in lines if l.startswith("FAIL")]
        assert len(fails) == 1
        assert "duality_open_t2" in fails[0]


class TestPbcMc:
    def test_rows_and_decay(self, tmp_path):
        out = tmp_path / "mc.csv"
        code = main([
            "pbc-mc", "--na", "2", "--t", "1", "--k", "1",
            "--samples", "10000", "--seed", "7", "--out", str(out),
        ])
        assert code == 0
        rows = read_csv(out)
        assert [r["M"] for r in rows] == ["100", "1000", "10000"]
        assert all(r["method"] == "haar_mc" for r in rows)
        deltas = [float(r["delta"]) for r in rows]
        assert deltas[-1] < deltas[0]
        assert all(0.0 <= d <= 1.0 for d in deltas)

    def test_byte_identical_rerun(self, tmp_path):
        out = tmp_path / "mc.csv"
        argv = [
            "pbc-mc", "--na", "2", "--t", "1", "--k", "1-2",
            "--samples", "300", "--seed", "5", "--out", str(out),
        ]
        main(argv)
        first = out.read_bytes()
        main(argv)
        assert out.read_bytes() == first

    def test_depth_limit(self, tmp_path, capsys):
        code = main(["pbc-mc", "--t", "4", "--out", str(tmp_path / "x.csv")])
        assert code == 2
        assert "t <= 3" in capsys.readouterr().err


def test_unparseable_angle_exits_via_argparse(tmp_path):
    with pytest.raises(SystemExit):
        main(["design-scan", "--g", "junk", "--out", str(tmp_path / "x.csv")])


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "dualpe.cli", "--help"],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    assert "design-scan" in proc.stdout
