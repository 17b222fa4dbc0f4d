import csv
import json

import pytest

from scallop.cli import SUMMARY_COLUMNS, TRACE_COLUMNS, main
from scallop.formats import read_jsonl, read_register
from scallop.pipeline import SENSITIVITY_COLUMNS

# 60/11 GHz: the 12/55 grid point, quick to derive with a small budget
FAST_F = "5.454545454545"


def run(argv, tmp_path):
    return main(argv + ["--output-dir", str(tmp_path)])


def rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def derived(tmp_path_factory):
    out = tmp_path_factory.mktemp("derive")
    code = main(["derive", "--f-q", FAST_F, "--vertex-budget", "20", "--output-dir", str(out)])
    return code, out / "fq_5.454545"


class TestGrid:
    def test_default_range(self, tmp_path, capsys):
        assert run(["grid"], tmp_path) == 0
        table = rows(tmp_path / "grid.csv")
        assert table[0] == ["N_q", "N_c", "f_q_ghz", "gate_time_ns"]
        assert len(table) - 1 >= 21
        assert "magic frequencies" in capsys.readouterr().out

    def test_single_point(self, tmp_path):
        assert run(["grid", "--frequency-range", "5.0", "5.0"], tmp_path) == 0
        assert rows(tmp_path / "grid.csv")[1:] == [["1", "5", "5", "0.2"]]

    def test_short_subsequences(self, tmp_path):
        assert run(["grid", "--max-subseq-clocks", "5", "--min-subseq-clocks", "1"], tmp_path) == 0
        assert [r[:2] for r in rows(tmp_path / "grid.csv")[1:]] == [["1", "5"]]

    def test_bad_config(self, tmp_path, capsys):
        assert run(["grid", "--vertex-budget", "0"], tmp_path) == 2
        assert "vertex_budget" in capsys.readouterr().err

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"frequency_range_ghz": [5.0, 5.0]}))
        assert run(["grid", "--config", str(cfg)], tmp_path) == 0
        assert len(rows(tmp_path / "grid.csv")) == 2


class TestDerive:
    def test_off_grid(self, tmp_path, capsys):
        assert run(["derive", "--f-q", "5.001"], tmp_path) == 2
        err = capsys.readouterr().err
        assert "not within 1 kHz" in err and "5.000000 GHz (1/5)" in err

    def test_outputs(self, derived):
        code, d = derived
        assert code in (0, 1)
        summary = json.loads((d / "summary.json").read_text())
        assert summary["N_q"] == 12 and summary["N_c"] == 55
        assert summary["status"] in ("ok", "below_threshold", "leakage")
        assert len(summary["candidates"]) >= 1
        records = read_jsonl(d / "catalog.jsonl")
        assert 1 <= len(records) <= 20 * len(summary["candidates"])
        reg = read_register(d / "register.txt")
        assert reg.clock_cycles == 55 and 5 <= reg.repetitions <= 8
        assert reg.tip_angle == 0.032

    def test_trimmed_operating_point(self, tmp_path):
        code = run(["derive", "--f-q", "5.4545", "--grid", "12/55", "--vertex-budget", "5"], tmp_path)
        assert code in (0, 1)
        summary = json.loads((tmp_path / "fq_5.454500" / "summary.json").read_text())
        assert summary["f_q_ghz"] == 5.4545

    def test_trim_to_operating_frequency(self, tmp_path, capsys):
        code = run(["derive", "--f-q", "4.891304347826", "--vertex-budget", "5"], tmp_path)
        assert code in (0, 1)
        assert "operating frequency trimmed" in capsys.readouterr().out
        d = tmp_path / "fq_4.891304"
        summary = json.loads((d / "summary.json").read_text())
        reg = read_register(d / "register.txt")
        assert reg.f_q_ghz == summary["f_q_ghz"] != summary["nominal_f_q_ghz"]
        assert abs(reg.f_q_ghz - summary["nominal_f_q_ghz"]) <= 1e-3

    def test_bad_grid_text(self, tmp_path):
        assert run(["derive", "--f-q", "5.0", "--grid", "five"], tmp_path) == 2


class TestVerify:
    def test_round_trip(self, derived, tmp_path):
        _, d = derived
        summary = json.loads((d / "summary.json").read_text())
        assert run(["verify", str(d / "register.txt")], tmp_path) == 0
        report = json.loads((tmp_path / "register_report.json").read_text())
        assert report["fidelity"] == pytest.approx(summary["fidelity"], abs=1e-10)
        trace = rows(tmp_path / "register_leakage.csv")
        assert tuple(trace[0]) == TRACE_COLUMNS
        reg = read_register(d / "register.txt")
        assert len(trace) - 1 == 7 * 55 * reg.repetitions * 5

    def test_all_zero_register(self, tmp_path):
        reg = tmp_path / "zero.txt"
        reg.write_text("0" * 50 + "\n")
        assert run(["verify", str(reg), "--f-q", "5.0", "--repetitions", "2"], tmp_path) == 0
        report = json.loads((tmp_path / "zero_report.json").read_text())
        assert report["fidelity"] == pytest.approx(2 / 3, abs=1e-9)
        assert all(v == 0 for v in report["max_population"].values())

    def test_missing_frequency(self, tmp_path, capsys):
        reg = tmp_path / "r.txt"
        reg.write_text("1100\n")
        assert run(["verify", str(reg)], tmp_path) == 2
        assert "qubit frequency" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert run(["verify", str(tmp_path / "nope.txt"), "--f-q", "5.0"], tmp_path) == 2


class TestSensitivity:
    def test_frequency_scan(self, derived, tmp_path):
        _, d = derived
        summary = json.loads((d / "summary.json").read_text())
        code = run(["sensitivity", str(d / "register.txt"), "--span", "500", "--points", "5"], tmp_path)
        assert code == 0
        table = rows(tmp_path / "register_sensitivity_frequency.csv")
        assert tuple(table[0]) == SENSITIVITY_COLUMNS
        offsets = [float(r[1]) for r in table[1:]]
        assert offsets == [-500, -250, 0, 250, 500]
        centre = table[3]
        assert float(centre[2]) == pytest.approx(1 - summary["fidelity"], abs=1e-10)
        assert float(centre[3]) == 0

    def test_anharmonicity_scan(self, derived, tmp_path):
        _, d = derived
        code = run(["sensitivity", str(d / "register.txt"), "--axis", "anharmonicity",
                    "--points", "3"], tmp_path)
        assert code == 0
        table = rows(tmp_path / "register_sensitivity_anharmonicity.csv")
        assert [float(r[1]) for r in table[1:]] == [-10, 0, 10]


class TestCatalog:
    def test_empty_range(self, tmp_path):
        assert run(["catalog", "--frequency-range", "5.01", "5.02"], tmp_path) == 0
        assert rows(tmp_path / "summary.csv") == [list(SUMMARY_COLUMNS)]

    def test_small_catalog_is_deterministic(self, tmp_path):
        args = ["catalog", "--frequency-range", "5.45", "5.46", "--vertex-budget", "1"]
        assert run(args, tmp_path / "a") == 0
        assert run(args, tmp_path / "b") == 0
        a = (tmp_path / "a" / "summary.csv").read_bytes()
        assert a == (tmp_path / "b" / "summary.csv").read_bytes()
        table = rows(tmp_path / "a" / "summary.csv")
        assert len(table) == 2 and table[1][1:3] == ["12", "55"]
        assert table[1][-1] in ("ok", "below_threshold", "leakage", "no_neighborhood")
