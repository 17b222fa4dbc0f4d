"""Full default catalog over every magic frequency in [4.5, 5.5] GHz.

Roughly 40 minutes on one core; run with ``pytest -m slow``.
"""

import csv

import pytest

from scallop.cli import main


@pytest.mark.slow
def test_full_catalog(tmp_path):
    assert main(["catalog", "--jobs", "4", "--output-dir", str(tmp_path)]) == 0
    with open(tmp_path / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) >= 21
    good = [r for r in rows if r["status"] == "ok"]
    for r in good:
        assert 5 <= int(r["repetitions"]) <= 8
        assert 35 <= int(r["subseq_clocks"]) <= 55
        assert float(r["infidelity_1e4"]) < 1.0
    assert len(good) >= 21
