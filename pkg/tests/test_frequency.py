import csv
import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from scallop.frequency import (
    GridPoint,
    as_fraction,
    enumerate_magic_frequencies,
    enumerate_symmetric_pairs,
    nearest_grid_points,
    symmetry_violation,
    write_grid_csv,
)
from scallop.sequence import ClockSpec

CLOCK = ClockSpec(25.0)
GRID = enumerate_magic_frequencies(CLOCK, 4.5, 5.5, 55)


class TestGridPoint:
    def test_frequency_and_time(self):
        p = GridPoint(8, 39)
        assert p.exact_frequency == Fraction(200, 39)
        assert p.qubit_frequency == pytest.approx(5.128205128)
        assert p.gate_time == pytest.approx(1.56)

    def test_canonical(self):
        p = GridPoint(16, 78)
        assert not p.is_canonical
        assert p.canonical() == GridPoint(8, 39)

    def test_subsequence_grids(self):
        assert [g.clock_cycles for g in GridPoint(1, 5).subsequence_grids(35, 55)] == [35, 40, 45, 50, 55]
        assert GridPoint(6, 31).subsequence_grids(35, 55) == []
        assert GridPoint(5, 26).subsequence_grids(35, 55) == [GridPoint(10, 52)]

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            GridPoint(0, 5)

    def test_as_fraction_is_decimal(self):
        assert as_fraction(0.05) == Fraction(1, 20)
        assert as_fraction(25.0) == 25


class TestEnumerate:
    def test_includes_five_ghz(self):
        assert GridPoint(1, 5) in GRID

    def test_includes_39_8(self):
        p = next(p for p in GRID if (p.qubit_cycles, p.clock_cycles) == (8, 39))
        assert p.qubit_frequency == pytest.approx(200 / 39, abs=1e-12)
        # 5.12781 GHz, sometimes quoted for this point, lies 0.4 MHz below the exact value
        assert abs(p.qubit_frequency - 5.12781) == pytest.approx(3.95e-4, abs=1e-6)

    def test_at_least_21(self):
        assert len(GRID) >= 21

    def test_sorted_deduplicated_exact(self):
        ratios = [p.ratio for p in GRID]
        assert ratios == sorted(ratios)
        assert len(set(ratios)) == len(ratios)
        for p in GRID:
            assert p.is_canonical
            assert p.qubit_cycles * 25 == p.clock_cycles * p.exact_frequency
            assert 4.5 <= p.exact_frequency <= 5.5

    def test_single_point_range(self):
        assert enumerate_magic_frequencies(CLOCK, 5.0, 5.0, 55) == [GridPoint(1, 5)]

    def test_subharmonics_only(self):
        pts = enumerate_magic_frequencies(CLOCK, 1.0, 30.0, 5)
        assert all(p.clock_cycles <= 5 for p in pts)
        assert GridPoint(1, 5) in pts and GridPoint(1, 1) in pts
        assert enumerate_magic_frequencies(CLOCK, 4.5, 5.5, 5) == [GridPoint(1, 5)]

    def test_empty_is_not_error(self):
        assert enumerate_magic_frequencies(CLOCK, 5.01, 5.02, 10) == []

    def test_reversed_bounds(self):
        with pytest.raises(ValueError):
            enumerate_magic_frequencies(CLOCK, 5.5, 4.5, 55)

    def test_nearest(self):
        near = nearest_grid_points(4.652, CLOCK, 55)
        assert near[0] == GridPoint(8, 43)
        assert len(near) == 3

    def test_csv(self, tmp_path):
        path = tmp_path / "grid.csv"
        write_grid_csv(GRID, path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["N_q", "N_c", "f_q_ghz", "gate_time_ns"]
        assert len(rows) == len(GRID) + 1
        assert rows[1] == ["9", "50", "4.5", "2"]


class TestSymmetryViolation:
    def test_resonant_pair(self):
        assert symmetry_violation(0, 5, 10, 2) == 0

    def test_mirror_pair(self):
        assert symmetry_violation(1, 38, 39, 8) == 0

    def test_asymmetric_pair(self):
        v = symmetry_violation(1, 2, 39, 8)
        assert v == Fraction(15, 39)
        assert v >= Fraction(1, 20)

    def test_range_check(self):
        with pytest.raises(ValueError):
            symmetry_violation(0, 39, 39, 8)

    @given(st.integers(2, 60).flatmap(
        lambda nc: st.tuples(st.just(nc), st.integers(1, 3 * nc), st.integers(0, nc - 1), st.integers(0, nc - 1))
    ))
    def test_symmetric_and_bounded(self, args):
        nc, nq, i, j = args
        v = symmetry_violation(i, j, nc, nq)
        assert v == symmetry_violation(j, i, nc, nq)
        assert 0 <= v <= Fraction(1, 2)

    def test_shift_invariance(self):
        # moving the edges by k clocks in opposite directions, with k N_q / N_c an
        # integer, shifts the fractional parts by whole qubit cycles
        nc, nq, k = 10, 2, 5
        for i in range(nc - k):
            for j in range(k, nc):
                assert symmetry_violation(i, j, nc, nq) == symmetry_violation(i + k, j - k, nc, nq)


class TestSymmetricPairs:
    def test_39_8_example(self):
        pairs = {(p.edge_a, p.edge_b): p for p in enumerate_symmetric_pairs(39, 8, 0.05)}
        assert (1, 38) in pairs and (0, 0) in pairs
        assert pairs[(0, 0)].is_degenerate
        assert pairs[(1, 38)].half_period_index == 8
        assert pairs[(1, 38)].phase == pytest.approx(2 * math.pi * 8 / 39)

    def test_zero_pairs_are_exact(self):
        for nc, nq in [(39, 8), (46, 9), (43, 8), (55, 11)]:
            for p in enumerate_symmetric_pairs(nc, nq, 0.05):
                assert 0 <= p.edge_a <= p.edge_b < nc
                if p.a_sym == 0:
                    assert Fraction((p.edge_a + p.edge_b) * nq, nc).denominator == 1
                    assert p.half_period_index == (p.edge_a + p.edge_b) * nq // nc

    def test_commensurate_case(self):
        pairs = {(p.edge_a, p.edge_b): p.a_sym for p in enumerate_symmetric_pairs(10, 2, 0.05)}
        for i in range(10):
            for j in range(i, 10):
                if (i + j) % 5 == 0:
                    assert pairs[(i, j)] == 0

    def test_threshold_half_bound(self):
        assert len(enumerate_symmetric_pairs(39, 8, 0.5)) <= 39 * 40 // 2

    def test_threshold_is_exact(self):
        # A_sym = 2/40 = 0.05 exactly must fail a strict 0.05 cut
        assert symmetry_violation(1, 0, 40, 1) == Fraction(1, 40)
        edges = {(p.edge_a, p.edge_b) for p in enumerate_symmetric_pairs(40, 1, 0.05)}
        assert (0, 2) not in edges and (0, 1) in edges

    @pytest.mark.parametrize("bad", [0.0, 0.6])
    def test_threshold_range(self, bad):
        with pytest.raises(ValueError):
            enumerate_symmetric_pairs(39, 8, bad)
