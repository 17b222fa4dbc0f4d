import numpy as np
import pytest

from scallop.frequency import GridPoint
from scallop.pipeline import (
    MAX_CANDIDATES,
    OffGridError,
    RunConfig,
    derive,
    gate_fidelity,
    locate_grid_point,
    parse_grid,
    repetition_candidates,
    sensitivity_scan,
    trim_frequency,
)
from scallop.search import basic_subsequence, optimize_tip_angle
from scallop.sequence import Bitstream, average_gate_fidelity, evolve

CONFIG = RunConfig()
FAST = RunConfig(vertex_budget=5)
G46 = GridPoint(9, 46)


@pytest.fixture(scope="module")
def trimmed46():
    return derive(FAST, G46)


class TestGridLookup:
    def test_on_grid(self):
        assert locate_grid_point(CONFIG, 5.0000005) == GridPoint(1, 5)

    def test_off_grid(self):
        with pytest.raises(OffGridError) as err:
            locate_grid_point(CONFIG, 4.652)
        assert err.value.suggestions[0] == GridPoint(8, 43)
        assert len(err.value.suggestions) == 3

    def test_parse(self):
        assert parse_grid("16/86", CONFIG.clock) == GridPoint(8, 43)
        with pytest.raises(ValueError):
            parse_grid("8-43", CONFIG.clock)


class TestRepetitionCandidates:
    def test_46(self):
        cands = repetition_candidates(CONFIG, G46)
        assert [(g.clock_cycles, r) for g, r in cands] == [(46, 7), (46, 6), (46, 8)]

    def test_multiples_and_ranges(self):
        cands = repetition_candidates(CONFIG, GridPoint(1, 5))
        assert len(cands) == MAX_CANDIDATES
        for g, r in cands:
            assert 35 <= g.clock_cycles <= 55 and 5 <= r <= 8
            assert g.qubit_frequency == 5.0
        gaps = [abs(r * g.gate_time - 12.0) for g, r in cands]
        assert gaps == sorted(gaps)

    def test_no_multiple(self):
        assert repetition_candidates(CONFIG, GridPoint(6, 31)) == []


class TestTrim:
    def test_matches_brute_force(self):
        grid = GridPoint(8, 39)
        bits = basic_subsequence(grid)
        f0 = grid.qubit_frequency
        f, fit = trim_frequency(bits, grid, CONFIG, f0, 10, 0.0126, 1e-3)
        offsets = np.linspace(-1e-3, 1e-3, 401)
        brute = [optimize_tip_angle(bits, grid, CONFIG.model(f0 + o, 3), 10, seed_angle=0.0126).fidelity
                 for o in offsets]
        assert fit.fidelity >= max(brute) - 1e-10
        assert abs(f - f0 - offsets[int(np.argmax(brute))]) < 1e-5
        assert abs(f - f0) <= 1e-3

    def test_trimmed_entries_clear_floor(self, trimmed46):
        assert trimmed46.nominal_frequency == G46.qubit_frequency
        moved = [c for c in trimmed46.candidates if c.qubit_frequency != G46.qubit_frequency]
        assert moved
        for c in moved:
            assert 0 < abs(c.qubit_frequency - G46.qubit_frequency) <= 1e-3
        assert trimmed46.best is not None
        assert trimmed46.qubit_frequency == trimmed46.best.qubit_frequency
        assert trimmed46.best.entry.fidelity_opt >= 0.9999

    def test_disabled(self):
        d = derive(RunConfig(vertex_budget=5, max_trim_mhz=0.0), G46)
        assert all(c.qubit_frequency == G46.qubit_frequency for c in d.candidates)
        assert d.best is None and d.qubit_frequency == G46.qubit_frequency

    def test_explicit_frequency_is_not_trimmed(self):
        d = derive(FAST, G46, 4.8915)
        assert all(c.qubit_frequency == 4.8915 for c in d.candidates)

    def test_too_far(self):
        with pytest.raises(ValueError):
            derive(FAST, G46, 4.9)
        with pytest.raises(ValueError):
            RunConfig(max_trim_mhz=6.0)

    def test_records_carry_operating_frequency(self, trimmed46):
        recs = trimmed46.catalog_records()
        freqs = {c.qubit_frequency for c in trimmed46.candidates}
        assert {r["f_q_ghz"] for r in recs} <= freqs


class TestSensitivity:
    bits = Bitstream.from_string("1100011" * 7)

    def test_gate_fidelity_matches_evolve(self):
        m = CONFIG.model(5.0, 7)
        ref = average_gate_fidelity(evolve(self.bits.repeated(3), m, 0.03))
        assert gate_fidelity(self.bits, m, 0.03, 3) == pytest.approx(ref, abs=1e-12)

    def test_zero_offset_is_baseline(self):
        scan = sensitivity_scan(self.bits, CONFIG, 5.0, 3, 0.03, "frequency_drift", 500.0, 4)
        assert len(scan.offsets) == 5 and scan.offsets[2] == 0
        base = 1 - gate_fidelity(self.bits, CONFIG.model(5.0, 7), 0.03, 3)
        assert scan.baseline == pytest.approx(base, abs=1e-14)
        assert scan.added[2] == 0 and scan.even_added[2] == 0
        np.testing.assert_allclose(scan.even_added, scan.even_added[::-1], atol=1e-15)

    def test_naive_estimate(self):
        scan = sensitivity_scan(self.bits, CONFIG, 5.0, 2, 0.03, "frequency_drift", 300.0, 3)
        t = 2 * len(self.bits) * 0.04
        assert scan.naive[2] == pytest.approx((2 * np.pi * 3e-4 * t) ** 2 / 6)
        anh = sensitivity_scan(self.bits, CONFIG, 5.0, 2, 0.03, "anharmonicity_drift", 10.0, 3)
        assert np.all(np.isnan(anh.naive))

    def test_pure_phase_gate_follows_law(self):
        # the all-zero register is the identity; detuning adds a pure z phase phi = dw T,
        # and F = (2 + |Tr(Y^dag Rz(phi))|^2) / 6 = (3 + cos(phi)) / 6
        bits = Bitstream((0,) * 50)
        scan = sensitivity_scan(bits, CONFIG, 5.0, 4, 0.03, "frequency_drift", 1000.0, 5)
        phi = 2 * np.pi * scan.offsets * 1e-6 * scan.gate_time
        np.testing.assert_allclose(1 - scan.infidelities, (3 + np.cos(phi)) / 6, atol=1e-12)

    def test_bad_axis(self):
        with pytest.raises(ValueError):
            sensitivity_scan(self.bits, CONFIG, 5.0, 1, 0.03, "drift", 1.0)
