"""End-to-end derivation, verification and sensitivity scans.

This module glues the physics and search layers together for the command
line: it owns the run configuration and the per-frequency derivation
procedure (basic seed, greedy climb, neighbourhood search, fixed-angle
selection).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from scallop.frequency import GridPoint, enumerate_magic_frequencies, nearest_grid_points
from scallop.search import (
    Neighborhood,
    Selection,
    SubsequenceScorer,
    TipAngleFit,
    Vertex,
    basic_subsequence,
    choose_repetitions,
    greedy_climb,
    neighborhood_bfs,
    optimize_tip_angle,
    select_for_tip_angle,
)
from scallop.sequence import Bitstream, ClockSpec
from scallop.transmon import LevelModel, TransmonSpec, build_duffing_ladder

#: Repetition counts considered when assembling a gate from a subsequence.
REPETITION_RANGE = (5, 8)
#: Number of (subsequence length, repetitions) candidates tried per frequency.
MAX_CANDIDATES = 3
#: Frequencies within this distance (GHz) of a grid point count as on the grid.
GRID_MATCH_GHZ = 1e-6
#: Largest allowed distance (GHz) between an operating frequency and the grid
#: point whose clock pattern it borrows.
MAX_TRIM_GHZ = 5e-3
#: Grid points (and golden-section tolerance, GHz) of the operating-frequency trim.
TRIM_GRID_POINTS = 21
TRIM_TOL_GHZ = 1e-6
#: Limit on the population outside the qubit subspace at the end of every
#: subsequence repetition, applied when selecting the fixed-angle vertex.
BOUNDARY_LEAKAGE_LIMIT = 1e-4


@dataclass
class RunConfig:
    """Settings shared by every command.

    Loaded from a JSON object whose keys are the field names; command-line
    flags override file values.  ``max_trim_mhz`` bounds how far a derivation
    may move the qubit away from the magic frequency (see `derive`); zero
    keeps every gate exactly on the grid.
    """

    clock_frequency_ghz: float = 25.0
    anharmonicity_ghz: float = 0.250
    search_levels: int = 3
    verify_levels: int = 7
    fixed_tip_angle: float = 0.032
    a_sym_threshold: float = 0.05
    fidelity_floor: float = 0.9999
    frequency_range_ghz: tuple[float, float] = (4.5, 5.5)
    max_subseq_clocks: int = 55
    min_subseq_clocks: int = 35
    target_gate_time_ns: float = 12.0
    vertex_budget: int = 5000
    max_trim_mhz: float = 1.0
    output_dir: Path = Path("scallop-out")

    def __post_init__(self):
        self.frequency_range_ghz = tuple(float(x) for x in self.frequency_range_ghz)
        self.output_dir = Path(self.output_dir)
        positive = ("clock_frequency_ghz", "anharmonicity_ghz", "fixed_tip_angle",
                    "a_sym_threshold", "target_gate_time_ns")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.search_levels < 2 or self.verify_levels < 2:
            raise ValueError("level counts must be >= 2")
        if not 0 < self.fidelity_floor <= 1:
            raise ValueError("fidelity_floor must lie in (0, 1]")
        if len(self.frequency_range_ghz) != 2:
            raise ValueError("frequency_range_ghz needs two values")
        lo, hi = self.frequency_range_ghz
        if not 0 < lo <= hi:
            raise ValueError("frequency_range_ghz must satisfy 0 < min <= max")
        if not 1 <= self.min_subseq_clocks <= self.max_subseq_clocks:
            raise ValueError("need 1 <= min_subseq_clocks <= max_subseq_clocks")
        if self.vertex_budget < 1:
            raise ValueError("vertex_budget must be >= 1")
        if not 0 <= self.max_trim_mhz <= MAX_TRIM_GHZ * 1e3:
            raise ValueError(f"max_trim_mhz must lie in [0, {MAX_TRIM_GHZ * 1e3:g}]")

    @classmethod
    def from_mapping(cls, record: dict[str, Any], **overrides) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(record) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        merged = dict(record)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**merged)

    @classmethod
    def from_file(cls, path: Path | str | None, **overrides) -> "RunConfig":
        record = json.loads(Path(path).read_text()) if path else {}
        return cls.from_mapping(record, **overrides)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["frequency_range_ghz"] = list(self.frequency_range_ghz)
        d["output_dir"] = str(self.output_dir)
        return d

    @property
    def clock(self) -> ClockSpec:
        return ClockSpec(self.clock_frequency_ghz)

    def model(self, f_q: float, levels: int, anharmonicity: float | None = None) -> LevelModel:
        alpha = self.anharmonicity_ghz if anharmonicity is None else anharmonicity
        return build_duffing_ladder(TransmonSpec(f_q, alpha, levels))

    def grid_points(self) -> list[GridPoint]:
        lo, hi = self.frequency_range_ghz
        return enumerate_magic_frequencies(self.clock, lo, hi, self.max_subseq_clocks)


class OffGridError(ValueError):
    """Raised when a requested frequency is not a magic frequency."""

    def __init__(self, f_q: float, suggestions: list[GridPoint]):
        self.f_q = f_q
        self.suggestions = suggestions
        listing = ", ".join(
            f"{p.qubit_frequency:.6f} GHz ({p.qubit_cycles}/{p.clock_cycles})" for p in suggestions
        )
        super().__init__(f"{f_q} GHz is not within 1 kHz of a magic frequency; nearest: {listing}")


def locate_grid_point(config: RunConfig, f_q: float) -> GridPoint:
    """The canonical grid point within 1 kHz of ``f_q``."""
    near = nearest_grid_points(f_q, config.clock, config.max_subseq_clocks, count=3)
    if near and abs(near[0].qubit_frequency - f_q) <= GRID_MATCH_GHZ:
        return near[0]
    raise OffGridError(f_q, near)


def parse_grid(text: str, clock: ClockSpec) -> GridPoint:
    """Read ``"NQ/NC"`` as a canonical grid point."""
    try:
        nq, nc = (int(s) for s in text.split("/"))
    except ValueError:
        raise ValueError(f"grid must look like NQ/NC, got {text!r}") from None
    return GridPoint(nq, nc, clock).canonical()


@dataclass
class Candidate:
    """One (subsequence length, repetitions) attempt at a frequency.

    ``qubit_frequency`` is the operating frequency the neighbourhood was
    searched and selected at.
    """

    grid: GridPoint
    repetitions: int
    qubit_frequency: float
    seed_fit: TipAngleFit
    entry: Vertex
    neighborhood: Neighborhood
    selection: Selection | None = None

    def summary(self) -> dict:
        sel = self.selection
        return {
            "f_q_ghz": self.qubit_frequency,
            "subseq_clocks": self.grid.clock_cycles,
            "repetitions": self.repetitions,
            "seed_infidelity": 1.0 - self.seed_fit.fidelity,
            "entry_infidelity": self.entry.infidelity,
            "entry_tip_angle": self.entry.tip_angle_opt,
            "neighborhood_size": len(self.neighborhood),
            "fixed_angle_infidelity": None if sel is None else sel.infidelity,
            "boundary_leakage": None if sel is None else sel.boundary_leakage,
        }


@dataclass
class Derivation:
    """Result of deriving a gate at one frequency.

    ``best`` is the candidate with a non-empty neighbourhood whose selection
    meets both the fidelity threshold and the boundary-leakage limit with the
    highest fixed-angle, verify-model fidelity; failing that, simply the
    highest fidelity (None if no neighbourhood is non-empty).
    ``candidates`` lists every attempt in the order tried.
    ``nominal_frequency`` is the frequency the derivation was asked for;
    ``qubit_frequency`` is the best candidate's operating frequency.
    """

    base: GridPoint
    nominal_frequency: float
    fixed_tip_angle: float
    candidates: list[Candidate] = field(default_factory=list)
    best: Candidate | None = None

    @property
    def qubit_frequency(self) -> float:
        return self.nominal_frequency if self.best is None else self.best.qubit_frequency

    @property
    def below_threshold(self) -> bool:
        return self.best is None or self.best.selection.below_threshold

    @property
    def leakage_ok(self) -> bool:
        return self.best is not None and self.best.selection.leakage_ok

    @property
    def fidelity(self) -> float:
        return float("nan") if self.best is None else self.best.selection.fidelity

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity

    @property
    def gate_time(self) -> float:
        if self.best is None:
            return float("nan")
        return self.best.repetitions * self.best.grid.gate_time

    @property
    def register_bits(self) -> Bitstream | None:
        return None if self.best is None else self.best.selection.vertex.bits

    def catalog_records(self) -> list[dict]:
        """Neighbourhood vertices of every candidate (the greedy entry when empty)."""
        out = []
        for cand in self.candidates:
            verts = list(cand.neighborhood) or [cand.entry]
            for v in verts:
                rec = v.to_record()
                rec["f_q_ghz"] = cand.qubit_frequency
                out.append(rec)
        return out


def repetition_candidates(config: RunConfig, base: GridPoint) -> list[tuple[GridPoint, int]]:
    """(subsequence grid, repetitions) pairs ranked by distance to the target gate time.

    Only subsequence lengths in ``[min_subseq_clocks, max_subseq_clocks]`` and
    repetition counts in `REPETITION_RANGE` are considered; ties go to
    shorter subsequences.
    """
    lo, hi = REPETITION_RANGE
    pairs = []
    for sub in base.subsequence_grids(config.min_subseq_clocks, config.max_subseq_clocks):
        for r in choose_repetitions(sub, config.fixed_tip_angle, config.target_gate_time_ns):
            if lo <= r <= hi:
                pairs.append((abs(r * sub.gate_time - config.target_gate_time_ns), sub.clock_cycles, r, sub))
    pairs.sort(key=lambda p: p[:3])
    return [(p[3], p[2]) for p in pairs[:MAX_CANDIDATES]]


def _quality(cand: Candidate) -> tuple:
    sel = cand.selection
    return (sel.below_threshold or not sel.leakage_ok, -sel.fidelity)


def trim_frequency(
    bits: Bitstream,
    grid: GridPoint,
    config: RunConfig,
    f_q: float,
    repetitions: int,
    seed_angle: float,
    span_ghz: float,
) -> tuple[float, TipAngleFit]:
    """Operating frequency within ``span_ghz`` of ``f_q`` that maximises ``bits``.

    A subsequence at a magic frequency usually leaves a small residual phase
    error in the gate; shifting the qubit slightly cancels it.  The fidelity
    at the optimal tip angle is maximised over the offset with a coarse grid
    followed by golden-section refinement to `TRIM_TOL_GHZ`.
    """

    def fit(offset: float) -> TipAngleFit:
        model = config.model(f_q + offset, config.search_levels)
        return optimize_tip_angle(bits, grid, model, repetitions, seed_angle=seed_angle)

    offsets = np.linspace(-span_ghz, span_ghz, TRIM_GRID_POINTS)
    values = [fit(o).fidelity for o in offsets]
    i = int(np.argmax(values))
    a, b = offsets[max(i - 1, 0)], offsets[min(i + 1, len(offsets) - 1)]
    golden = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = b - golden * (b - a), a + golden * (b - a)
    fc, fd = fit(c).fidelity, fit(d).fidelity
    while b - a > TRIM_TOL_GHZ:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - golden * (b - a)
            fc = fit(c).fidelity
        else:
            a, c, fc = c, d, fd
            d = a + golden * (b - a)
            fd = fit(d).fidelity
    best = float(offsets[i]) if values[i] >= max(fc, fd) else float((a + b) / 2)
    return f_q + best, fit(best)


def derive(config: RunConfig, base: GridPoint, f_q: float | None = None) -> Derivation:
    """Derive a fixed-tip-angle gate at grid point ``base``.

    For each (subsequence length, repetitions) candidate the basic
    subsequence is climbed greedily, its neighbourhood is searched and the
    best vertex at the fixed tip angle is selected on the verify model.

    When ``f_q`` is not given and a candidate's greedy entry misses the
    fidelity floor at the magic frequency, the qubit frequency is trimmed
    within ``config.max_trim_mhz`` to cancel the entry's residual phase error
    (`trim_frequency`), and the climb and search continue at the trimmed
    operating frequency.

    Parameters
    ----------
    config
        Run settings.
    base
        Grid point providing the clock pattern.
    f_q
        Qubit frequency used in the simulation, GHz.  Defaults to the exact
        grid frequency; other values (within `MAX_TRIM_GHZ`) derive a gate
        for a qubit trimmed slightly away from the magic frequency, and
        disable the automatic trim.
    """
    base = base.canonical()
    trim = config.max_trim_mhz * 1e-3 if f_q is None else 0.0
    f_q = base.qubit_frequency if f_q is None else float(f_q)
    if abs(f_q - base.qubit_frequency) > MAX_TRIM_GHZ:
        raise ValueError("operating frequency is too far from the grid point")
    result = Derivation(base, f_q, config.fixed_tip_angle)
    for sub, reps in repetition_candidates(config, base):
        f_c = f_q
        search_model = config.model(f_c, config.search_levels)
        seed = basic_subsequence(sub)
        seed_fit = optimize_tip_angle(seed, sub, search_model, reps)
        entry = greedy_climb(seed, sub, search_model, reps, threshold=config.a_sym_threshold)
        if trim > 0 and entry.fidelity_opt < config.fidelity_floor:
            f_c, _ = trim_frequency(entry.bits, sub, config, f_q, reps, entry.tip_angle_opt, trim)
            search_model = config.model(f_c, config.search_levels)
            entry = greedy_climb(entry.bits, sub, search_model, reps,
                                 seed_angle=entry.tip_angle_opt, threshold=config.a_sym_threshold)
        hood = neighborhood_bfs(
            entry, sub, search_model, reps,
            fidelity_floor=config.fidelity_floor,
            vertex_budget=config.vertex_budget,
            threshold=config.a_sym_threshold,
        )
        cand = Candidate(sub, reps, f_c, seed_fit, entry, hood)
        if len(hood):
            cand.selection = select_for_tip_angle(
                hood, config.fixed_tip_angle, config.model(f_c, config.verify_levels),
                max_boundary_leakage=BOUNDARY_LEAKAGE_LIMIT,
            )
            if result.best is None or _quality(cand) < _quality(result.best):
                result.best = cand
        result.candidates.append(cand)
    return result


def gate_fidelity(bits: Bitstream, model: LevelModel, tip_angle: float, repetitions: int) -> float:
    """Fidelity of ``repetitions`` copies of ``bits`` (compiled path)."""
    grid = GridPoint(1, len(bits), bits.clock)
    scorer = SubsequenceScorer(model, grid, repetitions)
    return float(scorer.fidelity(bits.as_array()[None, :], np.array([[tip_angle]]))[0, 0])


AXES = ("frequency_drift", "anharmonicity_drift")


@dataclass(frozen=True)
class SensitivityScan:
    """Gate infidelity against a parameter offset.

    Offsets are in kHz for ``frequency_drift`` and MHz for
    ``anharmonicity_drift``.  ``naive`` is the analytic estimate of the added
    infidelity of a pure phase error, ``(delta_omega T_g)^2 / 6``, and is only
    meaningful on the frequency axis.

    A gate with a small residual phase error responds to detuning with a term
    linear in the offset as well as the quadratic one; ``even_added`` averages
    each offset with its mirror image, which cancels the linear term.
    """

    axis: str
    offsets: np.ndarray
    infidelities: np.ndarray
    gate_time: float

    @property
    def baseline(self) -> float:
        return float(self.infidelities[np.argmin(np.abs(self.offsets))])

    @property
    def added(self) -> np.ndarray:
        return self.infidelities - self.baseline

    @property
    def even_added(self) -> np.ndarray:
        """``(I(x) + I(-x)) / 2 - I(0)`` at every offset; offsets are symmetric."""
        return (self.infidelities + self.infidelities[::-1]) / 2 - self.baseline

    @property
    def naive(self) -> np.ndarray:
        if self.axis != "frequency_drift":
            return np.full(len(self.offsets), np.nan)
        dw = 2 * np.pi * self.offsets * 1e-6  # kHz -> rad/ns
        return (dw * self.gate_time) ** 2 / 6

    def rows(self):
        for row in zip(self.offsets, self.infidelities, self.added, self.even_added, self.naive):
            yield (self.axis,) + tuple(float(x) for x in row)


SENSITIVITY_COLUMNS = (
    "axis", "offset", "infidelity", "added_infidelity", "even_added_infidelity", "naive_estimate",
)


def sensitivity_scan(
    bits: Bitstream,
    config: RunConfig,
    f_q: float,
    repetitions: int,
    tip_angle: float,
    axis: str,
    span: float,
    points: int = 21,
) -> SensitivityScan:
    """Infidelity of a fixed gate as the qubit frequency or anharmonicity drifts.

    The clock pattern is held fixed; only the transmon model changes.  The
    scan uses ``points`` offsets evenly spaced over ``[-span, span]``
    (``points`` is forced odd so zero offset is included).
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}")
    if span < 0:
        raise ValueError("span must be non-negative")
    points = max(1, points | 1)
    offsets = np.linspace(-span, span, points) if span > 0 else np.zeros(1)
    infid = np.empty(len(offsets))
    for i, off in enumerate(offsets):
        if axis == "frequency_drift":
            model = config.model(f_q + off * 1e-6, config.verify_levels)
        else:
            model = config.model(f_q, config.verify_levels, config.anharmonicity_ghz + off * 1e-3)
        infid[i] = 1.0 - gate_fidelity(bits, model, tip_angle, repetitions)
    return SensitivityScan(axis, offsets, infid, repetitions * len(bits) * bits.clock.period)

