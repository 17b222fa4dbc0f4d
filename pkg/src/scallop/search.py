"""
Subsequence graph search.

Vertices of the graph are subsequence bit patterns, each scored at its own
optimal tip angle; edges toggle one symmetric pair of clock edges (both bits
0 -> 1 or both 1 -> 0).  Because symmetric pairs act as y-rotations to first
order, moving along an edge mostly rescales the rotation (absorbed by
re-optimising the tip angle) while changing leakage.

The search runs a greedy climb from the basic subsequence, then a
breadth-first search over vertices above a fidelity floor, and finally picks
the vertex that performs best at the hardware tip angle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from scallop.frequency import ClockPair, GridPoint, enumerate_symmetric_pairs
from scallop._kernels import repeated_fidelity_kernel
from scallop.sequence import CARDINAL_STATES, Bitstream, target_y_half
from scallop.transmon import LevelModel

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
GRID_POINTS = 61
ANGLE_TOL = 1e-6
BAND_TOL = 1e-7
BAND_INFIDELITY = 1e-4
_CHUNK = 256
#: How many times the coarse grid may be re-centred on one of its own edges.
MAX_GRID_SHIFTS = 8


def basic_subsequence(grid: GridPoint) -> Bitstream:
    """Pulse on edge k iff ``frac(N_q k / N_c)`` is <= 1/4 or >= 3/4.

    These are the edges on which a pulse rotates the qubit towards +y.
    """
    nq, nc = grid.qubit_cycles, grid.clock_cycles
    bits = []
    for k in range(nc):
        r = (nq * k) % nc
        bits.append(int(4 * r <= nc or 4 * r >= 3 * nc))
    return Bitstream(tuple(bits), grid.clock)


def _pair_index(pairs: Sequence[ClockPair]) -> tuple[np.ndarray, np.ndarray]:
    a = np.array([p.edge_a for p in pairs], dtype=int)
    b = np.array([p.edge_b for p in pairs], dtype=int)
    return a, b


def _neighbor_rows(bits: np.ndarray, edges: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    a, b = edges
    ok = bits[a] == bits[b]
    rows = np.repeat(bits[None, :], int(ok.sum()), axis=0)
    idx = np.arange(len(rows))
    rows[idx, a[ok]] ^= True
    # degenerate self-pairs toggle a single bit
    distinct = a[ok] != b[ok]
    rows[idx[distinct], b[ok][distinct]] ^= True
    return rows


def neighbors(bits: Bitstream, pairs: Sequence[ClockPair]) -> list[Bitstream]:
    """Bitstreams one symmetric-pair toggle away from ``bits``.

    Only pairs whose two edges currently hold equal bits produce a neighbour.
    """
    if not pairs:
        return []
    rows = _neighbor_rows(bits.as_array(), _pair_index(pairs))
    return [Bitstream(tuple(int(x) for x in r), bits.clock) for r in rows]


class TipAngleFit(NamedTuple):
    angle: float
    fidelity: float
    degenerate: bool


class SubsequenceScorer:
    """Scores repeated subsequences on one level model.

    All methods work on batches: ``bits`` is a (B, N) bool array with one
    subsequence per row.
    """

    def __init__(self, model: LevelModel, grid: GridPoint, repetitions: int):
        if repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        self.model = model
        self.grid = grid
        self.repetitions = repetitions
        self.period = grid.clock.period
        self._eig = model.kick_eigensystem
        self._free = model.free_phases(self.period)
        self._targets = CARDINAL_STATES @ target_y_half().T

    def fidelity(self, bits: np.ndarray, angles: np.ndarray) -> np.ndarray:
        """Fidelity table of shape ``angles.shape``; 1-D ``angles`` means one per row."""
        bits = np.ascontiguousarray(bits, dtype=np.bool_)
        angles = np.asarray(angles, dtype=float)
        if angles.ndim == 1:
            angles = angles[:, None]
        angles = np.ascontiguousarray(np.broadcast_to(angles, (len(bits), angles.shape[1])))
        w, v = self._eig
        return repeated_fidelity_kernel(
            bits, angles, w, v, self._free, self.repetitions, CARDINAL_STATES, self._targets
        )

    def optimize(self, bits: np.ndarray, seeds) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Coarse grid over ``[seed/2, 3 seed/2]`` then golden-section refinement.

        When the best grid point is an end point of the grid, the grid is
        re-centred on it (at most `MAX_GRID_SHIFTS` times) so an optimum
        outside the initial window is still bracketed.

        Returns ``(angles, fidelities, degenerate)``; rows without any pulse
        keep their seed angle and are flagged degenerate.
        """
        bits = np.asarray(bits, dtype=bool)
        n = len(bits)
        seeds = np.broadcast_to(np.asarray(seeds, dtype=float), (n,))
        scale = np.linspace(0.5, 1.5, GRID_POINTS)
        grid = seeds[:, None] * scale[None, :]
        f_grid = self.fidelity(bits, grid)
        best = np.argmax(f_grid, axis=1)
        pulsed = bits.any(axis=1)
        for _ in range(MAX_GRID_SHIFTS):
            top = grid[:, -1] * 3.0 < np.pi  # keep every angle below pi
            shift = pulsed & ((best == 0) | ((best == GRID_POINTS - 1) & top))
            if not shift.any():
                break
            centre = grid[shift, best[shift]]
            grid[shift] = centre[:, None] * scale[None, :]
            f_grid[shift] = self.fidelity(bits[shift], grid[shift])
            best[shift] = np.argmax(f_grid[shift], axis=1)
        rows = np.arange(n)
        lo = grid[rows, np.maximum(best - 1, 0)]
        hi = grid[rows, np.minimum(best + 1, GRID_POINTS - 1)]

        c = hi - GOLDEN * (hi - lo)
        d = lo + GOLDEN * (hi - lo)
        fc = self.fidelity(bits, c)[:, 0]
        fd = self.fidelity(bits, d)[:, 0]
        while np.max(hi - lo) > ANGLE_TOL:
            left = fc >= fd  # maximum lies in [lo, d]
            hi = np.where(left, d, hi)
            lo = np.where(left, lo, c)
            new = np.where(left, hi - GOLDEN * (hi - lo), lo + GOLDEN * (hi - lo))
            f_new = self.fidelity(bits, new)[:, 0]
            c, d, fc, fd = (
                np.where(left, new, d),
                np.where(left, c, new),
                np.where(left, f_new, fd),
                np.where(left, fc, f_new),
            )
        angle = np.where(fc >= fd, c, d)
        fid = np.maximum(fc, fd)
        f_best = f_grid[rows, best]
        use_grid = f_best > fid
        angle = np.where(use_grid, grid[rows, best], angle)
        fid = np.where(use_grid, f_best, fid)

        degenerate = ~bits.any(axis=1)
        angle = np.where(degenerate, seeds, angle)
        fid = np.where(degenerate, f_grid[:, 0], fid)
        return angle, fid, degenerate

    def bands(
        self,
        bits: np.ndarray,
        angles: np.ndarray,
        fidelities: np.ndarray,
        infidelity: float = BAND_INFIDELITY,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Tip-angle interval around each optimum where infidelity stays below ``infidelity``.

        Edges are located by outward doubling steps and then bisection to
        `BAND_TOL`; rows whose optimum misses the threshold get NaN.
        The search is capped at half the optimal angle on either side.
        """
        bits = np.asarray(bits, dtype=bool)
        angles = np.asarray(angles, dtype=float)
        floor = 1.0 - infidelity
        ok = np.asarray(fidelities) >= floor
        lo_edge = np.full(len(bits), np.nan)
        hi_edge = np.full(len(bits), np.nan)
        if not ok.any():
            return lo_edge, hi_edge
        b, th = bits[ok], angles[ok]
        steps = 0.005 * 2.0 ** np.arange(7)  # fractions of the optimal angle
        steps = np.append(steps, 0.5)
        edges = []
        for sign in (-1.0, 1.0):
            probe = th[:, None] * (1.0 + sign * steps[None, :])
            f = self.fidelity(b, probe)
            outside = f < floor
            has_out = outside.any(axis=1)
            first = np.where(has_out, np.argmax(outside, axis=1), len(steps) - 1)
            inner = np.where(first > 0, probe[np.arange(len(b)), np.maximum(first - 1, 0)], th)
            outer = probe[np.arange(len(b)), first]
            while True:
                active = has_out & (np.abs(outer - inner) > BAND_TOL)
                if not active.any():
                    break
                mid = 0.5 * (inner + outer)
                f_mid = self.fidelity(b, mid)[:, 0]
                inside = f_mid >= floor
                inner = np.where(active & inside, mid, inner)
                outer = np.where(active & ~inside, mid, outer)
            edges.append(np.where(has_out, inner, outer))
        lo_edge[ok], hi_edge[ok] = edges
        return lo_edge, hi_edge


def optimize_tip_angle(
    bits: Bitstream,
    grid: GridPoint,
    model: LevelModel,
    repetitions: int,
    seed_angle: float = 0.03,
) -> TipAngleFit:
    """Tip angle maximising the fidelity of ``repetitions`` copies of ``bits``."""
    if not 0 < seed_angle <= 0.1:
        raise ValueError("seed_angle must lie in (0, 0.1]")
    scorer = SubsequenceScorer(model, grid, repetitions)
    a, f, deg = scorer.optimize(bits.as_array()[None, :], seed_angle)
    return TipAngleFit(float(a[0]), float(f[0]), bool(deg[0]))


@dataclass(frozen=True)
class Vertex:
    """A subsequence scored at its optimal tip angle.

    ``tip_angle_band`` is the interval of tip angles over which infidelity
    stays below 1e-4, or None when the optimum itself misses that.
    ``path`` lists the fidelities visited by the greedy climb that produced
    the vertex (empty for vertices found otherwise).
    """

    bits: Bitstream
    grid: GridPoint
    tip_angle_opt: float
    fidelity_opt: float
    repetitions: int
    tip_angle_band: tuple[float, float] | None = None
    path: tuple[float, ...] = ()

    @property
    def key(self) -> str:
        return self.bits.to_string()

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity_opt

    @property
    def climb_steps(self) -> int:
        return max(len(self.path) - 1, 0)

    def to_record(self) -> dict:
        lo, hi = self.tip_angle_band if self.tip_angle_band else (None, None)
        return {
            "bits": self.key,
            "N_q": self.grid.qubit_cycles,
            "N_c": self.grid.clock_cycles,
            "f_q_ghz": self.grid.qubit_frequency,
            "tip_angle_opt": self.tip_angle_opt,
            "fidelity_opt": self.fidelity_opt,
            "band_lo": lo,
            "band_hi": hi,
            "repetitions": self.repetitions,
        }

    @classmethod
    def from_record(cls, rec: dict, grid: GridPoint) -> "Vertex":
        band = None
        if rec.get("band_lo") is not None:
            band = (float(rec["band_lo"]), float(rec["band_hi"]))
        return cls(
            bits=Bitstream.from_string(rec["bits"], grid.clock),
            grid=grid,
            tip_angle_opt=float(rec["tip_angle_opt"]),
            fidelity_opt=float(rec["fidelity_opt"]),
            repetitions=int(rec["repetitions"]),
            tip_angle_band=band,
        )


def _make_vertex(bits_row, grid, angle, fid, reps, lo, hi, path=()) -> Vertex:
    band = None if np.isnan(lo) else (float(lo), float(hi))
    return Vertex(
        Bitstream(tuple(int(x) for x in bits_row), grid.clock),
        grid,
        float(angle),
        float(fid),
        reps,
        band,
        tuple(path),
    )


def _rank_key(fid: float, row: np.ndarray) -> tuple:
    # higher fidelity, then fewer pulses, then lexicographically smallest
    return (-fid, int(row.sum()), row.astype(np.uint8).tobytes())


def greedy_climb(
    seed: Bitstream,
    grid: GridPoint,
    model: LevelModel,
    repetitions: int,
    seed_angle: float = 0.03,
    threshold: float = 0.05,
    max_steps: int = 1000,
) -> Vertex:
    """Move to the best strictly improving neighbour until none exists."""
    if len(seed) != grid.clock_cycles:
        raise ValueError("seed length must equal the grid's clock cycles")
    scorer = SubsequenceScorer(model, grid, repetitions)
    edges = _pair_index(enumerate_symmetric_pairs(grid.clock_cycles, grid.qubit_cycles, threshold))
    current = seed.as_array()
    a, f, _ = scorer.optimize(current[None, :], seed_angle)
    angle, fid = float(a[0]), float(f[0])
    path = [fid]
    for _ in range(max_steps):
        rows = _neighbor_rows(current, edges) if len(edges[0]) else np.empty((0, len(current)), bool)
        if not len(rows):
            break
        na, nf, _ = scorer.optimize(rows, angle)
        order = min(range(len(rows)), key=lambda i: _rank_key(nf[i], rows[i]))
        if not nf[order] > fid:
            break
        current, angle, fid = rows[order], float(na[order]), float(nf[order])
        path.append(fid)
    lo, hi = scorer.bands(current[None, :], np.array([angle]), np.array([fid]))
    return _make_vertex(current, grid, angle, fid, repetitions, lo[0], hi[0], path)


@dataclass
class Neighborhood:
    """Vertices reached by breadth-first search above ``fidelity_floor``.

    ``vertices`` is keyed by bit pattern in discovery order.
    """

    grid: GridPoint
    model: LevelModel
    repetitions: int
    fidelity_floor: float = 0.9999
    vertices: dict[str, Vertex] = field(default_factory=dict)
    visited: int = 0
    pruned: int = 0
    budget_exhausted: bool = False
    layers: int = 0

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices.values())

    def band_union(self) -> list[tuple[float, float]]:
        """Merged tip-angle bands of all vertices, sorted."""
        bands = sorted(v.tip_angle_band for v in self if v.tip_angle_band)
        merged: list[list[float]] = []
        for lo, hi in bands:
            if merged and lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return [tuple(m) for m in merged]

    def coverage(self, lo: float, hi: float) -> float:
        """Fraction of ``[lo, hi]`` covered by the union of bands."""
        covered = 0.0
        for a, b in self.band_union():
            covered += max(0.0, min(b, hi) - max(a, lo))
        return covered / (hi - lo)

    def records(self) -> list[dict]:
        return [v.to_record() for v in self]


def neighborhood_bfs(
    entry: Vertex,
    grid: GridPoint,
    model: LevelModel,
    repetitions: int,
    fidelity_floor: float = 0.9999,
    vertex_budget: int = 5000,
    threshold: float = 0.05,
) -> Neighborhood:
    """Breadth-first search over vertices whose optimal fidelity reaches the floor.

    The search is processed one layer at a time: every new pattern discovered
    from the current layer is scored in one batch, seeded with the tip angle
    of the vertex that discovered it.  Discovery order is deterministic, so
    the result does not depend on how the batch is evaluated.
    """
    if vertex_budget < 1:
        raise ValueError("vertex_budget must be >= 1")
    if entry.repetitions != repetitions:
        raise ValueError("entry vertex was scored with a different repetition count")
    hood = Neighborhood(grid, model, repetitions, fidelity_floor)
    scorer = SubsequenceScorer(model, grid, repetitions)
    if entry.fidelity_opt < fidelity_floor:
        hood.visited = 1
        hood.pruned = 1
        return hood
    if entry.tip_angle_band is None:
        lo, hi = scorer.bands(entry.bits.as_array()[None, :], [entry.tip_angle_opt], [entry.fidelity_opt])
        entry = _make_vertex(entry.bits.as_array(), grid, entry.tip_angle_opt, entry.fidelity_opt,
                             repetitions, lo[0], hi[0], entry.path)
    hood.vertices[entry.key] = entry
    hood.visited = 1
    pairs = enumerate_symmetric_pairs(grid.clock_cycles, grid.qubit_cycles, threshold)
    edges = _pair_index(pairs)
    seen = {entry.bits.as_array().tobytes()}
    layer = [entry]
    while layer and len(edges[0]):
        cand_rows, cand_seeds = [], []
        for v in layer:
            for row in _neighbor_rows(v.bits.as_array(), edges):
                k = row.tobytes()
                if k not in seen:
                    seen.add(k)
                    cand_rows.append(row)
                    cand_seeds.append(v.tip_angle_opt)
        if not cand_rows:
            break
        hood.layers += 1
        layer = []
        # score in discovery order; stop as soon as the budget fills
        for s in range(0, len(cand_rows), _CHUNK):
            if len(hood.vertices) >= vertex_budget:
                hood.budget_exhausted = True
                break
            rows = np.array(cand_rows[s:s + _CHUNK])
            angles, fids, _ = scorer.optimize(rows, np.array(cand_seeds[s:s + _CHUNK]))
            keep = np.flatnonzero(fids >= fidelity_floor)
            room = vertex_budget - len(hood.vertices)
            if len(keep) > room:
                hood.budget_exhausted = True
                n_scored = keep[room]  # later rows count as unvisited
                keep = keep[:room]
            else:
                n_scored = len(rows)
            hood.visited += n_scored
            hood.pruned += n_scored - len(keep)
            lo, hi = scorer.bands(rows[keep], angles[keep], fids[keep])
            for j, i in enumerate(keep):
                v = _make_vertex(rows[i], grid, angles[i], fids[i], repetitions, lo[j], hi[j])
                hood.vertices[v.key] = v
                layer.append(v)
        if hood.budget_exhausted:
            break
    return hood


def boundary_leakage(
    bits: np.ndarray, model: LevelModel, period: float, tip_angle: float, repetitions: int
) -> np.ndarray:
    """Worst population outside the qubit subspace at subsequence boundaries.

    For each row of ``bits`` (shape (B, N)) the gate is built from
    ``repetitions`` copies at a fixed tip angle; the population of levels >= 2
    is taken after every completed copy, for each of the six cardinal initial
    states, and the maximum is returned (shape (B,)).
    """
    bits = np.asarray(bits, dtype=bool)
    d = model.dim
    free = model.free_phases(period)
    pulsed = free[:, None] * model.kicks(np.array([tip_angle]))[0]
    u = np.broadcast_to(np.eye(d, dtype=complex), (len(bits), d, d)).copy()
    for s in range(bits.shape[1]):
        on = bits[:, s]
        u[on] = pulsed @ u[on]
        u[~on] *= free[:, None]
    states = np.zeros((len(bits), d, 6), dtype=complex)
    states[:, :2, :] = CARDINAL_STATES.T
    worst = np.zeros(len(bits))
    for _ in range(repetitions):
        states = u @ states
        worst = np.maximum(worst, (np.abs(states[:, 2:, :]) ** 2).sum(axis=1).max(axis=1))
    return worst


@dataclass(frozen=True)
class Selection:
    """Vertex chosen for a fixed tip angle, scored at that angle.

    ``boundary_leakage`` is the worst population outside the qubit subspace
    at the end of any repetition; ``leakage_ok`` records whether it met the
    requested limit (always True when no limit was requested).
    """

    vertex: Vertex
    tip_angle: float
    fidelity: float
    below_threshold: bool
    boundary_leakage: float = float("nan")
    leakage_ok: bool = True

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity


def select_for_tip_angle(
    hood: Neighborhood,
    fixed_angle: float,
    model: LevelModel | None = None,
    infidelity: float = BAND_INFIDELITY,
    max_boundary_leakage: float | None = None,
) -> Selection:
    """Best vertex of ``hood`` when every pulse has tip angle ``fixed_angle``.

    Each vertex is re-simulated at ``fixed_angle`` with ``model`` (default: the
    model the neighbourhood was searched with).  Ties are broken by fewer
    pulses, then the lexicographically smallest pattern.

    With ``max_boundary_leakage`` set, vertices whose boundary leakage (see
    `boundary_leakage`) exceeds the limit are only chosen when no vertex
    meets it.
    """
    if not len(hood):
        raise ValueError("neighbourhood is empty")
    model = model or hood.model
    scorer = SubsequenceScorer(model, hood.grid, hood.repetitions)
    verts = list(hood)
    rows = np.array([v.bits.as_array() for v in verts])
    f = scorer.fidelity(rows, np.full((len(rows), 1), fixed_angle))[:, 0]
    if max_boundary_leakage is None:
        i = min(range(len(verts)), key=lambda k: _rank_key(f[k], rows[k]))
        return Selection(verts[i], float(fixed_angle), float(f[i]), bool(f[i] < 1.0 - infidelity))
    leak = boundary_leakage(rows, model, hood.grid.clock.period, fixed_angle, hood.repetitions)
    ok = leak < max_boundary_leakage
    i = min(range(len(verts)), key=lambda k: (not ok[k] or f[k] < 1.0 - infidelity,) + _rank_key(f[k], rows[k]))
    return Selection(
        verts[i], float(fixed_angle), float(f[i]), bool(f[i] < 1.0 - infidelity),
        float(leak[i]), bool(ok[i]),
    )


def choose_repetitions(
    grid: GridPoint, fixed_angle: float, target_time_ns: float, max_repetitions: int = 20
) -> list[int]:
    """Repetition counts ordered by how close the gate time gets to ``target_time_ns``.

    Ties go to fewer repetitions.
    """
    if not 0 < fixed_angle <= 0.1:
        raise ValueError("fixed_angle must lie in (0, 0.1]")
    t_sub = grid.clock_cycles * grid.clock.period
    return sorted(range(1, max_repetitions + 1), key=lambda r: (abs(r * t_sub - target_time_ns), r))
