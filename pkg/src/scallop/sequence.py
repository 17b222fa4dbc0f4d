"""
Bitstream evolution, average gate fidelity and leakage traces.

A bitstream ``S`` lists, for each clock edge, whether an SFQ pulse is applied.
Each edge contributes ``U_fr(T_c) U_SFQ`` (pulse) or ``U_fr(T_c)`` (no pulse),
and the gate unitary is the time-ordered product with the earliest edge acting
first.  Everything is simulated in the lab frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from scallop.transmon import LevelModel, free_evolution, sfq_kick

SQRT_HALF = np.sqrt(0.5)

#: Rows are |x+>, |x->, |y+>, |y->, |z+>, |z-> in the qubit subspace.
CARDINAL_STATES = np.array(
    [
        [SQRT_HALF, SQRT_HALF],
        [SQRT_HALF, -SQRT_HALF],
        [SQRT_HALF, 1j * SQRT_HALF],
        [SQRT_HALF, -1j * SQRT_HALF],
        [1.0, 0.0],
        [0.0, 1.0],
    ],
    dtype=complex,
)
CARDINAL_LABELS = ("x+", "x-", "y+", "y-", "z+", "z-")


@dataclass(frozen=True)
class ClockSpec:
    """Global SFQ clock; ``frequency`` in GHz."""

    frequency: float = 25.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError("clock frequency must be positive")

    @property
    def period(self) -> float:
        """Clock period T_c in ns."""
        return 1.0 / self.frequency


@dataclass(frozen=True)
class Bitstream:
    """Binary pulse schedule over consecutive clock edges."""

    bits: tuple[int, ...]
    clock: ClockSpec = field(default_factory=ClockSpec)

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not bits:
            raise ValueError("bitstream must contain at least one clock edge")
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_string(cls, text: str, clock: ClockSpec | None = None) -> "Bitstream":
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a 0/1 bit string: {text!r}")
        return cls(tuple(int(c) for c in text), clock or ClockSpec())

    def to_string(self) -> str:
        return "".join(map(str, self.bits))

    def __len__(self) -> int:
        return len(self.bits)

    def repeated(self, repetitions: int) -> "Bitstream":
        return Bitstream(self.bits * repetitions, self.clock)

    def as_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=bool)

    @property
    def pulse_count(self) -> int:
        return sum(self.bits)

    @property
    def duration(self) -> float:
        """Length in ns."""
        return len(self.bits) * self.clock.period


def evolve(bits: Bitstream, model: LevelModel, tip_angle: float) -> np.ndarray:
    """Gate unitary of a bitstream; the earliest clock edge acts first."""
    free = free_evolution(model, bits.clock.period)
    pulsed = free @ sfq_kick(model, tip_angle)
    u = np.eye(model.dim, dtype=complex)
    for b in bits.bits:
        u = (pulsed if b else free) @ u
    return u


def target_y_half() -> np.ndarray:
    """``Y_{pi/2}`` on the qubit subspace."""
    return SQRT_HALF * np.array([[1.0, -1.0], [1.0, 1.0]], dtype=complex)


def _qubit_block_fidelity(block: np.ndarray, target: np.ndarray) -> np.ndarray:
    # |<a| U^dag Y |a>|^2 = |<U a | Y a>|^2, and both vectors live in the qubit
    # block once Y is zero-padded, so only U[:2, :2] contributes.
    ya = CARDINAL_STATES @ target.T
    overlaps = np.einsum("si,...ij,sj->...s", ya.conj(), block, CARDINAL_STATES)
    return np.mean(np.abs(overlaps) ** 2, axis=-1)


def average_gate_fidelity(gate: np.ndarray, target: np.ndarray | None = None) -> float:
    """Six-state average fidelity of ``gate`` against a 2x2 ``target``.

    The target is embedded with zeros outside the qubit block and no
    renormalisation is applied, so population leaving the qubit subspace
    lowers the fidelity.
    """
    gate = np.asarray(gate)
    if gate.ndim != 2 or gate.shape[0] != gate.shape[1] or gate.shape[0] < 2:
        raise ValueError("gate must be a square matrix of dimension >= 2")
    target = target_y_half() if target is None else np.asarray(target)
    return float(_qubit_block_fidelity(gate[:2, :2], target))


def repeated_fidelity(
    bits: np.ndarray,
    tip_angles: np.ndarray,
    model: LevelModel,
    period: float,
    repetitions: int,
    target: np.ndarray | None = None,
) -> np.ndarray:
    """Vectorised fidelity of repeated subsequences.

    Parameters
    ----------
    bits : (B, N) bool array
        One subsequence per row.
    tip_angles : (B, T) array
        Tip angles at which each row is scored.
    repetitions : int
        Number of back-to-back copies of the subsequence forming the gate.

    Returns
    -------
    (B, T) array of average gate fidelities.
    """
    bits = np.asarray(bits, dtype=bool)
    angles = np.asarray(tip_angles, dtype=float)
    d = model.dim
    free = model.free_phases(period)[:, None]
    pulsed = free * model.kicks(angles)  # U_fr(T_c) @ U_SFQ, shape (B, T, d, d)
    u = np.broadcast_to(np.eye(d, dtype=complex), pulsed.shape).copy()
    for column in bits.T:
        if column.all():
            u = pulsed @ u
        elif not column.any():
            u = free * u
        else:
            nxt = free * u
            nxt[column] = pulsed[column] @ u[column]
            u = nxt
    if repetitions > 1:
        u = np.linalg.matrix_power(u, repetitions)
    return _qubit_block_fidelity(u[..., :2, :2], target_y_half() if target is None else target)


@dataclass(frozen=True, eq=False)
class GateReport:
    """Outcome of simulating a full gate from the six cardinal states.

    ``populations[s, i, k]`` is the population of level ``k`` for initial state
    ``s`` (order of `CARDINAL_LABELS`) after clock cycle ``i`` has completed.
    """

    fidelity: float
    gate_time: float
    tip_angle: float
    repetitions: int
    subsequence_length: int
    clock_period: float
    populations: np.ndarray
    qubit_block: np.ndarray

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity

    @property
    def num_edges(self) -> int:
        return self.populations.shape[1]

    @property
    def leakage(self) -> np.ndarray:
        """Populations of levels >= 2, shape (6, edges, d - 2)."""
        return self.populations[:, :, 2:]

    @property
    def average_leakage(self) -> np.ndarray:
        """Six-state average population of each level >= 2, shape (edges, d - 2)."""
        return self.leakage.mean(axis=0)

    @property
    def boundary_edges(self) -> np.ndarray:
        """Edge indices at which a subsequence repetition completes."""
        return np.arange(1, self.repetitions + 1) * self.subsequence_length - 1

    def level_trace(self, level: int) -> np.ndarray:
        """Per-state population of ``level``, shape (6, edges)."""
        return self.populations[:, :, level]

    def to_json_dict(self) -> dict:
        d = self.populations.shape[2]
        boundary = self.populations[:, self.boundary_edges, :]
        return {
            "fidelity": self.fidelity,
            "infidelity": self.infidelity,
            "gate_time_ns": self.gate_time,
            "tip_angle": self.tip_angle,
            "repetitions": self.repetitions,
            "subsequence_length": self.subsequence_length,
            "levels": d,
            "max_population": {
                str(k): float(self.populations[:, :, k].max()) for k in range(2, d)
            },
            "max_boundary_population": {
                str(k): float(boundary[:, :, k].max()) for k in range(2, d)
            },
            "qubit_block": {
                "real": self.qubit_block.real.tolist(),
                "imag": self.qubit_block.imag.tolist(),
            },
        }

    def trace_rows(self) -> Iterable[tuple]:
        """``(edge_index, time_ns, initial_state, level, population)`` rows.

        Per-state rows come first, followed by the six-state average under the
        state label ``avg``.
        """
        d = self.populations.shape[2]
        times = (np.arange(self.num_edges) + 1) * self.clock_period
        avg = self.populations.mean(axis=0)
        for s, label in enumerate(CARDINAL_LABELS):
            for i in range(self.num_edges):
                for k in range(2, d):
                    yield i, times[i], label, k, self.populations[s, i, k]
        for i in range(self.num_edges):
            for k in range(2, d):
                yield i, times[i], "avg", k, avg[i, k]


def leakage_trace(
    bits: Bitstream, model: LevelModel, tip_angle: float, repetitions: int = 1
) -> GateReport:
    """Simulate ``repetitions`` copies of ``bits`` from the six cardinal states."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    d = model.dim
    free = free_evolution(model, bits.clock.period)
    pulsed = free @ sfq_kick(model, tip_angle)
    states = np.zeros((6, d), dtype=complex)
    states[:, :2] = CARDINAL_STATES
    full = bits.bits * repetitions
    pops = np.empty((6, len(full), d))
    u = np.eye(d, dtype=complex)
    for i, b in enumerate(full):
        step = pulsed if b else free
        states = states @ step.T
        u = step @ u
        pops[:, i, :] = np.abs(states) ** 2
    return GateReport(
        fidelity=average_gate_fidelity(u),
        gate_time=len(full) * bits.clock.period,
        tip_angle=float(tip_angle),
        repetitions=repetitions,
        subsequence_length=len(bits),
        clock_period=bits.clock.period,
        populations=pops,
        qubit_block=u[:2, :2].copy(),
    )


def symmetric_pair_unitary(
    m: int, phi: float, model: LevelModel, tip_angle: float
) -> np.ndarray:
    """Two pulses at ``phi / w_q`` and ``(2 m pi - phi) / w_q``, unrounded.

    Returns ``U_fr(phi/w) U_SFQ U_fr((2 m pi - 2 phi)/w) U_SFQ U_fr(phi/w)``.
    For ``phi > m pi`` the two pulse times swap order, which is the same pair
    as ``2 m pi - phi``.
    """
    if not 0 <= phi <= 2 * np.pi * m:
        raise ValueError("phi must lie in [0, 2 pi m]")
    phi = min(phi, 2 * np.pi * m - phi)
    w = model.qubit_angular_frequency
    edge = free_evolution(model, phi / w)
    middle = free_evolution(model, (2 * m * np.pi - 2 * phi) / w)
    kick = sfq_kick(model, tip_angle)
    return edge @ kick @ middle @ kick @ edge


def first_order_leakage_mu(m: int, phi: float, f_q: float, alpha: float) -> complex:
    """Leakage coefficient mu of the symmetric pair ``(m, phi)``.

    To first order the pair's 2-1 element is ``lam * mu * dtheta`` in
    magnitude; ``|mu| = |cos((w_21 / w_q)(m pi - phi))|``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    ratio = (f_q - alpha) / f_q
    phase = np.exp(1j * m * np.pi * (2 * f_q + (f_q - alpha)) / f_q)
    return complex(phase * np.cos(ratio * (m * np.pi - phi)))
