"""
Clock-commensurate qubit frequencies and symmetric clock-edge pairs.

A qubit frequency is "magic" for a clock when a gate of ``N_c`` clock cycles
spans exactly ``N_q`` qubit cycles, i.e. ``f_q = (N_q / N_c) f_c``.  All
fractional parts here are computed with integers over ``N_c`` so thresholds
never suffer floating-point ties.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from scallop.formats import fmt
from scallop.sequence import ClockSpec


def as_fraction(value) -> Fraction:
    """Exact decimal reading of a float (``0.05`` -> ``1/20``)."""
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    return Fraction(repr(float(value)))


@dataclass(frozen=True)
class GridPoint:
    """A matched gate of ``qubit_cycles`` qubit periods in ``clock_cycles`` clock periods.

    Enumerated grid points are canonical (coprime cycle counts).  Subsequence
    grids obtained with `scaled` share the frequency but not the coprimality.
    """

    qubit_cycles: int
    clock_cycles: int
    clock: ClockSpec = ClockSpec()

    def __post_init__(self):
        if self.qubit_cycles < 1 or self.clock_cycles < 1:
            raise ValueError("cycle counts must be positive")

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.qubit_cycles, self.clock_cycles)

    @property
    def exact_frequency(self) -> Fraction:
        return self.ratio * as_fraction(self.clock.frequency)

    @property
    def qubit_frequency(self) -> float:
        """f_q in GHz."""
        return float(self.exact_frequency)

    @property
    def gate_time(self) -> float:
        """N_c T_c in ns."""
        return self.clock_cycles * self.clock.period

    @property
    def is_canonical(self) -> bool:
        return math.gcd(self.qubit_cycles, self.clock_cycles) == 1

    def canonical(self) -> "GridPoint":
        g = math.gcd(self.qubit_cycles, self.clock_cycles)
        return GridPoint(self.qubit_cycles // g, self.clock_cycles // g, self.clock)

    def scaled(self, factor: int) -> "GridPoint":
        return GridPoint(self.qubit_cycles * factor, self.clock_cycles * factor, self.clock)

    def subsequence_grids(self, min_clocks: int, max_clocks: int) -> list["GridPoint"]:
        """Multiples of this point whose clock count lies in ``[min_clocks, max_clocks]``."""
        base = self.canonical()
        k0 = max(1, -(-min_clocks // base.clock_cycles))
        return [
            base.scaled(k)
            for k in range(k0, max_clocks // base.clock_cycles + 1)
        ]


def enumerate_magic_frequencies(
    clock: ClockSpec, f_min: float, f_max: float, max_subseq_clocks: int
) -> list[GridPoint]:
    """All canonical grid points with ``N_c <= max_subseq_clocks`` in ``[f_min, f_max]``.

    Sorted by frequency.  Each frequency appears once, as its coprime
    representative.
    """
    if f_min > f_max:
        raise ValueError("f_min must not exceed f_max")
    fc = as_fraction(clock.frequency)
    lo, hi = as_fraction(f_min) / fc, as_fraction(f_max) / fc
    points = []
    for nc in range(1, max_subseq_clocks + 1):
        for nq in range(math.ceil(lo * nc), math.floor(hi * nc) + 1):
            if nq >= 1 and math.gcd(nq, nc) == 1:
                points.append(GridPoint(nq, nc, clock))
    points.sort(key=lambda p: (p.ratio, p.clock_cycles))
    return points


def nearest_grid_points(
    f_q: float, clock: ClockSpec, max_subseq_clocks: int, count: int = 3
) -> list[GridPoint]:
    """The ``count`` grid points closest in frequency to ``f_q``."""
    span = 0.5
    points = enumerate_magic_frequencies(clock, max(f_q - span, 1e-9), f_q + span, max_subseq_clocks)
    points.sort(key=lambda p: (abs(p.qubit_frequency - f_q), p.clock_cycles))
    return points[:count]


def _frac_numerator(n: int, nq: int, nc: int) -> int:
    """Numerator of ``frac(n nq / nc)`` over ``nc``."""
    return (n * nq) % nc


def symmetry_violation(n_i: int, n_j: int, clock_cycles: int, qubit_cycles: int) -> Fraction:
    """Distance of ``frac(n_i N_q/N_c) + frac(n_j N_q/N_c)`` to the nearest integer.

    Zero exactly when the two clock edges sit symmetrically about a multiple
    of half a qubit period.
    """
    if not (0 <= n_i < clock_cycles and 0 <= n_j < clock_cycles):
        raise ValueError("clock-edge indices must lie in [0, N_c)")
    s = (_frac_numerator(n_i, qubit_cycles, clock_cycles)
         + _frac_numerator(n_j, qubit_cycles, clock_cycles)) % clock_cycles
    return Fraction(min(s, clock_cycles - s), clock_cycles)


@dataclass(frozen=True)
class ClockPair:
    """Two clock edges approximating the symmetric pulse pair ``(m, phase)``."""

    edge_a: int
    edge_b: int
    a_sym: Fraction
    phase: float
    half_period_index: int

    @property
    def is_degenerate(self) -> bool:
        return self.edge_a == self.edge_b


def enumerate_symmetric_pairs(
    clock_cycles: int, qubit_cycles: int, threshold: float = 0.05
) -> list[ClockPair]:
    """Edge pairs ``n_i <= n_j`` whose symmetry violation is below ``threshold``.

    Self-pairs ``(n, n)`` are included when the single edge sits within the
    threshold of a symmetry centre.  Pairs are ordered by ``(n_i, n_j)``.
    """
    thr = as_fraction(threshold)
    if not 0 < thr <= Fraction(1, 2):
        raise ValueError("threshold must lie in (0, 0.5]")
    nc, nq = clock_cycles, qubit_cycles
    pairs = []
    for i in range(nc):
        fi = _frac_numerator(i, nq, nc)
        for j in range(i, nc):
            a = symmetry_violation(i, j, nc, nq)
            if a < thr:
                pairs.append(
                    ClockPair(
                        edge_a=i,
                        edge_b=j,
                        a_sym=a,
                        phase=2 * math.pi * fi / nc,
                        half_period_index=round(Fraction((i + j) * nq, nc)),
                    )
                )
    return pairs


GRID_COLUMNS = ("N_q", "N_c", "f_q_ghz", "gate_time_ns")


def write_grid_csv(points: Iterable[GridPoint], path: Path | str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GRID_COLUMNS)
        for p in points:
            writer.writerow([p.qubit_cycles, p.clock_cycles, fmt(p.qubit_frequency), fmt(p.gate_time)])
