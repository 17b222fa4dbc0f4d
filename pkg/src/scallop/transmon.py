"""
Transmon level models and the two elementary propagators.

A transmon is described by the energies of its lowest ``d`` levels and by the
nearest-neighbour matrix elements of its charge operator.  Two propagators act
on it during an SFQ gate:

- free evolution ``U_fr(t) = diag(exp(-i E_k t))``
- the instantaneous SFQ kick ``exp(-i dtheta Sigma_y / 2)``, where
  ``Sigma_y`` is the d-level generalisation of the qutrit operator
  ``i [[0, -1, 0], [1, 0, -lam], [0, lam, 0]]``.

Energies are angular frequencies in rad/ns with ``E_0 = 0``; frequencies on the
user-facing side are in GHz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np

TWO_PI = 2.0 * np.pi


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TransmonSpec:
    """Physical parameters of a d-level transmon.

    Attributes
    ----------
    qubit_frequency : float
        Qubit transition frequency f_q in GHz.
    anharmonicity : float
        (f_10 - f_21) in GHz, positive for a transmon.
    num_levels : int
        Number of levels kept (3 for searching, 7 for verification).
    ladder_ratios : tuple of float, optional
        ``<n+1|Q|n> / <1|Q|0>`` for n = 1..d-2.  The first entry is the
        qutrit parameter lambda.  Defaults to the harmonic ladder sqrt(n+1).
    """

    qubit_frequency: float
    anharmonicity: float = 0.250
    num_levels: int = 3
    ladder_ratios: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.num_levels < 2:
            raise ValueError(f"num_levels must be >= 2, got {self.num_levels}")
        if not self.qubit_frequency > 0 or not self.anharmonicity > 0:
            raise ValueError("qubit_frequency and anharmonicity must be positive")
        if self.qubit_frequency <= self.anharmonicity:
            raise ValueError("qubit_frequency must exceed the anharmonicity")
        if self.ladder_ratios is None:
            ratios = tuple(math.sqrt(n + 1) for n in range(1, self.num_levels - 1))
        else:
            ratios = tuple(float(r) for r in self.ladder_ratios)
        if len(ratios) != self.num_levels - 2:
            raise ValueError(
                f"expected {self.num_levels - 2} ladder ratios, got {len(ratios)}"
            )
        if any(r <= 0 for r in ratios):
            raise ValueError("ladder ratios must be positive")
        object.__setattr__(self, "ladder_ratios", ratios)

    @property
    def eta(self) -> float:
        """Fractional anharmonicity ``1 - f_21 / f_q``."""
        return self.anharmonicity / self.qubit_frequency

    @property
    def lam(self) -> float | None:
        """Ratio ``<2|Q|1> / <1|Q|0>``, or None for a two-level model."""
        return self.ladder_ratios[0] if self.ladder_ratios else None

    def with_levels(self, num_levels: int) -> "TransmonSpec":
        """Same transmon with ``num_levels`` levels and the default ladder."""
        return TransmonSpec(self.qubit_frequency, self.anharmonicity, num_levels)

    def to_config(self) -> dict[str, Any]:
        return {
            "f_q_ghz": self.qubit_frequency,
            "alpha_ghz": self.anharmonicity,
            "levels": self.num_levels,
            "ladder_ratios": list(self.ladder_ratios),
        }

    @classmethod
    def from_config(cls, record: dict[str, Any]) -> "TransmonSpec":
        ratios = record.get("ladder_ratios")
        return cls(
            qubit_frequency=float(record["f_q_ghz"]),
            anharmonicity=float(record.get("alpha_ghz", 0.250)),
            num_levels=int(record.get("levels", 3)),
            ladder_ratios=None if ratios is None else tuple(ratios),
        )


@dataclass(frozen=True, eq=False)
class LevelModel:
    """Energies (rad/ns) and nearest-neighbour charge couplings of a transmon.

    ``charge_couplings[n]`` couples ``|n>`` and ``|n+1>`` and is normalised so
    that entry 0 equals 1.
    """

    energies: np.ndarray
    charge_couplings: np.ndarray

    def __post_init__(self):
        energies = _frozen(self.energies)
        couplings = _frozen(self.charge_couplings)
        if energies.ndim != 1 or len(energies) < 2:
            raise ValueError("need at least two energies")
        if energies[0] != 0.0:
            raise ValueError("energies must be referenced to E_0 = 0")
        if np.any(np.diff(energies) <= 0):
            raise ValueError("energies must be strictly increasing")
        if couplings.shape != (len(energies) - 1,):
            raise ValueError("need one charge coupling per adjacent level pair")
        if not np.isclose(couplings[0], 1.0) or np.any(couplings <= 0):
            raise ValueError("charge couplings must be positive with entry 0 equal to 1")
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "charge_couplings", couplings)

    @property
    def dim(self) -> int:
        return len(self.energies)

    @property
    def qubit_angular_frequency(self) -> float:
        return float(self.energies[1])

    @property
    def transition_21(self) -> float:
        """Angular frequency of the 1-2 transition (rad/ns)."""
        if self.dim < 3:
            raise ValueError("two-level model has no |2> state")
        return float(self.energies[2] - self.energies[1])

    @cached_property
    def generator(self) -> np.ndarray:
        """Real antisymmetric matrix A with ``-i Sigma_y = A``.

        ``A[n+1, n] = c_n`` and ``A[n, n+1] = -c_n``; the kick is
        ``exp(dtheta / 2 * A)``.
        """
        d = self.dim
        a = np.zeros((d, d))
        idx = np.arange(d - 1)
        a[idx + 1, idx] = self.charge_couplings
        a[idx, idx + 1] = -self.charge_couplings
        a.setflags(write=False)
        return a

    @cached_property
    def kick_eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """``(w, V)`` with ``exp(x A) = V diag(exp(-i x w)) V^dagger``."""
        # i*A is Hermitian and A = -i (iA)
        w, v = np.linalg.eigh(1j * self.generator)
        return w, v

    def kicks(self, tip_angles) -> np.ndarray:
        """Kick unitaries for an array of tip angles, shape ``(..., d, d)``."""
        w, v = self.kick_eigensystem
        theta = np.asarray(tip_angles, dtype=float)
        phases = np.exp(-0.5j * theta[..., None] * w)
        return np.einsum("ij,...j,kj->...ik", v, phases, v.conj())

    def free_phases(self, t: float) -> np.ndarray:
        """Diagonal of the free propagator over duration ``t`` (ns)."""
        return np.exp(-1j * self.energies * t)


def build_duffing_ladder(spec: TransmonSpec) -> LevelModel:
    """Duffing-oscillator level model ``E_n = n w_q - n(n-1)/2 alpha``.

    Examples
    --------
    >>> m = build_duffing_ladder(TransmonSpec(5.0, 0.25, 3))
    >>> np.round(m.energies / TWO_PI, 6).tolist()
    [0.0, 5.0, 9.75]
    """
    n = np.arange(spec.num_levels)
    energies = TWO_PI * (n * spec.qubit_frequency - 0.5 * n * (n - 1) * spec.anharmonicity)
    couplings = np.concatenate([[1.0], np.asarray(spec.ladder_ratios, dtype=float)])
    return LevelModel(energies, couplings)


@dataclass(frozen=True, eq=False)
class ChargeBasisSolution:
    """Result of diagonalising the transmon in the charge basis.

    ``charge_matrix`` holds the magnitudes ``|<k|n|l>|`` of the charge
    operator in the energy eigenbasis (lowest ``d`` states); ``model`` keeps
    only the nearest-neighbour part.
    """

    model: LevelModel
    charge_matrix: np.ndarray
    charge_element_01: float

    @property
    def max_off_nearest(self) -> float:
        """Largest beyond-nearest-neighbour element relative to ``<1|n|0>``."""
        d = self.charge_matrix.shape[0]
        mask = np.abs(np.subtract.outer(np.arange(d), np.arange(d))) > 1
        return float(self.charge_matrix[mask].max() / self.charge_element_01) if d > 2 else 0.0


def _charge_spectrum(ej: float, ec: float, cutoff: int, d: int):
    n = np.arange(-cutoff, cutoff + 1, dtype=float)
    h = np.diag(4.0 * ec * n**2) - 0.5 * ej * (np.eye(len(n), k=1) + np.eye(len(n), k=-1))
    w, v = np.linalg.eigh(h)
    v = v[:, :d]
    return w[:d] - w[0], np.abs(v.T @ (n[:, None] * v))


def solve_charge_basis(
    ej: float, ec: float, charge_cutoff: int = 30, num_levels: int = 7
) -> ChargeBasisSolution:
    """Numerically diagonalise ``4 E_C n^2 - E_J cos(phi)`` at zero offset charge.

    ``ej`` and ``ec`` are in GHz (energy / h).  Raises ``ValueError`` outside
    the transmon regime and ``RuntimeError`` if the lowest ``num_levels``
    energies move by more than 1e-10 (relative) when the cutoff grows by 5.
    """
    if ej / ec < 20:
        raise ValueError(f"E_J/E_C = {ej / ec:.3g} is outside the transmon regime (>= 20)")
    if charge_cutoff < 15:
        raise ValueError("charge_cutoff must be at least 15")
    if num_levels < 2:
        raise ValueError("num_levels must be >= 2")
    energies, qmat = _charge_spectrum(ej, ec, charge_cutoff, num_levels)
    check, _ = _charge_spectrum(ej, ec, charge_cutoff + 5, num_levels)
    scale = np.max(np.abs(check))
    if np.max(np.abs(energies - check)) > 1e-10 * scale:
        raise RuntimeError(
            f"charge basis not converged at cutoff {charge_cutoff}; increase the cutoff"
        )
    nearest = np.diagonal(qmat, offset=1)
    model = LevelModel(TWO_PI * energies, nearest / nearest[0])
    return ChargeBasisSolution(model, qmat, float(nearest[0]))


def diagonalize_charge_basis(
    ej: float, ec: float, charge_cutoff: int = 30, num_levels: int = 7
) -> LevelModel:
    """Level model from charge-basis diagonalisation (see `solve_charge_basis`)."""
    return solve_charge_basis(ej, ec, charge_cutoff, num_levels).model


def free_evolution(model: LevelModel, t: float) -> np.ndarray:
    """Diagonal free propagator ``exp(-i E t)`` for a duration ``t`` in ns."""
    if t < 0:
        raise ValueError("duration must be non-negative")
    return np.diag(model.free_phases(t))


def sfq_kick(model: LevelModel, tip_angle: float) -> np.ndarray:
    """Propagator of one delta-function SFQ pulse with tip angle ``tip_angle``."""
    if not 0 <= tip_angle < np.pi:
        raise ValueError(f"tip angle must lie in [0, pi), got {tip_angle}")
    if tip_angle == 0:
        return np.eye(model.dim, dtype=complex)
    return model.kicks(tip_angle)


def closed_form_kick_3(tip_angle: float, lam: float) -> np.ndarray:
    """Explicit qutrit kick ``exp(-i dtheta Sigma_y / 2)``.

    Uses ``Sigma_y^3 = kappa^2 Sigma_y`` with ``kappa = sqrt(lam^2 + 1)`` to sum
    the exponential series in closed form.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    kappa = math.sqrt(lam * lam + 1.0)
    c = math.cos(kappa * tip_angle / 2)
    s = math.sin(kappa * tip_angle / 2)
    s2 = math.sin(kappa * tip_angle / 4) ** 2
    u = np.array(
        [
            [lam * lam + c, -kappa * s, 2 * lam * s2],
            [kappa * s, kappa * kappa * c, -kappa * lam * s],
            [2 * lam * s2, kappa * lam * s, 1 + lam * lam * c],
        ]
    )
    return (u / (kappa * kappa)).astype(complex)


def sigma_y_3(lam: float) -> np.ndarray:
    """The qutrit operator ``Sigma_y``."""
    return 1j * np.array([[0, -1, 0], [1, 0, -lam], [0, lam, 0]], dtype=complex)


@dataclass(frozen=True)
class CouplingSpec:
    """Capacitive coupling of the SFQ driver to the transmon island.

    Attributes
    ----------
    coupling_capacitance : float
        C_c in aF.
    self_capacitance : float
        Transmon capacitance C in fF.
    charge_element_01 : float
        ``<1|Q|0>`` in units of the Cooper-pair charge 2e.
    """

    coupling_capacitance: float
    self_capacitance: float
    charge_element_01: float

    def __post_init__(self):
        if min(self.coupling_capacitance, self.self_capacitance, self.charge_element_01) <= 0:
            raise ValueError("coupling parameters must be positive")

    @property
    def total_capacitance(self) -> float:
        """C' = C_c + C in fF."""
        return self.coupling_capacitance * 1e-3 + self.self_capacitance


def tip_angle_from_coupling(coupling: CouplingSpec) -> float:
    """Tip angle of one SFQ pulse, ``(2 Phi_0 / hbar)(C_c / C') <1|Q|0>``.

    With Q in units of 2e, ``Phi_0 * 2e / hbar = 2 pi`` so the angle reduces
    to ``4 pi (C_c / C') q01``.
    """
    ratio = coupling.coupling_capacitance * 1e-3 / coupling.total_capacitance
    angle = 4.0 * np.pi * ratio * coupling.charge_element_01
    if not 0 < angle < np.pi:
        raise ValueError(f"unphysical coupling: tip angle {angle:.4g} rad outside (0, pi)")
    return float(angle)
