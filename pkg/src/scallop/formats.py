"""File formats: register files, JSON reports, CSV tables.

Floats are always written with 12 significant digits so repeated runs give
byte-identical files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from scallop.sequence import Bitstream, ClockSpec


def fmt(x) -> str:
    return format(float(x), ".12g")


def _normalise(obj):
    if isinstance(obj, dict):
        return {k: _normalise(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalise(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(fmt(x)) if np.isfinite(x) else None
    return obj


def dumps(obj: Any, **kwargs) -> str:
    """JSON with floats rounded to 12 significant digits."""
    return json.dumps(_normalise(obj), **kwargs)


def write_json(obj: Any, path: Path | str) -> None:
    Path(path).write_text(dumps(obj, indent=2, sort_keys=True) + "\n")


def write_jsonl(records: Iterable[dict], path: Path | str) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(dumps(rec) + "\n")


def read_jsonl(path: Path | str) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_csv(header: Sequence[str], rows: Iterable[Sequence], path: Path | str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


@dataclass(frozen=True)
class Register:
    """A subsequence register plus the metadata needed to replay it."""

    bits: Bitstream
    f_q_ghz: float
    qubit_cycles: int
    clock_cycles: int
    repetitions: int
    tip_angle: float

    def sidecar(self) -> dict:
        return {
            "f_q_ghz": self.f_q_ghz,
            "N_q": self.qubit_cycles,
            "N_c": self.clock_cycles,
            "repetitions": self.repetitions,
            "tip_angle": self.tip_angle,
        }


def sidecar_path(register_path: Path | str) -> Path:
    return Path(register_path).with_suffix(".json")


def write_register(reg: Register, path: Path | str) -> None:
    """Write the 0/1 register line and its JSON sidecar (same stem, ``.json``)."""
    path = Path(path)
    path.write_text(reg.bits.to_string() + "\n")
    write_json(reg.sidecar(), sidecar_path(path))


def read_register(path: Path | str, clock: ClockSpec | None = None) -> Register:
    path = Path(path)
    lines = [ln.strip() for ln in path.read_text().splitlines() if ln.strip()]
    if len(lines) != 1:
        raise ValueError(f"{path}: register file must hold exactly one 0/1 line")
    bits = Bitstream.from_string(lines[0], clock)
    meta = {}
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
    nc = int(meta.get("N_c", len(bits)))
    if nc != len(bits):
        raise ValueError(f"{path}: sidecar N_c={nc} but register has {len(bits)} bits")
    return Register(
        bits=bits,
        f_q_ghz=float(meta["f_q_ghz"]) if "f_q_ghz" in meta else float("nan"),
        qubit_cycles=int(meta.get("N_q", 0)),
        clock_cycles=nc,
        repetitions=int(meta.get("repetitions", 1)),
        tip_angle=float(meta["tip_angle"]) if "tip_angle" in meta else float("nan"),
    )
