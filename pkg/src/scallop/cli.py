"""Command-line interface: ``scallop grid | derive | verify | sensitivity | catalog``."""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from scallop.formats import (
    Register,
    fmt,
    read_register,
    write_csv,
    write_json,
    write_jsonl,
    write_register,
)
from scallop.frequency import GridPoint, write_grid_csv
from scallop.pipeline import (
    SENSITIVITY_COLUMNS,
    OffGridError,
    RunConfig,
    derive,
    locate_grid_point,
    parse_grid,
    sensitivity_scan,
)
from scallop.sequence import leakage_trace

TRACE_COLUMNS = ("edge_index", "time_ns", "initial_state", "level", "population")
SUMMARY_COLUMNS = (
    "f_q_ghz", "N_q", "N_c", "operating_f_q_ghz", "subseq_clocks", "repetitions", "gate_time_ns",
    "infidelity_1e4", "boundary_leakage", "bits", "status",
)

# Config fields settable from the command line: (flag, field, type, help)
_CONFIG_FLAGS = (
    ("--clock-ghz", "clock_frequency_ghz", float, "SFQ clock frequency"),
    ("--alpha-ghz", "anharmonicity_ghz", float, "transmon anharmonicity"),
    ("--search-levels", "search_levels", int, "levels used during search"),
    ("--verify-levels", "verify_levels", int, "levels used for verification"),
    ("--tip-angle", "fixed_tip_angle", float, "hardware tip angle (rad)"),
    ("--a-sym-threshold", "a_sym_threshold", float, "symmetric-pair cut"),
    ("--fidelity-floor", "fidelity_floor", float, "neighbourhood fidelity floor"),
    ("--max-subseq-clocks", "max_subseq_clocks", int, "longest subsequence"),
    ("--min-subseq-clocks", "min_subseq_clocks", int, "shortest subsequence"),
    ("--target-gate-time", "target_gate_time_ns", float, "target gate time (ns)"),
    ("--vertex-budget", "vertex_budget", int, "neighbourhood size limit"),
    ("--max-trim-mhz", "max_trim_mhz", float, "largest shift off the magic frequency (0 disables)"),
    ("--output-dir", "output_dir", Path, "directory for output files"),
)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run configuration (flags override --config)")
    g.add_argument("--config", type=Path, help="JSON file with RunConfig fields")
    for flag, dest, typ, text in _CONFIG_FLAGS:
        g.add_argument(flag, dest=dest, type=typ, default=None, help=text)
    g.add_argument("--frequency-range", dest="frequency_range_ghz", type=float, nargs=2,
                   metavar=("MIN", "MAX"), default=None, help="qubit frequency range (GHz)")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {dest: getattr(args, dest) for _, dest, _, _ in _CONFIG_FLAGS}
    overrides["frequency_range_ghz"] = args.frequency_range_ghz
    return RunConfig.from_file(args.config, **overrides)


def frequency_tag(f_q: float) -> str:
    return f"fq_{f_q:.6f}"


@dataclass
class DeriveOutput:
    """Everything a derivation writes, in plain (picklable) form.

    ``nominal_f_q`` is the requested frequency and names the output
    directory; ``f_q`` is the operating frequency of the selected gate.
    """

    base: GridPoint
    nominal_f_q: float
    f_q: float
    records: list
    register: Register | None
    summary: dict
    status: str
    fidelity: float
    gate_time: float


def run_derivation(config: RunConfig, base: GridPoint, f_q: float | None = None) -> DeriveOutput:
    d = derive(config, base, f_q)
    reg = None
    if d.best is None:
        status = "no_subsequence" if not d.candidates else "no_neighborhood"
    else:
        sel = d.best.selection
        sub = d.best.grid
        reg = Register(sel.vertex.bits, d.qubit_frequency, sub.qubit_cycles, sub.clock_cycles,
                       d.best.repetitions, sel.tip_angle)
        status = "below_threshold" if sel.below_threshold else ("leakage" if not sel.leakage_ok else "ok")
    summary = {
        "nominal_f_q_ghz": d.nominal_frequency,
        "f_q_ghz": d.qubit_frequency,
        "N_q": base.qubit_cycles,
        "N_c": base.clock_cycles,
        "fixed_tip_angle": config.fixed_tip_angle,
        "status": status,
        "fidelity": d.fidelity,
        "gate_time_ns": d.gate_time,
        "register": None if reg is None else reg.bits.to_string(),
        "candidates": [c.summary() for c in d.candidates],
    }
    return DeriveOutput(base, d.nominal_frequency, d.qubit_frequency, d.catalog_records(), reg, summary, status,
                        d.fidelity, d.gate_time)


def write_derivation(out: DeriveOutput, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    write_jsonl(out.records, directory / "catalog.jsonl")
    write_json(out.summary, directory / "summary.json")
    if out.register is not None:
        write_register(out.register, directory / "register.txt")


def cmd_grid(config: RunConfig) -> int:
    points = config.grid_points()
    config.output_dir.mkdir(parents=True, exist_ok=True)
    path = config.output_dir / "grid.csv"
    write_grid_csv(points, path)
    print(f"{len(points)} magic frequencies in [{fmt(config.frequency_range_ghz[0])}, "
          f"{fmt(config.frequency_range_ghz[1])}] GHz -> {path}")
    return 0


def cmd_derive(config: RunConfig, f_q: float, grid: str | None = None) -> int:
    if grid is None:
        try:
            base = locate_grid_point(config, f_q)
        except OffGridError as err:
            print(f"error: {err}", file=sys.stderr)
            return 2
        f_op = None
    else:
        base = parse_grid(grid, config.clock)
        f_op = f_q
    out = run_derivation(config, base, f_op)
    directory = config.output_dir / frequency_tag(out.nominal_f_q)
    write_derivation(out, directory)
    print(f"grid {base.qubit_cycles}/{base.clock_cycles} at f_q = {fmt(out.nominal_f_q)} GHz: {out.status}")
    if out.f_q != out.nominal_f_q:
        print(f"operating frequency trimmed to {fmt(out.f_q)} GHz "
              f"({fmt((out.f_q - out.nominal_f_q) * 1e3)} MHz)")
    if out.register is None:
        print(f"no subsequence reached the fidelity floor; catalog in {directory}", file=sys.stderr)
        return 1
    print(f"fidelity ({config.verify_levels}-level) = {fmt(out.fidelity)}")
    print(f"repetitions = {out.register.repetitions} x {out.register.clock_cycles} clocks")
    print(f"gate time = {fmt(out.gate_time)} ns")
    print(f"register -> {directory / 'register.txt'}")
    return 0 if out.status == "ok" else 1


def _load_register(path: Path, config: RunConfig, f_q, repetitions) -> tuple[Register, float, int, float]:
    reg = read_register(path, config.clock)
    f = f_q if f_q is not None else reg.f_q_ghz
    if f != f:  # NaN: no sidecar value
        raise ValueError("no qubit frequency given and none in the register sidecar")
    r = repetitions if repetitions is not None else reg.repetitions
    theta = reg.tip_angle if reg.tip_angle == reg.tip_angle else config.fixed_tip_angle
    return reg, float(f), int(r), float(theta)


def cmd_verify(register_file: Path, config: RunConfig, f_q=None, repetitions=None,
               levels: int | None = None) -> int:
    reg, f, r, theta = _load_register(register_file, config, f_q, repetitions)
    levels = levels or config.verify_levels
    report = leakage_trace(reg.bits, config.model(f, levels), theta, r)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(register_file).stem
    data = report.to_json_dict()
    data.update({"f_q_ghz": f, "register": reg.bits.to_string()})
    write_json(data, config.output_dir / f"{stem}_report.json")
    write_csv(TRACE_COLUMNS, report.trace_rows(), config.output_dir / f"{stem}_leakage.csv")
    print(f"fidelity ({levels}-level) = {fmt(report.fidelity)}")
    print(f"infidelity = {fmt(report.infidelity)}; gate time = {fmt(report.gate_time)} ns")
    return 0


def cmd_sensitivity(register_file: Path, config: RunConfig, f_q=None, repetitions=None,
                    axis: str = "frequency", span: float | None = None, points: int = 21) -> int:
    reg, f, r, theta = _load_register(register_file, config, f_q, repetitions)
    axis_name = f"{axis}_drift"
    if span is None:
        span = 1000.0 if axis == "frequency" else 10.0
    scan = sensitivity_scan(reg.bits, config, f, r, theta, axis_name, span, points)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    path = config.output_dir / f"{Path(register_file).stem}_sensitivity_{axis}.csv"
    write_csv(SENSITIVITY_COLUMNS, scan.rows(), path)
    unit = "kHz" if axis == "frequency" else "MHz"
    print(f"{len(scan.offsets)} offsets over +/-{fmt(span)} {unit}; baseline infidelity "
          f"{fmt(scan.baseline)}; worst {fmt(scan.infidelities.max())} -> {path}")
    return 0


def _catalog_job(job):
    config, base = job
    try:
        return run_derivation(config, base)
    except Exception as err:  # recorded per frequency, the run continues
        return err


def summary_row(base: GridPoint, out) -> list:
    if isinstance(out, Exception):
        return [base.qubit_frequency, base.qubit_cycles, base.clock_cycles, "", "", "", "", "", "", "",
                f"error: {out}"]
    reg = out.register
    if reg is None:
        return [out.nominal_f_q, base.qubit_cycles, base.clock_cycles, "", "", "", "", "", "", "",
                out.status]
    cand = next(c for c in out.summary["candidates"]
                if c["subseq_clocks"] == reg.clock_cycles and c["repetitions"] == reg.repetitions)
    return [out.nominal_f_q, base.qubit_cycles, base.clock_cycles, out.f_q, reg.clock_cycles,
            reg.repetitions, out.gate_time, (1.0 - out.fidelity) * 1e4, cand["boundary_leakage"],
            reg.bits.to_string(), out.status]


def cmd_catalog(config: RunConfig, jobs: int = 1) -> int:
    points = config.grid_points()
    work = [(config, p) for p in points]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_catalog_job, work))
    else:
        results = [_catalog_job(w) for w in work]
    config.output_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for p, out in zip(points, results):
        if not isinstance(out, Exception):
            write_derivation(out, config.output_dir / frequency_tag(out.nominal_f_q))
        rows.append(summary_row(p, out))
    path = config.output_dir / "summary.csv"
    write_csv(SUMMARY_COLUMNS, rows, path)
    good = sum(1 for r in rows if r[-1] == "ok")
    print(f"{len(rows)} frequencies, {good} below threshold with clean boundaries -> {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scallop",
        description="Derive and verify SFQ pulse subsequences for transmon y(pi/2) gates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("grid", help="enumerate magic qubit frequencies")
    _add_config_flags(p)

    p = sub.add_parser("derive", help="derive a fixed-tip-angle gate at one frequency")
    p.add_argument("--f-q", type=float, required=True, help="qubit frequency (GHz)")
    p.add_argument("--grid", metavar="NQ/NC",
                   help="borrow this grid point's clock pattern for an off-grid qubit frequency")
    _add_config_flags(p)

    for name, text in (("verify", "simulate a register and report leakage"),
                       ("sensitivity", "scan gate infidelity against parameter drift")):
        p = sub.add_parser(name, help=text)
        p.add_argument("register", type=Path, help="register file (0/1 line + JSON sidecar)")
        p.add_argument("--f-q", type=float, help="qubit frequency (GHz); default from sidecar")
        p.add_argument("--repetitions", type=int, help="default from sidecar")
        if name == "verify":
            p.add_argument("--levels", type=int, help="levels in the model (default verify_levels)")
        else:
            p.add_argument("--axis", choices=("frequency", "anharmonicity"), default="frequency")
            p.add_argument("--span", type=float,
                           help="largest offset: kHz for frequency, MHz for anharmonicity")
            p.add_argument("--points", type=int, default=21, help="number of offsets (odd)")
        _add_config_flags(p)

    p = sub.add_parser("catalog", help="derive gates at every grid frequency")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    _add_config_flags(p)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        if args.command == "grid":
            return cmd_grid(config)
        if args.command == "derive":
            return cmd_derive(config, args.f_q, args.grid)
        if args.command == "verify":
            return cmd_verify(args.register, config, args.f_q, args.repetitions, args.levels)
        if args.command == "sensitivity":
            return cmd_sensitivity(args.register, config, args.f_q, args.repetitions,
                                   args.axis, args.span, args.points)
        return cmd_catalog(config, args.jobs)
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
