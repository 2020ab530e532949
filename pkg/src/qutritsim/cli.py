"""Command-line front end. Each subcommand writes CSV/JSON data files into --out."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import io
from .config import ExperimentConfig
from .interference import (
    evolution_trace,
    fourier_peaks,
    interference_pattern,
    torus_path,
    tppi_remap,
)
from .prep_tomo import (
    fidelity,
    ideal_target,
    preparation,
    tomography,
)
from .pulse_engine import ground_state, purity, run_sequence
from .spectrum import orientation_selection, powder_spectrum
from .spin_core import level_diagram


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _report(CliError(message), status=2)


def _report(exc: BaseException, status: int = 1):
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
    sys.exit(status)


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.updated(seed=args.seed)
    pattern = {}
    if args.grid is not None:
        pattern["grid_n"] = args.grid
    if args.state is not None:
        pattern["state"] = args.state
    if pattern:
        cfg = cfg.updated(pattern=pattern)
    if args.ratio is not None:
        cfg = cfg.updated(schedule={"ratio": args.ratio, "delta_f_plus_MHz": None,
                                    "delta_f_minus_MHz": None})
    if getattr(args, "t_max", None) is not None:
        cfg = cfg.updated(schedule={"t_max_us": args.t_max})
    return cfg


def _out_dir(args, cfg: ExperimentConfig) -> Path:
    return Path(args.out if args.out else cfg.output.directory)


def _write_manifest(out: Path, command: str, cfg: ExperimentConfig, files: list[Path], **extra):
    meta = {"command": command, "seed": cfg.seed, "config": json.loads(cfg.dump()),
            "outputs": sorted(p.name for p in files)}
    meta.update(extra)
    io.write_text(out / f"{command}.manifest.json", io.dump_json(meta))


# --- commands -------------------------------------------------------------------

def cmd_levels(cfg: ExperimentConfig, out: Path) -> list[Path]:
    rows = level_diagram(cfg.system.g, cfg.lab_tensor(), cfg.level_fields())
    return [io.write_text(out / "levels.csv", io.levels_to_csv(rows))]


def cmd_edfs(cfg: ExperimentConfig, out: Path) -> list[Path]:
    sysm, zfs, sp = cfg.spin_system(), cfg.zfs(), cfg.spectrum
    spec = powder_spectrum(sysm, zfs, n_orientations=sp.n_orientations,
                           broadening=sp.broadening_G, n_points=sp.n_points)
    sel = orientation_selection(sysm, zfs, sp.window_gauss, sp.n_orientations)
    return [io.write_text(out / "edfs.csv", io.spectrum_to_csv(spec)),
            io.write_text(out / "selection.json", io.dump_json(io.selection_to_json(sel)))]


def _prepared(cfg: ExperimentConfig):
    prog = preparation(cfg.target_state(), finite_rabi=cfg.finite_rabi())
    return prog, run_sequence(ground_state(), prog, cfg.spin_system(), cfg.lab_tensor())


def cmd_prepare(cfg: ExperimentConfig, out: Path) -> list[Path]:
    prog, rho = _prepared(cfg)
    state = cfg.pattern.state
    ideal = ideal_target(cfg.target_state())
    doc = io.density_to_json(rho, fidelity=fidelity(rho, ideal), purity=purity(rho), seed=cfg.seed)
    return [io.write_text(out / f"prepare_{state}.json", io.dump_json(doc)),
            io.write_text(out / f"sequence_{state}.json", io.dump_json(io.program_to_json(prog)))]


def cmd_tomo(cfg: ExperimentConfig, out: Path) -> list[Path]:
    prog = preparation(cfg.target_state(), finite_rabi=cfg.finite_rabi())
    res = tomography(prog, cfg.spin_system(), cfg.lab_tensor(), cfg.relaxation_params())
    ideal = ideal_target(cfg.target_state())
    doc = io.density_to_json(res.rho, fidelity=fidelity(res.rho, ideal), purity=purity(res.rho),
                             residual=res.residual, seed=cfg.seed)
    state = cfg.pattern.state
    return [io.write_text(out / f"tomo_{state}.json", io.dump_json(doc)),
            io.write_text(out / f"tomo_{state}.csv", io.tomography_table(res.rho, ideal))]


def cmd_interfere(cfg: ExperimentConfig, out: Path) -> list[Path]:
    pat = cfg.pattern
    relax = cfg.relaxation_params() if pat.relaxation else None
    p = interference_pattern(cfg.target_state(), pat.grid_n, noise=pat.noise or None, relax=relax,
                             finite_rabi=cfg.finite_rabi(), sys=cfg.spin_system(),
                             lab=cfg.lab_tensor(), seed=cfg.seed)
    return [io.write_text(out / f"pattern_{pat.state}.csv", io.pattern_to_csv(p))]


def cmd_fft(cfg: ExperimentConfig, out: Path, pattern_file: str) -> list[Path]:
    p = io.pattern_from_csv(io.read_text(pattern_file))
    return [io.write_text(out / "peaks.json", io.dump_json(io.peaks_to_json(fourier_peaks(p))))]


def cmd_tppi(cfg: ExperimentConfig, out: Path, pattern_file: str) -> list[Path]:
    p = io.pattern_from_csv(io.read_text(pattern_file))
    sched = cfg.evolution_schedule()
    t, m = evolution_trace(p, sched, cfg.schedule.t_max_us, cfg.schedule.n_samples)
    return [io.write_text(out / "tppi_map.csv", io.timegrid_to_csv(tppi_remap(p, sched))),
            io.write_text(out / "trace.csv", io.trace_to_csv(t, m))]


def cmd_torus(cfg: ExperimentConfig, out: Path) -> list[Path]:
    t, phi1, phi2, report = torus_path(cfg.evolution_schedule(), cfg.schedule.t_max_us,
                                       cfg.schedule.n_samples)
    return [io.write_text(out / "torus_path.csv", io.path_to_csv(t, phi1, phi2)),
            io.write_text(out / "closure.json", io.dump_json(io.closure_to_json(report)))]


def cmd_run(cfg: ExperimentConfig, out: Path, sequence_file: str) -> list[Path]:
    prog = io.program_from_json(json.loads(io.read_text(sequence_file)), cfg.relaxation_params())
    rho = run_sequence(ground_state(), prog, cfg.spin_system(), cfg.lab_tensor())
    doc = io.density_to_json(rho, purity=purity(rho), seed=cfg.seed)
    return [io.write_text(out / "state.json", io.dump_json(doc))]


COMMANDS = {
    "levels": (cmd_levels, "energy levels against B0 (CSV)"),
    "edfs": (cmd_edfs, "powder field-sweep spectrum and orientation selection"),
    "prepare": (cmd_prepare, "prepared density matrix (JSON)"),
    "tomo": (cmd_tomo, "simulated tomography (JSON + bar-chart CSV)"),
    "interfere": (cmd_interfere, "phase interference pattern (CSV)"),
    "fft": (cmd_fft, "2D Fourier peaks of a pattern file (JSON)"),
    "tppi": (cmd_tppi, "pattern remapped to evolution times plus a trace (CSV)"),
    "torus": (cmd_torus, "phase-torus path (CSV) and closure report (JSON)"),
    "run": (cmd_run, "run a JSON pulse sequence from |0> (JSON)"),
}
FILE_ARG = {"fft": "pattern", "tppi": "pattern", "run": "sequence"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment configuration JSON")
    common.add_argument("--out", help="output directory (default: config output.directory)")
    common.add_argument("--seed", type=int)
    common.add_argument("--grid", type=int, help="pattern grid size N")
    common.add_argument("--state", choices=("psi1", "psi2"))
    common.add_argument("--ratio", type=float, help="delta_f_plus / delta_f_minus")
    common.add_argument("--t-max", dest="t_max", type=float, help="evolution time span (us)")

    parser = _Parser(prog="qutritsim", description="Spin-1 qutrit pulsed-EPR simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name in FILE_ARG:
            p.add_argument(FILE_ARG[name])
    sub.add_parser("default-config", help="print the default configuration JSON")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "default-config":
            sys.stdout.write(ExperimentConfig().dump())
            return 0
        cfg = _load_config(args)
        out = _out_dir(args, cfg)
        func = COMMANDS[args.command][0]
        extra = [getattr(args, FILE_ARG[args.command])] if args.command in FILE_ARG else []
        files = func(cfg, out, *extra)
        _write_manifest(out, args.command, cfg, files)
        for f in files:
            print(f)
        return 0
    except Exception as exc:  # reported as JSON for scripted callers
        _report(exc)


if __name__ == "__main__":
    sys.exit(main())
