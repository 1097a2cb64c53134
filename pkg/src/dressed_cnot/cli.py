"""
Command line entry point: ``dressed-cnot <command> [options]``.

Every command resolves a :class:`ScenarioConfig` from defaults, an optional
JSON file and flag overrides (in that order), echoes it to
``<out>/config.json`` and writes one CSV next to it.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, SweepSpec
from .dynamics import build_gate_model, evolve_density, evolve_state
from .errors import LabelParseError, SweepError
from .hilbert import DensityOperator, StateVector, ket
from .metrics import gate_fidelity, stepwise_fidelity_traces, truth_table
from .pulses import PULSE_COLUMNS, pulse_table, step_window
from .validation import run_validation

PULSE_ROWS = 3001


def _fmt(value) -> str:
    return f"{float(value):.17g}"


def write_csv(path: Path, header, rows) -> Path:
    """Write atomically: a partially written file never replaces a good one."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
    return path


def write_config(cfg: ScenarioConfig, out: Path, sweep: SweepSpec | None = None) -> Path:
    data = cfg.to_dict()
    if sweep is not None:
        data["sweep"] = {
            "gamma_axis": list(sweep.gamma_axis),
            "kappa_axis": list(sweep.kappa_axis),
            "workers": sweep.workers,
        }
    out.mkdir(parents=True, exist_ok=True)
    path = out / "config.json"
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


# --------------------------------------------------------------------------
# Commands


def cmd_pulses(cfg: ScenarioConfig, out: Path) -> Path:
    p = cfg.pulse()
    t = np.linspace(0.0, 3 * p.tf, PULSE_ROWS)
    table = pulse_table(t, p)
    rows = zip(t, *(table[c] for c in PULSE_COLUMNS))
    return write_csv(out / "pulses.csv", ("t",) + PULSE_COLUMNS, rows)


def cmd_evolve(cfg: ScenarioConfig, out: Path, step: int | None = None, initial: str = "g0g1|000") -> Path:
    sp, p, icfg = cfg.system(), cfg.pulse(), cfg.integrator()
    model = build_gate_model(sp, p, cfg.basis_mode)
    try:
        state = ket(initial)
    except LabelParseError as exc:
        raise LabelParseError(f"{exc}; valid labels: {', '.join(model.basis.labels)}") from None
    if state not in model.basis:
        raise LabelParseError(f"{initial!r} is not reachable in this model; valid labels: {', '.join(model.basis.labels)}")
    span = model.span if step is None else step_window(step, p)
    if model.open_system:
        _, rec = evolve_density(
            DensityOperator.from_label(model.basis, state), model.hamiltonians, model.collapse, span, icfg
        )
    else:
        _, rec = evolve_state(StateVector.from_label(model.basis, state), model.hamiltonians, span, icfg)
    rows = zip(rec.times, *(rec[n] for n in rec.names))
    return write_csv(out / "traj.csv", ["t"] + rec.names, rows)


def cmd_fidelity(cfg: ScenarioConfig, out: Path) -> Path:
    rec = stepwise_fidelity_traces(cfg.system(), cfg.pulse(), cfg.integrator(), cfg.N_grid, cfg.basis_mode)
    names = ("F_step1", "F_step2", "F_step3", "F_whole")
    return write_csv(out / "fidelity.csv", ("t",) + names, zip(rec.times, *(rec[n] for n in names)))


def cmd_truth(cfg: ScenarioConfig, out: Path) -> Path:
    table = truth_table(cfg.system(), cfg.pulse(), cfg.integrator(), basis_mode=cfg.basis_mode)
    rows = [[label, *table.matrix[i]] for i, label in enumerate(table.labels)]
    return write_csv(out / "truth.csv", ("input_label", "p00", "p01", "p10", "p11"), rows)


def _sweep_point(args) -> float:
    cfg, gamma, kappa = args
    c = replace(cfg, gamma=gamma, kappa=kappa)
    return gate_fidelity(c.system(), c.pulse(), c.integrator(), c.N_grid, c.basis_mode).value


def run_sweep(cfg: ScenarioConfig, sweep_spec: SweepSpec) -> np.ndarray:
    """Whole-gate fidelity on the (gamma, kappa) grid, shape (len(gamma), len(kappa))."""
    points = sweep_spec.points()
    jobs = [(cfg, gam, kap) for _, _, gam, kap in points]
    try:
        if sweep_spec.workers == 1:
            values = [_sweep_point(job) for job in jobs]
        else:
            with ProcessPoolExecutor(max_workers=sweep_spec.workers) as pool:
                values = list(pool.map(_sweep_point, jobs))
    except Exception as exc:
        raise SweepError(f"sweep aborted, no results written: {exc}") from exc
    return np.array(values).reshape(len(sweep_spec.gamma_axis), len(sweep_spec.kappa_axis))


def cmd_sweep(cfg: ScenarioConfig, out: Path, sweep_spec: SweepSpec) -> Path:
    grid = run_sweep(cfg, sweep_spec)
    rows = [
        (i, j, gam, kap, grid[i, j]) for i, j, gam, kap in sweep_spec.points()
    ]
    return write_csv(out / "sweep.csv", ("gamma_index", "kappa_index", "gamma", "kappa", "fidelity"), rows)


def cmd_validate(cfg: ScenarioConfig, out: Path, stream=None) -> bool:
    stream = sys.stdout if stream is None else stream
    results = run_validation(cfg)
    for r in results:
        print(r.line(), file=stream)
    rows = [(r.name, "pass" if r.passed else "fail", r.value, r.tolerance, r.detail) for r in results]
    write_csv(out / "validate.csv", ("check", "status", "value", "tolerance", "detail"), rows)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"validation failed: {', '.join(failed)}", file=stream)
    return not failed


# --------------------------------------------------------------------------
# Argument handling


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON scenario file")
    common.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
    common.add_argument("--dt", type=float, help="RK4 time step")
    common.add_argument("--grid", type=int, help="angle quadrature points per axis")
    common.add_argument("--gamma", type=float, help="atomic decay rate")
    common.add_argument("--kappa", type=float, help="cavity (and default fiber) leakage rate")
    common.add_argument("--basis", choices=("full", "closure"), help="basis mode")
    common.add_argument("--reg-center", choices=("as-written", "centered"), help="sech regularizer centering")

    parser = argparse.ArgumentParser(prog="dressed-cnot", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("pulses", parents=[common], help="write the six applied pulses")
    ev = sub.add_parser("evolve", parents=[common], help="population trajectory of one input ket")
    ev.add_argument("--step", type=int, choices=(1, 2, 3), help="run a single step (default: whole gate)")
    ev.add_argument("--initial", default="g0g1|000", help="initial ket label, e.g. g0g1|000")
    sub.add_parser("fidelity", parents=[common], help="per-step and whole-gate fidelity traces")
    sub.add_parser("truth-table", parents=[common], help="computational-basis truth table")
    sw = sub.add_parser("sweep", parents=[common], help="whole-gate fidelity over a (gamma, kappa) grid")
    sw.add_argument("--workers", type=int, help="parallel worker processes")
    sub.add_parser("validate", parents=[common], help="run the self-consistency checks")
    return parser


def resolve_config(args) -> ScenarioConfig:
    cfg = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
    cfg = cfg.override(
        dt=args.dt,
        N_grid=args.grid,
        gamma=args.gamma,
        kappa=args.kappa,
        basis_mode=args.basis,
        reg_center=args.reg_center,
        output_dir=str(args.out) if args.out else None,
    )
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = Path(cfg.output_dir)
        sweep_spec = None
        if args.command == "sweep":
            sweep_spec = SweepSpec.load(args.config) if args.config else SweepSpec()
            if args.workers is not None:
                sweep_spec = replace(sweep_spec, workers=args.workers)
        write_config(cfg, out, sweep_spec)
        if args.command == "pulses":
            path = cmd_pulses(cfg, out)
        elif args.command == "evolve":
            path = cmd_evolve(cfg, out, args.step, args.initial)
        elif args.command == "fidelity":
            path = cmd_fidelity(cfg, out)
        elif args.command == "truth-table":
            path = cmd_truth(cfg, out)
        elif args.command == "sweep":
            path = cmd_sweep(cfg, out, sweep_spec)
        else:
            return 0 if cmd_validate(cfg, out) else 1
    except SweepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
