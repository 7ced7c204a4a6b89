"""Command-line entry point.

    rfsquid-lzs rates|steady|trace|sweep|spectrum [--config FILE] [--threads N]
                [--out DIR] [--format csv|pgm|both] [--set key=value ...]

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 I/O failure.
"""

import argparse
import os
import sys

import numpy as np

from .config import dump_config, parse_config_text
from .errors import ConfigError, SimulationError
from .kinetics import (
    ModelKind,
    build_generator_4,
    build_generator_6,
    integrate,
    left_population,
    left_population_array,
    steady_state,
)
from .rates import DriveParams, lz_rate, lz_rate_resonant
from .spectrum import (
    CircuitParams,
    SpectrumProblem,
    anchor_table,
    find_anticrossings,
    level_sweep,
    refine_anticrossing,
)
from .sweep import export_csv, export_heatmap, run_sweep

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3
COMMANDS = ("rates", "steady", "trace", "sweep", "spectrum")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="rfsquid-lzs",
                     description="Rate-equation simulator for LZS interference in a driven rf-SQUID.",
                     epilog="exit codes: 0 success, 1 usage, 2 numerical failure, 3 I/O failure")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--threads", type=int, help="worker threads (0 = all cores)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--format", choices=("csv", "pgm", "both"), help="sweep output format")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    parser.add_argument("--dump-config", action="store_true",
                        help="print the resolved configuration and exit")
    return parser


def _resolve_config(args):
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = ""
    overrides = []
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides.append(item)
    if args.threads is not None:
        overrides.append(f"threads = {args.threads}")
    if args.out is not None:
        overrides.append(f"output.dir = {args.out}")
    if args.format is not None:
        overrides.append(f"output.format = {args.format}")
    if overrides:
        lines = [ln for ln in text.splitlines()]
        keys = {o.split("=", 1)[0].strip() for o in overrides}
        lines = [ln for ln in lines if ln.split("#", 1)[0].split("=", 1)[0].strip() not in keys]
        text = "\n".join(lines + overrides)
    return parse_config_text(text)


def _fmt(v):
    return f"{v:.12f}"


def cmd_rates(cfg, out):
    lz = cfg.lz_params()
    m = cfg["kinetics.photon_m"]
    eps = m * cfg.omega if cfg["rates.epsilon_ghz"] == "auto" else cfg["rates.epsilon_ghz"]
    xs = np.linspace(cfg["rates.x_min"], cfg["rates.x_max"], cfg["rates.x_steps"])
    out.write(f"# gap={lz.gap:g} GHz dephasing={lz.dephasing:g} GHz omega={lz.omega:g} GHz "
              f"epsilon={eps:.12g} GHz m={m}\n")
    out.write("x\tW_GHz\tW_resonant_GHz\n")
    for x in xs:
        out.write(f"{x:.6g}\t{lz_rate(lz, eps, x):.12e}\t{lz_rate_resonant(lz, m, x):.12e}\n")


def _generator(cfg):
    drive = DriveParams(cfg.omega, cfg["steady.amplitude_ghz"])
    kp = cfg.kinetic_params()
    if cfg.model_kind is ModelKind.FOUR_LEVEL:
        return build_generator_4(kp, drive, cfg.lz_params())
    return build_generator_6(kp, drive, cfg.level_diagram(), cfg["steady.flux_mphi0"])


def cmd_steady(cfg, out):
    p = steady_state(_generator(cfg))
    out.write(f"# model={cfg['model']} flux={cfg['steady.flux_mphi0']:.12g} mPhi0 "
              f"amplitude={cfg['steady.amplitude_ghz']:.12g} GHz\n")
    for label, value in zip(p.labels, p.p):
        out.write(f"p[{label}] = {_fmt(value)}\n")
    out.write(f"P_L = {_fmt(left_population(p))}\n")


def cmd_trace(cfg, out):
    gen = _generator(cfg)
    p0 = np.zeros(gen.dimension)
    p0[0] = 1.0
    times = np.concatenate([[0.0], np.geomspace(cfg["trace.t_min"], cfg["trace.t_max"],
                                                cfg["trace.points"])])
    states = integrate(gen.entries, p0, times)
    out.write("t_ns\t" + "\t".join(f"p[{lab}]" for lab in gen.labels) + "\tP_L\n")
    p_left = left_population_array(states, cfg.model_kind)
    for t, row, pl in zip(times, states, p_left):
        vals = "\t".join(f"{v:.12e}" for v in row)
        out.write(f"{t:.6e}\t{vals}\t{pl:.12f}\n")


def cmd_sweep(cfg, out):
    grid = run_sweep(cfg)
    directory = cfg["output.dir"]
    stem = cfg["output.stem"]
    fmt = cfg["output.format"]
    os.makedirs(directory, exist_ok=True)
    written = []
    if fmt in ("csv", "both"):
        path = os.path.join(directory, stem + ".csv")
        export_csv(grid, path)
        written.append(path)
    if fmt in ("pgm", "both"):
        path = os.path.join(directory, stem + ".pgm")
        export_heatmap(grid, path)
        written.append(path)
    out.write(f"# {grid.p_left.shape[0]}x{grid.p_left.shape[1]} grid, "
              f"P_L in [{grid.p_left.min():.6f}, {grid.p_left.max():.6f}]\n")
    for path in written:
        out.write(path + "\n")


def cmd_spectrum(cfg, out):
    circuit = CircuitParams(cfg["spectrum.inductance_nh"], cfg["spectrum.capacitance_ff"],
                            cfg["spectrum.critical_current_na"])
    problem = SpectrumProblem(circuit, cfg["spectrum.grid_points"], cfg["spectrum.level_count"])
    flux = np.linspace(cfg["spectrum.flux_min"], cfg["spectrum.flux_max"], cfg["spectrum.flux_steps"])
    threads = cfg["threads"] or (os.cpu_count() or 1)
    levels = level_sweep(problem, flux, threads=threads,
                         check_convergence=cfg["spectrum.check_convergence"])
    directory = cfg["output.dir"]
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, "spectrum_levels.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("flux_bias_phi0," + ",".join(f"E{i}_ghz" for i in range(levels.shape[1])) + "\n")
        for f, row in zip(flux, levels):
            fh.write(f"{f:.12g}," + ",".join(f"{e:.12f}" for e in row) + "\n")
    found, failures = find_anticrossings(flux, levels)
    step = flux[1] - flux[0] if flux.size > 1 else 0.0
    out.write(f"# beta_L = {circuit.beta_l:.6f}; levels written to {path}\n")
    out.write(f"# {len(found)} anticrossings, {len(failures)} unresolved minima\n")
    for k, crossing in enumerate(found):
        if step > 0:
            crossing = refine_anticrossing(problem, crossing, step)
        label = f"x{k}"
        anchors = anchor_table(crossing, flux[0], flux[-1])
        out.write(f"# levels {crossing.lower}/{crossing.lower + 1} at flux_bias "
                  f"{crossing.flux:.9f} Phi0, slopes {crossing.left_slope:.6g} / "
                  f"{crossing.right_slope:.6g} GHz/Phi0\n")
        out.write(f"diagram.{label}.gap_ghz = {crossing.gap:.12g}\n")
        out.write(f"diagram.{label}.anchors = "
                  + ", ".join(f"{f:.9g}:{e:.9g}" for f, e in anchors) + "\n")


HANDLERS = {
    "rates": cmd_rates,
    "steady": cmd_steady,
    "trace": cmd_trace,
    "sweep": cmd_sweep,
    "spectrum": cmd_spectrum,
}


def main(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        err.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    try:
        cfg = _resolve_config(args)
    except OSError as exc:
        err.write(f"cannot read config {args.config}: {exc.strerror or exc}\n")
        return EXIT_IO
    except ConfigError as exc:
        err.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    if args.dump_config:
        out.write(dump_config(cfg))
        return EXIT_OK
    try:
        HANDLERS[args.command](cfg, out)
    except OSError as exc:
        err.write(f"I/O error: {exc}\n")
        return EXIT_IO
    except (SimulationError, ValueError, ArithmeticError) as exc:
        err.write(f"numerical error: {exc}\n")
        return EXIT_NUMERIC
    return EXIT_OK


def run():
    sys.exit(main())
