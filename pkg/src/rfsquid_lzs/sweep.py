"""Parameter sweeps over (flux detuning, drive) and their text exports."""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bessel import bessel_j_table
from .errors import SimulationError
from .kinetics import (
    ModelKind,
    generator4_entries,
    generator6_entries,
    left_population_array,
    stationary_entries,
)
from .levels import crossing_detuning, epsilon10_at
from .rates import LZRateParams, default_truncation, escape_rate, lz_rate_from_table


@dataclass
class SweepGrid:
    """Left-well population, row = flux index, column = drive index."""

    flux_values: np.ndarray
    drive_values: np.ndarray
    p_left: np.ndarray
    drive_label: str = "amplitude_ghz"

    def __post_init__(self):
        self.flux_values = np.asarray(self.flux_values, dtype=float)
        self.drive_values = np.asarray(self.drive_values, dtype=float)
        self.p_left = np.asarray(self.p_left, dtype=float)
        if self.p_left.shape != (self.flux_values.size, self.drive_values.size):
            raise ValueError("p_left shape does not match the axes")


class PointError(SimulationError):
    """A solver failure at one grid point."""

    def __init__(self, flux, drive, cause):
        super().__init__(f"solver failed at flux={flux:.12g} mPhi0, drive={drive:.12g}: {cause}")
        self.flux = flux
        self.drive = drive


class SweepModel:
    """Everything needed to evaluate P_L on one flux row, with the Bessel
    table shared across rows (it depends only on the drive axis)."""

    def __init__(self, config, amplitudes):
        self.kind = config.model_kind
        self.kp = config.kinetic_params()
        self.omega = config.omega
        self.amplitudes = np.asarray(amplitudes, dtype=float)
        self.x = self.amplitudes / self.omega
        if self.kind is ModelKind.FOUR_LEVEL:
            self.lz = config.lz_params()
            self.jtable = bessel_j_table(abs(self.kp.photon_m), self.x)
        else:
            self.diagram = config.level_diagram()
            m_range = default_truncation(self.x.max(), self.kp.m_extra) if self.x.size else 0
            self.jtable = bessel_j_table(m_range, self.x)
            self.lz_pair = [LZRateParams(c.gap, self.kp.dephasing, self.omega, m_range)
                            for c in self.diagram.crossings[:2]]

    def generators(self, flux):
        kp = self.kp
        if self.kind is ModelKind.FOUR_LEVEL:
            j = self.jtable[abs(kp.photon_m)]
            w = 0.5 * self.lz.gap ** 2 * j * j / self.lz.dephasing
            g = escape_rate(kp.escape, self.amplitudes)
            g01, g10 = kp.interwell_pair(0.0)
            return generator4_entries(w, g, g01, g10, kp.gamma, kp.relax)
        w = []
        for spec, params in zip(self.diagram.crossings[:2], self.lz_pair):
            eps = crossing_detuning(self.diagram, spec.label, flux)
            w.append(lz_rate_from_table(params, eps, self.jtable))
        g01, g10 = kp.interwell_pair(epsilon10_at(self.diagram, flux))
        return generator6_entries(w[0], w[1], g01, g10, kp.relax)

    def row(self, flux):
        return left_population_array(stationary_entries(self.generators(flux)), self.kind)

    def row_checked(self, flux, drive_values):
        """``row`` with failures pinned to the first offending grid point."""
        try:
            return self.row(flux)
        except SimulationError as exc:
            gens = self.generators(flux)
            for k, gen in enumerate(gens):
                try:
                    stationary_entries(gen)
                except SimulationError as point_exc:
                    raise PointError(flux, drive_values[k], point_exc) from exc
            raise PointError(flux, float("nan"), exc) from exc


def resolve_threads(threads):
    if threads and threads > 0:
        return int(threads)
    return os.cpu_count() or 1


def run_sweep(config, threads=None):
    """Stationary left-well population on the config's (flux, drive) grid.

    Rows are computed independently and written to fixed slots, so the
    result does not depend on ``threads`` or on scheduling order.
    """
    flux = config.flux_axis()
    drive, amplitudes = config.drive_axis()
    model = SweepModel(config, amplitudes)
    out = np.empty((flux.size, drive.size))

    def work(i):
        out[i] = model.row_checked(flux[i], drive)

    n_threads = resolve_threads(config["threads"] if threads is None else threads)
    if n_threads == 1:
        for i in range(flux.size):
            work(i)
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            for future in [pool.submit(work, i) for i in range(flux.size)]:
                future.result()
    label = "power_dbm" if config["sweep.axis"] == "power" else "amplitude_ghz"
    return SweepGrid(flux, drive, out, label)


def _fmt(value):
    return f"{value:.12g}"


def _fmt_p(value):
    return f"{min(max(value, 0.0), 1.0):.12f}"


def export_csv(grid, path):
    """Header ``flux_mPhi0,<drive values>`` then one row per flux value."""
    lines = ["flux_mPhi0," + ",".join(_fmt(d) for d in grid.drive_values)]
    for f, row in zip(grid.flux_values, grid.p_left):
        lines.append(_fmt(f) + "," + ",".join(_fmt_p(p) for p in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    header = rows[0]
    if header[0] != "flux_mPhi0":
        raise ValueError(f"{path}: not a sweep CSV")
    drive = [float(v) for v in header[1:]]
    flux = [float(r[0]) for r in rows[1:]]
    p = [[float(v) for v in r[1:]] for r in rows[1:]]
    return SweepGrid(flux, drive, np.array(p).reshape(len(flux), len(drive)))


def pixel_values(p_left):
    """round(255 * P_L) with halves rounded up."""
    p = np.clip(np.asarray(p_left, dtype=float), 0.0, 1.0)
    return np.floor(255.0 * p + 0.5).astype(int)


def export_heatmap(grid, path):
    """Plain-text greyscale PGM (P2); top row is the largest flux value."""
    pixels = pixel_values(grid.p_left)[::-1]
    height, width = pixels.shape
    lines = ["P2", f"{width} {height}", "255"]
    lines.extend(" ".join(str(v) for v in row) for row in pixels)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_pgm(path):
    """Pixel rows of a P2 file, top row first."""
    with open(path, encoding="ascii") as fh:
        tokens = [t for line in fh for t in line.split("#", 1)[0].split()]
    if tokens[0] != "P2":
        raise ValueError(f"{path}: not a plain PGM")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    data = np.array([int(t) for t in tokens[4:4 + width * height]])
    return data.reshape(height, width), maxval
