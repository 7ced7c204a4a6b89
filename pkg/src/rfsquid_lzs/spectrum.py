"""Double-well spectrum of the rf-SQUID from its circuit parameters.

The loop flux Phi (in units of Phi0) is treated as a single coordinate with

    H = -K d^2/dphi^2 + E_L (phi - phi_f)^2 - E_J cos(2 pi phi)

where K = hbar^2 / (2 C Phi0^2), E_L = Phi0^2 / (2 L) and
E_J = I_c Phi0 / (2 pi), all converted to GHz.  The compound junction is
folded into an effective critical current.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from scipy import constants, optimize
from scipy.linalg import eigh_tridiagonal

from .errors import DomainError, ResolutionError

PHI0 = constants.h / (2.0 * constants.e)
_GHZ = 1.0e9 * constants.h

CONVERGENCE_TOL_GHZ = 1.0e-3
# Hard walls sit where the WKB decay exponent beyond the outermost turning
# point of the highest requested level reaches this value.
WALL_DECAY_EXPONENT = 12.0


@dataclass(frozen=True)
class CircuitParams:
    inductance_nh: float
    capacitance_ff: float
    critical_current_na: float
    flux_bias: float = 0.5

    def __post_init__(self):
        if not (self.inductance_nh > 0 and self.capacitance_ff > 0):
            raise DomainError("inductance and capacitance must be positive")
        if not self.critical_current_na >= 0:
            raise DomainError("critical current must be non-negative")

    @property
    def beta_l(self):
        """Screening parameter 2 pi L I_c / Phi0; a double well needs > 1."""
        return 2.0 * math.pi * self.inductance_nh * 1e-9 * self.critical_current_na * 1e-9 / PHI0

    @property
    def kinetic_ghz(self):
        return constants.hbar ** 2 / (2.0 * self.capacitance_ff * 1e-15 * PHI0 ** 2) / _GHZ

    @property
    def inductive_ghz(self):
        return PHI0 ** 2 / (2.0 * self.inductance_nh * 1e-9) / _GHZ

    @property
    def josephson_ghz(self):
        return self.critical_current_na * 1e-9 * PHI0 / (2.0 * math.pi) / _GHZ

    @property
    def lc_frequency_ghz(self):
        return 1.0 / (2.0 * math.pi * math.sqrt(self.inductance_nh * 1e-9 * self.capacitance_ff * 1e-15)) / 1e9


@dataclass(frozen=True)
class SpectrumProblem:
    circuit: CircuitParams
    grid_points: int = 4096
    level_count: int = 10
    flux_window: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.grid_points < 256:
            raise DomainError("grid_points must be at least 256")
        if self.level_count < 2:
            raise DomainError("level_count must be at least 2")


def potential(circuit, phi):
    """Loop potential in GHz at internal flux ``phi`` (units of Phi0)."""
    phi = np.asarray(phi, dtype=float)
    out = (circuit.inductive_ghz * (phi - circuit.flux_bias) ** 2
           - circuit.josephson_ghz * np.cos(2.0 * math.pi * phi))
    return float(out) if out.ndim == 0 else out


def potential_minimum(circuit):
    """Global minimum of the potential, refined with a bounded Brent search."""
    reach = 1.0 + math.sqrt(circuit.josephson_ghz / circuit.inductive_ghz)
    phi = np.linspace(circuit.flux_bias - reach, circuit.flux_bias + reach, 20001)
    u = potential(circuit, phi)
    i = int(np.argmin(u))
    dx = phi[1] - phi[0]
    res = optimize.minimize_scalar(lambda p: potential(circuit, p), method="bounded",
                                   bounds=(phi[i] - dx, phi[i] + dx),
                                   options={"xatol": 1e-13})
    return min(float(res.fun), float(u[i]))


def _dirichlet_levels(circuit, window, n, count):
    a, b = window
    x = np.linspace(a, b, n + 2)[1:-1]
    dx = x[1] - x[0]
    k = circuit.kinetic_ghz / (dx * dx)
    diag = 2.0 * k + potential(circuit, x)
    off = np.full(n - 1, -k)
    return eigh_tridiagonal(diag, off, select="i", select_range=(0, count - 1),
                            check_finite=False)[0]


def _wall_window(circuit, e_max):
    """Smallest window whose walls are WKB-negligible for energy ``e_max``."""
    reach = 1.0 + math.sqrt((circuit.josephson_ghz + e_max) / circuit.inductive_ghz)
    phi = np.linspace(circuit.flux_bias - reach, circuit.flux_bias + reach, 40001)
    excess = potential(circuit, phi) - e_max
    allowed = np.flatnonzero(excess < 0)
    if allowed.size == 0:
        raise DomainError("no classically allowed region below the requested levels")
    kappa = np.sqrt(np.clip(excess, 0.0, None) / circuit.kinetic_ghz)
    dphi = phi[1] - phi[0]
    lo, hi = allowed[0], allowed[-1]
    right = np.cumsum(kappa[hi:]) * dphi
    left = np.cumsum(kappa[lo::-1]) * dphi
    i_hi = hi + int(np.searchsorted(right, WALL_DECAY_EXPONENT))
    i_lo = lo - int(np.searchsorted(left, WALL_DECAY_EXPONENT))
    return float(phi[max(i_lo, 0)]), float(phi[min(i_hi, phi.size - 1)])


def solve_window(problem):
    """Hard-wall window used for ``problem``."""
    if problem.flux_window is not None:
        return tuple(problem.flux_window)
    c = problem.circuit
    reach = 1.0 + math.sqrt(c.josephson_ghz / c.inductive_ghz)
    rough = _dirichlet_levels(c, (c.flux_bias - reach, c.flux_bias + reach),
                              problem.grid_points, problem.level_count)
    return _wall_window(c, float(rough[-1]))


def eigenlevels(problem, check_convergence=True, tol=CONVERGENCE_TOL_GHZ, raw=False):
    """Lowest ``level_count`` energies in GHz, measured from the potential
    minimum of the deeper well (``raw=True`` keeps the absolute scale, which
    is what level slopes against flux need).

    With ``check_convergence`` the problem is solved again on twice the
    grid and a ``ResolutionError`` is raised if any level moves by more
    than ``tol``.
    """
    c = problem.circuit
    window = solve_window(problem)
    levels = _dirichlet_levels(c, window, problem.grid_points, problem.level_count)
    if check_convergence:
        fine = _dirichlet_levels(c, window, 2 * problem.grid_points, problem.level_count)
        shift = float(np.max(np.abs(fine - levels)))
        if shift >= tol:
            raise ResolutionError(
                f"doubling grid_points from {problem.grid_points} moved a level by "
                f"{shift * 1e3:.3f} MHz (limit {tol * 1e3:.3f} MHz)"
            )
    if raw:
        return levels
    return levels - potential_minimum(c)


def level_sweep(problem, flux_biases, threads=1, check_convergence=False, raw=True):
    """Levels at each flux bias; shape ``(len(flux_biases), level_count)``.

    Each flux point is independent, and results land in fixed rows.
    """
    flux_biases = np.asarray(flux_biases, dtype=float)
    out = np.empty((flux_biases.size, problem.level_count))

    def work(i):
        sub = replace(problem, circuit=replace(problem.circuit, flux_bias=float(flux_biases[i])))
        out[i] = eigenlevels(sub, check_convergence=check_convergence, raw=raw)

    if threads == 1:
        for i in range(flux_biases.size):
            work(i)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for fut in [pool.submit(work, i) for i in range(flux_biases.size)]:
                fut.result()
    return out


@dataclass(frozen=True)
class Anticrossing:
    lower: int
    flux: float
    gap: float
    left_slope: float
    right_slope: float

    @property
    def detuning_slope(self):
        """|d(eps)/d(flux)| of the diabatic detuning, GHz per flux unit."""
        return abs(self.right_slope - self.left_slope)


@dataclass(frozen=True)
class DetectionFailure:
    lower: int
    index: int
    reason: str


def _fit_slope(flux, energy, mask, nearest_first, count=4):
    idx = np.flatnonzero(mask)
    if idx.size < 2:
        return float("nan")
    idx = idx[-count:] if nearest_first == "left" else idx[:count]
    if idx.size < 2:
        return float("nan")
    return float(np.polyfit(flux[idx], energy[idx], 1)[0])


def find_anticrossings(flux, levels, far=5.0):
    """Locate avoided crossings between adjacent levels.

    For each pair the local minima of the squared separation are refined
    with a three-point parabola (exact for a two-level crossing, where the
    squared gap is quadratic in flux).  Slopes come from straight-line fits
    to the lower level at least ``far`` gap-widths either side.

    Returns ``(found, failures)``.
    """
    flux = np.asarray(flux, dtype=float)
    levels = np.asarray(levels, dtype=float)
    found, failures = [], []
    for i in range(levels.shape[1] - 1):
        gap = levels[:, i + 1] - levels[:, i]
        for j in range(1, flux.size - 1):
            if not (gap[j] < gap[j - 1] and gap[j] <= gap[j + 1]):
                continue
            f3, g3 = flux[j - 1:j + 2], gap[j - 1:j + 2] ** 2
            a, b, c0 = np.polyfit(f3, g3, 2)
            if a <= 0:
                failures.append(DetectionFailure(i, j, "squared gap not convex"))
                continue
            f0 = -b / (2.0 * a)
            if not f3[0] <= f0 <= f3[-1]:
                failures.append(DetectionFailure(i, j, "vertex outside bracket"))
                continue
            g0 = math.sqrt(max(c0 - b * b / (4.0 * a), 0.0))
            width = g0 / math.sqrt(a)
            lower = levels[:, i]
            left = _fit_slope(flux, lower, flux <= f0 - far * width - 1e-15 * abs(f0), "left")
            right = _fit_slope(flux, lower, flux >= f0 + far * width + 1e-15 * abs(f0), "right")
            found.append(Anticrossing(i, float(f0), g0, left, right))
        if gap.size >= 2 and (gap[0] < gap[1] or gap[-1] < gap[-2]):
            edge = 0 if gap[0] < gap[1] else flux.size - 1
            failures.append(DetectionFailure(i, edge, "minimum not bracketed by the sweep"))
    return found, failures


def anchor_table(crossing, flux_lo, flux_hi):
    """Two-point LevelDiagram anchors (mPhi0 from Phi0/2, GHz) for the linear
    detuning ``|slope difference| * (flux - crossing.flux)``."""
    s = crossing.detuning_slope
    pts = []
    for f in (flux_lo, flux_hi):
        pts.append(((f - 0.5) * 1e3, s * (f - crossing.flux)))
    return pts


def refine_anticrossing(problem, crossing, half_width, check_convergence=False):
    """Re-solve around a detected crossing and minimise the gap directly.

    Useful when the sweep step is much wider than the crossing, where the
    three-point estimate loses the gap to cancellation.
    """
    i = crossing.lower

    def gap(f):
        sub = replace(problem, circuit=replace(problem.circuit, flux_bias=float(f)))
        lv = eigenlevels(sub, check_convergence=check_convergence, raw=True)
        return lv[i + 1] - lv[i]

    res = optimize.minimize_scalar(gap, method="bounded",
                                   bounds=(crossing.flux - half_width, crossing.flux + half_width),
                                   options={"xatol": 1e-10})
    return replace(crossing, flux=float(res.x), gap=float(res.fun))
