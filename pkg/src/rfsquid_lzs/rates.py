"""Elementary rate laws: photon-sideband Landau-Zener rates, over-barrier
escape and thermally activated inter-well relaxation.

Energies, drive amplitudes and rates are ordinary frequencies in GHz
(the 2*pi factor is never carried around).
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import constants

from .bessel import bessel_j, bessel_j_table
from .errors import DomainError, RateOverflowError

# Sideband sums keep |m| <= ceil(x) + DEFAULT_M_EXTRA unless told otherwise.
DEFAULT_M_EXTRA = 40
# Beyond m ~ x the Bessel functions fall off on the Airy scale x^(1/3);
# ten such widths past the turning point leave J_m^2 below 1e-20.
_AIRY_WIDTHS = 10.0

# exp() overflows just above 709.78.
_MAX_EXPONENT = 700.0


@dataclass(frozen=True)
class DriveParams:
    """Microwave drive: frequency ``omega`` and amplitude ``amplitude`` in GHz."""

    omega: float
    amplitude: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise DomainError(f"drive frequency must be positive, got {self.omega}")
        if not self.amplitude >= 0:
            raise DomainError(f"drive amplitude must be non-negative, got {self.amplitude}")

    @property
    def x(self):
        """Dimensionless Bessel argument A / omega."""
        return self.amplitude / self.omega


@dataclass(frozen=True)
class LZRateParams:
    """Avoided-crossing gap, dephasing rate and sideband truncation.

    ``m_range=None`` means ``default_truncation(x)``, evaluated per call.
    """

    gap: float
    dephasing: float
    omega: float
    m_range: Optional[int] = None

    def __post_init__(self):
        if not self.gap >= 0:
            raise DomainError(f"gap must be non-negative, got {self.gap}")
        if not self.dephasing > 0:
            raise DomainError(f"dephasing rate must be positive, got {self.dephasing}")
        if not self.omega > 0:
            raise DomainError(f"drive frequency must be positive, got {self.omega}")
        if self.m_range is not None and self.m_range < 0:
            raise DomainError(f"m_range must be non-negative, got {self.m_range}")

    def truncation(self, x):
        if self.m_range is not None:
            return int(self.m_range)
        return default_truncation(x)


def default_truncation(x, extra=DEFAULT_M_EXTRA):
    """Sideband cut-off ceil(x + 10 x^(1/3)) + extra."""
    x = float(x)
    return int(math.ceil(x + _AIRY_WIDTHS * x ** (1.0 / 3.0))) + int(extra)


@dataclass(frozen=True)
class EscapeParams:
    """Over-barrier excitation g = a * exp(b * A / amplitude_unit).

    ``slope_b`` is per ``amplitude_unit`` GHz of drive amplitude.
    """

    prefactor_a: float
    slope_b: float
    amplitude_unit: float = 1.0

    def __post_init__(self):
        if not self.prefactor_a >= 0:
            raise DomainError(f"escape prefactor must be non-negative, got {self.prefactor_a}")
        if not self.amplitude_unit > 0:
            raise DomainError("amplitude_unit must be positive")


@dataclass(frozen=True)
class ThermalParams:
    """Inter-well relaxation Gamma_10 = base_rate * exp(beta * eps10).

    ``beta`` is in 1/GHz so that ``beta * eps10`` is dimensionless.
    """

    base_rate: float
    beta: float = 0.0

    def __post_init__(self):
        if not self.base_rate >= 0:
            raise DomainError(f"base rate must be non-negative, got {self.base_rate}")
        if not self.beta >= 0:
            raise DomainError(f"beta must be non-negative, got {self.beta}")


def beta_from_temperature(temperature_k):
    """h / (k_B T) expressed in 1/GHz."""
    if not temperature_k > 0:
        raise DomainError("temperature must be positive")
    return constants.h * 1.0e9 / (constants.k * temperature_k)


def _checked_exp(exponent, what):
    exponent = np.asarray(exponent, dtype=float)
    if np.any(exponent > _MAX_EXPONENT):
        raise RateOverflowError(
            f"{what}: exponent {float(np.max(exponent)):.6g} exceeds {_MAX_EXPONENT:g}"
        )
    return np.exp(exponent)


def sideband_weights(params, epsilon, m_range):
    """Lorentzian weights Gamma2 / ((eps - m*omega)^2 + Gamma2^2) for
    m = -m_range..m_range; ``epsilon`` broadcasts against a trailing m axis."""
    m = np.arange(-m_range, m_range + 1, dtype=float)
    eps = np.asarray(epsilon, dtype=float)[..., None]
    g2 = params.dephasing
    return g2 / ((eps - m * params.omega) ** 2 + g2 * g2)


def lz_rate_from_table(params, epsilon, jtable):
    """Sideband sum given a precomputed Bessel table.

    ``jtable`` has shape ``(M + 1, n)`` with ``J_0..J_M`` at ``n`` arguments;
    ``epsilon`` is a scalar or has shape ``(n,)``.  Returns shape ``(n,)``.
    The m and -m terms are added before summing over m so that the result
    is exactly even in epsilon.
    """
    m_range = jtable.shape[0] - 1
    jsq = jtable.T ** 2
    weights = sideband_weights(params, epsilon, m_range)
    eps = np.asarray(epsilon, dtype=float)
    weights = np.broadcast_to(weights, eps.shape + (2 * m_range + 1,))
    pos = weights[..., m_range:]
    neg = weights[..., m_range::-1]
    paired = pos + neg
    paired[..., 0] = pos[..., 0]
    total = np.sum(jsq * paired, axis=-1)
    return 0.5 * params.gap ** 2 * total


def lz_rate(params, epsilon, x):
    """Landau-Zener sideband rate W(eps, x) in GHz.

    Sum over m in [-m_range, m_range] of (gap^2/2) Gamma2 J_m(x)^2 /
    ((eps - m omega)^2 + Gamma2^2).
    """
    if not x >= 0:
        raise DomainError(f"Bessel argument must be non-negative, got {x}")
    m_range = params.truncation(x)
    table = bessel_j_table(m_range, x)
    return float(lz_rate_from_table(params, float(epsilon), table)[0])


def lz_rate_resonant(params, m, x):
    """Single on-resonance sideband (eps = m omega): (gap^2/2) J_|m|(x)^2 / Gamma2."""
    j = bessel_j(abs(int(m)), x)
    return 0.5 * params.gap ** 2 * j * j / params.dephasing


def resonant_tail_bound(params, m, x):
    """Upper bound on lz_rate(m omega, x) - lz_rate_resonant(m, x).

    Every off-resonant sideband sits at least omega away, and the
    squared Bessel functions sum to one.
    """
    j = bessel_j(abs(int(m)), x)
    return 0.5 * params.gap ** 2 * params.dephasing / params.omega ** 2 * max(0.0, 1.0 - j * j)


def escape_rate(params, amplitude):
    """Over-barrier excitation rate g = a * exp(b * A / amplitude_unit)."""
    if np.any(np.asarray(amplitude) < 0):
        raise DomainError("drive amplitude must be non-negative")
    exponent = params.slope_b * np.asarray(amplitude, dtype=float) / params.amplitude_unit
    out = params.prefactor_a * _checked_exp(exponent, "escape rate")
    return float(out) if np.ndim(out) == 0 else out


def interwell_rate(params, epsilon10):
    """Thermally activated inter-well rate base_rate * exp(beta * eps10)."""
    out = params.base_rate * _checked_exp(params.beta * np.asarray(epsilon10, dtype=float),
                                          "inter-well rate")
    return float(out) if np.ndim(out) == 0 else out
