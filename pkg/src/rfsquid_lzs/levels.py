"""Piecewise-linear level diagram: static flux detuning (mPhi0) to the dc
energy detuning (GHz) of each avoided crossing.

Anchors come from observed resonance positions: at the flux where the
m-photon peak of a crossing sits, its detuning equals m * omega.  Segment
slopes decrease towards the barrier top, which is what spreads the peaks
apart at larger detuning.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import DomainError

EXTRAPOLATION_MARGIN = 0.10


@dataclass(frozen=True)
class CrossingSpec:
    """One avoided crossing with its flux-to-detuning anchor table."""

    label: str
    gap: float
    anchors: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        anchors = tuple((float(f), float(e)) for f, e in self.anchors)
        object.__setattr__(self, "anchors", anchors)
        if self.gap < 0:
            raise DomainError(f"{self.label}: gap must be non-negative")
        if len(anchors) < 2:
            raise DomainError(f"{self.label}: need at least two anchors")
        flux = np.array([a[0] for a in anchors])
        eps = np.array([a[1] for a in anchors])
        if np.any(np.diff(flux) <= 0) or np.any(np.diff(eps) <= 0):
            raise DomainError(f"{self.label}: anchors must increase strictly in flux and detuning")

    @property
    def flux(self):
        return np.array([a[0] for a in self.anchors])

    @property
    def epsilon(self):
        return np.array([a[1] for a in self.anchors])

    def domain(self):
        lo, hi = self.anchors[0][0], self.anchors[-1][0]
        pad = EXTRAPOLATION_MARGIN * (hi - lo)
        return lo - pad, hi + pad


@dataclass(frozen=True)
class LevelDiagram:
    crossings: Tuple[CrossingSpec, ...]
    epsilon10_slope: float = 0.0
    mirror_negative_flux: bool = True

    def __post_init__(self):
        object.__setattr__(self, "crossings", tuple(self.crossings))
        labels = [c.label for c in self.crossings]
        if len(set(labels)) != len(labels):
            raise DomainError(f"duplicate crossing labels: {labels}")

    def crossing(self, label):
        for c in self.crossings:
            if c.label == label:
                return c
        raise KeyError(label)


def detuning_at(spec, flux):
    """Detuning of ``spec`` at ``flux`` (mPhi0), interpolating linearly
    between anchors and extrapolating with the end-segment slopes up to 10%
    of the anchor span beyond either end."""
    f = np.asarray(flux, dtype=float)
    lo, hi = spec.domain()
    if np.any(f < lo) or np.any(f > hi) or not np.all(np.isfinite(f)):
        raise DomainError(
            f"{spec.label}: flux outside anchor domain [{lo:.6g}, {hi:.6g}] mPhi0"
        )
    xs, ys = spec.flux, spec.epsilon
    out = np.interp(f, xs, ys)
    left_slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
    right_slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
    out = np.where(f < xs[0], ys[0] + left_slope * (f - xs[0]), out)
    out = np.where(f > xs[-1], ys[-1] + right_slope * (f - xs[-1]), out)
    return float(out) if out.ndim == 0 else out


def crossing_detuning(diagram, label, flux):
    """Detuning of a named crossing; negative flux maps onto the mirrored
    crossing of the opposite well when the diagram allows it.

    Only |eps| enters the sideband rates, so the mirror is taken as even.
    """
    spec = diagram.crossing(label)
    f = np.asarray(flux, dtype=float)
    if diagram.mirror_negative_flux:
        f = np.abs(f)
    return detuning_at(spec, f)


def epsilon10_at(diagram, flux):
    """Energy of |0L> above |0R>: a linear tilt through the symmetry point."""
    out = diagram.epsilon10_slope * np.asarray(flux, dtype=float)
    return float(out) if out.ndim == 0 else out


def resonance_flux(spec, target):
    """Invert ``detuning_at``: flux where the detuning equals ``target``."""
    xs, ys = spec.flux, spec.epsilon
    lo, hi = spec.domain()
    left_slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
    right_slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
    if target < ys[0]:
        f = xs[0] + (target - ys[0]) / left_slope
    elif target > ys[-1]:
        f = xs[-1] + (target - ys[-1]) / right_slope
    else:
        f = float(np.interp(target, ys, xs))
    if not lo <= f <= hi:
        raise DomainError(f"{spec.label}: detuning {target} not reached inside the anchor domain")
    return f
