"""Rate-equation kinetics of the driven rf-SQUID.

Two level schemes are supported:

four-level  |0R>, |0L>, |nL>, |N>
    Sideband transitions |0R> <-> |nL> at rate W, fast intra-well decay
    |nL> -> |0L> (gamma), over-barrier excitation of both ground states to
    |N> (g), and decay of |N> into either ground state (Gamma each).

six-level   |0R>, |0L>, |nR>, |nL>, |(n+1)R>, |(n+1)L>
    Two avoided crossings driven at once (W1 through |nL>/|nR>, W2 through
    |(n+1)L>/|(n+1)R>), with intra-well decay Gamma back to the well's
    ground state.

Matrices follow the column-generator convention: ``M[i, j]`` is the rate
from level j to level i, and each column sums to zero, so ``dp/dt = M @ p``.
"""

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateChainError, DomainError, IntegrationError
from .levels import crossing_detuning, epsilon10_at
from .rates import (
    DEFAULT_M_EXTRA,
    default_truncation,
    EscapeParams,
    LZRateParams,
    ThermalParams,
    escape_rate,
    interwell_rate,
    lz_rate,
    lz_rate_resonant,
)

FOUR_LEVEL_LABELS = ("0R", "0L", "nL", "N")
SIX_LEVEL_LABELS = ("0R", "0L", "nR", "nL", "(n+1)R", "(n+1)L")


class ModelKind(enum.Enum):
    FOUR_LEVEL = "four"
    SIX_LEVEL = "six"

    @property
    def labels(self):
        return FOUR_LEVEL_LABELS if self is ModelKind.FOUR_LEVEL else SIX_LEVEL_LABELS


@dataclass(frozen=True)
class KineticParams:
    """Rate-law parameters, all in GHz.

    ``gamma01=None`` derives the uphill inter-well rate from detailed
    balance with the thermal law; a number pins it.
    """

    model: ModelKind
    gamma: float
    relax: float
    thermal: ThermalParams
    escape: EscapeParams = field(default_factory=lambda: EscapeParams(0.0, 0.0))
    dephasing: float = 2.0
    photon_m: int = 8
    gamma01: Optional[float] = None
    m_extra: int = DEFAULT_M_EXTRA

    def __post_init__(self):
        for name in ("gamma", "relax", "dephasing"):
            if not getattr(self, name) >= 0:
                raise DomainError(f"{name} must be non-negative")
        if self.gamma01 is not None and not self.gamma01 >= 0:
            raise DomainError("gamma01 must be non-negative")
        if not self.dephasing > 0:
            raise DomainError("dephasing must be positive")

    def interwell_pair(self, eps10):
        """(Gamma_01, Gamma_10) at tilt ``eps10``.

        The thermal law applies to whichever direction is downhill; the
        uphill rate stays at the base rate, which satisfies detailed balance
        and keeps the scheme mirror symmetric in the tilt.
        """
        eps10 = np.asarray(eps10, dtype=float)
        if self.gamma01 is not None:
            g01 = np.full_like(eps10, self.gamma01)
            g10 = interwell_rate(self.thermal, eps10)
        else:
            g01 = interwell_rate(self.thermal, np.maximum(-eps10, 0.0))
            g10 = interwell_rate(self.thermal, np.maximum(eps10, 0.0))
        if eps10.ndim == 0:
            return float(g01), float(g10)
        return g01, g10


@dataclass(frozen=True)
class RateMatrix:
    entries: np.ndarray
    labels: tuple

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError("rate matrix must be square")
        if len(self.labels) != m.shape[0]:
            raise DomainError("one label per level required")
        off = m - np.diag(np.diag(m))
        if np.any(off < 0):
            raise DomainError("off-diagonal rates must be non-negative")
        scale = max(np.abs(m).max(), 1e-300)
        if np.any(np.abs(m.sum(axis=0)) > 1e-12 * scale):
            raise DomainError("generator columns must sum to zero")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dimension(self):
        return self.entries.shape[0]

    @classmethod
    def from_rates(cls, rates, labels):
        """Build a generator from an off-diagonal rate table ``rates[i, j]`` (j -> i)."""
        return cls(_close_columns(np.asarray(rates, dtype=float)), tuple(labels))


@dataclass(frozen=True)
class OccupationVector:
    p: np.ndarray
    labels: tuple

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def __getitem__(self, i):
        return self.p[i]

    def __len__(self):
        return self.p.size

    def as_dict(self):
        return dict(zip(self.labels, self.p.tolist()))


def _close_columns(rates):
    """Zero the diagonal of an off-diagonal rate stack and set it to minus
    the column sums.  Works on (..., n, n)."""
    n = rates.shape[-1]
    out = rates.copy()
    idx = np.arange(n)
    out[..., idx, idx] = 0.0
    out[..., idx, idx] = -out.sum(axis=-2)
    return out


def generator4_entries(w, g, g01, g10, gamma, relax):
    """Four-level generator for broadcastable rate arrays; shape (..., 4, 4)."""
    w, g, g01, g10 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (w, g, g01, g10)))
    r = np.zeros(w.shape + (4, 4))
    r[..., 1, 0] = g01
    r[..., 2, 0] = w
    r[..., 3, 0] = g
    r[..., 0, 1] = g10
    r[..., 3, 1] = g
    r[..., 0, 2] = w
    r[..., 1, 2] = gamma
    r[..., 0, 3] = relax
    r[..., 1, 3] = relax
    return _close_columns(r)


def generator6_entries(w1, w2, g01, g10, relax):
    """Six-level generator for broadcastable rate arrays; shape (..., 6, 6)."""
    w1, w2, g01, g10 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (w1, w2, g01, g10)))
    r = np.zeros(w1.shape + (6, 6))
    # from |0R>
    r[..., 1, 0] = g01
    r[..., 3, 0] = w1
    r[..., 5, 0] = w2
    # from |0L>
    r[..., 0, 1] = g10
    r[..., 2, 1] = w1
    r[..., 4, 1] = w2
    # from |nR>, |nL>
    r[..., 1, 2] = w1
    r[..., 0, 2] = relax
    r[..., 0, 3] = w1
    r[..., 1, 3] = relax
    # from |(n+1)R>, |(n+1)L>
    r[..., 1, 4] = w2
    r[..., 0, 4] = relax
    r[..., 0, 5] = w2
    r[..., 1, 5] = relax
    return _close_columns(r)


def build_generator_4(kp, drive, lz):
    """Four-level generator at drive ``drive``; W from the resonant
    single-sideband rate with ``kp.photon_m`` photons."""
    if kp.model is not ModelKind.FOUR_LEVEL:
        raise DomainError("build_generator_4 needs a four-level KineticParams")
    w = lz_rate_resonant(lz, kp.photon_m, drive.x)
    g = escape_rate(kp.escape, drive.amplitude)
    g01, g10 = kp.interwell_pair(0.0)
    return RateMatrix(generator4_entries(w, g, g01, g10, kp.gamma, kp.relax), FOUR_LEVEL_LABELS)


def six_level_rates(kp, drive, diagram, flux):
    """(W1, W2, Gamma_01, Gamma_10) for the six-level model at one flux point."""
    first, second = diagram.crossings[0], diagram.crossings[1]
    x = drive.x
    m_range = default_truncation(x, kp.m_extra)
    w = []
    for spec in (first, second):
        eps = crossing_detuning(diagram, spec.label, flux)
        params = LZRateParams(spec.gap, kp.dephasing, drive.omega, m_range)
        w.append(lz_rate(params, eps, x))
    g01, g10 = kp.interwell_pair(epsilon10_at(diagram, flux))
    return w[0], w[1], g01, g10


def build_generator_6(kp, drive, diagram, flux):
    """Six-level generator at static flux detuning ``flux`` (mPhi0).

    The first two crossings of ``diagram`` play the roles of the
    |0R>-|nL> and |0R>-|(n+1)L> gaps.
    """
    if kp.model is not ModelKind.SIX_LEVEL:
        raise DomainError("build_generator_6 needs a six-level KineticParams")
    if len(diagram.crossings) < 2:
        raise DomainError("six-level model needs two crossings in the level diagram")
    w1, w2, g01, g10 = six_level_rates(kp, drive, diagram, flux)
    return RateMatrix(generator6_entries(w1, w2, g01, g10, kp.relax), SIX_LEVEL_LABELS)


def closed_classes(entries):
    """Closed communicating classes of the transition graph (edge j -> i
    wherever ``M[i, j] > 0``).  A unique stationary distribution exists
    exactly when there is one."""
    m = np.asarray(entries)
    n = m.shape[0]
    adj = (m > 0) & ~np.eye(n, dtype=bool)
    # reach[i, j]: j reachable from i
    reach = adj.T.copy() | np.eye(n, dtype=bool)
    for k in range(n):
        reach |= reach[:, [k]] & reach[[k], :]
    classes = []
    seen = set()
    for i in range(n):
        if i in seen:
            continue
        cls = [j for j in range(n) if reach[i, j] and reach[j, i]]
        seen.update(cls)
        if all(set(np.flatnonzero(reach[j])) <= set(cls) for j in cls):
            classes.append(tuple(cls))
    return classes


def _check_unique_stationary(entries):
    classes = closed_classes(entries)
    if len(classes) != 1:
        raise DegenerateChainError(
            f"generator has {len(classes)} closed classes {classes}; "
            "the stationary distribution is not unique"
        )


def stationary_entries(entries):
    """Stationary vectors of a stack of generators (..., n, n).

    The last balance row is replaced by the normalisation row and the
    resulting dense systems are solved with partial pivoting.
    """
    a = np.array(entries, dtype=float)
    a[..., -1, :] = 1.0
    rhs = np.zeros(a.shape[:-1])
    rhs[..., -1] = 1.0
    try:
        p = np.linalg.solve(a, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise DegenerateChainError("stationary system is singular") from exc
    if not np.all(np.isfinite(p)):
        raise DegenerateChainError("stationary system is singular")
    if np.any(p < -1e-10):
        raise DegenerateChainError(
            f"stationary solve returned negative occupation {p.min():.3e}; "
            "the chain is (nearly) reducible"
        )
    p = np.clip(p, 0.0, None)
    return p / p.sum(axis=-1, keepdims=True)


def steady_state(m):
    """Stationary occupation vector of generator ``m``."""
    _check_unique_stationary(m.entries)
    return OccupationVector(stationary_entries(m.entries), m.labels)


# Five-stage, fourth-order, L-stable and stiffly accurate SDIRK (Hairer and
# Wanner), with an embedded third-order solution for step control.
_SDIRK_GAMMA = 0.25
_SDIRK_A = (
    (),
    (1.0 / 2.0,),
    (17.0 / 50.0, -1.0 / 25.0),
    (371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0),
    (25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0),
)
_SDIRK_B = np.array([25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25])
_SDIRK_B_LOW = np.array([59.0 / 48.0, -17.0 / 96.0, 225.0 / 32.0, -85.0 / 12.0, 0.0])
_SDIRK_E = _SDIRK_B - _SDIRK_B_LOW


def resolvent(rates, c):
    """Entrywise-accurate ``(I - c M)^-1`` for generators given by their
    off-diagonal ``rates`` (j -> i, shape ``(..., n, n)``) and ``c >= 0``.

    ``I - c M`` is an M-matrix whose column sums are exactly one.  The
    elimination below never forms its diagonal: each pivot is rebuilt from
    the running column sums and the off-diagonal magnitudes, as in the
    Grassmann-Taksar-Heyman algorithm, so there is no cancellation and
    small rates survive next to large ones.  The inverse is non-negative
    and both triangular solves only add non-negative terms.
    """
    rates = np.asarray(rates, dtype=float)
    n = rates.shape[-1]
    c = np.asarray(c, dtype=float)[..., None, None]
    a = -c * rates  # off-diagonal part, <= 0
    diag = np.arange(n)
    a[..., diag, diag] = 0.0
    batch = a.shape[:-2]
    slack = np.ones(batch + (n,))
    lower = np.zeros(batch + (n, n))
    upper = np.zeros(batch + (n, n))
    for k in range(n):
        rest = slice(k + 1, n)
        pivot = slack[..., k] - a[..., rest, k].sum(axis=-1)
        upper[..., k, k] = pivot
        upper[..., k, rest] = a[..., k, rest]
        mult = a[..., rest, k] / pivot[..., None]  # <= 0
        lower[..., rest, k] = mult
        # the trailing block and its column sums only gain same-signed terms
        a[..., rest, rest] -= mult[..., :, None] * a[..., k, None, rest]
        a[..., diag[rest], diag[rest]] = 0.0
        slack[..., rest] -= a[..., k, rest] / pivot[..., None] * slack[..., k, None]
    inv_lower = np.zeros(batch + (n, n))
    inv_lower[..., diag, diag] = 1.0
    for i in range(1, n):
        inv_lower[..., i, :i] = -np.einsum("...j,...jk->...k", lower[..., i, :i], inv_lower[..., :i, :i])
    w = np.zeros(batch + (n, n))
    for i in range(n - 1, -1, -1):
        acc = inv_lower[..., i, :] - np.einsum("...j,...jk->...k", upper[..., i, i + 1:], w[..., i + 1:, :])
        w[..., i, :] = acc / upper[..., i, i, None]
    return w


def _sdirk_step(w, y, h):
    """One step in stage-value form, Y_i = W Z_i with W = (I - h gamma M)^-1.

    The generator itself is never applied to a state, so the stationary
    vector is an exact fixed point of the step for any h.  Works on a
    stack: ``w`` is ``(B, n, n)``, ``y`` is ``(B, n)``, ``h`` is ``(B,)``.
    """
    hg = (h * _SDIRK_GAMMA)[:, None]
    k = np.empty((len(_SDIRK_A),) + y.shape)
    stage = y
    for i, row in enumerate(_SDIRK_A):
        z = y
        for j, a in enumerate(row):
            z = z + (h * a)[:, None] * k[j]
        stage = np.einsum("bij,bj->bi", w, z)
        k[i] = (stage - z) / hg
    # stiffly accurate: the last stage is the step result
    return stage, h[:, None] * np.einsum("s,sbn->bn", _SDIRK_E, k)


def integrate_to(entries, p0, t_end, rtol=1e-10, atol=1e-13, max_steps=200000, h0=None):
    """Advance a stack of systems dp/dt = M p to their own end times.

    ``entries`` is ``(B, n, n)``, ``p0`` is ``(B, n)`` and ``t_end`` is
    ``(B,)``.  Each system keeps its own adaptive step size.  Returns the
    final states and the step sizes each system would try next.
    """
    m = np.asarray(entries, dtype=float)
    n = m.shape[-1]
    rates = m.copy()
    rates[:, np.arange(n), np.arange(n)] = 0.0
    y = np.array(p0, dtype=float)
    t_end = np.asarray(t_end, dtype=float)
    norm_m = rates.sum(axis=1).max(axis=-1)
    quiet = norm_m == 0.0
    h = np.where(quiet, 1.0, 1e-3 / np.where(quiet, 1.0, norm_m)) if h0 is None else np.array(h0, dtype=float)
    t = np.where(quiet, t_end, 0.0)
    steps = 0
    while True:
        remaining = t_end - t
        t = np.where(remaining <= 1e-13 * t_end, t_end, t)  # rounding leftovers
        active = t < t_end
        if not active.any():
            return y, h
        idx = np.flatnonzero(active)
        if steps >= max_steps:
            b = idx[0]
            raise IntegrationError(f"too many steps (system {b})", t=float(t[b]), h=float(h[b]), steps=steps)
        h_try = np.minimum(h[idx], t_end[idx] - t[idx])
        tiny = h_try <= 1e-15 * np.maximum(t[idx], 1.0 / norm_m[idx])
        if tiny.any():
            b = idx[np.flatnonzero(tiny)[0]]
            raise IntegrationError(f"step size underflow (system {b})", t=float(t[b]), h=float(h[b]), steps=steps)
        w = resolvent(rates[idx], h_try * _SDIRK_GAMMA)
        y_old = y[idx]
        y_new, err = _sdirk_step(w, y_old, h_try)
        scale = atol + rtol * np.maximum(np.abs(y_old), np.abs(y_new))
        err_norm = np.sqrt(np.mean((err / scale) ** 2, axis=-1))
        steps += 1
        ok = err_norm <= 1.0
        with np.errstate(divide="ignore"):
            factor = 0.9 * err_norm ** -0.25
        grow = np.where(err_norm == 0.0, 5.0, np.clip(factor, 0.2, 5.0))
        shrink = np.maximum(0.2, factor)
        # a step shortened to land on an end time says nothing about h
        clipped = h_try < h[idx]
        h_next = np.where(ok, np.where(clipped, np.maximum(h[idx], h_try * grow), h_try * grow),
                          h_try * shrink)
        t_new = np.where(t[idx] + h_try >= t_end[idx], t_end[idx], t[idx] + h_try)
        t[idx] = np.where(ok, t_new, t[idx])
        y[idx] = np.where(ok[:, None], y_new, y_old)
        h[idx] = h_next


def integrate(entries, p0, times, rtol=1e-10, atol=1e-13, max_steps=200000):
    """Integrate dp/dt = M p from t = 0 through each time in ``times``.

    Adaptive fourth-order SDIRK with an embedded third-order error
    estimate.  Stage systems ``I - h*gamma*M`` are inverted with a
    subtraction-free elimination (``resolvent``), which keeps total
    probability and the relative size of small occupations accurate even
    when the rates span many decades.  Returns an array of shape
    ``(len(times), n)``; nothing is clipped.
    """
    m = np.asarray(entries, dtype=float)
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or (times.size and times[0] < 0):
        raise DomainError("output times must be non-negative and sorted")
    y = np.array(p0, dtype=float)[None, :]
    out = np.empty((times.size, m.shape[0]))
    t = 0.0
    h = None
    for i, t_out in enumerate(times):
        if t_out > t:
            y, h = integrate_to(m[None], y, [t_out - t], rtol, atol, max_steps, h0=h)
            t = t_out
        out[i] = y[0]
    return out


def evolve(m, p0, t, **tolerances):
    """Occupation vector after evolving ``p0`` under ``m`` for time ``t`` (1/GHz)."""
    p = np.asarray(getattr(p0, "p", p0), dtype=float)
    if p.shape != (m.dimension,):
        raise DomainError("initial vector does not match the generator dimension")
    if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
        raise DomainError("initial vector must lie on the probability simplex")
    if t == 0:
        return OccupationVector(p.copy(), m.labels)
    return OccupationVector(integrate(m.entries, p, [t], **tolerances)[0], m.labels)


def left_population_array(p, model):
    """Left-well readout for occupation arrays of shape (..., n)."""
    p = np.asarray(p, dtype=float)
    if model is ModelKind.FOUR_LEVEL:
        return p[..., 1] + p[..., 2] + 0.5 * p[..., 3]
    return p[..., 1] + p[..., 3] + p[..., 5]


def left_population(p):
    """Probability of reading the qubit in the left well.

    In the four-level scheme the delocalised |N> is counted half-half.
    """
    if len(p) == 4:
        return float(left_population_array(p.p, ModelKind.FOUR_LEVEL))
    if len(p) == 6:
        return float(left_population_array(p.p, ModelKind.SIX_LEVEL))
    raise DomainError("occupation vector must have 4 or 6 levels")
