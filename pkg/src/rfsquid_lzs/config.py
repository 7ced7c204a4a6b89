"""Line-oriented ``key = value`` configuration.

Keys are dotted (``lz.dephasing_ghz = 2``); ``#`` starts a comment.  A
``preset`` key selects the parameter set that every other key defaults to:
``six_level`` (interference map, the default) or ``four_level`` (amplitude
slice through one resonance).
"""

import math
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from .errors import ConfigError
from .kinetics import KineticParams, ModelKind
from .levels import CrossingSpec, LevelDiagram
from .rates import EscapeParams, LZRateParams, ThermalParams, beta_from_temperature

OMEGA = 17.0
KHZ = 1e-6
HZ = 1e-9


def _anchor_text(pairs):
    return ", ".join(f"{f:.12g}:{e:.12g}" for f, e in pairs)


def _extend_left(pairs, flux):
    """Prepend an anchor at ``flux`` on the line of the first segment."""
    (f0, e0), (f1, e1) = pairs[0], pairs[1]
    return [(flux, e0 + (e1 - e0) / (f1 - f0) * (flux - f0))] + list(pairs)


# Resonance positions: set 1 from 8 photons upward, set 2 from 10.
SET1_PEAKS = [(3.0, 8 * OMEGA), (12.0, 9 * OMEGA), (23.0, 10 * OMEGA), (37.0, 11 * OMEGA)]
SET2_PEAKS = [(10.0, 10 * OMEGA), (22.0, 11 * OMEGA), (38.0, 12 * OMEGA)]

# Tilt between the well ground states, chosen so beta*eps10 stays O(1)
# across the default flux window at 20 mK.
DEFAULT_EPS10_SLOPE = 0.02

_COMMON = {
    "drive.omega_ghz": OMEGA,
    "lz.dephasing_ghz": 2.0,
    "lz.m_extra": 40,
    "kinetics.gamma_ghz": 2.0,
    "kinetics.relax_ghz": 2.0,
    "thermal.temperature_mk": 20.0,
    "thermal.beta_per_ghz": "auto",
    "escape.b": 1.4,
    "sweep.axis": "amplitude",
    "sweep.power_min_dbm": -10.0,
    "sweep.power_max_dbm": 0.0,
    "sweep.power_steps": 101,
    "sweep.a_ref_ghz": 20 * OMEGA,
    "steady.flux_mphi0": 3.0,
    "steady.amplitude_ghz": 0.0,
    "trace.t_max": 1.0e8,
    "trace.points": 41,
    "trace.t_min": 1.0e-2,
    "rates.x_min": 0.0,
    "rates.x_max": 30.0,
    "rates.x_steps": 61,
    "rates.epsilon_ghz": "auto",
    "spectrum.inductance_nh": 1.3,
    "spectrum.capacitance_ff": 35.0,
    "spectrum.critical_current_na": 610.0,
    "spectrum.flux_min": 0.49,
    "spectrum.flux_max": 0.51,
    "spectrum.flux_steps": 201,
    "spectrum.grid_points": 4096,
    "spectrum.level_count": 10,
    "spectrum.check_convergence": True,
    "output.dir": ".",
    "output.stem": "sweep",
    "output.format": "both",
    "threads": 0,
}

PRESETS = {
    "four_level": {
        **_COMMON,
        "model": "four",
        "lz.gap_ghz": 0.007,
        "kinetics.gamma01_ghz": 0.1 * KHZ,
        "kinetics.photon_m": 8,
        "thermal.base_ghz": 0.6 * KHZ,
        "escape.a_ghz": 5 * HZ,
        "escape.amplitude_unit_ghz": 100.0,
        "diagram.crossings": "",
        "diagram.epsilon10_slope": 0.0,
        "diagram.mirror": True,
        "sweep.flux_min_mphi0": 3.0,
        "sweep.flux_max_mphi0": 3.0,
        "sweep.flux_steps": 1,
        "sweep.amp_min_ghz": 0.0,
        "sweep.amp_max_ghz": 45 * OMEGA,
        "sweep.amp_steps": 500,
    },
    "six_level": {
        **_COMMON,
        "model": "six",
        "lz.gap_ghz": 0.007,
        # The only uphill inter-well rate reported; detailed balance would make
        # the contrast vanish at the symmetry point.
        "kinetics.gamma01_ghz": 0.1 * KHZ,
        "kinetics.photon_m": 8,
        "thermal.base_ghz": 0.5 * KHZ,
        "escape.a_ghz": 0.0,
        "escape.amplitude_unit_ghz": 1.0,
        "diagram.crossings": "d1, d2",
        "diagram.d1.gap_ghz": 0.007,
        "diagram.d1.anchors": _anchor_text(_extend_left(SET1_PEAKS, 0.0)),
        "diagram.d2.gap_ghz": 0.013,
        "diagram.d2.anchors": _anchor_text(_extend_left(SET2_PEAKS, 0.0)),
        "diagram.epsilon10_slope": DEFAULT_EPS10_SLOPE,
        "diagram.mirror": True,
        "sweep.flux_min_mphi0": 0.0,
        "sweep.flux_max_mphi0": 40.0,
        "sweep.flux_steps": 200,
        "sweep.amp_min_ghz": 0.0,
        "sweep.amp_max_ghz": 20 * OMEGA,
        "sweep.amp_steps": 200,
    },
}

_CROSSING_FIELDS = ("gap_ghz", "anchors")


def _to_bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _coerce(key, raw, template):
    """Convert ``raw`` (a string from a file) to the type of ``template``."""
    if isinstance(raw, str):
        raw = raw.strip()
    if raw == "auto" and (template == "auto" or key in _AUTO_KEYS):
        return "auto"
    try:
        if isinstance(template, bool):
            return _to_bool(raw)
        if isinstance(template, int) and not isinstance(template, bool):
            value = float(raw)
            if value != int(value):
                raise ValueError("expected an integer")
            return int(value)
        if isinstance(template, float) or template == "auto":
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError("expected a finite number")
            return value
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} ({exc})") from None
    return str(raw)


_AUTO_KEYS = {"kinetics.gamma01_ghz", "thermal.beta_per_ghz", "rates.epsilon_ghz"}


def parse_anchors(text):
    pairs = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        try:
            f, e = item.split(":")
            pairs.append((float(f), float(e)))
        except ValueError:
            raise ConfigError(f"bad anchor {item!r}; expected flux:epsilon") from None
    return pairs


def _labels(text):
    return [s.strip() for s in str(text).split(",") if s.strip()]


@dataclass
class SweepConfig:
    """Fully resolved configuration: every key has a value."""

    values: Dict[str, object] = field(default_factory=lambda: dict(PRESETS["six_level"]))
    preset: str = "six_level"

    def __getitem__(self, key):
        return self.values[key]

    # -- model objects ---------------------------------------------------

    @property
    def model_kind(self):
        return ModelKind.FOUR_LEVEL if self["model"] == "four" else ModelKind.SIX_LEVEL

    @property
    def omega(self):
        return float(self["drive.omega_ghz"])

    @property
    def beta(self):
        if self["thermal.beta_per_ghz"] == "auto":
            return beta_from_temperature(self["thermal.temperature_mk"] * 1e-3)
        return float(self["thermal.beta_per_ghz"])

    def kinetic_params(self):
        g01 = self["kinetics.gamma01_ghz"]
        return KineticParams(
            model=self.model_kind,
            gamma=self["kinetics.gamma_ghz"],
            relax=self["kinetics.relax_ghz"],
            thermal=ThermalParams(self["thermal.base_ghz"], self.beta),
            escape=EscapeParams(self["escape.a_ghz"], self["escape.b"],
                                self["escape.amplitude_unit_ghz"]),
            dephasing=self["lz.dephasing_ghz"],
            photon_m=self["kinetics.photon_m"],
            gamma01=None if g01 == "auto" else float(g01),
            m_extra=self["lz.m_extra"],
        )

    def lz_params(self):
        return LZRateParams(self["lz.gap_ghz"], self["lz.dephasing_ghz"], self.omega)

    def level_diagram(self):
        crossings = []
        for label in _labels(self["diagram.crossings"]):
            crossings.append(CrossingSpec(
                label=label,
                gap=self[f"diagram.{label}.gap_ghz"],
                anchors=tuple(parse_anchors(self[f"diagram.{label}.anchors"])),
            ))
        return LevelDiagram(tuple(crossings), self["diagram.epsilon10_slope"],
                            self["diagram.mirror"])

    def flux_axis(self):
        return np.linspace(self["sweep.flux_min_mphi0"], self["sweep.flux_max_mphi0"],
                           self["sweep.flux_steps"])

    def drive_axis(self):
        """(drive values as reported, amplitudes in GHz)."""
        if self["sweep.axis"] == "power":
            power = np.linspace(self["sweep.power_min_dbm"], self["sweep.power_max_dbm"],
                                self["sweep.power_steps"])
            return power, self["sweep.a_ref_ghz"] * 10.0 ** (power / 20.0)
        amps = np.linspace(self["sweep.amp_min_ghz"], self["sweep.amp_max_ghz"],
                           self["sweep.amp_steps"])
        return amps, amps

    # -- validation --------------------------------------------------------

    def validate(self):
        v = self.values
        if v["model"] not in ("four", "six"):
            raise ConfigError(f"model must be 'four' or 'six', got {v['model']!r}")
        if v["sweep.axis"] not in ("amplitude", "power"):
            raise ConfigError("sweep.axis must be 'amplitude' or 'power'")
        if v["output.format"] not in ("csv", "pgm", "both"):
            raise ConfigError("output.format must be csv, pgm or both")
        axes = [("sweep.flux_min_mphi0", "sweep.flux_max_mphi0", "sweep.flux_steps")]
        if v["sweep.axis"] == "power":
            axes.append(("sweep.power_min_dbm", "sweep.power_max_dbm", "sweep.power_steps"))
        else:
            axes.append(("sweep.amp_min_ghz", "sweep.amp_max_ghz", "sweep.amp_steps"))
        for lo, hi, steps in axes:
            if v[steps] < 1:
                raise ConfigError(f"{steps} must be at least 1")
            if v[steps] > 1 and not v[lo] < v[hi]:
                raise ConfigError(f"{lo} must be below {hi}")
            if v[steps] == 1 and v[lo] > v[hi]:
                raise ConfigError(f"{lo} must not exceed {hi}")
        if v["sweep.axis"] == "amplitude" and v["sweep.amp_min_ghz"] < 0:
            raise ConfigError("sweep.amp_min_ghz must be non-negative")
        if v["threads"] < 0:
            raise ConfigError("threads must be >= 0")
        if self.model_kind is ModelKind.SIX_LEVEL:
            labels = _labels(v["diagram.crossings"])
            if len(labels) < 2:
                raise ConfigError("six-level model needs two crossings in diagram.crossings")
            for label in labels:
                for name in _CROSSING_FIELDS:
                    if f"diagram.{label}.{name}" not in v:
                        raise ConfigError(f"crossing {label!r} is missing diagram.{label}.{name}")
        try:
            self.kinetic_params()
            self.lz_params()
            self.level_diagram()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self


def _known_key(key, labels):
    parts = key.split(".")
    if len(parts) == 3 and parts[0] == "diagram":
        return parts[1] in labels and parts[2] in _CROSSING_FIELDS
    return key in PRESETS["six_level"]


def config_from_mapping(entries):
    """Resolve raw string ``entries`` against their preset."""
    entries = dict(entries)
    preset = entries.pop("preset", "six_level").strip()
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    values = dict(PRESETS[preset])
    labels = _labels(entries.get("diagram.crossings", values["diagram.crossings"]))
    unknown = sorted(k for k in entries if not _known_key(k, labels))
    if unknown:
        raise ConfigError("unknown configuration keys: " + ", ".join(unknown))
    for key, raw in entries.items():
        template = values.get(key, "")
        if key.endswith(".gap_ghz"):
            template = 0.0
        values[key] = _coerce(key, raw, template)
    return SweepConfig(values, preset).validate()


def parse_config_text(text):
    entries = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value.strip()
    return config_from_mapping(entries)


def load_config(path):
    """Read a config file.  ``OSError`` propagates so callers can map it to
    an I/O failure."""
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def dump_config(config):
    """Serialise every resolved key; parsing the output gives an equal config."""
    lines = [f"preset = {config.preset}"]
    for key in sorted(config.values):
        value = config.values[key]
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
