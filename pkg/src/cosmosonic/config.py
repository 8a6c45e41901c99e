"""Render configuration: one TOML file, every mapping endpoint overridable.

Unspecified keys keep their defaults; unknown keys are errors. Endpoint
pairs are written ``[value_at_0, value_at_1]``. Example::

    duration = 1500.0
    sample_rate = 44100

    [galaxies]
    f0 = [7000.0, 400.0]

    [drones.mass]
    seed = 11
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field, fields, replace

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .catalog_io import DEFAULT_SCHEMA
from .drones import DroneSpec
from .errors import ConfigError
from .galaxies import GalaxyMapping
from .outliers import BELL, GLITCH, PERCUSSION, RUMBLE_FAST, RUMBLE_SLOW, IconSettings
from .preprocess import Thresholds

LAYERS = ("galaxies", "statistics", "outliers")
VOICE_NAMES = ("mass", "brightness", "sfr")
ICON_KINDS = (PERCUSSION, BELL, RUMBLE_FAST, RUMBLE_SLOW, GLITCH)
REPORT_DIR_ENV = "COSMOSONIC_REPORT_DIR"


@dataclass(frozen=True)
class CatalogSettings:
    delimiter: str = ","
    columns: dict = field(default_factory=lambda: dict(DEFAULT_SCHEMA))


@dataclass(frozen=True)
class StatsSettings:
    window: float = 0.05
    grid_size: int = 256
    histogram_bins: int = 20


@dataclass(frozen=True)
class ReverbSettings:
    """Fixed Schroeder reverb fed by per-layer sends (dB)."""

    enabled: bool = False
    sends: dict = field(default_factory=lambda: {"galaxies": -20.0, "statistics": -6.0, "outliers": -20.0})
    feedback: float = 0.84
    damping: float = 0.2
    wet_db: float = -6.0


@dataclass(frozen=True)
class Paths:
    catalog: str | None = None
    audio: str | None = None
    report_dir: str | None = None


@dataclass(frozen=True)
class RenderConfig:
    duration: float = 1500.0
    sample_rate: int = 44100
    bit_depth: int = 24
    master_gain_db: float = 0.0
    n_jobs: int = 1
    # The event swarm sums well above full scale at 0 dB.
    gains: dict = field(default_factory=lambda: {"galaxies": -9.0, "statistics": 0.0, "outliers": 0.0})
    catalog: CatalogSettings = field(default_factory=CatalogSettings)
    thresholds: Thresholds = field(default_factory=Thresholds)
    stats: StatsSettings = field(default_factory=StatsSettings)
    galaxies: GalaxyMapping = field(default_factory=GalaxyMapping)
    drones: DroneSpec = field(default_factory=DroneSpec)
    outliers: IconSettings = field(default_factory=IconSettings)
    reverb: ReverbSettings = field(default_factory=ReverbSettings)
    paths: Paths = field(default_factory=Paths)

    def __post_init__(self):
        # The timeline length lives at the top level; keep the mapping in sync.
        if self.galaxies.duration != self.duration:
            object.__setattr__(self, "galaxies", replace(self.galaxies, duration=self.duration))

    def with_overrides(self, **kwargs):
        cfg = replace(self, **kwargs)
        validate(cfg)
        return cfg


# -- building from a mapping --------------------------------------------------


def _coerce(key, default, value):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true/false, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(default, bool) and key.split(".")[-1] in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if isinstance(default, (int, float)):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(key, f"expected a list, got {value!r}")
        if len(default) and len(value) != len(default) and key.split(".")[-1] not in _VARLEN_KEYS:
            raise ConfigError(key, f"expected {len(default)} values, got {len(value)}")
        return tuple(_coerce(key, 0.0, v) for v in value)
    if isinstance(default, str) or default is None:
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    raise ConfigError(key, "unsupported value")


_INT_KEYS = {"sample_rate", "bit_depth", "n_jobs", "grid_size", "histogram_bins", "block", "seed", "glitch_bursts"}
_VARLEN_KEYS = {"bell_ratios", "bell_amplitudes", "bell_releases"}


def _section(obj, data, prefix, skip=()):
    """Return ``obj`` with the scalar fields in ``data`` replaced."""
    if not isinstance(data, dict):
        raise ConfigError(prefix, "expected a table")
    names = {f.name for f in fields(obj)} - set(skip)
    changes = {}
    for key, value in data.items():
        full = f"{prefix}.{key}" if prefix else key
        if key not in names:
            raise ConfigError(full, "unknown key")
        changes[key] = _coerce(full, getattr(obj, key), value)
    return replace(obj, **changes)


def _keyed_floats(current, data, prefix, allowed):
    if not isinstance(data, dict):
        raise ConfigError(prefix, "expected a table")
    out = dict(current)
    for key, value in data.items():
        if key not in allowed:
            raise ConfigError(f"{prefix}.{key}", "unknown key")
        out[key] = _coerce(f"{prefix}.{key}", 0.0, value)
    return out


def config_from_dict(data):
    data = dict(data)
    cfg = RenderConfig()
    top = {}
    for key in list(data):
        if key in ("duration", "sample_rate", "bit_depth", "master_gain_db", "n_jobs"):
            top[key] = _coerce(key, getattr(cfg, key), data.pop(key))
    changes = dict(top)

    if "gains" in data:
        changes["gains"] = _keyed_floats(cfg.gains, data.pop("gains"), "gains", LAYERS)
    if "catalog" in data:
        section = dict(data.pop("catalog"))
        columns = section.pop("columns", None)
        cat = _section(cfg.catalog, section, "catalog", skip=("columns",))
        if columns is not None:
            if not isinstance(columns, dict):
                raise ConfigError("catalog.columns", "expected a table")
            merged = dict(cat.columns)
            for k, v in columns.items():
                if k not in DEFAULT_SCHEMA:
                    raise ConfigError(f"catalog.columns.{k}", "unknown key")
                merged[k] = _coerce(f"catalog.columns.{k}", "", v)
            cat = replace(cat, columns=merged)
        changes["catalog"] = cat
    if "thresholds" in data:
        changes["thresholds"] = _section(cfg.thresholds, data.pop("thresholds"), "thresholds")
    if "stats" in data:
        changes["stats"] = _section(cfg.stats, data.pop("stats"), "stats")
    if "galaxies" in data:
        changes["galaxies"] = _section(cfg.galaxies, data.pop("galaxies"), "galaxies", skip=("duration",))
    if "drones" in data:
        section = dict(data.pop("drones"))
        voices = list(cfg.drones.voices)
        for i, name in enumerate(VOICE_NAMES):
            if name in section:
                voices[i] = _section(voices[i], section.pop(name), f"drones.{name}", skip=("feature",))
        spec = _section(cfg.drones, section, "drones", skip=("voices",))
        changes["drones"] = replace(spec, voices=tuple(voices))
    if "outliers" in data:
        section = dict(data.pop("outliers"))
        gains = section.pop("gain_db", None)
        icons = _section(cfg.outliers, section, "outliers", skip=("gain_db",))
        if gains is not None:
            icons = replace(icons, gain_db=_keyed_floats(icons.gain_db, gains, "outliers.gain_db", ICON_KINDS))
        changes["outliers"] = icons
    if "reverb" in data:
        section = dict(data.pop("reverb"))
        sends = section.pop("sends", None)
        rev = _section(cfg.reverb, section, "reverb", skip=("sends",))
        if sends is not None:
            rev = replace(rev, sends=_keyed_floats(rev.sends, sends, "reverb.sends", LAYERS))
        changes["reverb"] = rev
    if "paths" in data:
        changes["paths"] = _section(cfg.paths, data.pop("paths"), "paths")
    if data:
        raise ConfigError(sorted(data)[0], "unknown key")

    cfg = replace(cfg, **changes)
    validate(cfg)
    return cfg


def load_config(path=None):
    """Read a TOML config; ``None`` or an empty file gives all defaults.

    The report directory may also come from ``COSMOSONIC_REPORT_DIR``.
    """
    data = {}
    if path is not None:
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as err:
                raise ConfigError(str(path), f"not valid TOML: {err}") from err
    cfg = config_from_dict(data)
    env_dir = os.environ.get(REPORT_DIR_ENV)
    if env_dir and cfg.paths.report_dir is None:
        cfg = replace(cfg, paths=replace(cfg.paths, report_dir=env_dir))
    return cfg


# -- validation ---------------------------------------------------------------


def _require(ok, key, message):
    if not ok:
        raise ConfigError(key, message)


def _finite(x):
    return isinstance(x, (int, float)) and math.isfinite(x)


def _gain(x):
    # -inf mutes a layer.
    return isinstance(x, (int, float)) and not math.isnan(x) and x != math.inf


def validate(cfg):
    _require(_finite(cfg.duration) and cfg.duration > 0, "duration", "must be > 0")
    _require(cfg.sample_rate > 0, "sample_rate", "must be > 0")
    _require(cfg.bit_depth in (16, 24, 32), "bit_depth", "must be 16, 24 or 32")
    _require(_finite(cfg.master_gain_db), "master_gain_db", "must be finite")
    _require(cfg.n_jobs >= 1, "n_jobs", "must be >= 1")
    for name, g in cfg.gains.items():
        _require(_gain(g), f"gains.{name}", "must be a finite dB value or -inf")

    _require(len(cfg.catalog.delimiter) == 1, "catalog.delimiter", "must be a single character")

    t = cfg.thresholds
    for key in ("mass", "sfr"):
        lo, hi = getattr(t, key)
        _require(_finite(lo) and _finite(hi) and lo < hi, f"thresholds.{key}", "need lower < upper")
    _require(t.sfr[0] >= 0, "thresholds.sfr", "must be >= 0")
    _require(0 < t.universe_age, "thresholds.universe_age", "must be > 0")

    s = cfg.stats
    _require(0 < s.window <= 1, "stats.window", "must lie in (0, 1]")
    _require(s.grid_size >= 2, "stats.grid_size", "must be >= 2")
    _require(s.histogram_bins >= 1, "stats.histogram_bins", "must be >= 1")

    g = cfg.galaxies
    nyquist = cfg.sample_rate / 2.0
    for key in ("f0", "fm", "deviation", "release"):
        lo, hi = getattr(g, key)
        _require(_finite(lo) and _finite(hi) and lo > 0 and hi > 0, f"galaxies.{key}", "endpoints must be > 0")
    _require(all(_finite(v) for v in g.level_db), "galaxies.level_db", "endpoints must be finite")
    _require(2.0 * max(g.f0) < nyquist, "galaxies.f0", f"harmonic 2*f0 must stay below {nyquist} Hz")

    d = cfg.drones
    lo, hi = d.invq
    _require(lo > 0 and hi > 0, "drones.invq", "endpoints must be > 0")
    _require(_gain(d.gain_db), "drones.gain_db", "must be a finite dB value or -inf")
    _require(d.block >= 1, "drones.block", "must be >= 1")
    _require(0 <= d.min_frequency < nyquist, "drones.min_frequency", "must lie in [0, Nyquist)")
    for name, v in zip(VOICE_NAMES, d.voices):
        _require(v.multiplier > 0, f"drones.{name}.multiplier", "must be > 0")
        _require(v.multiplier < nyquist, f"drones.{name}.multiplier", "must stay below Nyquist")
        _require(0 <= v.position <= 1, f"drones.{name}.position", "must lie in [0, 1]")
        _require(_gain(v.gain_db), f"drones.{name}.gain_db", "must be a finite dB value or -inf")

    o = cfg.outliers
    _require(len(o.bell_ratios) == len(o.bell_amplitudes) == len(o.bell_releases), "outliers.bell_ratios",
             "bell_ratios, bell_amplitudes and bell_releases must have equal length")
    for key in ("percussion_release", "percussion_transient_release", "rumble_hold", "glitch_duration"):
        _require(getattr(o, key) > 0, f"outliers.{key}", "must be > 0")
    _require(0 < o.percussion_drop <= 1, "outliers.percussion_drop", "must lie in (0, 1]")
    _require(all(r > 0 for r in o.bell_releases), "outliers.bell_releases", "must be > 0")
    _require(all(0 < f < nyquist for f in o.rumble_band), "outliers.rumble_band", "must lie below Nyquist")
    _require(o.rumble_invq > 0 and o.glitch_invq > 0, "outliers.rumble_invq", "must be > 0")
    _require(all(x > 0 for x in o.rumble_drive), "outliers.rumble_drive", "must be > 0")
    _require(0 < o.glitch_burst_ms[0] <= o.glitch_burst_ms[1], "outliers.glitch_burst_ms", "need 0 < min <= max")

    r = cfg.reverb
    _require(0 <= r.feedback < 1, "reverb.feedback", "must lie in [0, 1)")
    _require(0 <= r.damping < 1, "reverb.damping", "must lie in [0, 1)")
    for name, v in r.sends.items():
        _require(_gain(v), f"reverb.sends.{name}", "must be a finite dB value or -inf")
    return cfg


def seeded(cfg, seed):
    """Derive every noise seed from one integer (voices seed..seed+2, icons seed+3)."""
    voices = tuple(replace(v, seed=seed + i) for i, v in enumerate(cfg.drones.voices))
    return replace(
        cfg,
        drones=replace(cfg.drones, voices=voices),
        outliers=replace(cfg.outliers, seed=seed + len(voices)),
    )


def as_dict(cfg):
    return dataclasses.asdict(cfg)
