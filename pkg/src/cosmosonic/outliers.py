"""Auditory icons for galaxies that crossed a clip threshold.

The icon recipes are sound-design choices; every constant is a field of
:class:`IconSettings` so it can be overridden from the render config.
"""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dsp import (
    SAMPLE_RATE,
    AudioBuffer,
    EnvelopeSpec,
    NoiseStream,
    db_to_linear,
    exp_envelope,
    exp_map,
    lin_map,
    mix_into,
    onset_index,
    pan,
    resonant_bandpass,
)
from .errors import ContractError
from .galaxies import GalaxyMapping
from .preprocess import OutlierFlag
from .validation import n_samples

PERCUSSION = "percussion"
BELL = "bell"
RUMBLE_FAST = "rumble_fast"
RUMBLE_SLOW = "rumble_slow"
GLITCH = "glitch"


@dataclass(frozen=True)
class IconSpec:
    kind: str
    flag: OutlierFlag
    modulated: frozenset
    description: str


ICONS = {
    OutlierFlag.MASS_HIGH: IconSpec(
        PERCUSSION, OutlierFlag.MASS_HIGH, frozenset({"position", "level"}), "low-pitched percussive sound"
    ),
    OutlierFlag.MASS_LOW: IconSpec(BELL, OutlierFlag.MASS_LOW, frozenset({"position", "level"}), "high-pitched bells"),
    OutlierFlag.SFR_HIGH: IconSpec(
        RUMBLE_FAST,
        OutlierFlag.SFR_HIGH,
        frozenset({"pitch", "level", "position", "release", "distortion"}),
        "fast pulsing rumble",
    ),
    OutlierFlag.SFR_LOW: IconSpec(
        RUMBLE_SLOW,
        OutlierFlag.SFR_LOW,
        frozenset({"pitch", "level", "position", "release", "distortion"}),
        "slow pulsing rumble",
    ),
    OutlierFlag.BRIGHT: IconSpec(GLITCH, OutlierFlag.BRIGHT, frozenset({"pitch", "position"}), "sound glitches"),
}


def icon_for(flag):
    flag = OutlierFlag(flag)
    if flag is OutlierFlag.NONE:
        raise ContractError("galaxy is not an outlier")
    return ICONS[flag]


@dataclass(frozen=True)
class IconSettings:
    seed: int = 7
    # dB added to the level binding; rarer kinds are louder.
    gain_db: dict = field(
        default_factory=lambda: {PERCUSSION: 6.0, BELL: 3.0, RUMBLE_FAST: -6.0, RUMBLE_SLOW: -6.0}
    )
    percussion_freq: float = 55.0
    percussion_drop: float = 0.5
    percussion_drop_time: float = 0.5
    percussion_release: float = 4.0
    percussion_transient_level: float = 0.5
    percussion_transient_release: float = 0.03
    bell_fundamental: float = 2500.0
    bell_ratios: tuple = (1.0, 2.76, 5.40, 8.93)
    bell_amplitudes: tuple = (1.0, 0.67, 0.45, 0.3)
    bell_releases: tuple = (3.0, 2.0, 1.2, 0.7)
    rumble_band: tuple = (400.0, 80.0)
    rumble_invq: float = 1.0 / 6.0
    rumble_fast_rate: float = 8.0
    rumble_slow_rate: float = 1.5
    rumble_hold: float = 2.5
    rumble_drive: tuple = (1.0, 8.0)
    glitch_duration: float = 0.15
    glitch_tail: float = 0.02
    glitch_bursts: int = 10
    glitch_burst_ms: tuple = (1.0, 5.0)
    glitch_invq: float = 0.25
    glitch_level_db: float = -22.0


def icon_seed(base, galaxy_id):
    """Per-galaxy seed; depends on the id only, not on any feature value."""
    crc = zlib.crc32(str(galaxy_id).encode("utf-8"))
    return int(np.random.SeedSequence([int(base), crc]).generate_state(1)[0])


def _unit_peak(x):
    peak = np.max(np.abs(x)) if x.size else 0.0
    return x / peak if peak > 0 else x


def _percussion(g, s, sr):
    n = n_samples(s.percussion_release, sr) + 1
    t = np.arange(n) / sr
    f0, T, k = s.percussion_freq, s.percussion_drop_time, s.percussion_drop
    # Frequency glides f0 -> k*f0 exponentially over T, then holds.
    rate = -math.log(k) / T
    glide = np.minimum(t, T)
    phase = f0 * (1.0 - np.exp(-rate * glide)) / rate + f0 * k * np.maximum(t - T, 0.0)
    body = np.sin(2.0 * np.pi * phase) * exp_envelope(EnvelopeSpec(s.percussion_release), n, sr)
    click = NoiseStream(icon_seed(s.seed, g.id)).read(n) * exp_envelope(
        EnvelopeSpec(s.percussion_transient_release), n, sr
    )
    return body + s.percussion_transient_level * click


def _bell(g, s, sr):
    n = n_samples(max(s.bell_releases), sr) + 1
    t = np.arange(n) / sr
    out = np.zeros(n)
    for ratio, amp, rel in zip(s.bell_ratios, s.bell_amplitudes, s.bell_releases):
        f = s.bell_fundamental * ratio
        if f >= 0.45 * sr:
            continue  # partial would alias
        out += amp * np.sin(2.0 * np.pi * f * t) * exp_envelope(EnvelopeSpec(rel), n, sr)
    return out


def _rumble(g, s, sr, fast, mapping):
    release = lin_map(g.mass_n, *mapping.release)
    n = n_samples(s.rumble_hold + release, sr) + 1
    t = np.arange(n) / sr
    center = exp_map(g.mass_n, *s.rumble_band)
    noise = NoiseStream(icon_seed(s.seed, g.id)).read(n)
    y = _unit_peak(resonant_bandpass(noise, center, s.rumble_invq, sr))
    drive = lin_map(g.sfr12_n, *s.rumble_drive)
    y = np.tanh(drive * y) / math.tanh(drive)
    rate = s.rumble_fast_rate if fast else s.rumble_slow_rate
    am = 0.5 * (1.0 - np.cos(2.0 * np.pi * rate * t))
    env = np.ones(n)
    tail = t > s.rumble_hold
    env[tail] = np.exp(-(t[tail] - s.rumble_hold) * math.log(1000.0) / release)
    return y * am * env


def _glitch(g, s, sr, mapping):
    n = n_samples(s.glitch_duration + s.glitch_tail, sr)
    rng = np.random.Generator(np.random.PCG64(icon_seed(s.seed, g.id)))
    gate = np.zeros(n)
    span = n_samples(s.glitch_duration, sr)
    for _ in range(s.glitch_bursts):
        width = n_samples(rng.uniform(*s.glitch_burst_ms) / 1000.0, sr)
        start = int(rng.integers(0, max(1, span - width)))
        gate[start : start + width] = 1.0
    noise = NoiseStream(icon_seed(s.seed + 1, g.id)).read(n)
    center = min(exp_map(g.mass_n, *mapping.f0), 0.45 * sr)
    return resonant_bandpass(noise * gate, center, s.glitch_invq, sr)


def render_icon(spec, g, settings=IconSettings(), mapping=GalaxyMapping(), sr=SAMPLE_RATE):
    """Synthesize one icon for galaxy ``g``; returns ``(left, right)``."""
    if g.flag is not spec.flag:
        raise ContractError(f"galaxy flag {g.flag} does not match icon {spec.kind}")
    kind = spec.kind
    if kind == PERCUSSION:
        mono = _percussion(g, settings, sr)
    elif kind == BELL:
        mono = _bell(g, settings, sr)
    elif kind in (RUMBLE_FAST, RUMBLE_SLOW):
        mono = _rumble(g, settings, sr, kind == RUMBLE_FAST, mapping)
    elif kind == GLITCH:
        mono = _glitch(g, settings, sr, mapping)
    else:
        raise ContractError(f"unknown icon kind {kind!r}")
    if "level" in spec.modulated:
        level_db = lin_map(g.brightness_n, *mapping.level_db)
    else:
        level_db = settings.glitch_level_db
    level_db += settings.gain_db.get(kind, 0.0)
    return pan(_unit_peak(mono) * db_to_linear(level_db), g.ra_n)


def _render_one(args):
    g, settings, mapping, sr = args
    return render_icon(icon_for(g.flag), g, settings, mapping, sr)


def render_icons(galaxies, settings=IconSettings(), mapping=GalaxyMapping(), sr=SAMPLE_RATE, n_jobs=1):
    """``(onset, (left, right))`` for every flagged galaxy, in input order."""
    flagged = [g for g in galaxies if g.is_outlier]
    jobs = [(g, settings, mapping, sr) for g in flagged]
    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            segments = list(pool.map(_render_one, jobs))
    else:
        segments = [_render_one(j) for j in jobs]
    return [(lin_map(g.tl_n, 0.0, mapping.duration), seg) for g, seg in zip(flagged, segments)]


def render_outlier_layer(galaxies, settings=IconSettings(), mapping=GalaxyMapping(), sr=SAMPLE_RATE, n_jobs=1):
    """Render an icon for every flagged galaxy and mix in input order."""
    icons = render_icons(galaxies, settings, mapping, sr, n_jobs)
    length = n_samples(mapping.duration, sr)
    for onset, seg in icons:
        length = max(length, onset_index(onset, sr) + len(seg[0]))
    acc = AudioBuffer.zeros(length, sr)
    for onset, seg in icons:
        acc = mix_into(acc, seg, onset)
    return acc


ICON_LOG_COLUMNS = ("id", "kind", "onset", "position")


def icon_log(galaxies, mapping=GalaxyMapping()):
    return [
        (g.id, icon_for(g.flag).kind, lin_map(g.tl_n, 0.0, mapping.duration), g.ra_n)
        for g in galaxies
        if g.is_outlier
    ]
