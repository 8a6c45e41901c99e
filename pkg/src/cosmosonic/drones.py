"""Background drone: three filtered-noise voices following the trend curves."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dsp import (
    CONTROL_BLOCK,
    SAMPLE_RATE,
    AudioBuffer,
    NoiseStream,
    ResonantBandpass,
    db_to_linear,
    lin_map,
    pan,
)
from .errors import ContractError
from .validation import check_positive, n_samples


@dataclass(frozen=True)
class DroneVoice:
    feature: str  # attribute of FeatureStats
    multiplier: float
    position: float
    seed: int
    gain_db: float = 0.0


def _default_voices():
    # Summation order: mass, brightness, sfr.
    return (
        DroneVoice("avg_mass_n", 200.0, 0.5, 1),
        DroneVoice("avg_brightness_n", 2000.0, 0.0, 2),
        DroneVoice("avg_sfr12_n", 1000.0, 1.0, 3),
    )


@dataclass(frozen=True)
class DroneSpec:
    voices: tuple = field(default_factory=_default_voices)
    invq: tuple = (0.0001, 0.2)
    gain_db: float = -18.0
    block: int = CONTROL_BLOCK
    # Scale each block by sqrt(sr / (pi * bandwidth)) so loudness does not
    # follow Q; the filter itself keeps 0 dB peak gain.
    normalize_power: bool = True
    chunk_seconds: float = 10.0
    # Curves are floored here; a sparse edge window can average to 0.
    # Set to 0 to make a non-positive frequency an error instead.
    min_frequency: float = 20.0

    def __post_init__(self):
        if len(self.voices) != 3:
            raise ContractError("a drone has exactly three voices")
        for v in self.voices:
            check_positive(v.multiplier, "multiplier")


def drone_frequency_curves(stats, spec=DroneSpec(), duration=1500.0):
    """Return ``(t_seconds, [f_mass, f_brightness, f_sfr])`` on the stats grid."""
    t = lin_map(np.asarray(stats.grid), 0.0, duration)
    curves = []
    for v in spec.voices:
        f = v.multiplier * np.asarray(getattr(stats, v.feature), dtype=float)
        f = np.maximum(f, spec.min_frequency)
        if np.any(f <= 0):
            raise ContractError(f"drone frequency for {v.feature} must be > 0")
        curves.append(f)
    return t, curves


def q_trajectory(duration, t=None, invq=(0.0001, 0.2)):
    """1/Q rising linearly from ``invq[0]`` at 0 s to ``invq[1]`` at ``duration``.

    With ``t`` given, evaluates at those times (held constant past the end);
    otherwise returns the callable.
    """
    check_positive(duration, "duration")
    lo, hi = invq

    def curve(times):
        frac = np.clip(np.asarray(times, dtype=float) / duration, 0.0, 1.0)
        return lo + frac * (hi - lo)

    return curve if t is None else curve(t)


def drone_curve_table(stats, spec=DroneSpec(), duration=1500.0):
    """Rows ``t_seconds, f1, f2, f3, invq``; f1 mass, f2 brightness, f3 sfr."""
    t, (f1, f2, f3) = drone_frequency_curves(stats, spec, duration)
    invq = q_trajectory(duration, t, spec.invq)
    return list(zip(t.tolist(), f1.tolist(), f2.tolist(), f3.tolist(), invq.tolist()))


def _voice_chunks(voice, t_grid, f_grid, spec, duration, n, sr):
    filt = ResonantBandpass(sr, spec.block)
    noise = NoiseStream(voice.seed)
    chunk = max(spec.block, int(spec.chunk_seconds * sr) // spec.block * spec.block)
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        block_t = (start + np.arange(0, stop - start, spec.block)) / sr
        center = np.interp(block_t, t_grid, f_grid)
        invq = q_trajectory(duration, block_t, spec.invq)
        y = filt.process(noise.read(stop - start), center, invq)
        if spec.normalize_power:
            g = np.sqrt(sr / (math.pi * center * invq))
            y *= np.repeat(g, spec.block)[: stop - start]
        yield start, stop, y


def render_voice(voice, t_grid, f_grid, spec=DroneSpec(), duration=1500.0, n=None, sr=SAMPLE_RATE):
    """Mono filtered noise for one voice, ``n`` samples long (unscaled)."""
    n = n_samples(duration, sr) if n is None else int(n)
    out = np.empty(n)
    for start, stop, y in _voice_chunks(voice, t_grid, f_grid, spec, duration, n, sr):
        out[start:stop] = y
    return out


def render_statistics_layer(stats, spec=DroneSpec(), duration=1500.0, sr=SAMPLE_RATE, length=None):
    """Sum of the three panned voices.

    The curves span ``duration`` seconds; ``length`` (samples) may extend the
    layer, holding the final frequencies and 1/Q.
    """
    n = n_samples(duration, sr) if length is None else int(length)
    t, curves = drone_frequency_curves(stats, spec, duration)
    master = db_to_linear(spec.gain_db)
    acc = AudioBuffer.zeros(n, sr)
    for voice, f in zip(spec.voices, curves):
        gain = master * db_to_linear(voice.gain_db)
        if gain == 0.0:
            continue
        for start, stop, y in _voice_chunks(voice, t, f, spec, duration, n, sr):
            y *= gain
            left, right = pan(y, voice.position)
            acc.left[start:stop] += left
            acc.right[start:stop] += right
    return acc
