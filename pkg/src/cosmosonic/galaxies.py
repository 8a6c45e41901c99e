"""One three-oscillator sound event per (non-outlier) galaxy."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .dsp import (
    SAMPLE_RATE,
    AudioBuffer,
    EnvelopeSpec,
    db_to_linear,
    exp_map,
    lin_map,
    mix_into,
    onset_index,
    pan,
    render_fm,
    render_sine,
)
from .validation import check_unit_interval, n_samples

# Oscillator ratios relative to O1 (harmonic O2, FM sub-harmonic O3).
PITCH_RATIOS = (1.0, 2.0, 0.75)
LEVEL_RATIOS = (1.0, 0.25, 0.6)
RELEASE_RATIOS = (1.0, 0.5, 0.6)


@dataclass(frozen=True)
class GalaxyMapping:
    """Endpoints of each feature-to-sound binding, given as ``(at 0, at 1)``.

    ``duration`` is the timeline length that lookback time maps onto.
    """

    duration: float = 1500.0
    level_db: tuple = (-34.0, -10.0)
    f0: tuple = (7000.0, 400.0)
    fm: tuple = (2.88, 252.0)
    deviation: tuple = (12.0, 1050.0)
    release: tuple = (0.3, 9.6)


@dataclass(frozen=True)
class EventParams:
    onset: float
    level_db: float
    position: float
    f0: float
    fm: float
    deviation: float
    release: float


@dataclass(frozen=True)
class Oscillator:
    pitch: float
    level: float
    release: float
    position: float
    fm: bool


@dataclass(frozen=True)
class OscillatorTriple:
    o1: Oscillator
    o2: Oscillator
    o3: Oscillator

    def __iter__(self):
        return iter((self.o1, self.o2, self.o3))


def event_params(g, mapping=GalaxyMapping()):
    for name in ("tl_n", "brightness_n", "ra_n", "mass_n", "sfr12_n"):
        check_unit_interval(getattr(g, name), name)
    return EventParams(
        onset=lin_map(g.tl_n, 0.0, mapping.duration),
        level_db=lin_map(g.brightness_n, *mapping.level_db),
        position=g.ra_n,
        f0=exp_map(g.mass_n, *mapping.f0),
        fm=exp_map(g.sfr12_n, *mapping.fm),
        deviation=exp_map(g.sfr12_n, *mapping.deviation),
        release=lin_map(g.sfr12_n, *mapping.release),
    )


def oscillator_triple(p):
    a = db_to_linear(p.level_db)
    oscs = [
        Oscillator(p.f0 * kp, a * kl, p.release * kr, p.position, fm=(i == 2))
        for i, (kp, kl, kr) in enumerate(zip(PITCH_RATIOS, LEVEL_RATIOS, RELEASE_RATIOS))
    ]
    return OscillatorTriple(*oscs)


def event_length(p, sr):
    """Samples needed for the longest oscillator to decay by 60 dB."""
    return int(math.ceil(p.release * sr)) + 1


def render_event(triple, p, sr=SAMPLE_RATE):
    """Mono sum of the three oscillators, panned; returns ``(left, right)``."""
    n = event_length(p, sr)
    dur = n / sr
    o1, o2, o3 = triple
    mono = render_sine(o1.pitch, o1.level, EnvelopeSpec(o1.release), dur, sr)
    mono += render_sine(o2.pitch, o2.level, EnvelopeSpec(o2.release), dur, sr)
    mono += render_fm(o3.pitch, p.fm, p.deviation, o3.level, EnvelopeSpec(o3.release), dur, sr)
    return pan(mono, p.position)


def _render_one(args):
    g, mapping, sr = args
    p = event_params(g, mapping)
    return p, render_event(oscillator_triple(p), p, sr)


def render_galaxy_layer(galaxies, mapping=GalaxyMapping(), sr=SAMPLE_RATE, n_jobs=1, batch=64):
    """Render and mix every non-outlier galaxy at its onset.

    Events are rendered on up to ``n_jobs`` threads but always summed in
    input order, so the result does not depend on ``n_jobs``.
    """
    regular = [g for g in galaxies if not g.is_outlier]
    params = [event_params(g, mapping) for g in regular]
    length = n_samples(mapping.duration, sr)
    for p in params:
        length = max(length, onset_index(p.onset, sr) + event_length(p, sr))
    acc = AudioBuffer.zeros(length, sr)

    jobs = [(g, mapping, sr) for g in regular]
    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            for start in range(0, len(jobs), batch):
                for p, seg in pool.map(_render_one, jobs[start : start + batch]):
                    acc = mix_into(acc, seg, p.onset)
    else:
        for job in jobs:
            p, seg = _render_one(job)
            acc = mix_into(acc, seg, p.onset)
    return acc


EVENT_LOG_COLUMNS = ("id", "onset", "f0", "fm", "d", "level_db", "position", "release")


def event_log(galaxies, mapping=GalaxyMapping()):
    """Rows matching :data:`EVENT_LOG_COLUMNS` for the non-outlier galaxies."""
    rows = []
    for g in galaxies:
        if g.is_outlier:
            continue
        p = event_params(g, mapping)
        rows.append((g.id, p.onset, p.f0, p.fm, p.deviation, p.level_db, p.position, p.release))
    return rows
