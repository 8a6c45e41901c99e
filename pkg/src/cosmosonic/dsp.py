"""Deterministic signal primitives shared by the three layers.

Everything here is a pure function of its arguments (and a seed for noise),
so repeated renders are bit identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import ContractError
from .validation import (
    check_below_nyquist,
    check_finite,
    check_non_negative,
    check_positive,
    check_sample_rate,
    check_unit_interval,
    n_samples,
)

SAMPLE_RATE = 44100
CONTROL_BLOCK = 64
LN_1000 = math.log(1000.0)


@dataclass
class AudioBuffer:
    """Stereo float64 samples at ``sample_rate``."""

    sample_rate: int
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        self.left = np.asarray(self.left, dtype=np.float64)
        self.right = np.asarray(self.right, dtype=np.float64)
        if self.left.shape != self.right.shape or self.left.ndim != 1:
            raise ContractError("left and right must be 1-D arrays of equal length")

    @classmethod
    def zeros(cls, n, sample_rate=SAMPLE_RATE):
        return cls(sample_rate, np.zeros(n), np.zeros(n))

    def __len__(self):
        return self.left.shape[0]

    @property
    def duration(self):
        return len(self) / self.sample_rate

    def peak(self):
        if len(self) == 0:
            return 0.0
        return float(max(np.max(np.abs(self.left)), np.max(np.abs(self.right))))

    def scaled(self, gain):
        return AudioBuffer(self.sample_rate, self.left * gain, self.right * gain)

    def padded(self, n):
        if n < len(self):
            raise ContractError("cannot pad to a shorter length")
        extra = n - len(self)
        return AudioBuffer(self.sample_rate, np.pad(self.left, (0, extra)), np.pad(self.right, (0, extra)))


@dataclass(frozen=True)
class EnvelopeSpec:
    """Exponential decay; ``release`` is the time to fall by 60 dB."""

    release: float

    def __post_init__(self):
        check_positive(self.release, "release")


# -- mappings -----------------------------------------------------------------


def lin_map(x, lo, hi):
    check_unit_interval(x)
    return lo + x * (hi - lo)


def exp_map(x, lo, hi):
    """Geometric interpolation from ``lo`` (x=0) to ``hi`` (x=1)."""
    check_unit_interval(x)
    check_positive(lo, "lo")
    check_positive(hi, "hi")
    # Endpoints returned verbatim; pow() would round them.
    if np.ndim(x) == 0:
        if x == 0:
            return float(lo)
        if x == 1:
            return float(hi)
        return lo * (hi / lo) ** x
    x = np.asarray(x, dtype=float)
    out = lo * (hi / lo) ** x
    out[x == 0] = lo
    out[x == 1] = hi
    return out


def db_to_linear(db):
    out = np.power(10.0, np.asarray(db, dtype=float) / 20.0)
    return float(out) if np.ndim(db) == 0 else out


# -- generators ---------------------------------------------------------------


def exp_envelope(spec, n, sr=SAMPLE_RATE):
    if n < 0:
        raise ContractError("n must be >= 0")
    t = np.arange(n) / sr
    return np.exp(-t * (LN_1000 / spec.release))


def _time(dur, sr):
    sr = check_sample_rate(sr)
    return np.arange(n_samples(dur, sr)) / sr


def render_sine(freq, amp, env, dur, sr=SAMPLE_RATE):
    """``amp * e(t) * sin(2 pi f t)`` with zero initial phase."""
    check_below_nyquist(freq, sr)
    t = _time(dur, sr)
    return amp * exp_envelope(env, t.size, sr) * np.sin(2.0 * np.pi * freq * t)


def render_fm(carrier, modulator, deviation, amp, env, dur, sr=SAMPLE_RATE):
    """Sine FM with peak frequency deviation ``deviation`` (index = d / f_m)."""
    check_below_nyquist(carrier, sr, "carrier")
    check_non_negative(deviation, "deviation")
    check_non_negative(modulator, "modulator")
    if deviation > 0 and modulator == 0:
        raise ContractError("modulator must be > 0 when deviation > 0")
    if deviation == 0:
        return render_sine(carrier, amp, env, dur, sr)
    t = _time(dur, sr)
    index = deviation / modulator
    phase = 2.0 * np.pi * carrier * t + index * np.sin(2.0 * np.pi * modulator * t)
    return amp * exp_envelope(env, t.size, sr) * np.sin(phase)


class NoiseStream:
    """Uniform [-1, 1) noise from PCG64, readable in consecutive chunks.

    Samples are ``(raw >> 11) * 2**-53 * 2 - 1`` of the raw 64-bit outputs,
    so the stream depends only on the seed, not on numpy's distribution code.
    """

    def __init__(self, seed):
        self._bitgen = np.random.PCG64(seed)

    def read(self, n):
        if n < 0:
            raise ContractError("n must be >= 0")
        raw = self._bitgen.random_raw(n)
        return (raw >> np.uint64(11)).astype(np.float64) * (2.0 ** -52) - 1.0


def white_noise(seed, n):
    return NoiseStream(seed).read(n)


# -- filtering ----------------------------------------------------------------


def bandpass_coefficients(freq, invq, sr):
    """Two-pole bandpass with 0 dB peak gain, as ``(b0, b2, a1, a2)`` arrays.

    ``b1`` is always zero and ``a0`` is normalised to one.
    """
    w0 = 2.0 * np.pi * np.asarray(freq, dtype=float) / sr
    alpha = np.sin(w0) * np.asarray(invq, dtype=float) / 2.0
    a0 = 1.0 + alpha
    return alpha / a0, -alpha / a0, -2.0 * np.cos(w0) / a0, (1.0 - alpha) / a0


@numba.njit(cache=True)
def _biquad_blocks(x, b0, b2, a1, a2, block, state):
    # Direct form I; coefficients change at block boundaries.
    y = np.empty_like(x)
    x1, x2, y1, y2 = state[0], state[1], state[2], state[3]
    n = x.shape[0]
    for i in range(n):
        k = i // block
        xi = x[i]
        yi = b0[k] * xi + b2[k] * x2 - a1[k] * y1 - a2[k] * y2
        x2 = x1
        x1 = xi
        y2 = y1
        y1 = yi
        y[i] = yi
    state[0], state[1], state[2], state[3] = x1, x2, y1, y2
    return y


class ResonantBandpass:
    """Stateful block-updated resonator, for filtering a signal in chunks.

    Chunk lengths must be multiples of ``block`` except for the last one.
    """

    def __init__(self, sr=SAMPLE_RATE, block=CONTROL_BLOCK):
        self.sr = check_sample_rate(sr)
        self.block = int(block)
        self.state = np.zeros(4)

    def process(self, x, center_curve, invq_curve):
        x = np.asarray(x, dtype=np.float64)
        n_blocks = -(-x.size // self.block)
        center = np.broadcast_to(np.asarray(center_curve, dtype=float), (n_blocks,))
        invq = np.broadcast_to(np.asarray(invq_curve, dtype=float), (n_blocks,))
        check_positive(invq, "invq")
        check_below_nyquist(center, self.sr, "center")
        b0, b2, a1, a2 = bandpass_coefficients(center, invq, self.sr)
        return _biquad_blocks(
            x,
            np.ascontiguousarray(b0),
            np.ascontiguousarray(b2),
            np.ascontiguousarray(a1),
            np.ascontiguousarray(a2),
            self.block,
            self.state,
        )


def resonant_bandpass(x, center_curve, invq_curve, sr=SAMPLE_RATE, block=CONTROL_BLOCK):
    """Filter ``x`` through a resonator whose centre and 1/Q change per block.

    ``center_curve`` and ``invq_curve`` hold one value per block of ``block``
    samples (scalars are broadcast). The -3 dB bandwidth is about
    ``center * invq`` Hz.
    """
    return ResonantBandpass(sr, block).process(x, center_curve, invq_curve)


# -- placement ----------------------------------------------------------------


def pan(mono, position):
    """Constant-power pan; 0 is hard left, 1 hard right."""
    check_unit_interval(position, "position")
    # sin on both sides so the hard-left/right gains are exactly 0 and 1
    mono = np.asarray(mono, dtype=float)
    return mono * np.sin((1.0 - position) * (np.pi / 2.0)), mono * np.sin(position * (np.pi / 2.0))


def onset_index(onset, sr):
    if onset < 0:
        raise ContractError(f"onset must be >= 0, got {onset!r}")
    return int(math.floor(onset * sr + 0.5))


def mix_into(acc, source, onset):
    """Add a stereo ``(left, right)`` pair into ``acc`` starting at ``onset`` s.

    ``acc`` is modified in place when it is long enough; otherwise a longer
    buffer is returned.
    """
    check_finite(onset, "onset")
    left, right = source
    start = onset_index(onset, acc.sample_rate)
    end = start + len(left)
    if end > len(acc):
        acc = acc.padded(end)
    acc.left[start:end] += left
    acc.right[start:end] += right
    return acc


def hard_limit(buffer):
    """Clip to [-1, 1]; return the limited buffer and the clipped-sample count."""
    clipped = int(np.count_nonzero(np.abs(buffer.left) > 1.0) + np.count_nonzero(np.abs(buffer.right) > 1.0))
    return AudioBuffer(buffer.sample_rate, np.clip(buffer.left, -1.0, 1.0), np.clip(buffer.right, -1.0, 1.0)), clipped
