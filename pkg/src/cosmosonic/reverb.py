"""Fixed Schroeder reverb: four damped combs in parallel, two allpasses in series."""

from __future__ import annotations

import numba
import numpy as np

# Delay lengths in samples at 44.1 kHz; scaled for other rates.
COMB_DELAYS = (1557, 1617, 1491, 1422)
ALLPASS_DELAYS = (556, 225)
ALLPASS_GAIN = 0.5


@numba.njit(cache=True)
def _comb(x, delay, feedback, damping):
    y = np.zeros_like(x)
    buf = np.zeros(delay)
    idx = 0
    lp = 0.0
    for i in range(x.shape[0]):
        out = buf[idx]
        lp = out * (1.0 - damping) + lp * damping
        buf[idx] = x[i] + lp * feedback
        y[i] = out
        idx += 1
        if idx == delay:
            idx = 0
    return y


@numba.njit(cache=True)
def _allpass(x, delay, gain):
    y = np.zeros_like(x)
    buf = np.zeros(delay)
    idx = 0
    for i in range(x.shape[0]):
        b = buf[idx]
        out = -x[i] + b
        buf[idx] = x[i] + b * gain
        y[i] = out
        idx += 1
        if idx == delay:
            idx = 0
    return y


def schroeder(x, sr, feedback=0.84, damping=0.2):
    """Wet signal only; ``x`` is mono float64."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    scale = sr / 44100.0
    wet = np.zeros_like(x)
    for d in COMB_DELAYS:
        wet += _comb(x, max(1, int(round(d * scale))), feedback, damping)
    wet *= 1.0 / len(COMB_DELAYS)
    for d in ALLPASS_DELAYS:
        wet = _allpass(wet, max(1, int(round(d * scale))), ALLPASS_GAIN)
    return wet


def stereo_reverb(left, right, sr, feedback=0.84, damping=0.2):
    """Reverberate each channel; the right input is pre-delayed by 23 samples to decorrelate."""
    wl = schroeder(left, sr, feedback, damping)
    shifted = np.concatenate([np.zeros(23), right])[: right.shape[0]]
    wr = schroeder(shifted, sr, feedback, damping)
    return wl, wr
