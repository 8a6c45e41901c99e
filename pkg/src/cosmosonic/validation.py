"""Small argument checks shared by the mapping, DSP and estimator code."""

import math

import numpy as np

from .errors import ContractError


def check_unit_interval(x, name="x"):
    """Raise unless every value of ``x`` lies in [0, 1]. Returns ``x`` unchanged."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ContractError(f"{name} must lie in [0, 1], got {x!r}")
    return x


def check_positive(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ContractError(f"{name} must be finite and > 0, got {x!r}")
    return x


def check_non_negative(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
        raise ContractError(f"{name} must be finite and >= 0, got {x!r}")
    return x


def check_finite(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} must be finite, got {x!r}")
    return x


def check_sample_rate(sr):
    if isinstance(sr, bool) or int(sr) != sr or sr <= 0:
        raise ContractError(f"sample rate must be a positive integer, got {sr!r}")
    return int(sr)


def check_below_nyquist(freq, sr, name="freq"):
    arr = np.asarray(freq, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= sr / 2.0) or not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} must lie in (0, {sr / 2.0}) Hz, got {freq!r}")
    return freq


def n_samples(duration, sr):
    """Sample count for ``duration`` seconds, rounded half up."""
    if duration < 0 or not math.isfinite(duration):
        raise ContractError(f"duration must be finite and >= 0, got {duration!r}")
    return int(math.floor(duration * sr + 0.5))
