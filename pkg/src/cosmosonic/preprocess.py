"""Catalog cleaning, feature transforms, outlier marking and trend curves.

The population-level step (clip, transform, min-max scale) is exposed as a
scikit-learn transformer, :class:`GalaxyFeatureScaler`, so it can sit in a
``Pipeline``; the row filters and per-value transforms are plain functions.
"""

from __future__ import annotations

import csv
import enum
import math
import os
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .catalog_io import UNIVERSE_AGE
from .errors import ContractError, DomainError, EmptyInputError

MASS_RANGE = (9.25, 11.58)
SFR_RANGE = (0.1, 76.0)
MAGNITUDE_LOWER = -24.19

# Input columns consumed by the scaler, in order.
RAW_COLUMNS = ("stellar_mass", "sfr", "abs_magnitude", "right_ascension", "age")
FEATURE_NAMES = ("mass_n", "sfr12_n", "brightness_n", "ra_n", "tl_n")


class OutlierFlag(str, enum.Enum):
    NONE = "none"
    MASS_LOW = "mass_low"
    MASS_HIGH = "mass_high"
    SFR_LOW = "sfr_low"
    SFR_HIGH = "sfr_high"
    BRIGHT = "bright"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Thresholds:
    """Clip limits plus the quality and bias cuts."""

    mass: tuple = MASS_RANGE
    sfr: tuple = SFR_RANGE
    magnitude_lower: float = MAGNITUDE_LOWER
    quality_magnitude: float = -26.0
    quality_mass: float = 6.0
    bias_age: float = 6.0
    bias_magnitude: float = -21.0
    universe_age: float = UNIVERSE_AGE


@dataclass(frozen=True)
class ProcessedGalaxy:
    id: str
    mass_n: float
    sfr12_n: float
    brightness_n: float
    ra_n: float
    tl_n: float
    flag: OutlierFlag = OutlierFlag.NONE

    def __post_init__(self):
        object.__setattr__(self, "flag", OutlierFlag(self.flag))

    @property
    def is_outlier(self):
        return self.flag is not OutlierFlag.NONE


@dataclass(frozen=True)
class FeatureStats:
    grid: np.ndarray
    avg_mass_n: np.ndarray
    avg_sfr12_n: np.ndarray
    avg_brightness_n: np.ndarray


# -- row filters --------------------------------------------------------------


def quality_filter(records, thresholds=Thresholds()):
    """Drop rows likely to be measurement errors (too bright or too light)."""
    return [
        r
        for r in records
        if not (r.abs_magnitude < thresholds.quality_magnitude or r.stellar_mass <= thresholds.quality_mass)
    ]


def bias_filter(records, thresholds=Thresholds()):
    """Keep the homogeneous sample: old enough *and* bright enough.

    ``age`` uses the same unit as the catalog (billions of years).
    """
    return [
        r
        for r in records
        if not (r.age < thresholds.bias_age or r.abs_magnitude > thresholds.bias_magnitude)
    ]


# -- per-value transforms -----------------------------------------------------


def _scalar_or_array(x, out):
    return float(out) if np.ndim(x) == 0 else out


def transform_sfr(sfr):
    """Twelfth root of the star formation rate.

    Computed as cbrt(sqrt(sqrt(x))) so perfect twelfth powers come out exact.
    """
    x = np.asarray(sfr, dtype=float)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise DomainError(f"sfr must be finite and >= 0, got {sfr!r}")
    return _scalar_or_array(sfr, np.cbrt(np.sqrt(np.sqrt(x))))


def lookback_time(age, universe_age=UNIVERSE_AGE):
    x = np.asarray(age, dtype=float)
    if np.any(x > universe_age) or np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise DomainError(f"age must lie in (0, {universe_age}], got {age!r}")
    return _scalar_or_array(age, universe_age - x)


def invert_magnitude(m):
    x = np.asarray(m, dtype=float)
    return _scalar_or_array(m, -x)


_CLIP_KINDS = {
    "mass": (OutlierFlag.MASS_LOW, OutlierFlag.MASS_HIGH),
    "sfr": (OutlierFlag.SFR_LOW, OutlierFlag.SFR_HIGH),
    "magnitude": (OutlierFlag.BRIGHT, None),
}


def _limits(variable, thresholds):
    if variable == "mass":
        return thresholds.mass
    if variable == "sfr":
        return thresholds.sfr
    if variable == "magnitude":
        # Dim galaxies (high magnitude) are never clipped.
        return (thresholds.magnitude_lower, math.inf)
    raise ContractError(f"unknown variable {variable!r}; expected mass, sfr or magnitude")


def clip_and_flag(value, variable, thresholds=Thresholds()):
    """Clamp ``value`` into the variable's range; return ``(clipped, flag)``.

    SFR limits apply to the raw rate, before the twelfth root.
    """
    lo, hi = _limits(variable, thresholds)
    low_flag, high_flag = _CLIP_KINDS[variable]
    if value < lo:
        return float(lo), low_flag
    if value > hi:
        return float(hi), high_flag
    return float(value), OutlierFlag.NONE


def flag_array(X, thresholds=Thresholds()):
    """Outlier flag per row of a raw feature array (columns :data:`RAW_COLUMNS`).

    When several variables cross a limit the precedence is mass, then sfr,
    then magnitude.
    """
    X = np.asarray(X, dtype=float)
    flags = np.full(X.shape[0], OutlierFlag.NONE, dtype=object)
    mass, sfr, mag = X[:, 0], X[:, 1], X[:, 2]
    # Assign lowest precedence first so higher ones overwrite.
    flags[mag < thresholds.magnitude_lower] = OutlierFlag.BRIGHT
    flags[sfr > thresholds.sfr[1]] = OutlierFlag.SFR_HIGH
    flags[sfr < thresholds.sfr[0]] = OutlierFlag.SFR_LOW
    flags[mass > thresholds.mass[1]] = OutlierFlag.MASS_HIGH
    flags[mass < thresholds.mass[0]] = OutlierFlag.MASS_LOW
    # np.full stores plain str for a str-enum member.
    out = np.empty(len(flags), dtype=object)
    out[:] = [OutlierFlag(f) for f in flags]
    return out


def records_to_array(records):
    """Stack records into an ``(n, 5)`` array with columns :data:`RAW_COLUMNS`."""
    return np.array([[getattr(r, c) for c in RAW_COLUMNS] for r in records], dtype=float).reshape(
        -1, len(RAW_COLUMNS)
    )


# -- population scaling -------------------------------------------------------


class GalaxyFeatureScaler(TransformerMixin, BaseEstimator):
    """Clip, transform and min-max scale raw galaxy measurements to [0, 1].

    Input columns are ``stellar_mass, sfr, abs_magnitude, right_ascension,
    age``; output columns are ``mass_n, sfr12_n, brightness_n, ra_n, tl_n``.
    Mass and SFR are clipped to their ranges, the magnitude only from below;
    then SFR is raised to 1/12, magnitude is negated and age becomes
    lookback time. ``fit`` learns the per-column extrema of the transformed
    values. A constant column scales to 0.5 with a warning.
    """

    def __init__(
        self,
        mass_range=MASS_RANGE,
        sfr_range=SFR_RANGE,
        magnitude_lower=MAGNITUDE_LOWER,
        universe_age=UNIVERSE_AGE,
    ):
        self.mass_range = mass_range
        self.sfr_range = sfr_range
        self.magnitude_lower = magnitude_lower
        self.universe_age = universe_age

    @property
    def thresholds(self):
        return Thresholds(
            mass=tuple(self.mass_range),
            sfr=tuple(self.sfr_range),
            magnitude_lower=self.magnitude_lower,
            universe_age=self.universe_age,
        )

    def _validate(self, X, reset):
        X = check_array(X, dtype=np.float64, ensure_min_samples=1)
        if X.shape[1] != len(RAW_COLUMNS):
            raise ContractError(f"expected {len(RAW_COLUMNS)} columns {RAW_COLUMNS}, got {X.shape[1]}")
        if reset:
            self.n_features_in_ = X.shape[1]
        return X

    def _features(self, X):
        t = self.thresholds
        mass = np.clip(X[:, 0], *t.mass)
        sfr12 = transform_sfr(np.clip(X[:, 1], *t.sfr))
        brightness = invert_magnitude(np.maximum(X[:, 2], t.magnitude_lower))
        ra = X[:, 3]
        tl = lookback_time(X[:, 4], t.universe_age)
        return np.column_stack([mass, sfr12, brightness, ra, tl])

    def fit(self, X, y=None):
        X = self._validate(X, reset=True)
        F = self._features(X)
        self.data_min_ = F.min(axis=0)
        self.data_max_ = F.max(axis=0)
        self.degenerate_ = self.data_max_ == self.data_min_
        for name in np.asarray(FEATURE_NAMES)[self.degenerate_]:
            warnings.warn(f"feature {name} is constant; scaled to 0.5", RuntimeWarning, stacklevel=2)
        return self

    def transform(self, X):
        check_is_fitted(self, "data_min_")
        X = self._validate(X, reset=False)
        F = self._features(X)
        span = np.where(self.degenerate_, 1.0, self.data_max_ - self.data_min_)
        out = (F - self.data_min_) / span
        out[:, self.degenerate_] = 0.5
        return out

    def flags(self, X):
        X = self._validate(X, reset=False)
        return flag_array(X, self.thresholds)

    def get_feature_names_out(self, input_features=None):
        return np.asarray(FEATURE_NAMES, dtype=object)


def minmax_scale(values):
    """Min-max scale a 1-D array; a constant array maps to 0.5."""
    v = np.asarray(values, dtype=float)
    lo, hi = v.min(), v.max()
    if lo == hi:
        return np.full_like(v, 0.5)
    return (v - lo) / (hi - lo)


def normalize_features(records, thresholds=Thresholds()):
    """Turn bias-filtered records into :class:`ProcessedGalaxy` objects."""
    records = list(records)
    if not records:
        return []
    scaler = GalaxyFeatureScaler(thresholds.mass, thresholds.sfr, thresholds.magnitude_lower, thresholds.universe_age)
    X = records_to_array(records)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        Z = scaler.fit_transform(X)
    for w in caught:
        warnings.warn(w.message, w.category, stacklevel=2)
    flags = scaler.flags(X)
    return [
        ProcessedGalaxy(r.id, *(float(v) for v in z), flag=f)
        for r, z, f in zip(records, Z, flags)
    ]


# -- trend curves -------------------------------------------------------------


def moving_average(galaxies, window_n=0.05, grid_size=256):
    """Windowed means of mass_n, sfr12_n and brightness_n along tl_n.

    Each grid point averages the galaxies with ``|tl_n - g| <= window_n / 2``.
    Grid points whose window is empty copy the nearest non-empty one (the
    earlier one on ties). If no window holds a galaxy at all, every grid
    point takes the population mean.
    """
    galaxies = list(galaxies)
    if not galaxies:
        raise EmptyInputError("moving average needs at least one galaxy")
    if not 0 < window_n <= 1:
        raise ContractError(f"window_n must lie in (0, 1], got {window_n!r}")
    if grid_size < 2:
        raise ContractError("grid_size must be >= 2")

    tl = np.array([g.tl_n for g in galaxies])
    feats = np.array([[g.mass_n, g.sfr12_n, g.brightness_n] for g in galaxies])
    grid = np.linspace(0.0, 1.0, grid_size)
    half = window_n / 2.0

    curves = np.full((grid_size, 3), np.nan)
    for i, g in enumerate(grid):
        mask = np.abs(tl - g) <= half
        if mask.any():
            curves[i] = feats[mask].mean(axis=0)

    filled = ~np.isnan(curves[:, 0])
    if not filled.any():
        curves[:] = feats.mean(axis=0)
    elif not filled.all():
        idx = np.flatnonzero(filled)
        for i in np.flatnonzero(~filled):
            nearest = idx[np.argmin(np.abs(idx - i))]
            curves[i] = curves[nearest]
    return FeatureStats(grid, curves[:, 0].copy(), curves[:, 1].copy(), curves[:, 2].copy())


# -- reports ------------------------------------------------------------------


def histogram_table(galaxies, bins=20):
    """Rows ``(variable, bin_lo, bin_hi, count, outlier_count)`` per feature.

    Bins split [0, 1] uniformly; the last bin is closed on the right.
    """
    galaxies = list(galaxies)
    edges = np.linspace(0.0, 1.0, bins + 1)
    rows = []
    for name in FEATURE_NAMES:
        values = np.array([getattr(g, name) for g in galaxies], dtype=float)
        outlier = np.array([g.is_outlier for g in galaxies], dtype=bool)
        counts, _ = np.histogram(values, edges)
        out_counts, _ = np.histogram(values[outlier], edges) if outlier.any() else (np.zeros(bins, int), None)
        for k in range(bins):
            rows.append((name, float(edges[k]), float(edges[k + 1]), int(counts[k]), int(out_counts[k])))
    return rows


def export_summary(galaxies, stats, path, bins=20, delimiter=","):
    """Write ``histograms.csv`` and ``stats.csv`` into directory ``path``."""
    os.makedirs(path, exist_ok=True)
    hist_path = os.path.join(path, "histograms.csv")
    stats_path = os.path.join(path, "stats.csv")
    with open(hist_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(["variable", "bin_lo", "bin_hi", "count", "outlier_count"])
        for row in histogram_table(galaxies, bins):
            w.writerow([row[0], repr(row[1]), repr(row[2]), row[3], row[4]])
    with open(stats_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(["tl_n", "avg_mass_n", "avg_sfr12_n", "avg_brightness_n"])
        for row in zip(stats.grid, stats.avg_mass_n, stats.avg_sfr12_n, stats.avg_brightness_n):
            w.writerow([repr(float(v)) for v in row])
    return hist_path, stats_path


@dataclass
class PreprocessResult:
    n_parsed: int
    n_quality: int
    n_bias: int
    galaxies: list
    stats: FeatureStats | None

    def outlier_counts(self):
        counts = {f.value: 0 for f in OutlierFlag if f is not OutlierFlag.NONE}
        for g in self.galaxies:
            if g.is_outlier:
                counts[g.flag.value] += 1
        return counts


def run_preprocess(records, thresholds=Thresholds(), window_n=0.05, grid_size=256):
    """Quality filter, bias filter, normalise and compute trend curves."""
    records = list(records)
    quality = quality_filter(records, thresholds)
    biased = bias_filter(quality, thresholds)
    galaxies = normalize_features(biased, thresholds)
    stats = moving_average(galaxies, window_n, grid_size) if galaxies else None
    return PreprocessResult(len(records), len(quality), len(biased), galaxies, stats)
