import csv
import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.pipeline import make_pipeline

from cosmosonic.errors import ContractError, DomainError, EmptyInputError
from cosmosonic.preprocess import (
    GalaxyFeatureScaler,
    OutlierFlag,
    Thresholds,
    bias_filter,
    clip_and_flag,
    export_summary,
    flag_array,
    histogram_table,
    invert_magnitude,
    lookback_time,
    minmax_scale,
    moving_average,
    normalize_features,
    quality_filter,
    records_to_array,
    run_preprocess,
    transform_sfr,
)

from .conftest import galaxy, record

# -- filters ------------------------------------------------------------------


def test_quality_filter_rules():
    keep = record("keep", mag=-26.0, mass=6.01)
    drop_bright = record("b", mag=-27.0)
    drop_mass = record("m", mass=6.0)
    assert [r.id for r in quality_filter([drop_bright, keep, drop_mass])] == ["keep"]


def test_bias_filter_rules():
    recs = [
        record("young", age=5.9),
        record("ok", age=7.0, mag=-22.0),
        record("dim", age=9.0, mag=-20.9),
        record("edge", age=6.0, mag=-21.0),
    ]
    assert [r.id for r in bias_filter(recs)] == ["ok", "edge"]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(5, 12), st.floats(1, 13.8), st.floats(-28, -18)), max_size=40))
def test_filters_preserve_order(rows):
    recs = [record(f"r{i}", mass=m, age=a, mag=v) for i, (m, a, v) in enumerate(rows)]
    for out in (quality_filter(recs), bias_filter(recs), bias_filter(quality_filter(recs))):
        idx = [int(r.id[1:]) for r in out]
        assert idx == sorted(idx)


# -- per-value transforms -----------------------------------------------------


def test_transform_sfr_values():
    assert transform_sfr(1.0) == 1.0
    assert transform_sfr(4096.0) == 2.0
    assert transform_sfr(0.0) == 0.0
    mpmath.mp.dps = 40
    oracle = float(mpmath.root(mpmath.mpf(76), 12))
    assert transform_sfr(76.0) == pytest.approx(oracle, rel=1e-15)
    assert oracle == pytest.approx(1.4346120224, abs=1e-10)


def test_transform_sfr_negative():
    with pytest.raises(DomainError):
        transform_sfr(-0.1)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1e6), st.floats(0, 1e6))
def test_transform_sfr_monotonic(a, b):
    if a <= b:
        assert transform_sfr(a) <= transform_sfr(b)


def test_lookback_time():
    assert lookback_time(13.8) == 0.0
    assert lookback_time(6.0) == pytest.approx(7.8, abs=1e-12)
    assert lookback_time(10.3) == pytest.approx(3.5, abs=1e-12)
    with pytest.raises(DomainError):
        lookback_time(13.9)


def test_invert_magnitude():
    assert invert_magnitude(-21.0) == 21.0
    assert invert_magnitude(-24.19) == 24.19
    assert invert_magnitude(0.0) == 0.0


@pytest.mark.parametrize(
    "value,variable,expected",
    [
        (9.0, "mass", (9.25, OutlierFlag.MASS_LOW)),
        (10.0, "mass", (10.0, OutlierFlag.NONE)),
        (12.0, "mass", (11.58, OutlierFlag.MASS_HIGH)),
        (9.25, "mass", (9.25, OutlierFlag.NONE)),
        (11.58, "mass", (11.58, OutlierFlag.NONE)),
        (0.05, "sfr", (0.1, OutlierFlag.SFR_LOW)),
        (100.0, "sfr", (76.0, OutlierFlag.SFR_HIGH)),
        (76.0, "sfr", (76.0, OutlierFlag.NONE)),
        (-25.0, "magnitude", (-24.19, OutlierFlag.BRIGHT)),
        (-24.19, "magnitude", (-24.19, OutlierFlag.NONE)),
        (-15.0, "magnitude", (-15.0, OutlierFlag.NONE)),
    ],
)
def test_clip_and_flag(value, variable, expected):
    assert clip_and_flag(value, variable) == expected


def test_clip_and_flag_unknown_variable():
    with pytest.raises(ContractError):
        clip_and_flag(1.0, "redshift")


def test_flag_precedence_mass_over_sfr_over_magnitude():
    X = np.array(
        [
            [12.0, 100.0, -25.0, 150.0, 9.0],
            [10.0, 100.0, -25.0, 150.0, 9.0],
            [10.0, 10.0, -25.0, 150.0, 9.0],
            [9.0, 0.01, -25.0, 150.0, 9.0],
        ]
    )
    assert list(flag_array(X)) == [
        OutlierFlag.MASS_HIGH,
        OutlierFlag.SFR_HIGH,
        OutlierFlag.BRIGHT,
        OutlierFlag.MASS_LOW,
    ]


# -- normalisation ------------------------------------------------------------


def test_two_galaxies_at_thresholds_map_to_endpoints():
    out = normalize_features([record("a", mass=9.25, age=7), record("b", mass=11.58, age=9)])
    assert [g.mass_n for g in out] == [0.0, 1.0]


def test_single_galaxy_is_degenerate():
    with pytest.warns(RuntimeWarning):
        (g,) = normalize_features([record()])
    assert (g.mass_n, g.sfr12_n, g.brightness_n, g.ra_n, g.tl_n) == (0.5,) * 5


def test_clipped_outliers_land_on_range_ends():
    recs = [record("lo", mass=8.0), record("mid", mass=10.0, age=8), record("hi", mass=12.5, age=10)]
    out = normalize_features(recs)
    assert [g.mass_n for g in out] == [0.0, pytest.approx(0.75 / 2.33), 1.0]
    assert [g.flag for g in out] == [OutlierFlag.MASS_LOW, OutlierFlag.NONE, OutlierFlag.MASS_HIGH]


def test_scaler_is_a_sklearn_transformer():
    X = records_to_array([record(f"{i}", mass=9.5 + i / 10, sfr=1 + i, age=7 + i / 3, mag=-22 - i / 5) for i in range(8)])
    scaler = GalaxyFeatureScaler()
    assert clone(scaler).get_params() == scaler.get_params()
    Z = make_pipeline(GalaxyFeatureScaler()).fit_transform(X)
    assert Z.shape == (8, 5)
    assert Z.min() == 0.0 and Z.max() == 1.0
    assert list(scaler.fit(X).get_feature_names_out()) == ["mass_n", "sfr12_n", "brightness_n", "ra_n", "tl_n"]


def test_scaler_rejects_wrong_width_and_unfitted():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        GalaxyFeatureScaler().transform(np.zeros((2, 5)))
    with pytest.raises(ContractError):
        GalaxyFeatureScaler().fit(np.zeros((2, 4)))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=50))
def test_normalization_idempotent(values):
    once = minmax_scale(values)
    twice = minmax_scale(once)
    assert np.max(np.abs(once - twice)) <= 1e-12


population = st.lists(
    st.tuples(
        st.floats(8.5, 12.5),
        st.floats(0.0, 200.0),
        st.floats(-25.5, -21.0),
        st.floats(149.0, 151.0),
        st.floats(6.0, 13.7),
    ),
    min_size=2,
    max_size=40,
)


@settings(max_examples=60, deadline=None)
@given(population)
def test_normalized_fields_in_unit_interval_and_flags_consistent(rows):
    recs = [record(f"r{i}", mass=m, sfr=s, mag=v, ra=a, age=t) for i, (m, s, v, a, t) in enumerate(rows)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out = normalize_features(recs)
    for g in out:
        for name in ("mass_n", "sfr12_n", "brightness_n", "ra_n", "tl_n"):
            assert 0.0 <= getattr(g, name) <= 1.0
    th = Thresholds()
    crossed = [
        r.stellar_mass < th.mass[0]
        or r.stellar_mass > th.mass[1]
        or r.sfr < th.sfr[0]
        or r.sfr > th.sfr[1]
        or r.abs_magnitude < th.magnitude_lower
        for r in recs
    ]
    assert [g.is_outlier for g in out] == crossed


@settings(max_examples=60, deadline=None)
@given(population, st.floats(0.0, 200.0), st.floats(0.0, 200.0))
def test_higher_sfr_never_lowers_sfr12_n(rows, s1, s2):
    base = [record(f"r{i}", mass=m, sfr=s, mag=v, ra=a, age=t) for i, (m, s, v, a, t) in enumerate(rows)]
    lo, hi = sorted((s1, s2))
    probe = [record("p", sfr=lo), record("q", sfr=hi)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out = normalize_features(base + probe)
    assert out[-2].sfr12_n <= out[-1].sfr12_n


# -- moving average -----------------------------------------------------------


def brute_force_average(galaxies, window, grid):
    """Independent re-computation: exact sums, explicit nearest-fill."""
    half = window / 2
    rows = []
    for g in grid:
        members = [x for x in galaxies if abs(x.tl_n - g) <= half]
        if members:
            n = len(members)
            rows.append(tuple(math.fsum(getattr(m, f) for m in members) / n for f in ("mass_n", "sfr12_n", "brightness_n")))
        else:
            rows.append(None)
    filled = [i for i, r in enumerate(rows) if r is not None]
    if not filled:
        n = len(galaxies)
        mean = tuple(math.fsum(getattr(m, f) for m in galaxies) / n for f in ("mass_n", "sfr12_n", "brightness_n"))
        return np.array([mean] * len(grid))
    out = []
    for i, r in enumerate(rows):
        if r is None:
            j = min(filled, key=lambda k: (abs(k - i), k))
            r = rows[j]
        out.append(r)
    return np.array(out)


def test_moving_average_constant():
    gs = [galaxy(f"{i}", mass=0.3, sfr=0.3, bright=0.3, tl=i / 9) for i in range(10)]
    stats = moving_average(gs, 0.05)
    assert np.all(stats.avg_mass_n == 0.3)


def test_moving_average_full_window_is_global_mean():
    rng = np.random.default_rng(3)
    gs = [galaxy(f"{i}", *rng.random(5)) for i in range(200)]
    # all at tl_n = 0.5, so a unit window around any grid point sees everyone
    narrow = [galaxy(g.id, g.mass_n, g.sfr12_n, g.brightness_n, g.ra_n, 0.5) for g in gs]
    stats = moving_average(narrow, 1.0)
    mean = math.fsum(g.mass_n for g in gs) / len(gs)
    assert np.allclose(stats.avg_mass_n, mean, atol=1e-12)


def test_moving_average_two_clusters_matches_brute_force():
    rng = np.random.default_rng(7)
    gs = []
    for i in range(60):
        centre = 0.2 if i % 2 else 0.8
        gs.append(galaxy(f"{i}", *rng.random(4), tl=float(np.clip(centre + rng.normal(0, 0.02), 0, 1))))
    stats = moving_average(gs, 0.2, 256)
    expected = brute_force_average(gs, 0.2, stats.grid)
    got = np.column_stack([stats.avg_mass_n, stats.avg_sfr12_n, stats.avg_brightness_n])
    assert np.max(np.abs(got - expected)) <= 1e-12
    assert np.all(np.diff(stats.grid) > 0)


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=60),
    st.floats(0.01, 1.0),
    st.integers(2, 64),
)
def test_moving_average_matches_brute_force(rows, window, grid_size):
    gs = [galaxy(f"{i}", m, s, b, 0.5, t) for i, (m, s, b, t) in enumerate(rows)]
    stats = moving_average(gs, window, grid_size)
    expected = brute_force_average(gs, window, stats.grid)
    got = np.column_stack([stats.avg_mass_n, stats.avg_sfr12_n, stats.avg_brightness_n])
    assert np.max(np.abs(got - expected)) <= 1e-12
    assert got.min() >= 0 and got.max() <= 1


def test_moving_average_empty():
    with pytest.raises(EmptyInputError):
        moving_average([], 0.05)


# -- summary export -----------------------------------------------------------


def test_export_summary_files(tmp_path):
    gs = [galaxy(f"{i}", tl=i / 9) for i in range(10)]
    stats = moving_average(gs)
    hist, curves = export_summary(gs, stats, tmp_path)
    with open(hist) as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["variable", "bin_lo", "bin_hi", "count", "outlier_count"]
    assert all(r["outlier_count"] == "0" for r in rows)
    with open(curves) as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "tl_n,avg_mass_n,avg_sfr12_n,avg_brightness_n"
    assert len(lines) == 1 + 256


def test_histogram_counts_match_brute_force_binning():
    rng = np.random.default_rng(11)
    gs = [
        galaxy(f"{i}", *rng.random(5), flag=OutlierFlag.SFR_HIGH if i % 13 == 0 else OutlierFlag.NONE)
        for i in range(300)
    ]
    bins = 10
    table = histogram_table(gs, bins)
    for name in ("mass_n", "sfr12_n", "brightness_n", "ra_n", "tl_n"):
        counts = [0] * bins
        outs = [0] * bins
        for g in gs:
            v = getattr(g, name)
            k = min(int(v * bins), bins - 1)
            counts[k] += 1
            outs[k] += g.is_outlier
        rows = [r for r in table if r[0] == name]
        assert [r[3] for r in rows] == counts
        assert [r[4] for r in rows] == outs


def test_export_summary_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    gs = [galaxy("a"), galaxy("b", tl=0.2)]
    with pytest.raises(OSError):
        export_summary(gs, moving_average(gs), blocker / "sub")


def test_run_preprocess_counts():
    recs = [
        record("bad_quality", mass=5.0),
        record("young", age=4.0),
        record("a", mass=9.0, age=7.0),
        record("b", mass=10.0, age=9.0, sfr=200.0),
        record("c", mass=11.0, age=11.0),
    ]
    res = run_preprocess(recs)
    assert (res.n_parsed, res.n_quality, res.n_bias) == (5, 4, 3)
    assert res.outlier_counts() == {"mass_low": 1, "mass_high": 0, "sfr_low": 0, "sfr_high": 1, "bright": 0}
