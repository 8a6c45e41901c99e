import numpy as np
import pytest
from scipy import optimize, signal

from cosmosonic.drones import (
    DroneSpec,
    DroneVoice,
    drone_curve_table,
    drone_frequency_curves,
    q_trajectory,
    render_statistics_layer,
    render_voice,
)
from cosmosonic.errors import ContractError
from cosmosonic.preprocess import FeatureStats


def constant_stats(mass=0.5, sfr=0.8, bright=0.25, size=256):
    grid = np.linspace(0, 1, size)
    full = np.ones(size)
    return FeatureStats(grid, mass * full, sfr * full, bright * full)


def only(spec, index):
    """DroneSpec with every voice but ``index`` muted."""
    voices = tuple(v if i == index else DroneVoice(v.feature, v.multiplier, v.position, v.seed, -np.inf) for i, v in enumerate(spec.voices))
    return DroneSpec(voices=voices, invq=spec.invq, gain_db=spec.gain_db)


def fitted_bandwidth(x, sr, centre, nperseg):
    """-3 dB bandwidth from a least-squares fit of the resonator power shape."""
    f, p = signal.welch(x, sr, nperseg=nperseg)
    sel = (f > 0.2 * centre) & (f < 3.0 * centre)
    f, p = f[sel], p[sel]

    def shape(f, a, fc, bw):
        return a / (1.0 + ((f ** 2 - fc ** 2) / (f * bw)) ** 2)

    (a, fc, bw), _ = optimize.curve_fit(shape, f, p, p0=(p.max(), centre, 0.1 * centre))
    return abs(bw), fc


# -- curves -------------------------------------------------------------------


def test_frequency_curves_multipliers():
    stats = FeatureStats(np.array([0.0, 1.0]), np.array([0.5, 0.5]), np.array([0.401, 0.401]), np.array([0.2, 0.3]))
    t, (f1, f2, f3) = drone_frequency_curves(stats, duration=1500.0)
    assert t.tolist() == [0.0, 1500.0]
    assert f1.tolist() == [100.0, 100.0]
    assert f2.tolist() == [400.0, 600.0]
    assert f3 == pytest.approx([401.0, 401.0], rel=1e-15)


def test_zero_frequency_rejected_without_floor():
    with pytest.raises(ContractError):
        drone_frequency_curves(constant_stats(mass=0.0), DroneSpec(min_frequency=0.0))


def test_sparse_window_zero_is_floored():
    _, (f1, _, _) = drone_frequency_curves(constant_stats(mass=0.0))
    assert np.all(f1 == 20.0)
    _, (f1, _, _) = drone_frequency_curves(constant_stats(mass=0.05))
    assert np.all(f1 == 20.0)
    _, (f1, _, _) = drone_frequency_curves(constant_stats(mass=0.2))
    assert np.all(f1 == 40.0)


def test_voice_count_enforced():
    with pytest.raises(ContractError):
        DroneSpec(voices=DroneSpec().voices[:2])


def test_q_trajectory_points():
    assert q_trajectory(1500.0, 0.0) == 0.0001
    assert q_trajectory(1500.0, 1500.0) == 0.2
    assert q_trajectory(1500.0, 750.0) == pytest.approx(0.10005, rel=1e-15)
    assert q_trajectory(1500.0, 2000.0) == 0.2
    assert np.all(np.diff(q_trajectory(10.0, np.linspace(0, 10, 100))) > 0)


def test_curve_table_rows():
    rows = drone_curve_table(constant_stats(size=3), duration=10.0)
    assert rows[0] == (0.0, 100.0, 500.0, 800.0, 0.0001)
    assert rows[-1][0] == 10.0 and rows[-1][4] == 0.2


# -- rendering ----------------------------------------------------------------

SR = 16000
DUR = 60.0


@pytest.fixture(scope="module")
def voices():
    """Each voice of a 60 s constant-curve drone rendered alone."""
    stats = constant_stats()
    spec = DroneSpec()
    return [render_statistics_layer(stats, only(spec, i), DUR, SR) for i in range(3)]


@pytest.mark.parametrize("index,freq", [(0, 100.0), (1, 500.0), (2, 800.0)])
def test_early_peaks_are_narrow_and_on_pitch(voices, index, freq):
    buf = voices[index]
    x = (buf.left + buf.right)[: 5 * SR]
    f, p = signal.welch(x, SR, nperseg=1 << 15)
    peak = f[np.argmax(p)]
    assert abs(peak - freq) <= 0.02 * freq
    # narrow: most power within 5 % of the centre
    near = p[np.abs(f - freq) <= 0.05 * freq].sum()
    assert near / p.sum() > 0.9


@pytest.mark.parametrize("index,freq", [(0, 100.0), (1, 500.0), (2, 800.0)])
def test_final_bandwidth_tracks_inverse_q(voices, index, freq):
    buf = voices[index]
    x = (buf.left + buf.right)[-10 * SR :]
    bw, fc = fitted_bandwidth(x, SR, freq, 1 << 13)
    assert bw == pytest.approx(0.2 * freq, rel=0.3)
    assert fc == pytest.approx(freq, rel=0.02)


def test_pan_energies(voices):
    mass, bright, sfr = voices
    el, er = np.sum(mass.left ** 2), np.sum(mass.right ** 2)
    assert el == pytest.approx(er, rel=1e-12)
    assert np.sum(bright.right ** 2) == 0.0 and np.sum(bright.left ** 2) > 0
    assert np.sum(sfr.left ** 2) == 0.0 and np.sum(sfr.right ** 2) > 0


def test_layer_is_sum_of_voices(voices):
    full = render_statistics_layer(constant_stats(), DroneSpec(), DUR, SR)
    total = voices[0].left + voices[1].left + voices[2].left
    assert np.allclose(full.left, total, rtol=0, atol=1e-12)


def test_bandwidth_widens_over_time():
    spec = DroneSpec()
    stats = constant_stats(bright=0.5)
    t, curves = drone_frequency_curves(stats, spec, 100.0)
    y = render_voice(spec.voices[1], t, curves[1], spec, 100.0, sr=8000)
    widths = []
    for start in (20, 45, 70, 90):
        bw, _ = fitted_bandwidth(y[start * 8000 : (start + 10) * 8000], 8000, 1000.0, 1 << 12)
        widths.append(bw)
    # expected roughly 50, 100, 150, 190 Hz
    assert all(b2 >= 0.9 * b1 for b1, b2 in zip(widths, widths[1:]))
    assert widths[-1] > 2.5 * widths[0]


def test_frequency_tracking_while_sharp():
    # Curve rises from 400 to 480 Hz over the first 5 % of the timeline,
    # i.e. while 1/Q is still below 0.01.
    sr, duration = 8000, 200.0
    grid = np.linspace(0, 1, 256)
    bright = np.interp(grid, [0.0, 0.05, 1.0], [0.2, 0.24, 0.24])
    stats = FeatureStats(grid, 0.5 * np.ones(256), 0.5 * np.ones(256), bright)
    spec = DroneSpec()
    t, curves = drone_frequency_curves(stats, spec, duration)
    y = render_voice(spec.voices[1], t, curves[1], spec, duration, n=int(12 * sr), sr=sr)
    for start in (0.0, 5.0):
        seg = y[int(start * sr) : int((start + 5) * sr)]
        f, p = signal.welch(seg, sr, nperseg=1 << 14)
        mid = start + 2.5
        want = np.interp(mid, t, curves[1])
        assert abs(f[np.argmax(p)] - want) <= 0.02 * want


def test_doubling_multipliers_doubles_peaks():
    stats = constant_stats()
    spec = DroneSpec()
    doubled = DroneSpec(voices=tuple(DroneVoice(v.feature, 2 * v.multiplier, v.position, v.seed) for v in spec.voices))
    for s, k in ((spec, 1), (doubled, 2)):
        buf = render_statistics_layer(stats, only(s, 0), 10.0, SR)
        f, p = signal.welch(buf.left[: 5 * SR], SR, nperseg=1 << 15)
        assert abs(f[np.argmax(p)] - 100.0 * k) <= 0.02 * 100.0 * k


def test_drone_is_deterministic():
    stats = constant_stats()
    a = render_statistics_layer(stats, DroneSpec(), 3.0, SR)
    b = render_statistics_layer(stats, DroneSpec(chunk_seconds=0.7), 3.0, SR)
    assert np.array_equal(a.left, b.left) and np.array_equal(a.right, b.right)


def test_extended_length_holds_final_values():
    buf = render_statistics_layer(constant_stats(), DroneSpec(), 2.0, SR, length=3 * SR)
    assert len(buf) == 3 * SR
    assert np.all(np.isfinite(buf.left))
