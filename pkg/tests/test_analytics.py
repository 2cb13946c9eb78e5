import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bhdimer import analytics, meanfield

J, U = 0.5, 0.25


def test_gaussian_histogram_table():
    P = analytics.gaussian_histogram(14, 20)
    raw = [math.exp(-((n - 14) ** 2) / (2 * math.sqrt(14))) for n in range(21)]
    np.testing.assert_allclose(P, np.array(raw) / sum(raw), rtol=1e-14)
    assert int(np.argmax(P)) == 14


def test_gaussian_histogram_width():
    # far from the cut the discrete variance equals sqrt(n_mean)
    P = analytics.gaussian_histogram(14, 60)
    n = np.arange(61)
    mean = P @ n
    std = math.sqrt(P @ (n - mean) ** 2)
    assert std == pytest.approx(14**0.25, rel=1e-9)
    assert std < math.sqrt(14)


@given(st.floats(1, 60))
def test_gaussian_histogram_normalized_unimodal(nbar):
    P = analytics.gaussian_histogram(nbar, 80)
    assert P.sum() == pytest.approx(1, abs=1e-12)
    k = int(np.argmax(P))
    assert k == int(np.floor(nbar + 0.5)) or abs(k - nbar) == pytest.approx(0.5)
    assert np.all(np.diff(P[: k + 1]) >= 0) and np.all(np.diff(P[k:]) <= 0)


def test_gaussian_histogram_rejects():
    with pytest.raises(ValueError):
        analytics.gaussian_histogram(0, 20)


def test_predicted_decay_time():
    tau = analytics.predicted_decay_time(J, U, 14)
    assert tau**2 == pytest.approx(4 * 7.25 / (J**2 * U**2 * math.sqrt(14)))
    assert tau == pytest.approx(22.27, abs=0.01)
    assert tau / (2 * math.pi / J) == pytest.approx(1.77, abs=0.01)
    assert analytics.predicted_decay_time(J, 0.0, 14) == math.inf
    with pytest.raises(ValueError):
        analytics.predicted_decay_time(J, U, 0)


def test_predicted_decay_time_scaling():
    r = analytics.predicted_decay_time(J, U, 2e8) / analytics.predicted_decay_time(J, U, 1e8)
    assert r == pytest.approx(2**0.25, rel=1e-6)


def test_resonance_width():
    assert analytics.resonance_width(1 / math.sqrt(2), 16, 0.25) == pytest.approx(math.sqrt(4 / math.sqrt(2) / 0.25))


def test_reconstruct_single_sector():
    t = np.linspace(0, 200, 4001)
    P = np.zeros(21)
    P[14] = 1
    s = analytics.reconstruct_current(P, J, U, t)
    np.testing.assert_allclose(s, np.sin(math.sqrt(7.25) * t), atol=1e-12)
    w = math.sqrt(7.25)
    period = 2 * math.pi / w
    a = analytics.reconstruct_current(P, J, U, t)
    b = analytics.reconstruct_current(P, J, U, t + period)
    np.testing.assert_allclose(a, b, atol=1e-12)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=30).filter(lambda x: sum(x) > 0))
def test_reconstruct_zero_at_origin(w):
    P = np.array(w) / sum(w)
    for mode in ("frozen", "shifted"):
        assert analytics.reconstruct_current(P, J, U, [0.0], mode=mode, decay_rate=0.01)[0] == 0


def test_reconstruct_two_sector_beat():
    t = np.linspace(0, 300, 6001)
    P = np.zeros(21)
    P[10] = P[11] = 0.5
    w10, w11 = meanfield.sector_frequency(J, U, np.array([10, 11]))
    s = analytics.reconstruct_current(P, J, U, t)
    beat = np.sin(0.5 * (w10 + w11) * t) * np.cos(0.5 * (w11 - w10) * t)
    np.testing.assert_allclose(s, beat, atol=1e-12)


def test_reconstruct_modes():
    t = np.linspace(0, 50, 501)
    P = analytics.gaussian_histogram(14, 20)
    frozen = analytics.reconstruct_current(P, J, U, t, mode="frozen", decay_rate=0.002)
    shifted = analytics.reconstruct_current(P, J, U, t, mode="shifted", decay_rate=0.0)
    np.testing.assert_allclose(frozen, shifted)
    exact = analytics.reconstruct_current(np.tile(P, (t.size, 1)), J, U, t, mode="exact")
    np.testing.assert_allclose(exact, frozen, atol=1e-12)
    ref = 3.0 * frozen - 0.1
    scaled = analytics.reconstruct_current(P, J, U, t, reference=ref)
    k = int(np.argmax(np.abs(frozen)))
    np.testing.assert_allclose(scaled, (scaled[k] / frozen[k]) * frozen, atol=1e-12)
    # matched at the first extremum of the reference about its median
    x = ref - np.median(ref)
    k = next(i for i in range(1, t.size - 1) if abs(x[i]) >= abs(x[i - 1]) and abs(x[i]) > abs(x[i + 1]))
    assert scaled[k] == pytest.approx(x[k], rel=1e-12)
    with pytest.raises(ValueError):
        analytics.reconstruct_current([], J, U, t)
    with pytest.raises(ValueError):
        analytics.reconstruct_current(P, J, U, t, mode="exact")


def test_cross_correlation():
    x = np.sin(np.linspace(0, 20, 300))
    assert analytics.normalized_cross_correlation(x, 2 * x + 1) == pytest.approx(1)
    assert analytics.normalized_cross_correlation(x, -x) == pytest.approx(-1)


@settings(max_examples=15, deadline=None)
@given(A=st.floats(0.1, 5), tau=st.floats(8, 40), w=st.floats(1.0, 4.0), ph=st.floats(-3, 3))
def test_fit_recovers_forward_model(A, tau, w, ph):
    t = np.arange(0, 3 * tau, 2 * math.pi / w / 64)
    y = A * np.exp(-((t / tau) ** 2)) * np.sin(w * t + ph)
    fit = analytics.fit_envelope(t, y, baseline=False, window_end=t[-1])
    assert fit.amplitude == pytest.approx(A, rel=1e-6)
    assert fit.tau == pytest.approx(tau, rel=1e-6)
    assert fit.omega == pytest.approx(w, rel=1e-6)
    assert fit.residual < 1e-6


def test_fit_with_offset():
    t = np.arange(0, 80, 0.05)
    y = 0.5 * np.exp(-((t / 15) ** 2)) * np.sin(1.4 * t + 0.3) - 0.02
    fit = analytics.fit_envelope(t, y, baseline=True, window_end=t[-1])
    assert fit.offset == pytest.approx(-0.02, rel=1e-6)
    assert fit.tau == pytest.approx(15, rel=1e-6)


def test_fit_pure_sinusoid_not_decayed():
    t = np.arange(0, 60, 0.02)
    fit = analytics.fit_envelope(t, np.sin(2.0 * t), baseline=False)
    assert not fit.decayed
    assert fit.tau > t[-1]


def test_fit_ambiguous_carrier():
    t = np.arange(0, 100, 0.05)
    with pytest.raises(analytics.FitError):
        analytics.fit_envelope(t, np.sin(1.0 * t) + np.sin(3.0 * t))
    with pytest.raises(analytics.FitError):
        analytics.fit_envelope(t[:10], np.sin(t[:10]))


def test_revivals_of_beat():
    P = np.zeros(21)
    P[10] = P[11] = 0.5
    w10, w11 = meanfield.sector_frequency(J, U, np.array([10, 11]))
    beat = 2 * math.pi / (w11 - w10)
    t = np.arange(0, 3.6 * beat, 2 * math.pi / w11 / 64)
    s = analytics.reconstruct_current(P, J, U, t)
    fit = analytics.fit_envelope(t, s, baseline=False)
    rev = analytics.revival_detector(t, s, fit)
    assert len(rev) == 3
    np.testing.assert_allclose([r[0] for r in rev], beat * np.arange(1, 4), rtol=5e-3)
    assert all(a > 0.9 * fit.amplitude for _, a in rev)


def test_no_revival_for_monotone_decay():
    t = np.arange(0, 200, 0.05)
    y = np.exp(-((t / 20) ** 2)) * np.sin(2.0 * t)
    fit = analytics.fit_envelope(t, y, baseline=False)
    assert analytics.revival_detector(t, y, fit) == []


def test_gaussian_histogram_revival_time():
    nbar = 14
    P = analytics.gaussian_histogram(nbar, 40)
    t_rev = analytics.revival_time_estimate(J, U, nbar)
    t = np.arange(0, 1.6 * t_rev, 2 * math.pi / math.sqrt(7.25) / 64)
    s = analytics.reconstruct_current(P, J, U, t)
    fit = analytics.fit_envelope(t, s, baseline=False)
    rev = analytics.revival_detector(t, s, fit)
    assert rev
    assert rev[0][0] == pytest.approx(t_rev, rel=0.05)
