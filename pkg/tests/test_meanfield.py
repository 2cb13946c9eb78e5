import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bhdimer import meanfield
from bhdimer.meanfield import MeanFieldPoint, h_eff

J = 0.5


def test_h_eff_special_points():
    assert h_eff(MeanFieldPoint(0, 0, 1.3, J)) == pytest.approx(-J / 2)
    assert h_eff(MeanFieldPoint(0, math.pi, 1.3, J)) == pytest.approx(J / 2)
    assert h_eff(MeanFieldPoint(1, 0.4, 1.3, J)) == pytest.approx(1.3 / 2)
    assert h_eff(MeanFieldPoint(-1, 2.0, 1.3, J)) == pytest.approx(1.3 / 2)
    with pytest.raises(ValueError):
        MeanFieldPoint(1.01, 0, 1, J)
    with pytest.raises(ValueError):
        MeanFieldPoint(0, 0, -1, J)


@given(st.floats(-1, 1), st.floats(-10, 10), st.floats(0, 5))
def test_h_eff_even(I, phi, g):
    e = h_eff(MeanFieldPoint(I, phi, g, J))
    assert h_eff(MeanFieldPoint(-I, phi, g, J)) == e
    assert h_eff(MeanFieldPoint(I, -phi, g, J)) == e


def test_josephson_frequency():
    assert meanfield.josephson_frequency(J, 0) == J
    assert meanfield.josephson_frequency(J, 0.25 * 14) == pytest.approx(math.sqrt(7.25))
    assert meanfield.josephson_frequency(J, 0.25 * 14) == pytest.approx(2.6926, abs=1e-4)
    with pytest.raises(ValueError):
        meanfield.josephson_frequency(0, 1)


@given(st.floats(0, 100), st.floats(0, 100))
def test_josephson_frequency_monotone(g1, g2):
    lo, hi = sorted((g1, g2))
    assert meanfield.josephson_frequency(J, lo) <= meanfield.josephson_frequency(J, hi)


@given(st.integers(0, 500), st.floats(0.01, 2), st.floats(0, 2))
def test_sector_frequency_properties(N, J_, U):
    w = meanfield.sector_frequency(J_, U, N)
    assert w == meanfield.josephson_frequency(J_, U * N)
    w1 = meanfield.sector_frequency(J_, U, N + 1)
    assert w1**2 - w**2 == pytest.approx(4 * J_ * U, rel=1e-9, abs=1e-12)


def test_sector_frequency_examples():
    assert meanfield.sector_frequency(J, 0.25, 0) == J
    assert meanfield.sector_frequency(J, 0.25, 14) == pytest.approx(2.6926, abs=1e-4)
    np.testing.assert_allclose(meanfield.sector_frequency(J, 0.25, np.array([0, 14])), [J, math.sqrt(7.25)])
    assert meanfield.sector_frequency(J, 0.25, 14, form="bogoliubov") == pytest.approx(math.sqrt(0.25 + 0.5 * 0.25 * 14))
    with pytest.raises(ValueError):
        meanfield.sector_frequency(J, 0.25, -1)
    with pytest.raises(ValueError):
        meanfield.sector_frequency(J, 0.25, 3, form="other")


def test_linearization_free_limit():
    assert meanfield.linearization_check(J, 0.0, 1e-3) == pytest.approx(J, rel=1e-5)


def test_linearization_interacting_small_amplitude():
    # harmonic expansion of H_eff about (0, 0) in the time units fixed by the g = 0 limit
    w = meanfield.linearization_check(J, 3.5, 1e-3)
    assert w == pytest.approx(math.sqrt(J * J + 2 * J * 3.5), rel=1e-4)


def test_linearization_matches_josephson_frequency():
    w = meanfield.linearization_check(J, 3.5, 1e-3)
    assert w == pytest.approx(meanfield.josephson_frequency(J, 3.5), rel=1e-4)


def test_anharmonic_softening():
    ws = [meanfield.linearization_check(J, 1.0, d) for d in (0.01, 0.2, 0.4, 0.6)]
    assert all(a > b for a, b in zip(ws, ws[1:]))
    with pytest.raises(ValueError):
        meanfield.linearization_check(J, 1.0, 0.0)


def test_energy_conservation_per_period():
    g = 2.0
    period = 2 * math.pi / math.sqrt(J * J + 2 * J * g)
    assert meanfield.energy_drift(J, g, 0.3, 0.2, period) < 1e-10


def test_coupling_decay():
    np.testing.assert_allclose(meanfield.coupling_at([0, 100], 0.25, 14, 0.002),
                               [3.5, 3.5 * math.exp(-0.2)])
