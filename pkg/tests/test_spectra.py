import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.signal import argrelmin

from istms.errors import DomainError, InstabilityError
from istms.params import SystemParams
from istms.spectra import (
    Spectrum,
    dos_curves,
    dos_left,
    dos_right,
    heating_rate,
    mixing_coefficients,
    purcell_left_rate,
    purcell_standard_rate,
    spectrum_db,
    squeezing_curve,
    squeezing_spectrum,
    susceptibility,
)

OP = SystemParams(g=1.0, J=10.0, lam=0.45)


def test_squeezing_examples():
    w = np.linspace(-10, 10, 101)
    assert np.all(squeezing_spectrum(w, SystemParams(chi=0.3)) == 0.5)
    assert squeezing_spectrum(0.0, SystemParams(chi=1e-12, lam=0.25)) == pytest.approx(1 / 18, rel=1e-12)
    assert squeezing_spectrum(0.0, SystemParams(chi=0.5, lam=0.25)) == pytest.approx(5 / 26, rel=1e-14)
    with pytest.raises(InstabilityError):
        squeezing_spectrum(0.0, SystemParams(chi=0.1, lam=0.5))


def test_spectrum_db_examples():
    assert spectrum_db(1.3, SystemParams(chi=0.2)) == 0.0
    assert spectrum_db(0.0, SystemParams(chi=1e-12, lam=0.25)) == pytest.approx(10 * math.log10(1 / 9), rel=1e-10)
    assert spectrum_db(0.0, SystemParams(chi=1e-12, lam=0.25)) == pytest.approx(-9.54, abs=5e-3)
    w = np.linspace(0, 10, 57)
    p = SystemParams(chi=0.7, lam=0.3)
    assert np.allclose(spectrum_db(w, p), spectrum_db(-w, p), rtol=0, atol=1e-14)


@settings(max_examples=50)
@given(st.floats(0.0, 3.0), st.floats(1e-3, 0.499))
def test_spectrum_below_vacuum(chi, lam):
    s = squeezing_spectrum(np.linspace(-10, 10, 1000), SystemParams(chi=chi, lam=lam))
    assert np.all(s < 0.5) and np.all(s > 0)


def test_spectrum_minima():
    w = np.linspace(-10, 10, 20001)
    two = squeezing_spectrum(w, SystemParams(chi=1.0, lam=0.25))
    mins = w[argrelmin(two)[0]]
    assert len(mins) == 2
    assert np.allclose(np.abs(mins), 1.0, atol=0.1)
    one = squeezing_spectrum(w, SystemParams(chi=0.1, lam=0.25))
    mins = w[argrelmin(one)[0]]
    assert len(mins) == 1 and abs(mins[0]) < 1e-9


def test_susceptibility_examples():
    p = SystemParams(J=10.0)
    chi0 = susceptibility(0.0, p)
    assert chi0[0, 0] == 0
    assert chi0[1, 1] == pytest.approx(1 / 100, rel=1e-14)
    m = susceptibility(np.linspace(-20, 20, 33), p)
    assert m.shape == (33, 2, 2)
    assert np.array_equal(m[:, 0, 1], m[:, 1, 0])


def test_susceptibility_matches_dos():
    p = SystemParams(J=5.0)
    w = np.random.default_rng(7).uniform(-10, 10, 200)
    m = susceptibility(w, p)
    assert np.allclose(m[:, 0, 0].real, dos_right(w, p) / 2, rtol=0, atol=1e-12)
    assert np.allclose(m[:, 1, 1].real, dos_left(w, p) / 2, rtol=0, atol=1e-12)


def test_dos_examples():
    p = SystemParams(J=5.0)
    assert dos_right(0.0, p) == 0.0
    assert dos_right(5.0, p) == pytest.approx(2.0, rel=1e-14)
    assert dos_left(0.0, p) == pytest.approx(2 / 25, rel=1e-14)


def test_dos_shape():
    p = SystemParams(J=5.0)
    right, left = dos_curves(p)
    assert len(right.omega_grid) == 4001 and right.omega_grid[-1] == 10.0
    assert np.all(right.values >= 0) and np.all(left.values >= 0)
    peaks = right.omega_grid[np.argsort(right.values)[-2:]]
    assert sorted(peaks) == pytest.approx([-5.0, 5.0], abs=1e-9)
    # the right-cavity density vanishes at the qubit while the left one does not
    assert right.values[2000] == 0.0 and left.values[2000] > 0


def test_mixing_coefficients():
    m = mixing_coefficients(SystemParams(g=1.0, J=10.0))
    assert m.sigma_plus == 0
    assert m.sigma_minus_even == pytest.approx(-1 / (math.sqrt(2) * 10), rel=1e-14)
    m = mixing_coefficients(OP)
    assert m.sigma_minus_even == -m.sigma_minus_odd
    assert abs(m.sigma_minus_right) < 1e-12
    assert m.sigma_plus_right == pytest.approx(0.0045 / (1 + 0.45**2 / 100), rel=1e-12)
    assert m.sigma_plus_right == pytest.approx(4.49e-3, abs=5e-6)


@settings(max_examples=50)
@given(st.floats(0.01, 3.0), st.floats(1.0, 50.0), st.floats(0.0, 0.49))
def test_right_cavity_cancellation(g, J, lam):
    assert abs(mixing_coefficients(SystemParams(g=g, J=J, lam=lam)).sigma_minus_right) < 1e-12


def test_rates():
    assert heating_rate(SystemParams(g=1.0, J=10.0)) == 0.0
    assert heating_rate(OP) == pytest.approx(0.0045**2, rel=1e-12)
    assert heating_rate(OP) == pytest.approx(2.03e-5, abs=5e-8)
    assert purcell_left_rate(OP) == 0.0
    p = OP.replace(kappa_left_int=0.01)
    assert purcell_left_rate(p) == pytest.approx(1e-4, rel=1e-12)
    assert purcell_standard_rate(p) / purcell_left_rate(p) == pytest.approx(100.0, rel=1e-12)


@settings(max_examples=50)
@given(st.floats(0.01, 3.0), st.floats(1.0, 50.0), st.floats(0.0, 0.4999))
def test_heating_suppressed(g, J, lam):
    p = SystemParams(g=g, J=J, lam=lam)
    assert heating_rate(p) / ((g / J) ** 2) < (1 / (2 * J)) ** 2


def test_spectrum_type():
    s = squeezing_curve(SystemParams(chi=0.1, lam=0.2))
    assert s.kind == "squeezing" and len(s.values) == 2001
    assert s.omega_grid[0] == -10.0 and s.omega_grid[-1] == 10.0
    assert squeezing_curve(SystemParams(chi=0.1, lam=0.2), db=True).kind == "squeezing_db"
    with pytest.raises(DomainError):
        Spectrum(np.array([0.0, 0.0]), np.zeros(2), "squeezing")
    with pytest.raises(DomainError):
        Spectrum(np.array([0.0, 1.0]), np.zeros(2), "nope")
