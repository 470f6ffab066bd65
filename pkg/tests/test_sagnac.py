import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from wvrecycle.field import Grid, TransverseField, apply_momentum_kick
from wvrecycle.sagnac import (
    InterferometerParams,
    apply_bright_port,
    apply_dark_port,
    apply_loss,
    bright_port_probability,
    dark_port_probability,
    effective_gamma,
    filter_loss_estimate,
    filtered_return_amplitude,
    spatial_filter,
    which_path_weak_value,
    zeno_survival,
    zeno_survival_expansion,
)


def gauss_density(x):
    return math.exp(-x * x / 2) / math.sqrt(2 * math.pi)


def port_fraction_oracle(phi, ks, port):
    """Fraction of a unit Gaussian leaving a port, by adaptive quadrature."""
    trig = math.sin if port == "dark" else math.cos
    return quad(lambda x: trig(phi / 2 - ks * x) ** 2 * gauss_density(x), -40, 40, epsabs=1e-15,
                epsrel=1e-13, limit=200)[0]


def test_params_validation():
    with pytest.raises(ValueError, match=r"gamma ∈ \[0,1\)"):
        InterferometerParams(0.1, 1e-3, gamma=1.5)
    with pytest.raises(ValueError):
        InterferometerParams(math.nan, 1e-3)
    assert InterferometerParams(0.1, 2e-3, sigma=2.0).k == pytest.approx(1e-3)


def test_dark_port_full_transmission_at_pi(phi0):
    out = apply_dark_port(phi0, InterferometerParams(math.pi, 0.0))
    assert out.photons == pytest.approx(phi0.photons, abs=1e-12)


def test_dark_port_without_kick_is_scalar(phi0):
    p = InterferometerParams(0.7, 0.0)
    out = apply_dark_port(phi0, p)
    np.testing.assert_allclose(out.amp, 1j * math.sin(0.35) * phi0.amp, atol=1e-15)
    assert abs(out.moment(1)) < 1e-12


def test_dark_port_power_matches_oracle(phi0):
    p = InterferometerParams(0.1, 1e-3)
    expected = 0.5 * (1 - math.cos(0.1) * math.exp(-2e-6))
    assert port_fraction_oracle(0.1, 1e-3, "dark") == pytest.approx(expected, rel=1e-10)
    assert apply_dark_port(phi0, p).photons == pytest.approx(expected, abs=1e-9)
    assert dark_port_probability(p) == pytest.approx(expected, rel=1e-12)


def test_bright_port_identity_and_probability(phi0):
    assert apply_bright_port(phi0, InterferometerParams(0.0, 0.0)).photons == pytest.approx(1.0, abs=1e-12)
    p = InterferometerParams(0.1, 1e-3)
    assert apply_bright_port(phi0, p).photons == pytest.approx(bright_port_probability(p), abs=1e-9)


@pytest.mark.parametrize("phi,ks,expected", [(0.0, 0.0, 1.0), (math.pi / 2, 0.0, 0.5)])
def test_bright_port_probability_values(phi, ks, expected):
    assert bright_port_probability(InterferometerParams(phi, ks)) == pytest.approx(expected, abs=1e-15)


def test_bright_probability_matches_quadrature(phi0):
    p = InterferometerParams(0.1, 0.01)
    assert bright_port_probability(p) == pytest.approx(port_fraction_oracle(0.1, 0.01, "bright"), abs=1e-12)
    assert bright_port_probability(p) == pytest.approx(apply_bright_port(phi0, p).photons, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(phi=st.floats(0, 2 * math.pi), ks=st.floats(-2, 2), tilt=st.floats(-3, 3),
       shift=st.floats(-2, 2))
def test_port_completeness(phi0, phi, ks, tilt, shift):
    f = TransverseField(phi0.grid, np.roll(apply_momentum_kick(phi0, tilt).amp, int(shift * 100)))
    p = InterferometerParams(phi, ks)
    total = apply_bright_port(f, p).photons + apply_dark_port(f, p).photons
    assert total == pytest.approx(f.photons, rel=1e-12)


@pytest.mark.parametrize("phi", [0.05, 0.1, 0.5, 2.0])
def test_port_probabilities_sum_to_one(phi0, phi):
    p = InterferometerParams(phi, 0.01)
    assert apply_bright_port(phi0, p).photons + apply_dark_port(phi0, p).photons == pytest.approx(1.0, abs=1e-10)


def test_weak_value_values():
    assert which_path_weak_value(math.pi) == pytest.approx(0, abs=1e-15)
    assert which_path_weak_value(math.pi / 2) == pytest.approx(-1j, abs=1e-15)
    wv = which_path_weak_value(0.2)
    # oracle: 50-digit cot
    exact = -float(mpmath.cot(mpmath.mpf("0.1")))
    assert wv.real == 0
    assert wv.imag == pytest.approx(exact, rel=1e-14)
    assert wv.imag == pytest.approx(-9.9666, abs=1e-3)
    assert abs(wv.imag / -10.0 - 1) == pytest.approx(0.0033, abs=1e-4)


@pytest.mark.parametrize("phi", [0.0, 2 * math.pi, -0.1])
def test_weak_value_rejects_singular(phi):
    with pytest.raises(ValueError, match="postselection singular"):
        which_path_weak_value(phi)


@settings(max_examples=100)
@given(st.floats(1e-6, math.pi - 1e-6))
def test_weak_value_negative_imaginary(phi):
    assert which_path_weak_value(phi).imag < 0


@pytest.mark.parametrize("phi", [1e-2, 1e-3])
def test_weak_value_small_angle_limit(phi):
    assert abs(which_path_weak_value(phi)) * phi / 2 == pytest.approx(1.0, rel=1e-4)


def test_zeno_exactly_one_without_kick():
    assert zeno_survival(InterferometerParams(0.7, 0.0)) == 1.0


def test_zeno_expansion():
    p = InterferometerParams(0.1, 0.01)
    # oracle: closed form at 40 digits
    with mpmath.workdps(40):
        kk = mpmath.mpf("0.01") ** 2
        c2 = mpmath.cos(mpmath.mpf("0.05")) ** 2
        exact = c2 / (mpmath.sinh(kk) + c2 * mpmath.exp(-kk))
        series = 1 - mpmath.mpf("0.05") ** 2 * kk - kk**2 / 2
        assert abs(exact - series) < 5e-8
    assert zeno_survival(p) == pytest.approx(float(exact), abs=1e-15)
    assert abs(zeno_survival(p) - zeno_survival_expansion(p)) < 5e-8


def test_zeno_matches_definition_quadrature(phi0):
    p = InterferometerParams(0.1, 0.01)
    # oracle: |<phi0|M+ phi0>|^2 / P+ with both integrals by adaptive quadrature
    overlap = quad(lambda x: math.cos(0.05 - 0.01 * x) * gauss_density(x), -40, 40, epsabs=1e-15)[0]
    oracle = overlap**2 / port_fraction_oracle(0.1, 0.01, "bright")
    assert zeno_survival(p) == pytest.approx(oracle, abs=1e-12)
    bright = apply_bright_port(phi0, p)
    _, survival = spatial_filter(bright, phi0)
    assert survival == pytest.approx(zeno_survival(p), abs=1e-10)
    # also against the normalised overlap built by hand
    normed = bright.normalized()
    assert abs(np.vdot(phi0.amp * phi0.grid.weights, normed.amp)) ** 2 == pytest.approx(zeno_survival(p), abs=1e-9)


def test_zeno_monotone_in_kick():
    for phi in (0.1, 0.5, 1.2):
        ladder = [zeno_survival(InterferometerParams(phi, ks)) for ks in np.linspace(0, 2, 41)]
        assert all(0 < v <= 1 for v in ladder)
        assert all(b < a for a, b in zip(ladder, ladder[1:]))


def test_filter_loss_estimate_is_leading_order():
    p = InterferometerParams(0.1, 1e-3)
    exact = effective_gamma(p)
    assert exact == pytest.approx(1 - zeno_survival(p), rel=1e-6)
    # leading term is really tan^2(phi/2) k^2 sigma^2; the estimate drops O(phi^2)
    assert exact == pytest.approx(filter_loss_estimate(p), rel=3e-3)
    assert effective_gamma(p, exact=False) == filter_loss_estimate(p)
    assert effective_gamma(p.with_(filter_enabled=False)) == 0.0


def test_return_amplitude_identity():
    for p in (InterferometerParams(0.1, 1e-3, 1e-4), InterferometerParams(0.7, 0.3, 0.05)):
        expected = math.sqrt((1 - effective_gamma(p)) * bright_port_probability(p))
        assert filtered_return_amplitude(p) == pytest.approx(expected, rel=1e-13)


def test_spatial_filter_limits(phi0):
    out, survival = spatial_filter(phi0, phi0)
    assert survival == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(out.amp, phi0.amp, atol=1e-13)
    odd = phi0.multiply(phi0.grid.x)
    out, survival = spatial_filter(odd, phi0)
    assert survival == pytest.approx(0.0, abs=1e-12)


def test_spatial_filter_keeps_phase_and_power(phi0):
    f = apply_momentum_kick(phi0, 0.3).scaled(2j)
    out, survival = spatial_filter(f, phi0)
    assert out.photons == pytest.approx(survival * f.photons, rel=1e-12)
    assert np.angle(out.amp[len(out.amp) // 2]) == pytest.approx(math.pi / 2, abs=1e-12)


def test_spatial_filter_errors(phi0):
    with pytest.raises(ValueError, match="zero-power"):
        spatial_filter(phi0.scaled(0.0), phi0)
    with pytest.raises(ValueError, match="unit-normalised"):
        spatial_filter(phi0, phi0.scaled(2.0))


def test_loss(phi0):
    assert apply_loss(phi0, 0.0) is phi0
    assert apply_loss(phi0, 0.5).photons == pytest.approx(0.5, abs=1e-12)
    assert apply_loss(apply_loss(phi0, 0.3), 0.3).photons == pytest.approx(0.49, abs=1e-12)
    for bad in (-0.1, 1.0):
        with pytest.raises(ValueError):
            apply_loss(phi0, bad)
