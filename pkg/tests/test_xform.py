import math
import warnings
from unittest.mock import patch

import numpy as np
import pytest
from scipy.integrate import IntegrationWarning

from mscale_spectral_lab.errors import QuadratureError
from mscale_spectral_lab.hermite_core import PI_QUARTER, HermiteBasis
from mscale_spectral_lab.mscale_net import forward, init_params
from mscale_spectral_lab.spectral_model import SpectralState, evaluate_spectral, scale_spec
from mscale_spectral_lab.xform import (
    TargetSpec,
    error_hat,
    fourier_quadrature_oracle,
    hermite_to_physical,
    network_hat,
    target_hat,
)


@pytest.fixture
def target():
    """The standard target sin(4.2πx) + cos(5.8πx) on [−1, 1]."""
    return TargetSpec(a=4.2, b=5.8, beta=1.0)


@pytest.fixture
def small_network():
    """A width-40 network (two scales, 20 neurons each) with biases."""
    return init_params(scale_spec(1), 20, seed=11)


def test_target_evaluation(target):
    """Test f(0) = 1 and the ridge evaluation of vector inputs."""
    assert target(0.0) == pytest.approx(1.0)
    points = np.array([[0.25, 0.25, 0.25], [0.0, 0.0, 0.0]])
    np.testing.assert_allclose(target(points), [target(0.25), 1.0])
    with pytest.raises(ValueError, match="beta"):
        TargetSpec(1.0, 1.0, 0.0)


def test_target_hat_at_zero(target):
    """Test f̂(0) = 2 sin(5.8π)/(5.8π) ≈ −0.064517 with zero imaginary part."""
    value = target_hat(0.0, target)

    assert value.real == pytest.approx(-0.064517, abs=1e-6)
    assert value.imag == 0.0


def test_target_hat_conjugate_symmetry(target):
    """Test f̂(−ξ) = conj f̂(ξ), including the removable points 2ξ = a and 2ξ = b."""
    xi = np.concatenate([np.linspace(0.0, 10.0, 201), [2.1, 2.9]])

    np.testing.assert_allclose(target_hat(-xi, target), np.conj(target_hat(xi, target)), atol=1e-14)
    assert np.all(np.isfinite(target_hat(np.array([2.1, 2.9]), target)))


@pytest.mark.parametrize("xi", [0.0, 0.37, 2.1, 2.9, 2.9 + 1e-6, -4.5, 9.75])
def test_target_hat_matches_oracle(target, xi):
    """Test the closed form against adaptive Fourier quadrature to 1e-8."""
    oracle = fourier_quadrature_oracle(target, (-1.0, 1.0), xi)

    assert abs(target_hat(xi, target) - oracle) < 1e-8


def test_network_hat_matches_oracle(small_network):
    """
    Test the closed-form network transform against quadrature of the forward pass,
    including frequencies placed on and next to a neuron resonance 2πξ = α_jθ.
    """
    frequency = small_network.neuron_scales[3] * small_network.inner_weights[3, 0]
    resonant = frequency / (2 * math.pi)
    grid = [0.0, 0.4, -1.1, 2.5, resonant, resonant * (1 + 1e-6), -resonant]

    values = network_hat(np.array(grid), small_network, 1.0)

    for xi, value in zip(grid, values):
        oracle = fourier_quadrature_oracle(lambda x: forward(small_network, x), (-1.0, 1.0), xi)
        assert abs(value - oracle) < 1e-7


def test_network_hat_conjugate_symmetry(small_network):
    """Test N̂(−ξ) = conj N̂(ξ) on a symmetric grid."""
    xi = np.linspace(0.0, 8.0, 161)
    positive = network_hat(xi, small_network, 1.0)
    negative = network_hat(-xi, small_network, 1.0)

    np.testing.assert_allclose(negative, np.conj(positive), atol=1e-12)


def test_network_hat_without_bias_is_imaginary():
    """Test that an odd, bias-free network has a purely imaginary transform."""
    params = init_params(scale_spec(2), 15, seed=4, has_bias=False)
    values = network_hat(np.linspace(-6.0, 6.0, 121), params, 1.0)

    assert np.abs(values.real).max() <= 1e-12
    assert np.abs(values.imag).max() > 0.0


def test_network_hat_rejects_vector_inputs():
    """Test that d > 1 networks raise ValueError."""
    params = init_params(scale_spec(1, dim=2), 4, seed=0)
    with pytest.raises(ValueError, match="d = 1"):
        network_hat(np.array([0.0]), params, 1.0)


def test_error_hat_parity(small_network, target):
    """Test that the training error has an even real part and an odd imaginary part."""
    xi = np.linspace(-5.0, 5.0, 101)
    profile = error_hat(xi, small_network, target)

    np.testing.assert_allclose(profile.real_part, profile.real_part[::-1], atol=1e-12)
    np.testing.assert_allclose(profile.imag_part, -profile.imag_part[::-1], atol=1e-12)
    np.testing.assert_allclose(
        profile.values, network_hat(xi, small_network, 1.0) - target_hat(xi, target)
    )


def test_hermite_to_physical_gaussian():
    """
    Test that the e_0 state inverts to (√(2π)/λ)π^{-1/4}e^{−2π²x²/λ²} and that zero
    coefficients give zero.
    """
    basis = HermiteBasis(6, 1.3)
    U_plus = np.zeros(basis.size)
    U_plus[0] = 1.0
    state = SpectralState(U_plus, np.zeros(basis.size), 0.0, basis.lam)
    x = np.linspace(-1.0, 1.0, 21)

    expected = math.sqrt(2 * math.pi) / basis.lam * PI_QUARTER * np.exp(
        -2 * math.pi**2 * x**2 / basis.lam**2
    )
    np.testing.assert_allclose(hermite_to_physical(state, basis, x), expected, atol=1e-13)
    assert not np.any(hermite_to_physical(SpectralState.zeros(basis), basis, x))


def test_hermite_to_physical_round_trip():
    """
    Test that the Fourier transform of the physical error reproduces the Hermite
    synthesis to 1e-6.
    """
    basis = HermiteBasis(12, 1.0)
    rng = np.random.default_rng(5)
    state = SpectralState(rng.standard_normal(13), rng.standard_normal(13), 0.0, basis.lam)
    xi = np.array([0.0, 0.7, -1.3, 2.0])

    synthesized = evaluate_spectral(state, basis, xi).values
    for value, frequency in zip(synthesized, xi):
        oracle = fourier_quadrature_oracle(
            lambda x: hermite_to_physical(state, basis, x), (-4.0, 4.0), frequency
        )
        assert abs(oracle - value) < 1e-6


def test_oracle_examples():
    """Test the oracle on constants and on cos(bπx) at ξ = 0."""
    assert fourier_quadrature_oracle(lambda x: 1.0, (-1.0, 1.0), 0.0) == pytest.approx(2.0)
    assert abs(fourier_quadrature_oracle(lambda x: 1.0, (-1.0, 1.0), 1.0)) < 1e-10

    b = 5.8
    value = fourier_quadrature_oracle(lambda x: math.cos(b * math.pi * x), (-1.0, 1.0), 0.0)
    assert value == pytest.approx(2 * math.sin(b * math.pi) / (b * math.pi), abs=1e-10)


def test_oracle_reports_non_convergence():
    """
    Test that a QUADPACK integration warning surfaces as QuadratureError.

    `quad` is patched to emit the warning QUADPACK raises when it cannot reach the
    requested tolerance.
    """

    def failing_quad(*args, **kwargs):
        warnings.warn("maximum number of subdivisions reached", IntegrationWarning)
        return 0.0, 1.0

    with patch("mscale_spectral_lab.xform.quad", side_effect=failing_quad):
        with pytest.raises(QuadratureError, match="did not converge"):
            fourier_quadrature_oracle(lambda x: 1.0, (-1.0, 1.0), 0.5)
