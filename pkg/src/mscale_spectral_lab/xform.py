import math
import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import QuadratureError
from .hermite_core import eval_hermite_functions
from .spectral_model import FrequencyProfile

# Relative width of the band around α_jθ = ±2πξ handled by the resonant branch.
RESONANCE_EPSILON = 1.0e-8

# Frequencies per block in network_hat.
XI_CHUNK = 64

# i^k for k mod 4.
_I_POWERS = np.array([1.0, 1.0j, -1.0, -1.0j])


@dataclass(frozen=True)
class TargetSpec:
    """
    Fitting target f(x) = sin(aπx) + cos(bπx) on [−β, β].

    For vector inputs the target is the ridge f(mean(x)).
    """

    a: float
    b: float
    beta: float

    def __post_init__(self):
        if not self.beta > 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            x = x.mean(axis=1)
        return np.sin(self.a * math.pi * x) + np.cos(self.b * math.pi * x)


def _sin_over_pi(z, beta):
    """sin(zβπ)/(zπ), continuous through z = 0."""
    return beta * np.sinc(z * beta)


def target_hat(xi, spec):
    """
    Fourier transform ∫_{−β}^{β} f(x) e^{−2πiξx} dx of the zero-extended target.

    Real part: sin((b+2ξ)βπ)/((b+2ξ)π) + sin((b−2ξ)βπ)/((b−2ξ)π).
    Imaginary part: sin((a+2ξ)βπ)/((a+2ξ)π) − sin((a−2ξ)βπ)/((a−2ξ)π).
    The removable singularities at 2ξ = ±a, ±b take their limiting values.
    """
    xi = np.asarray(xi, dtype=float)
    beta = spec.beta
    real = _sin_over_pi(spec.b + 2.0 * xi, beta) + _sin_over_pi(spec.b - 2.0 * xi, beta)
    imag = _sin_over_pi(spec.a + 2.0 * xi, beta) - _sin_over_pi(spec.a - 2.0 * xi, beta)
    return real + 1j * imag


def _sinc(z):
    """sin(z)/z with the limit 1 at z = 0."""
    return np.sinc(z / math.pi)


def network_hat(xi, params, beta):
    """
    Fourier transform ∫_{−β}^{β} N_s(x) e^{−2πiξx} dx of the zero-extended network (d = 1).

    Each neuron with frequency w = α_jθ, phase b and κ = 2πξ contributes
    α_j/√N · (S + C) with

        S = iκ·[sin(b−wβ)·e^{iκβ} − sin(b+wβ)·e^{−iκβ}] / (w² − κ²)
        C = [w·cos(b−wβ)·e^{iκβ} − w·cos(b+wβ)·e^{−iκβ}] / (w² − κ²).

    Where |w² − κ²| ≤ 1e-8·(w² + κ²) the equivalent resonant form
    (1/2i)[e^{ib}·2β·sinc((w−κ)β) − e^{−ib}·2β·sinc((w+κ)β)] is used instead.

    Raises:
        ValueError: If the network input dimension is not 1.
    """
    if params.spec.dim != 1:
        raise ValueError(f"network transforms support d = 1 only, got d = {params.spec.dim}")

    xi = np.asarray(xi, dtype=float)
    flat = xi.reshape(-1)
    w = params.neuron_scales * params.inner_weights[:, 0]
    b = params.biases
    outer = params.neuron_scales / math.sqrt(params.width)

    result = np.empty(flat.shape, dtype=complex)
    for start in range(0, flat.size, XI_CHUNK):
        kappa = 2.0 * math.pi * flat[start : start + XI_CHUNK, None]
        ww = w[None, :]
        denominator = ww**2 - kappa**2
        resonant = np.abs(denominator) <= RESONANCE_EPSILON * (ww**2 + kappa**2)
        safe = np.where(resonant, 1.0, denominator)

        forward_phase = np.exp(-1j * kappa * beta)
        backward_phase = np.exp(1j * kappa * beta)
        s_term = (
            1j
            * kappa
            * (np.sin(b - ww * beta) * backward_phase - np.sin(b + ww * beta) * forward_phase)
            / safe
        )
        c_term = (
            ww * np.cos(b - ww * beta) * backward_phase
            - ww * np.cos(b + ww * beta) * forward_phase
        ) / safe
        regular = s_term + c_term

        if np.any(resonant):
            limit = (
                np.exp(1j * b) * 2.0 * beta * _sinc((ww - kappa) * beta)
                - np.exp(-1j * b) * 2.0 * beta * _sinc((ww + kappa) * beta)
            ) / 2j
            regular = np.where(resonant, limit, regular)

        result[start : start + XI_CHUNK] = regular @ outer

    return result.reshape(xi.shape)


def error_hat(xi_grid, params, target):
    """Training error in frequency, η̂_NN = N̂_s − f̂, split into real and imaginary parts."""
    xi_grid = np.asarray(xi_grid, dtype=float)
    values = network_hat(xi_grid, params, target.beta) - target_hat(xi_grid, target)
    return FrequencyProfile(xi_grid=xi_grid, real_part=values.real, imag_part=values.imag)


def hermite_to_physical(state, basis, x_grid):
    """
    Inverse Fourier transform of a Hermite expansion,

        η(x) = (√(2π)/λ) Σ_k (U^+_k + iU^−_k) i^k Ĥ_k(2πx/λ).

    Returns:
        np.ndarray: Complex values on ``x_grid``.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    k = np.arange(basis.size)
    coefficients = (state.U_plus + 1j * state.U_minus) * _I_POWERS[k % 4]
    functions = eval_hermite_functions(2.0 * math.pi * x_grid / basis.lam, basis.order_p)
    return math.sqrt(2.0 * math.pi) / basis.lam * (coefficients @ functions)


def _oscillatory_integral(g, lower, upper, omega, weight, tol):
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            if omega == 0.0:
                if weight == "sin":
                    return 0.0
                value, _ = quad(g, lower, upper, epsabs=tol, epsrel=0.0, limit=500)
            else:
                value, _ = quad(
                    g, lower, upper, weight=weight, wvar=omega, epsabs=tol, epsrel=0.0, limit=500
                )
        except IntegrationWarning as e:
            raise QuadratureError(
                f"Fourier quadrature on [{lower}, {upper}] at omega={omega} did not converge: {e}"
            ) from e
    return value


def fourier_quadrature_oracle(g, interval, xi, tol=1.0e-10):
    """
    Adaptive quadrature of ∫ g(x) e^{−2πiξx} dx over a finite interval.

    The cosine and sine parts are integrated with QUADPACK's oscillatory weights.
    Complex-valued ``g`` is split into real and imaginary parts.

    Args:
        g (callable): Integrand, real or complex valued.
        interval (tuple): (lower, upper) limits.
        xi (float): Frequency.
        tol (float): Absolute tolerance per real integral.

    Returns:
        complex: The transform value.

    Raises:
        QuadratureError: If QUADPACK reports non-convergence.
    """
    lower, upper = interval
    omega = 2.0 * math.pi * float(xi)
    parts = [(lambda x: float(np.real(g(x))), 1.0)]
    if np.iscomplexobj(np.asarray(g(0.5 * (lower + upper)))):
        parts.append((lambda x: float(np.imag(g(x))), 1j))

    total = 0.0j
    for component, unit in parts:
        cosine = _oscillatory_integral(component, lower, upper, omega, "cos", tol)
        sine = _oscillatory_integral(component, lower, upper, omega, "sin", tol)
        total += unit * (cosine - 1j * sine)
    logging.debug(f"Fourier oracle at xi={xi}: {total}")
    return total
