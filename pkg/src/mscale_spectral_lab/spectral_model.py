import math
import logging
import functools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.special import erf, roots_legendre

from .errors import NonSPDError
from .hermite_core import (
    PI_QUARTER,
    HermiteBasis,
    eval_hermite_functions,
    gauss_hermite_rule,
    weighted_inner_products,
)

E_MINUS_2 = math.exp(-2.0)

# Relative slack allowed before an energy increase is reported.
ENERGY_TOLERANCE = 1.0e-12

# Trailing share of coefficient indices inspected by the resolution check.
TAIL_SHARE = 0.1
TAIL_WARNING_LEVEL = 0.1


@dataclass(frozen=True)
class ScaleSpec:
    """
    Multi-scale layout: s + 1 scales with factors α_0 … α_s and input dimension d.

    Attributes:
        num_scales (int): The scale count s (s + 1 subnetworks in total).
        alphas (tuple of float): Scale factors, each ≥ 1.
        dim (int): Input dimension d.
    """

    num_scales: int
    alphas: tuple
    dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(alpha) for alpha in self.alphas))
        if self.num_scales < 0:
            raise ValueError(f"num_scales must be nonnegative, got {self.num_scales}")
        if len(self.alphas) != self.num_scales + 1:
            raise ValueError(
                f"expected {self.num_scales + 1} scale factors, got {len(self.alphas)}"
            )
        if any(not alpha >= 1.0 for alpha in self.alphas):
            raise ValueError(f"scale factors must be >= 1, got {self.alphas}")
        if self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")

    @property
    def count(self):
        """Number of scales, s + 1."""
        return self.num_scales + 1


def scale_spec(num_scales, alpha_rule="pow2", dim=1):
    """Build a ScaleSpec from a named scale rule; ``pow2`` gives α_j = 2^j."""
    if alpha_rule != "pow2":
        raise ValueError(f"unknown alpha rule: {alpha_rule}")
    return ScaleSpec(num_scales, tuple(2.0**j for j in range(num_scales + 1)), dim)


@dataclass(frozen=True, eq=False)
class SpectralOperator:
    """
    Hermite-Galerkin matrices of the error diffusion model.

    K_plus/K_minus come from the diffusion coefficients A^±, M_plus/M_minus from
    the damping coefficients B^±. All four are symmetric negative semidefinite.
    """

    basis: HermiteBasis
    spec: ScaleSpec
    D: np.ndarray
    K_plus: np.ndarray
    K_minus: np.ndarray
    M_plus: np.ndarray
    M_minus: np.ndarray


@dataclass(frozen=True)
class SpectralState:
    """
    Coefficient vectors of the real (U_plus) and imaginary (U_minus) error parts at time t.

    ``lam`` records the basis scale the coefficients belong to.
    """

    U_plus: np.ndarray
    U_minus: np.ndarray
    time: float
    lam: float

    def __post_init__(self):
        if np.shape(self.U_plus) != np.shape(self.U_minus):
            raise ValueError("U_plus and U_minus must have equal length.")

    @classmethod
    def zeros(cls, basis, time=0.0):
        return cls(np.zeros(basis.size), np.zeros(basis.size), time, basis.lam)


@dataclass(frozen=True)
class FrequencyProfile:
    """Complex error η̂ sampled on a frequency grid, split into real and imaginary parts."""

    xi_grid: np.ndarray
    real_part: np.ndarray
    imag_part: np.ndarray

    def __post_init__(self):
        if not (len(self.xi_grid) == len(self.real_part) == len(self.imag_part)):
            raise ValueError("frequency profile arrays must have equal length.")

    @property
    def values(self):
        return self.real_part + 1j * self.imag_part


@dataclass(frozen=True)
class SpectralRun:
    """Result of ``evolve``: states keyed by step index and the energy after every step."""

    snapshots: dict
    energies: np.ndarray


def default_lambda(order_p, xi_max):
    """λ = √(2p+1)/Ξ_max so that the outermost turning point of Ĥ_p(λξ) sits at Ξ_max."""
    if not xi_max > 0.0:
        raise ValueError(f"xi_max must be positive, got {xi_max}")
    return math.sqrt(2 * order_p + 1) / xi_max


def make_basis(order_p, lam="auto", xi_max=None):
    """Build a HermiteBasis, resolving ``lam="auto"`` through ``default_lambda``."""
    if lam == "auto":
        if xi_max is None:
            raise ValueError("xi_max is required when lambda is 'auto'.")
        lam = default_lambda(order_p, xi_max)
    return HermiteBasis(int(order_p), float(lam))


def _sign_factor(sign):
    if sign == "+":
        return 1.0 + E_MINUS_2
    if sign == "-":
        return 1.0 - E_MINUS_2
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def _squared_norm(xi, d):
    xi = np.asarray(xi, dtype=float)
    if d == 1:
        return xi * xi
    return np.sum(xi * xi, axis=-1)


def gaussian_hat(xi, alpha, d=1):
    """
    Fourier transform of the scaled Gaussian, (2π)^{d/2} α^{−d} e^{−2π²|ξ|²/α²}.

    For d = 1 ``xi`` holds scalar frequencies of any shape; for d > 1 its last axis
    holds the vector components.
    """
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    square = _squared_norm(xi, d)
    return (2.0 * math.pi) ** (d / 2.0) * alpha ** (-d) * np.exp(
        -2.0 * math.pi**2 * square / alpha**2
    )


def coeff_A(xi, sign, spec):
    """Diffusion coefficient A_s^±(ξ) = (1±e^{−2})/(8π²(s+1)) Σ_j α_j^{2(d+1)} Ĝ_j(ξ)."""
    d = spec.dim
    total = sum(alpha ** (2 * (d + 1)) * gaussian_hat(xi, alpha, d) for alpha in spec.alphas)
    return _sign_factor(sign) / (8.0 * math.pi**2 * spec.count) * total


def coeff_B(xi, sign, spec):
    """Damping coefficient B_s^±(ξ) = (1±e^{−2})/(2(s+1)) Σ_j α_j^{2d} Ĝ_j(ξ)."""
    d = spec.dim
    total = sum(alpha ** (2 * d) * gaussian_hat(xi, alpha, d) for alpha in spec.alphas)
    return _sign_factor(sign) / (2.0 * spec.count) * total


def coefficient_profiles(xi, scale_counts, alpha_rule="pow2"):
    """
    Sample A_s^−, A_s^+, B_s^+ and B_s^− on ``xi`` for each s in ``scale_counts``.

    Returns:
        dict: Maps s to a dict of named coefficient arrays.
    """
    profiles = {}
    for s in scale_counts:
        spec = scale_spec(s, alpha_rule)
        profiles[s] = {
            "A_minus": coeff_A(xi, "-", spec),
            "A_plus": coeff_A(xi, "+", spec),
            "B_plus": coeff_B(xi, "+", spec),
            "B_minus": coeff_B(xi, "-", spec),
        }
    return profiles


def _derivative_matrix(order_p):
    """G with Ĥ'_n = Σ_m G[n, m] Ĥ_m, shape (p+1, p+2)."""
    G = np.zeros((order_p + 1, order_p + 2))
    n = np.arange(order_p + 1)
    G[n[1:], n[1:] - 1] = np.sqrt(n[1:] / 2.0)
    G[n, n + 1] = -np.sqrt((n + 1) / 2.0)
    return G


def assemble_operator(basis, spec):
    """
    Assemble D, K^± and M^± for the one-dimensional diffusion model.

    Every entry reduces to the weighted inner products I(τ_j) with
    τ_j = 2π²/(α_j²λ²):

        C^±  = −(1±e^{−2})λ / (2(2π)^{3/2}(s+1)) Σ_j α_j³ I(τ_j)
        M^±  = −√(π/2)(1±e^{−2}) / ((s+1)λ)     Σ_j α_j  I(τ_j)

    C^± is built one order higher and contracted with the derivative matrix G, so
    K^± = G C^± Gᵀ carries the K_00, K_0n and four-term general entries in one product.

    Args:
        basis (HermiteBasis): Basis of order p and scale λ.
        spec (ScaleSpec): Scale layout; only d = 1 is supported.

    Returns:
        SpectralOperator: The assembled, immutable operator.

    Raises:
        ValueError: If spec.dim is not 1.
    """
    if spec.dim != 1:
        raise ValueError(f"diffusion assembly supports d = 1 only, got d = {spec.dim}")

    p, lam = basis.order_p, basis.lam
    cubic_sum = np.zeros((p + 2, p + 2))
    linear_sum = np.zeros((p + 1, p + 1))
    for alpha in spec.alphas:
        tau = 2.0 * math.pi**2 / (alpha**2 * lam**2)
        products = weighted_inner_products(tau, p + 1)
        cubic_sum += alpha**3 * products
        linear_sum += alpha * products[: p + 1, : p + 1]

    G = _derivative_matrix(p)
    matrices = {}
    for sign in ("+", "-"):
        factor = _sign_factor(sign)
        C = -factor * lam / (2.0 * (2.0 * math.pi) ** 1.5 * spec.count) * cubic_sum
        K = G @ C @ G.T
        matrices["K", sign] = 0.5 * (K + K.T)
        matrices["M", sign] = -math.sqrt(math.pi / 2.0) * factor / (spec.count * lam) * linear_sum

    logging.debug(f"Assembled diffusion operator: p={p}, lambda={lam:.6f}, s={spec.num_scales}")
    return SpectralOperator(
        basis=basis,
        spec=spec,
        D=np.eye(p + 1) / lam,
        K_plus=matrices["K", "+"],
        K_minus=matrices["K", "-"],
        M_plus=matrices["M", "+"],
        M_minus=matrices["M", "-"],
    )


def tail_fraction(state):
    """Share of the coefficient norm carried by the top 10% of basis indices."""
    coefficients = np.hypot(state.U_plus, state.U_minus)
    total = np.linalg.norm(coefficients)
    if total == 0.0:
        return 0.0
    tail = max(1, math.ceil(TAIL_SHARE * len(coefficients)))
    return float(np.linalg.norm(coefficients[-tail:]) / total)


def _check_resolution(state, label):
    fraction = tail_fraction(state)
    if fraction > TAIL_WARNING_LEVEL:
        logging.warning(
            f"{label}: trailing coefficients hold {fraction:.1%} of the norm; "
            "the basis may not resolve this data (raise p or adjust lambda)."
        )


def project_initial(basis, f_hat, count=None):
    """
    L² projection U_k = λ⟨f̂, Ĥ_k(λ·)⟩ of a complex frequency function onto the basis.

    The integral is taken in u = λξ with a Gauss-Hermite rule of 4(p+1) nodes and its
    function-form weights. A resolution warning is logged when the trailing
    coefficients carry more than 10% of the norm.

    Args:
        basis (HermiteBasis): Target basis.
        f_hat (callable): Vectorized map from real ξ to complex values.
        count (int, optional): Quadrature node count.

    Returns:
        SpectralState: Coefficients at t = 0.
    """
    rule = gauss_hermite_rule(count or 4 * basis.size)
    samples = np.asarray(f_hat(rule.nodes / basis.lam), dtype=complex)
    functions = eval_hermite_functions(rule.nodes, basis.order_p)
    coefficients = functions @ (rule.function_weights * samples)
    state = SpectralState(coefficients.real.copy(), coefficients.imag.copy(), 0.0, basis.lam)
    _check_resolution(state, "Projection")
    return state


def _interval_integrals(lower, upper, n_max):
    """∫_lower^upper Ĥ_n(u) du for n ≤ n_max, via the derivative identity."""
    functions = eval_hermite_functions(np.array([lower, upper]), n_max)
    jumps = functions[:, 1] - functions[:, 0]

    integrals = np.empty(n_max + 1)
    integrals[0] = PI_QUARTER * math.sqrt(math.pi / 2.0) * (
        erf(upper / math.sqrt(2.0)) - erf(lower / math.sqrt(2.0))
    )
    for n in range(n_max):
        earlier = integrals[n - 1] if n >= 1 else 0.0
        integrals[n + 1] = math.sqrt(n / (n + 1)) * earlier - math.sqrt(2.0 / (n + 1)) * jumps[n]
    return integrals


def project_interval(basis, lower, upper, value=1.0 + 1.0j):
    """
    Exact projection of ``value`` times the indicator of [lower, upper] onto the basis.

    Returns:
        SpectralState: Coefficients at t = 0.
    """
    if not lower < upper:
        raise ValueError(f"interval must satisfy lower < upper, got [{lower}, {upper}]")
    integrals = _interval_integrals(basis.lam * lower, basis.lam * upper, basis.order_p)
    value = complex(value)
    state = SpectralState(value.real * integrals, value.imag * integrals, 0.0, basis.lam)
    _check_resolution(state, "Interval projection")
    return state


@functools.lru_cache(maxsize=16)
def _stepping_factors(op, dt):
    """Cholesky factors of the two backward-Euler systems, computed once per (op, dt)."""
    systems = {
        "plus": op.D - dt * (op.K_minus + op.M_plus),
        "minus": op.D - dt * (op.K_plus + op.M_minus),
    }
    factors = {}
    for name, matrix in systems.items():
        try:
            factors[name] = cho_factor(matrix, lower=True)
        except LinAlgError as e:
            raise NonSPDError(
                f"backward-Euler system for U_{name} is not positive definite (dt={dt}): {e}"
            ) from e
    return factors["plus"], factors["minus"]


def step_backward_euler(op, state, dt):
    """
    Advance one backward-Euler step.

    The real part pairs with A^− and B^+, the imaginary part with A^+ and B^−:

        (D − Δt(K^− + M^+)) U^+_m = D U^+_{m−1}
        (D − Δt(K^+ + M^−)) U^−_m = D U^−_{m−1}

    Raises:
        ValueError: If dt is not positive.
        NonSPDError: If a system matrix fails Cholesky factorization.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    plus, minus = _stepping_factors(op, float(dt))
    U_plus = cho_solve(plus, op.D @ state.U_plus)
    U_minus = cho_solve(minus, op.D @ state.U_minus)
    return SpectralState(U_plus, U_minus, state.time + dt, state.lam)


def energy(state):
    """Discrete energy (1/λ)(|U^+|² + |U^−|²) = ∫|η̃|² dξ."""
    return float((state.U_plus @ state.U_plus + state.U_minus @ state.U_minus) / state.lam)


def evolve(op, state, dt, steps, snapshot_steps=()):
    """
    Take ``steps`` backward-Euler steps, checking energy monotonicity after each one.

    Args:
        op (SpectralOperator): Assembled operator.
        state (SpectralState): Initial state.
        dt (float): Time step.
        steps (int): Number of steps.
        snapshot_steps (iterable of int): Step indices whose states are kept; 0 is the input state.

    Returns:
        SpectralRun: Snapshots and the energy trajectory (length steps + 1).
    """
    wanted = set(int(m) for m in snapshot_steps)
    snapshots = {0: state} if 0 in wanted else {}
    energies = np.empty(steps + 1)
    energies[0] = energy(state)
    milestone = max(1, steps // 10)

    for m in range(1, steps + 1):
        state = step_backward_euler(op, state, dt)
        energies[m] = energy(state)
        if energies[m] > energies[m - 1] * (1.0 + ENERGY_TOLERANCE) + 1e-300:
            logging.warning(
                f"Energy increased at step {m}: {energies[m - 1]:.6e} -> {energies[m]:.6e}"
            )
        if m in wanted:
            snapshots[m] = state
        if m % milestone == 0:
            logging.info(f"Step {m}/{steps}: t={state.time:.4f}, energy={energies[m]:.6e}")

    return SpectralRun(snapshots=snapshots, energies=energies)


def evaluate_spectral(state, basis, xi_grid):
    """Synthesize η̃(ξ) = Σ_k (U^+_k + iU^−_k) Ĥ_k(λξ) on ``xi_grid``."""
    xi_grid = np.asarray(xi_grid, dtype=float)
    functions = basis.evaluate(xi_grid)
    return FrequencyProfile(
        xi_grid=xi_grid,
        real_part=state.U_plus @ functions,
        imag_part=state.U_minus @ functions,
    )


def band_energy(state, basis, lo, hi, nodes=400):
    """
    ∫ over lo ≤ |ξ| ≤ hi of |η̃(ξ)|², by Gauss-Legendre on each half-band.

    An infinite upper edge is cut where the basis has no support left, well past
    the outermost turning point √(2p+1)/λ.
    """
    if not 0.0 <= lo < hi:
        raise ValueError(f"band must satisfy 0 <= lo < hi, got [{lo}, {hi}]")
    if math.isinf(hi):
        hi = max(lo, (math.sqrt(2 * basis.order_p + 1) + 12.0) / basis.lam)
        if hi <= lo:
            return 0.0
    points, weights = roots_legendre(nodes)
    half_width = 0.5 * (hi - lo)
    xi = lo + half_width * (points + 1.0)
    total = 0.0
    for side in (xi, -xi):
        profile = evaluate_spectral(state, basis, side)
        total += half_width * np.sum(weights * (profile.real_part**2 + profile.imag_part**2))
    return float(total)
