import math
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_hermite

# Hermite function Ĥ_0(0) = π^(-1/4)
PI_QUARTER = math.pi**-0.25

# Polynomial parts of the recurrence are renormalized once they exceed this.
RESCALE_THRESHOLD = 1.0e150


@dataclass(frozen=True)
class HermiteBasis:
    """
    Scaled Hermite-function basis Ĥ_0(λξ) … Ĥ_p(λξ).

    The functions are orthogonal on the real line with
    ⟨Ĥ_n(λ·), Ĥ_m(λ·)⟩ = δ_nm / λ.

    Attributes:
        order_p (int): Highest basis index p.
        lam (float): Frequency-axis scale factor λ.
    """

    order_p: int
    lam: float

    def __post_init__(self):
        if int(self.order_p) != self.order_p or self.order_p < 0:
            raise ValueError(f"order_p must be a nonnegative integer, got {self.order_p}")
        if not (math.isfinite(self.lam) and self.lam > 0.0):
            raise ValueError(f"lam must be positive and finite, got {self.lam}")

    @property
    def size(self):
        """Number of basis functions, p + 1."""
        return self.order_p + 1

    def evaluate(self, xi):
        """Evaluate every basis function at the frequencies ``xi``; shape (p+1, *xi.shape)."""
        return eval_hermite_functions(self.lam * np.asarray(xi, dtype=float), self.order_p)


@dataclass(frozen=True)
class ConnectionTable:
    """
    Scale-connection coefficients h_{n,k}(λ) with H_n(λx) = Σ_k h_{n,k}(λ) H_k(x)
    in the normalized Hermite functions.

    ``entries`` is lower triangular with zeros wherever n - k is odd.
    """

    lam: float
    entries: np.ndarray

    @property
    def n_max(self):
        return self.entries.shape[0] - 1

    def __getitem__(self, index):
        return self.entries[index]


@dataclass(frozen=True)
class QuadratureRule:
    """
    Gauss-Hermite rule for the weight e^{-x²}.

    Attributes:
        nodes (np.ndarray): Quadrature nodes.
        weights (np.ndarray): Standard weights w_i, exact for P(x)e^{-x²} up to degree 2·count-1.
        function_weights (np.ndarray): Weights w_i·e^{x_i²} for integrands that already decay,
            computed without forming e^{x_i²}.
    """

    nodes: np.ndarray
    weights: np.ndarray
    function_weights: np.ndarray

    @property
    def count(self):
        return len(self.nodes)

    def integrate(self, values):
        """Integrate decaying integrand samples taken at ``nodes`` (last axis)."""
        return np.sum(np.asarray(values) * self.function_weights, axis=-1)


def _check_order(n_max):
    if int(n_max) != n_max or n_max < 0:
        raise ValueError(f"n_max must be a nonnegative integer, got {n_max}")
    return int(n_max)


def eval_hermite_functions(x, n_max):
    """
    Evaluate the normalized Hermite functions Ĥ_0(x) … Ĥ_{n_max}(x).

    The three-term recurrence Ĥ_{n+1} = x√(2/(n+1))Ĥ_n − √(n/(n+1))Ĥ_{n−1} is run on
    a renormalized polynomial part with a running log-scale, and the Gaussian factor
    e^{-x²/2} is folded into that log-scale row by row. Nothing overflows for |x| ≤ 50
    and n_max ≤ 500; values that are genuinely below the float range underflow to 0.

    Args:
        x (float or array_like): Evaluation points, all finite.
        n_max (int): Highest function index.

    Returns:
        np.ndarray: Array of shape (n_max + 1, *np.shape(x)).

    Raises:
        ValueError: If n_max is negative or x contains non-finite values.
    """
    n_max = _check_order(n_max)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("Hermite functions require finite evaluation points.")

    values = np.empty((n_max + 1,) + x.shape)
    half_square = 0.5 * x * x

    previous = np.zeros_like(x)
    current = np.full_like(x, PI_QUARTER)
    log_scale = np.zeros_like(x)
    values[0] = current * np.exp(-half_square)

    for n in range(n_max):
        following = x * math.sqrt(2.0 / (n + 1)) * current - math.sqrt(n / (n + 1)) * previous
        previous, current = current, following

        magnitude = np.abs(current)
        large = magnitude > RESCALE_THRESHOLD
        if np.any(large):
            scale = np.where(large, magnitude, 1.0)
            previous = previous / scale
            current = current / scale
            log_scale = log_scale + np.log(scale)

        values[n + 1] = current * np.exp(log_scale - half_square)

    return values


def eval_hermite_derivatives(x, n_max):
    """
    Evaluate Ĥ'_0(x) … Ĥ'_{n_max}(x) from Ĥ'_n = √(n/2)Ĥ_{n−1} − √((n+1)/2)Ĥ_{n+1}.

    Returns:
        np.ndarray: Array of shape (n_max + 1, *np.shape(x)).
    """
    n_max = _check_order(n_max)
    functions = eval_hermite_functions(x, n_max + 1)
    shape = (n_max + 1,) + (1,) * (functions.ndim - 1)
    n = np.arange(n_max + 1, dtype=float).reshape(shape)

    derivatives = -np.sqrt((n + 1.0) / 2.0) * functions[1:]
    derivatives[1:] += np.sqrt(n[1:] / 2.0) * functions[: n_max]
    return derivatives


def connection_table(lam, n_max):
    """
    Build h_{n,k}(λ) for 0 ≤ k ≤ n ≤ n_max by recurrence.

    Starting from h_{0,0} = 1, each row follows from

        h_{n+1,k} = λ√((k+1)/(n+1)) h_{n,k+1} − √(n/(n+1)) h_{n−1,k} + λ√(k/(n+1)) h_{n,k−1}

    with out-of-range entries taken as zero. This covers the k = 0, interior and
    k = n, n+1 branches at once and leaves the odd-gap entries exactly zero.

    Args:
        lam (float): Scale factor λ > 0.
        n_max (int): Highest row index.

    Returns:
        ConnectionTable: The (n_max + 1) x (n_max + 1) lower-triangular table.

    Raises:
        ValueError: If lam is not positive or n_max is negative.
    """
    n_max = _check_order(n_max)
    if not (math.isfinite(lam) and lam > 0.0):
        raise ValueError(f"lambda must be positive, got {lam}")

    # Two spare columns so that h[n, k + 1] is always addressable.
    table = np.zeros((n_max + 1, n_max + 3))
    table[0, 0] = 1.0

    for n in range(n_max):
        k = np.arange(n + 2)
        row = lam * np.sqrt((k + 1) / (n + 1)) * table[n, k + 1]
        row[1:] += lam * np.sqrt(k[1:] / (n + 1)) * table[n, k[1:] - 1]
        if n >= 1:
            row -= math.sqrt(n / (n + 1)) * table[n - 1, k]
        table[n + 1, : n + 2] = row

    return ConnectionTable(lam=float(lam), entries=table[:, : n_max + 1].copy())


def connection_explicit(n, k, lam):
    """
    Closed-form h_{n,k}(λ) = √(n!/(2^{n−k} k!)) (1/s!) λ^k (λ²−1)^s with s = (n−k)/2.

    Zero when n - k is odd. Factorials are used directly up to n = 30 and replaced by
    log-gamma sums beyond that; the sign of (λ²−1)^s is carried separately.

    Raises:
        ValueError: If k > n, either index is negative, or lam is not positive.
    """
    if k < 0 or n < 0:
        raise ValueError(f"indices must be nonnegative, got n={n}, k={k}")
    if k > n:
        raise ValueError(f"k must not exceed n, got n={n}, k={k}")
    if not lam > 0.0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if (n - k) % 2:
        return 0.0

    s = (n - k) // 2
    gap = lam * lam - 1.0

    if n <= 30:
        prefactor = math.sqrt(math.factorial(n) / (2 ** (n - k) * math.factorial(k)))
        return prefactor / math.factorial(s) * lam**k * gap**s

    if s > 0 and gap == 0.0:
        return 0.0
    log_value = 0.5 * (math.lgamma(n + 1) - (n - k) * math.log(2.0) - math.lgamma(k + 1))
    log_value -= math.lgamma(s + 1)
    log_value += k * math.log(lam)
    if s > 0:
        log_value += s * math.log(abs(gap))
    sign = -1.0 if (gap < 0.0 and s % 2) else 1.0
    return sign * math.exp(log_value)


def weighted_inner_products(tau, n_max):
    """
    Weighted inner products I_{nk}(τ) = ∫ Ĥ_n(x) Ĥ_k(x) e^{−τx²} dx for n, k ≤ n_max.

    With μ = 1/√(τ+1) the Gaussian weight is absorbed by a change of scale, so
    I_{nk}(τ) = μ Σ_i h_{n,i}(μ) h_{k,i}(μ).

    Args:
        tau (float): Nonnegative weight exponent.
        n_max (int): Highest index.

    Returns:
        np.ndarray: Symmetric (n_max + 1) x (n_max + 1) matrix, exactly zero where n + k is odd.

    Raises:
        ValueError: If tau is negative or not finite.
    """
    if not (math.isfinite(tau) and tau >= 0.0):
        raise ValueError(f"tau must be nonnegative, got {tau}")
    mu = 1.0 / math.sqrt(tau + 1.0)
    table = connection_table(mu, n_max).entries
    return mu * (table @ table.T)


def gauss_hermite_rule(count):
    """
    Gauss-Hermite quadrature with ``count`` nodes.

    Standard nodes and weights come from ``scipy.special.roots_hermite``. The
    function-form weights are the Christoffel values 1/Σ_{k<count} Ĥ_k(x_i)², which
    stay representable at nodes where e^{x_i²} would overflow.

    Raises:
        ValueError: If count < 1.
    """
    if int(count) != count or count < 1:
        raise ValueError(f"quadrature count must be a positive integer, got {count}")
    nodes, weights = roots_hermite(int(count))
    functions = eval_hermite_functions(nodes, int(count) - 1)
    function_weights = 1.0 / np.sum(functions**2, axis=0)
    logging.debug(f"Gauss-Hermite rule built with {count} nodes (max node {nodes[-1]:.3f})")
    return QuadratureRule(nodes=nodes, weights=weights, function_weights=function_weights)
