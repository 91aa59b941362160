import math
import logging
from dataclasses import dataclass

import numpy as np

from .mscale_net import NetworkParams, init_params

E_MINUS_2 = math.exp(-2.0)

DEFAULT_ANGLE_POINTS = 181


@dataclass(frozen=True)
class KernelSample:
    """Kernel value between x = e_1 and a unit vector at angle β from it."""

    angle: float
    value: float


def _pair(x, x_prime, dim):
    """Broadcast inputs to (m, d) arrays; report whether a single pair was given."""
    x = np.asarray(x, dtype=float)
    x_prime = np.asarray(x_prime, dtype=float)
    single = x.ndim <= 1 and x_prime.ndim <= 1
    x = x.reshape(-1, dim)
    x_prime = x_prime.reshape(-1, dim)
    x, x_prime = np.broadcast_arrays(x, x_prime)
    return x, x_prime, single


def _check_layout(params, spec):
    if params.spec != spec:
        raise ValueError(
            f"network layout {params.spec} does not match the requested scale spec {spec}"
        )


def _cosine_sums(params, x, x_prime):
    """Per-neuron products cos(α_r θ_r·x + b_r)·cos(α_r θ_r·x′ + b_r), shape (m, N)."""
    scales = params.neuron_scales
    pre = (x @ params.inner_weights.T) * scales + params.biases
    pre_prime = (x_prime @ params.inner_weights.T) * scales + params.biases
    return np.cos(pre) * np.cos(pre_prime)


def _finish(values, single):
    return float(values[0]) if single else values


def empirical_ntk(params, x, x_prime, spec):
    """
    Finite-width NTK of the biased network,

        Θ(x,x′) = Σ_j α_j^{2d}(α_j² x·x′ + 1)/N · Σ_k cos(α_jθ_k·x + b_k) cos(α_jθ_k·x′ + b_k).

    ``x`` and ``x_prime`` may be single points or (m, d) batches of pairs.

    Raises:
        ValueError: If ``params`` was not laid out for ``spec``.
    """
    _check_layout(params, spec)
    d = spec.dim
    x, x_prime, single = _pair(x, x_prime, d)
    dot = np.sum(x * x_prime, axis=1)[:, None]
    scales = params.neuron_scales[None, :]
    weights = scales ** (2 * d) * (scales**2 * dot + 1.0) / params.width
    return _finish(np.sum(weights * _cosine_sums(params, x, x_prime), axis=1), single)


def empirical_ntk_no_bias(params, x, x_prime, spec):
    """
    Finite-width NTK of the bias-free network,
    (x·x′/N) Σ_j α_j^{2(d+1)} Σ_k cos(α_jθ_k·x) cos(α_jθ_k·x′).

    Biases stored in ``params`` are ignored.
    """
    _check_layout(params, spec)
    d = spec.dim
    x, x_prime, single = _pair(x, x_prime, d)
    dot = np.sum(x * x_prime, axis=1)
    unbiased = NetworkParams(
        params.inner_weights, np.zeros(params.width), params.spec, params.width_per_scale, False
    )
    weights = params.neuron_scales ** (2 * (d + 1)) / params.width
    values = dot * (_cosine_sums(unbiased, x, x_prime) @ weights)
    return _finish(values, single)


def _gaussians(alpha, x, x_prime):
    plus = np.sum((x + x_prime) ** 2, axis=1)
    minus = np.sum((x - x_prime) ** 2, axis=1)
    return np.exp(-0.5 * alpha**2 * plus), np.exp(-0.5 * alpha**2 * minus)


def limit_ntk(x, x_prime, spec):
    """
    Infinite-width NTK with standard normal θ and b,

        Σ_j α_j^{2d}(α_j² x·x′ + 1)/(2(s+1)) · [e^{−2} G_j(x+x′) + G_j(x−x′)],

    where G_j(y) = exp(−α_j²|y|²/2).
    """
    d = spec.dim
    x, x_prime, single = _pair(x, x_prime, d)
    dot = np.sum(x * x_prime, axis=1)
    values = np.zeros(len(dot))
    for alpha in spec.alphas:
        g_plus, g_minus = _gaussians(alpha, x, x_prime)
        values += alpha ** (2 * d) * (alpha**2 * dot + 1.0) * (E_MINUS_2 * g_plus + g_minus)
    return _finish(values / (2.0 * spec.count), single)


def limit_ntk_no_bias(x, x_prime, spec):
    """Infinite-width NTK without bias: x·x′/(2(s+1)) Σ_j α_j^{2(d+1)} [G_j(x+x′) + G_j(x−x′)]."""
    d = spec.dim
    x, x_prime, single = _pair(x, x_prime, d)
    dot = np.sum(x * x_prime, axis=1)
    values = np.zeros(len(dot))
    for alpha in spec.alphas:
        g_plus, g_minus = _gaussians(alpha, x, x_prime)
        values += alpha ** (2 * (d + 1)) * (g_plus + g_minus)
    return _finish(dot * values / (2.0 * spec.count), single)


def angle_pairs(angle_grid, dim):
    """x = e_1 and x′ = cos β·e_1 + sin β·e_2 for every β in ``angle_grid``."""
    angles = np.asarray(angle_grid, dtype=float)
    x = np.zeros((len(angles), dim))
    x[:, 0] = 1.0
    x_prime = np.zeros((len(angles), dim))
    x_prime[:, 0] = np.cos(angles)
    x_prime[:, 1] = np.sin(angles)
    return x, x_prime


def kernel_vs_angle(spec, source=None, angle_grid=None, seed=0, has_bias=True):
    """
    Sweep the kernel over the angle between two unit inputs.

    Args:
        spec (ScaleSpec): Scale layout, with d ≥ 2.
        source: ``None`` for the limit kernel, an int total width for a freshly
            initialized network (seeded with ``seed``), or a NetworkParams.
        angle_grid (array_like, optional): Angles in [0, π]; 181 uniform points by default.
        seed (int): Seed used when ``source`` is a width.
        has_bias (bool): Select the biased or bias-free kernel.

    Returns:
        list of KernelSample: One sample per angle.

    Raises:
        ValueError: If d < 2 or the width is not a multiple of s + 1.
    """
    if spec.dim < 2:
        raise ValueError(f"angle sweeps need d >= 2, got d = {spec.dim}")
    if angle_grid is None:
        angle_grid = np.linspace(0.0, math.pi, DEFAULT_ANGLE_POINTS)
    x, x_prime = angle_pairs(angle_grid, spec.dim)

    if source is None:
        kernel = limit_ntk if has_bias else limit_ntk_no_bias
        values = kernel(x, x_prime, spec)
    else:
        if isinstance(source, NetworkParams):
            params = source
        else:
            width = int(source)
            if width % spec.count:
                raise ValueError(f"width {width} is not a multiple of {spec.count} scales")
            params = init_params(spec, width // spec.count, seed, has_bias)
        kernel = empirical_ntk if has_bias else empirical_ntk_no_bias
        values = kernel(params, x, x_prime, spec)

    return [KernelSample(float(angle), float(value)) for angle, value in zip(angle_grid, values)]


def curve_values(samples):
    return np.array([sample.value for sample in samples])


def sup_angle_error(curve, limit_curve):
    """max_β |Θ_N(β) − Θ(β)| / max_β |Θ(β)|."""
    curve, limit_curve = curve_values(curve), curve_values(limit_curve)
    return float(np.max(np.abs(curve - limit_curve)) / np.max(np.abs(limit_curve)))


def kernel_drift(curve, reference):
    """Relative sup-angle change of a kernel curve against a reference curve."""
    error = sup_angle_error(curve, reference)
    logging.debug(f"Kernel drift {error:.4e}")
    return error
