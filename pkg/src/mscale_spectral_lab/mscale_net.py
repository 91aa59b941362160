import os
import json
import math
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import TrainingAborted
from .spectral_model import ScaleSpec

# Samples per block when accumulating forward passes and gradients.
CHUNK_SIZE = 256


@dataclass(frozen=True, eq=False)
class NetworkParams:
    """
    Trainable state of the two-layer multi-scale sine network

        N_s(x) = (1/√N) Σ_j α_j^d Σ_k sin(α_j θ_{jq+k}·x + b_{jq+k}).

    Row jq + k of ``inner_weights`` belongs to scale j. Outer coefficients are fixed.
    """

    inner_weights: np.ndarray
    biases: np.ndarray
    spec: ScaleSpec
    width_per_scale: int
    has_bias: bool = True

    def __post_init__(self):
        expected = (self.spec.count * self.width_per_scale, self.spec.dim)
        if self.inner_weights.shape != expected:
            raise ValueError(
                f"inner weights have shape {self.inner_weights.shape}, expected {expected}"
            )
        if self.biases.shape != (expected[0],):
            raise ValueError(f"biases have shape {self.biases.shape}, expected ({expected[0]},)")

    @property
    def width(self):
        """Total hidden width N = (s+1)q."""
        return self.spec.count * self.width_per_scale

    @property
    def neuron_scales(self):
        """α_j for every hidden neuron, in row order."""
        return np.repeat(np.asarray(self.spec.alphas), self.width_per_scale)

    @property
    def outer_coefficients(self):
        """Fixed outer weights α_j^d/√N per neuron."""
        return self.neuron_scales**self.spec.dim / math.sqrt(self.width)


@dataclass(frozen=True)
class TrainConfig:
    """Full-batch gradient descent settings."""

    learning_rate: float
    epochs: int
    num_samples: int
    domain_beta: float
    seed: int = 0
    snapshot_epochs: tuple = ()
    random_samples: bool = False

    def __post_init__(self):
        if not self.learning_rate > 0.0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be nonnegative, got {self.epochs}")
        if self.num_samples < 2:
            raise ValueError(f"num_samples must be at least 2, got {self.num_samples}")
        if not self.domain_beta > 0.0:
            raise ValueError(f"domain_beta must be positive, got {self.domain_beta}")
        object.__setattr__(self, "snapshot_epochs", tuple(sorted(set(self.snapshot_epochs))))


@dataclass(frozen=True)
class Snapshot:
    epoch: int
    params: NetworkParams
    loss: float


@dataclass(frozen=True)
class Trajectory:
    """Snapshots at the configured epochs (always including epoch 0) and the loss per epoch."""

    snapshots: tuple
    losses: np.ndarray = field(repr=False)

    def at(self, epoch):
        for snapshot in self.snapshots:
            if snapshot.epoch == epoch:
                return snapshot
        raise KeyError(f"no snapshot recorded at epoch {epoch}")


def init_params(spec, q, seed, has_bias=True):
    """
    Draw θ and b i.i.d. standard normal from ``numpy.random.default_rng(seed)``.

    θ is drawn first so that the biased and bias-free networks built from one seed
    share their inner weights. With ``has_bias=False`` the biases are zero.
    """
    if q < 1:
        raise ValueError(f"width per scale must be at least 1, got {q}")
    rng = np.random.default_rng(seed)
    width = spec.count * q
    inner_weights = rng.standard_normal((width, spec.dim))
    biases = rng.standard_normal(width) if has_bias else np.zeros(width)
    return NetworkParams(inner_weights, biases, spec, int(q), bool(has_bias))


def _as_points(x, dim):
    """Return (points with shape (n, d), whether the input was a single point)."""
    x = np.asarray(x, dtype=float)
    if dim == 1:
        if x.ndim == 0:
            return x.reshape(1, 1), True
        if x.ndim == 1:
            return x.reshape(-1, 1), False
        if x.ndim == 2 and x.shape[1] == 1:
            return x, False
    else:
        if x.ndim == 1 and x.shape[0] == dim:
            return x.reshape(1, dim), True
        if x.ndim == 2 and x.shape[1] == dim:
            return x, False
    raise ValueError(f"input of shape {x.shape} does not match network dimension {dim}")


def _pre_activations(params, points):
    return (points @ params.inner_weights.T) * params.neuron_scales + params.biases


def forward(params, x):
    """
    Evaluate the network at one point or a batch of points.

    Args:
        params (NetworkParams): Network state.
        x (array_like): A single point of dimension d (a scalar when d = 1) or an (n, d) batch;
            when d = 1 a flat array is read as a batch of scalars.

    Returns:
        float or np.ndarray: Network output(s).

    Raises:
        ValueError: If the input dimension does not match the network.
    """
    points, single = _as_points(x, params.spec.dim)
    outer = params.outer_coefficients
    output = np.empty(points.shape[0])
    for start in range(0, points.shape[0], CHUNK_SIZE):
        block = points[start : start + CHUNK_SIZE]
        output[start : start + CHUNK_SIZE] = np.sin(_pre_activations(params, block)) @ outer
    return float(output[0]) if single else output


def riemann_weight(beta, num_samples, dim=1):
    """Quadrature weight (2β)^d/n attached to every sample of the discrete loss."""
    return (2.0 * beta) ** dim / num_samples


def _unpack(samples, dim):
    points, targets = samples
    points, _ = _as_points(points, dim)
    targets = np.asarray(targets, dtype=float).reshape(-1)
    if points.shape[0] == 0 or points.shape[0] != targets.shape[0]:
        raise ValueError("samples must be a nonempty (points, targets) pair of equal length")
    return points, targets


def _loss_and_gradients(params, samples, beta):
    points, targets = _unpack(samples, params.spec.dim)
    weight = riemann_weight(beta, points.shape[0], params.spec.dim)
    outer = params.outer_coefficients
    scales = params.neuron_scales

    loss_sum = 0.0
    bias_accumulator = np.zeros(params.width)
    weight_accumulator = np.zeros_like(params.inner_weights)
    for start in range(0, points.shape[0], CHUNK_SIZE):
        block = points[start : start + CHUNK_SIZE]
        pre = _pre_activations(params, block)
        errors = np.sin(pre) @ outer - targets[start : start + CHUNK_SIZE]
        loss_sum += errors @ errors
        weighted_cosines = errors[:, None] * np.cos(pre)
        bias_accumulator += weighted_cosines.sum(axis=0)
        weight_accumulator += weighted_cosines.T @ block

    loss_value = 0.5 * weight * loss_sum
    grad_biases = weight * outer * bias_accumulator
    grad_weights = (weight * outer * scales)[:, None] * weight_accumulator
    if not params.has_bias:
        grad_biases = np.zeros_like(grad_biases)
    return loss_value, grad_weights, grad_biases


def loss(params, samples, beta):
    """
    Discrete mean-square loss ½·((2β)^d/n)·Σ_i (N(x_i) − f(x_i))².

    Args:
        params (NetworkParams): Network state.
        samples (tuple): ``(points, targets)`` arrays.
        beta (float): Half-width of the fitting domain [−β, β]^d.
    """
    points, targets = _unpack(samples, params.spec.dim)
    errors = forward(params, points) - targets
    return 0.5 * riemann_weight(beta, len(targets), params.spec.dim) * float(errors @ errors)


def gradients(params, samples, beta):
    """Closed-form gradients (∂L/∂θ, ∂L/∂b); the bias gradient is zero for bias-free networks."""
    _, grad_weights, grad_biases = _loss_and_gradients(params, samples, beta)
    return grad_weights, grad_biases


def grad_step(params, samples, tau, beta):
    """
    One full-batch gradient-descent update θ ← θ − τ∇L(θ) on inner weights and biases.

    Raises:
        ValueError: If tau is not positive.
    """
    if not tau > 0.0:
        raise ValueError(f"learning rate must be positive, got {tau}")
    grad_weights, grad_biases = gradients(params, samples, beta)
    return replace(
        params,
        inner_weights=params.inner_weights - tau * grad_weights,
        biases=params.biases - tau * grad_biases,
    )


def make_samples(config, target, dim=1):
    """
    Training inputs and targets.

    For d = 1 the inputs are ``num_samples`` equispaced points on [−β, β] unless
    ``random_samples`` is set; otherwise they are uniform on [−β, β]^d drawn from a
    generator seeded with ``seed + 1``.
    """
    beta = config.domain_beta
    if dim == 1 and not config.random_samples:
        points = np.linspace(-beta, beta, config.num_samples).reshape(-1, 1)
    else:
        rng = np.random.default_rng(config.seed + 1)
        points = rng.uniform(-beta, beta, size=(config.num_samples, dim))
    targets = np.asarray(target(points[:, 0] if dim == 1 else points), dtype=float)
    return points, targets


def train(params, target, config):
    """
    Train by full-batch gradient descent and record a trajectory.

    Args:
        params (NetworkParams): Initial network.
        target (callable): Target function evaluated on the sample inputs
            (flat array for d = 1, (n, d) array otherwise).
        config (TrainConfig): Optimizer settings.

    Returns:
        Trajectory: Snapshots at epoch 0 and every configured epoch ≤ config.epochs,
        plus the loss at every epoch 0 … config.epochs.

    Raises:
        TrainingAborted: If the loss becomes NaN or infinite.
    """
    samples = make_samples(config, target, params.spec.dim)
    wanted = {0} | {m for m in config.snapshot_epochs if 0 <= m <= config.epochs}
    snapshots = []
    losses = np.empty(config.epochs + 1)
    report_every = max(1, config.epochs // 10)

    logging.info(
        f"Training width {params.width} (s={params.spec.num_scales}, d={params.spec.dim}) "
        f"for {config.epochs} epochs at learning rate {config.learning_rate}"
    )

    for epoch in range(config.epochs + 1):
        loss_value, grad_weights, grad_biases = _loss_and_gradients(
            params, samples, config.domain_beta
        )
        if not math.isfinite(loss_value):
            raise TrainingAborted(
                f"non-finite loss {loss_value} at epoch {epoch} "
                f"(learning rate {config.learning_rate}, width {params.width})"
            )
        losses[epoch] = loss_value
        if epoch in wanted:
            snapshots.append(Snapshot(epoch, params, loss_value))
        if epoch % report_every == 0:
            logging.info(f"Epoch {epoch}/{config.epochs}: loss={loss_value:.6e}")
        if epoch == config.epochs:
            break
        params = replace(
            params,
            inner_weights=params.inner_weights - config.learning_rate * grad_weights,
            biases=params.biases - config.learning_rate * grad_biases,
        )

    return Trajectory(snapshots=tuple(snapshots), losses=losses)


def save_params(params, path, seed=None):
    """
    Write ``<path>.npz`` with θ and b and ``<path>.json`` with the layout descriptor.

    Returns:
        tuple: The two file paths written.
    """
    array_path, descriptor_path = f"{path}.npz", f"{path}.json"
    os.makedirs(os.path.dirname(os.path.abspath(array_path)), exist_ok=True)
    np.savez(array_path, inner_weights=params.inner_weights, biases=params.biases)
    descriptor = {
        "num_scales": params.spec.num_scales,
        "alphas": list(params.spec.alphas),
        "dim": params.spec.dim,
        "width_per_scale": params.width_per_scale,
        "has_bias": params.has_bias,
        "seed": seed,
    }
    with open(descriptor_path, "w") as f:
        json.dump(descriptor, f, indent=4)
    return array_path, descriptor_path


def load_params(path):
    """Restore parameters written by ``save_params``."""
    with open(f"{path}.json", "r") as f:
        descriptor = json.load(f)
    with np.load(f"{path}.npz") as arrays:
        inner_weights = arrays["inner_weights"].copy()
        biases = arrays["biases"].copy()
    spec = ScaleSpec(descriptor["num_scales"], tuple(descriptor["alphas"]), descriptor["dim"])
    return NetworkParams(
        inner_weights, biases, spec, descriptor["width_per_scale"], descriptor["has_bias"]
    )
