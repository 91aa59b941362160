import math
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from .errors import ConfigError
from .logging_setup import summary_table
from .mscale_net import TrainConfig, forward, init_params, save_params, train
from .ntk import curve_values, kernel_drift, kernel_vs_angle, sup_angle_error
from .reporting import (
    ExperimentReport,
    frequency_frame,
    get_output_file_path,
    physical_frame,
    save_line_plot,
    save_table,
    write_report,
)
from .spectral_model import (
    assemble_operator,
    band_energy,
    coefficient_profiles,
    evaluate_spectral,
    evolve,
    make_basis,
    project_initial,
    project_interval,
    scale_spec,
)
from .xform import TargetSpec, error_hat, hermite_to_physical, network_hat, target_hat

EXPERIMENTS = ("simulate", "train_compare", "bias_compare", "ntk_study")


def _integer(value):
    if isinstance(value, bool) or int(value) != value:
        raise ValueError(f"{value!r} is not an integer")
    return int(value)


def _boolean(value):
    if not isinstance(value, bool):
        raise ValueError(f"{value!r} is not true or false")
    return value


def _integers(values):
    return tuple(_integer(v) for v in values)


def _floats(values):
    return tuple(float(v) for v in values)


def _lambda(value):
    return "auto" if value == "auto" else float(value)


def _optional_integer(value):
    return None if value is None else _integer(value)


def _band(text):
    lower, upper = str(text).split(":")
    return float(lower), float(upper)


def _bands(values):
    return tuple(_band(v) for v in values)


def band_label(band):
    return f"{band[0]:g}:{band[1]:g}"


# Config key -> (field name, converter)
_SCHEMA = {
    "experiment": ("experiment", str),
    "output_dir": ("output_dir", str),
    "seed": ("seed", _integer),
    "scales": ("scales", _integer),
    "scale_sweep": ("scale_sweep", _integers),
    "bias_scales": ("bias_scales", _integers),
    "alpha_rule": ("alpha_rule", str),
    "has_bias": ("has_bias", _boolean),
    "p": ("p", _integer),
    "lambda": ("lam", _lambda),
    "xi_max": ("xi_max", float),
    "dt": ("dt", float),
    "steps": ("steps", _optional_integer),
    "snapshot_times": ("snapshot_times", _floats),
    "indicator_radius": ("indicator_radius", float),
    "indicator_value": ("indicator_value", _floats),
    "bands": ("bands", _bands),
    "coefficient_scales": ("coefficient_scales", _integers),
    "xi_grid_limit": ("xi_grid_limit", float),
    "xi_grid_points": ("xi_grid_points", _integer),
    "x_grid_points": ("x_grid_points", _integer),
    "width": ("width", _integer),
    "samples": ("samples", _integer),
    "learning_rate": ("learning_rate", float),
    "epochs": ("epochs", _integer),
    "snapshot_epochs": ("snapshot_epochs", _integers),
    "random_samples": ("random_samples", _boolean),
    "a": ("a", float),
    "b": ("b", float),
    "beta": ("beta", float),
    "half_life_time": ("half_life_time", float),
    "ntk_dim": ("ntk_dim", _integer),
    "ntk_widths": ("ntk_widths", _integers),
    "ntk_seeds": ("ntk_seeds", _integer),
    "angle_points": ("angle_points", _integer),
    "ntk_train": ("ntk_train", _boolean),
    "ntk_drift_widths": ("ntk_drift_widths", _integers),
    "ntk_train_epochs": ("ntk_train_epochs", _integer),
    "ntk_snapshot_epochs": ("ntk_snapshot_epochs", _integers),
    "ntk_learning_rate": ("ntk_learning_rate", float),
    "ntk_samples": ("ntk_samples", _integer),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, immutable experiment settings; see ``config.json`` for every key."""

    experiment: str
    output_dir: str
    seed: int
    scales: int
    scale_sweep: tuple
    bias_scales: tuple
    alpha_rule: str
    has_bias: bool
    p: int
    lam: object
    xi_max: float
    dt: float
    steps: object
    snapshot_times: tuple
    indicator_radius: float
    indicator_value: tuple
    bands: tuple
    coefficient_scales: tuple
    xi_grid_limit: float
    xi_grid_points: int
    x_grid_points: int
    width: int
    samples: int
    learning_rate: float
    epochs: int
    snapshot_epochs: tuple
    random_samples: bool
    a: float
    b: float
    beta: float
    half_life_time: float
    ntk_dim: int
    ntk_widths: tuple
    ntk_seeds: int
    angle_points: int
    ntk_train: bool
    ntk_drift_widths: tuple
    ntk_train_epochs: int
    ntk_snapshot_epochs: tuple
    ntk_learning_rate: float
    ntk_samples: int

    @classmethod
    def from_mapping(cls, mapping):
        """
        Convert and validate a flat configuration mapping.

        Raises:
            ConfigError: On unknown or missing keys, wrong types, or out-of-range values.
        """
        unknown = sorted(set(mapping) - set(_SCHEMA))
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {', '.join(unknown)}")
        missing = sorted(set(_SCHEMA) - set(mapping))
        if missing:
            raise ConfigError(f"Missing configuration keys: {', '.join(missing)}")

        values = {}
        for key, (name, convert) in _SCHEMA.items():
            try:
                values[name] = convert(mapping[key])
            except (TypeError, ValueError) as e:
                raise ConfigError(f"Invalid value for '{key}': {mapping[key]!r} ({e})")
        config = cls(**values)
        config.validate()
        return config

    def validate(self):
        def require(condition, message):
            if not condition:
                raise ConfigError(message)

        require(self.experiment in EXPERIMENTS, f"experiment must be one of {EXPERIMENTS}")
        require(self.alpha_rule == "pow2", "alpha_rule must be 'pow2'")
        require(self.dt > 0.0, "dt must be positive")
        require(self.p >= 1, "p must be at least 1")
        require(self.lam == "auto" or self.lam > 0.0, "lambda must be 'auto' or positive")
        require(self.xi_max > 0.0, "xi_max must be positive")
        require(self.steps is None or self.steps >= 1, "steps must be null or positive")
        require(self.scales >= 0, "scales must be nonnegative")
        require(all(s >= 0 for s in self.scale_sweep), "scale_sweep entries must be >= 0")
        require(all(s >= 0 for s in self.bias_scales), "bias_scales entries must be >= 0")
        require(
            all(t > 0.0 for t in self.snapshot_times) and len(self.snapshot_times) > 0,
            "snapshot_times must be positive",
        )
        require(
            list(self.snapshot_times) == sorted(self.snapshot_times),
            "snapshot_times must be sorted",
        )
        require(
            list(self.snapshot_epochs) == sorted(self.snapshot_epochs)
            and all(m >= 0 for m in self.snapshot_epochs),
            "snapshot_epochs must be sorted and nonnegative",
        )
        require(
            list(self.ntk_snapshot_epochs) == sorted(self.ntk_snapshot_epochs),
            "ntk_snapshot_epochs must be sorted",
        )
        require(len(self.indicator_value) == 2, "indicator_value must be [real, imag]")
        require(all(0.0 <= lo < hi for lo, hi in self.bands), "bands must satisfy 0 <= lo < hi")
        require(self.xi_grid_points >= 2 and self.x_grid_points >= 2, "grids need >= 2 points")
        require(self.width >= 1 and self.samples >= 2, "width >= 1 and samples >= 2 required")
        require(self.learning_rate > 0.0, "learning_rate must be positive")
        require(self.epochs >= 0 and self.ntk_train_epochs >= 0, "epochs must be nonnegative")
        require(self.beta > 0.0, "beta must be positive")
        require(self.ntk_dim >= 2, "ntk_dim must be at least 2")
        require(self.ntk_seeds >= 1 and self.angle_points >= 2, "ntk_seeds and angle_points")
        require(self.ntk_learning_rate > 0.0, "ntk_learning_rate must be positive")

    def to_mapping(self):
        """Flat, JSON-ready echo of the configuration using the file key names."""
        echo = {}
        for key, (name, _) in _SCHEMA.items():
            value = getattr(self, name)
            if name == "bands":
                value = [band_label(band) for band in value]
            elif isinstance(value, tuple):
                value = list(value)
            echo[key] = value
        return echo


def _coerce(config, experiment):
    if config is None:
        raise ConfigError("config must be provided to run an experiment.")
    if not isinstance(config, ExperimentConfig):
        config = ExperimentConfig.from_mapping(config)
    if config.experiment != experiment:
        raise ConfigError(f"expected experiment '{experiment}', got '{config.experiment}'")
    return config


def _xi_grid(config):
    return np.linspace(-config.xi_grid_limit, config.xi_grid_limit, config.xi_grid_points)


def _width_per_scale(width, spec):
    if width % spec.count:
        raise ConfigError(
            f"width {width} is not divisible by the {spec.count} scales of s={spec.num_scales}"
        )
    return width // spec.count


def _snapshot_steps(config):
    """Map snapshot step indices to times on the dt grid, dropping times past the horizon."""
    steps = config.steps or int(round(config.snapshot_times[-1] / config.dt))
    schedule = {}
    for t in config.snapshot_times:
        m = int(round(t / config.dt))
        if m > steps:
            logging.warning(f"Snapshot time {t} lies past the final step {steps}; skipped.")
            continue
        if m in schedule:
            logging.warning(
                f"Snapshot time {t} falls on step {m} like time {schedule[m]}; skipped."
            )
            continue
        schedule[m] = t
    return steps, schedule


def _profile_norm(values, grid):
    return float(math.sqrt(trapezoid(np.abs(values) ** 2, grid)))


def _band_fractions(state, initial, basis, bands):
    fractions = {}
    for band in bands:
        reference = initial[band_label(band)]
        current = band_energy(state, basis, *band)
        fractions[band_label(band)] = current / reference if reference > 0.0 else 0.0
    return fractions


def _band_energies(state, basis, bands):
    return {band_label(band): band_energy(state, basis, *band) for band in bands}


def half_life_band(initial, later, floor=1.0e-3):
    """
    Frequency interval around ξ = 0 over which |η(ξ,t)| ≤ ½|η(ξ,0)|.

    Points where the initial error is below ``floor`` times its maximum do not count
    as halved. Returns ``None`` when the error has not halved at the grid point
    closest to ξ = 0.
    """
    start = np.abs(initial.values)
    now = np.abs(later.values)
    halved = (now <= 0.5 * start) & (start > floor * start.max())
    center = int(np.argmin(np.abs(initial.xi_grid)))
    if not halved[center]:
        return None
    lower = center
    while lower > 0 and halved[lower - 1]:
        lower -= 1
    upper = center
    while upper < len(halved) - 1 and halved[upper + 1]:
        upper += 1
    return float(initial.xi_grid[lower]), float(initial.xi_grid[upper])


def _evolve_and_record(config, basis, op, state, output_dir, label, files):
    """Shared stepping for the model-only experiments; writes frequency and energy tables."""
    steps, schedule = _snapshot_steps(config)
    run = evolve(op, state, config.dt, steps, [0, *schedule])
    xi_grid = _xi_grid(config)

    initial = _band_energies(state, basis, config.bands)
    band_table = {}
    frames = [frequency_frame(0.0, evaluate_spectral(state, basis, xi_grid))]
    profiles = {0.0: evaluate_spectral(state, basis, xi_grid)}
    for m, t in schedule.items():
        snapshot = run.snapshots[m]
        band_table[f"{t:g}"] = _band_fractions(snapshot, initial, basis, config.bands)
        profiles[t] = evaluate_spectral(snapshot, basis, xi_grid)
        frames.append(frequency_frame(t, profiles[t]))

    frequency_name = f"{label}_frequency.csv"
    save_table(
        pd.concat(frames, ignore_index=True), get_output_file_path(output_dir, frequency_name)
    )
    energy_name = f"{label}_energy.csv"
    save_table(
        pd.DataFrame(
            {
                "step": np.arange(steps + 1),
                "t": np.arange(steps + 1) * config.dt,
                "energy": run.energies,
            }
        ),
        get_output_file_path(output_dir, energy_name),
    )
    files.extend([frequency_name, energy_name])

    increments = np.diff(run.energies)
    trajectory = {
        "initial": float(run.energies[0]),
        "final": float(run.energies[-1]),
        "steps": steps,
        "max_increase": float(max(0.0, increments.max())) if len(increments) else 0.0,
        "non_increasing": bool(np.all(increments <= 1e-12 * run.energies[:-1] + 1e-300)),
    }
    summary_table(
        f"Band energy fractions, {label}",
        ["t", *[band_label(band) for band in config.bands]],
        [[t, *fractions.values()] for t, fractions in band_table.items()],
    )
    return run, profiles, band_table, trajectory


def run_simulate(config):
    """
    Evolve the indicator initial error for every s in ``scale_sweep``.

    The initial condition is ``indicator_value`` (real, imaginary) on
    |ξ| ≤ ``indicator_radius``, projected exactly. Frequency snapshots, energy
    trajectories, the A/B coefficient profiles and an SVG overlay per s are written.

    Returns:
        ExperimentReport: Band-energy fractions R_s(t) per band and energy summaries.
    """
    config = _coerce(config, "simulate")
    output_dir = config.output_dir
    files = []
    report = ExperimentReport(config=config.to_mapping())
    value = complex(*config.indicator_value)

    for s in config.scale_sweep:
        label = f"simulate_s{s}"
        spec = scale_spec(s, config.alpha_rule)
        basis = make_basis(config.p, config.lam, config.xi_max)
        op = assemble_operator(basis, spec)
        state = project_interval(basis, -config.indicator_radius, config.indicator_radius, value)
        logging.info(f"Simulating s={s} with p={basis.order_p}, lambda={basis.lam:.6f}")

        _, profiles, band_table, trajectory = _evolve_and_record(
            config, basis, op, state, output_dir, label, files
        )
        report.band_energies[f"s={s}"] = band_table
        report.energy_trajectory[f"s={s}"] = trajectory

        plot_name = f"{label}_real.svg"
        save_line_plot(
            get_output_file_path(output_dir, plot_name),
            _xi_grid(config),
            {f"t={t:g}": profile.real_part for t, profile in profiles.items()},
            title=f"Real part of the error, s={s}",
            xlabel="xi",
            ylabel="Re eta",
        )
        files.append(plot_name)

    xi_grid = _xi_grid(config)
    coefficients = coefficient_profiles(xi_grid, config.coefficient_scales, config.alpha_rule)
    table = pd.DataFrame({"xi": xi_grid})
    for s, named in coefficients.items():
        for name, values in named.items():
            table[f"{name}_s{s}"] = values
    save_table(table, get_output_file_path(output_dir, "coefficients.csv"))
    save_line_plot(
        get_output_file_path(output_dir, "coefficients_A_minus.svg"),
        xi_grid,
        {f"s={s}": named["A_minus"] for s, named in coefficients.items()},
        title="Diffusion coefficient A^-",
        xlabel="xi",
        ylabel="A^-",
    )
    files.extend(["coefficients.csv", "coefficients_A_minus.svg"])

    report.files = files
    write_report(report, output_dir)
    return report


def run_train_compare(config):
    """
    Train a network and compare its error with the diffusion model started from the
    same initial error, in frequency and in physical space.

    The model uses Δt = learning rate, so step m corresponds to epoch m.

    Returns:
        ExperimentReport: Relative L² discrepancies per snapshot epoch and the decay of
        both error norms.
    """
    config = _coerce(config, "train_compare")
    if config.dt != config.learning_rate:
        logging.warning(
            f"train_compare steps the model with dt = learning_rate = {config.learning_rate}; "
            f"the configured dt = {config.dt} is ignored."
        )
    output_dir = config.output_dir
    files = []
    report = ExperimentReport(config=config.to_mapping())

    spec = scale_spec(config.scales, config.alpha_rule)
    params = init_params(spec, _width_per_scale(config.width, spec), config.seed, config.has_bias)
    target = TargetSpec(config.a, config.b, config.beta)
    train_config = TrainConfig(
        learning_rate=config.learning_rate,
        epochs=config.epochs,
        num_samples=config.samples,
        domain_beta=config.beta,
        seed=config.seed,
        snapshot_epochs=config.snapshot_epochs,
        random_samples=config.random_samples,
    )
    trajectory = train(params, target, train_config)

    basis = make_basis(config.p, config.lam, config.xi_max)
    op = assemble_operator(basis, spec)
    state = project_initial(
        basis, lambda xi: network_hat(xi, params, config.beta) - target_hat(xi, target)
    )
    epochs = [snapshot.epoch for snapshot in trajectory.snapshots]
    dt = config.learning_rate
    run = evolve(op, state, dt, max(epochs), epochs)

    xi_grid = _xi_grid(config)
    x_grid = np.linspace(-config.beta, config.beta, config.x_grid_points)
    frequency_frames, physical_frames = [], []
    model_norms, train_norms = {}, {}
    reference = None

    for snapshot in trajectory.snapshots:
        m = snapshot.epoch
        t = m * dt
        model = evaluate_spectral(run.snapshots[m], basis, xi_grid)
        trained = error_hat(xi_grid, snapshot.params, target)
        model_physical = hermite_to_physical(run.snapshots[m], basis, x_grid)
        train_physical = forward(snapshot.params, x_grid) - target(x_grid)

        if reference is None:
            reference = (
                _profile_norm(trained.values, xi_grid),
                _profile_norm(train_physical, x_grid),
            )
        model_norms[m] = _profile_norm(model.values, xi_grid)
        train_norms[m] = _profile_norm(trained.values, xi_grid)
        report.discrepancies[f"epoch={m}"] = {
            "frequency": _profile_norm(model.values - trained.values, xi_grid) / reference[0],
            "physical": _profile_norm(model_physical - train_physical, x_grid) / reference[1],
            "loss": snapshot.loss,
        }

        frequency_frames.append(frequency_frame(t, model, trained))
        physical_frames.append(physical_frame(t, x_grid, model_physical, train_physical))
        dump = f"params/epoch_{m}"
        save_params(snapshot.params, get_output_file_path(output_dir, dump), seed=config.seed)
        files.extend([f"{dump}.npz", f"{dump}.json"])

        for part, model_values, train_values, grid, axis in (
            ("real", model.real_part, trained.real_part, xi_grid, "xi"),
            ("imag", model.imag_part, trained.imag_part, xi_grid, "xi"),
            ("physical", model_physical.real, train_physical, x_grid, "x"),
        ):
            plot_name = f"train_compare_{part}_epoch_{m}.svg"
            save_line_plot(
                get_output_file_path(output_dir, plot_name),
                grid,
                {"diffusion model": model_values, "network (train)": train_values},
                title=f"Error, {part}, epoch {m}",
                xlabel=axis,
                ylabel="eta",
            )
            files.append(plot_name)

    save_table(
        pd.concat(frequency_frames, ignore_index=True),
        get_output_file_path(output_dir, "train_compare_frequency.csv"),
    )
    save_table(
        pd.concat(physical_frames, ignore_index=True),
        get_output_file_path(output_dir, "train_compare_physical.csv"),
    )
    save_table(
        pd.DataFrame({"epoch": np.arange(len(trajectory.losses)), "loss": trajectory.losses}),
        get_output_file_path(output_dir, "train_compare_loss.csv"),
    )
    files.extend(
        [
            "train_compare_frequency.csv",
            "train_compare_physical.csv",
            "train_compare_loss.csv",
        ]
    )

    first, last = epochs[0], epochs[-1]
    report.energy_trajectory = {
        "model_norm_ratio": model_norms[last] / model_norms[first] if model_norms[first] else 0.0,
        "train_norm_ratio": train_norms[last] / train_norms[first] if train_norms[first] else 0.0,
        "model_norms": {f"epoch={m}": v for m, v in model_norms.items()},
        "train_norms": {f"epoch={m}": v for m, v in train_norms.items()},
    }
    if trajectory.losses[0] > 0.0:
        report.metrics["loss_ratio"] = float(trajectory.losses[-1] / trajectory.losses[0])
    summary_table(
        "Training vs diffusion model",
        ["epoch", "frequency", "physical", "loss"],
        [[key, *values.values()] for key, values in report.discrepancies.items()],
    )

    report.files = files
    write_report(report, output_dir)
    return report


def run_bias_compare(config):
    """
    Evolve the network-dependent initial error for every s in ``bias_scales``.

    Reports band-energy decay, the energy trajectory and the half-life band at
    ``half_life_time`` for each s.
    """
    config = _coerce(config, "bias_compare")
    output_dir = config.output_dir
    files = []
    report = ExperimentReport(config=config.to_mapping())
    target = TargetSpec(config.a, config.b, config.beta)
    if config.half_life_time not in config.snapshot_times:
        raise ConfigError("half_life_time must be one of snapshot_times")
    energy_curves = {}

    for s in config.bias_scales:
        label = f"bias_compare_s{s}"
        spec = scale_spec(s, config.alpha_rule)
        q = _width_per_scale(config.width, spec)
        params = init_params(spec, q, config.seed, config.has_bias)
        basis = make_basis(config.p, config.lam, config.xi_max)
        op = assemble_operator(basis, spec)
        state = project_initial(
            basis, lambda xi: network_hat(xi, params, config.beta) - target_hat(xi, target)
        )
        logging.info(f"Bias comparison for s={s}: width {params.width}, p={basis.order_p}")

        run, profiles, band_table, trajectory = _evolve_and_record(
            config, basis, op, state, output_dir, label, files
        )
        if config.half_life_time not in profiles:
            raise ConfigError(f"half_life_time {config.half_life_time} lies past the final step")
        band = half_life_band(profiles[0.0], profiles[config.half_life_time])
        report.band_energies[f"s={s}"] = band_table
        report.energy_trajectory[f"s={s}"] = trajectory
        report.metrics[f"s={s}"] = {"half_life_band": None if band is None else list(band)}
        energy_curves[f"s={s}"] = run.energies

        plot_name = f"{label}_magnitude.svg"
        save_line_plot(
            get_output_file_path(output_dir, plot_name),
            _xi_grid(config),
            {f"t={t:g}": np.abs(profile.values) for t, profile in profiles.items()},
            title=f"Error magnitude, s={s}",
            xlabel="xi",
            ylabel="|eta|",
        )
        files.append(plot_name)

    steps = len(next(iter(energy_curves.values())))
    save_line_plot(
        get_output_file_path(output_dir, "bias_compare_energy.svg"),
        np.arange(steps) * config.dt,
        energy_curves,
        title="Error energy",
        xlabel="t",
        ylabel="energy",
        log_y=True,
    )
    files.append("bias_compare_energy.svg")

    report.files = files
    write_report(report, output_dir)
    return report


def run_ntk_study(config):
    """
    Compare empirical NTKs at several widths with the limit kernel over the angle
    between two unit inputs, then optionally train and measure kernel drift.
    """
    config = _coerce(config, "ntk_study")
    output_dir = config.output_dir
    files = []
    report = ExperimentReport(config=config.to_mapping())

    spec = scale_spec(config.scales, config.alpha_rule, dim=config.ntk_dim)
    angles = np.linspace(0.0, math.pi, config.angle_points)
    limit = kernel_vs_angle(spec, None, angles, has_bias=config.has_bias)
    curves = {"angle": angles, "limit": curve_values(limit)}

    convergence = {}
    for width in config.ntk_widths:
        _width_per_scale(width, spec)
        errors = []
        for offset in range(config.ntk_seeds):
            curve = kernel_vs_angle(spec, width, angles, config.seed + offset, config.has_bias)
            errors.append(sup_angle_error(curve, limit))
            if offset == 0:
                curves[f"width_{width}"] = curve_values(curve)
        convergence[f"width={width}"] = {"per_seed": errors, "median": float(np.median(errors))}
    medians = [entry["median"] for entry in convergence.values()]
    report.metrics["convergence"] = convergence
    report.metrics["convergence_monotone"] = bool(np.all(np.diff(medians) < 0.0))
    summary_table(
        "Empirical vs limit NTK (sup-angle relative error)",
        ["width", "median"],
        [[key, entry["median"]] for key, entry in convergence.items()],
    )

    save_table(pd.DataFrame(curves), get_output_file_path(output_dir, "ntk_kernels.csv"))
    save_line_plot(
        get_output_file_path(output_dir, "ntk_kernels.svg"),
        angles,
        {key: values for key, values in curves.items() if key != "angle"},
        title=f"NTK vs angle (d={spec.dim}, s={spec.num_scales})",
        xlabel="beta",
        ylabel="Theta",
    )
    files.extend(["ntk_kernels.csv", "ntk_kernels.svg"])

    if config.ntk_train:
        target = TargetSpec(config.a, config.b, config.beta)
        train_config = TrainConfig(
            learning_rate=config.ntk_learning_rate,
            epochs=config.ntk_train_epochs,
            num_samples=config.ntk_samples,
            domain_beta=config.beta,
            seed=config.seed,
            snapshot_epochs=config.ntk_snapshot_epochs,
            random_samples=True,
        )
        drift = {}
        rows = []
        for width in config.ntk_drift_widths:
            params = init_params(spec, _width_per_scale(width, spec), config.seed, config.has_bias)
            reference = kernel_vs_angle(spec, params, angles, has_bias=config.has_bias)
            trajectory = train(params, target, train_config)
            drift[f"width={width}"] = {}
            for snapshot in trajectory.snapshots[1:]:
                curve = kernel_vs_angle(spec, snapshot.params, angles, has_bias=config.has_bias)
                value = kernel_drift(curve, reference)
                drift[f"width={width}"][f"epoch={snapshot.epoch}"] = value
                rows.append({"width": width, "epoch": snapshot.epoch, "drift": value})
        report.metrics["drift"] = drift
        if len(set(config.ntk_drift_widths)) > 1 and rows:
            # Drift at the last snapshot epoch
            narrowest = drift[f"width={min(config.ntk_drift_widths)}"]
            widest = drift[f"width={max(config.ntk_drift_widths)}"]
            report.metrics["drift_ordered"] = bool(
                list(widest.values())[-1] < list(narrowest.values())[-1]
            )
        save_table(
            pd.DataFrame(rows, columns=["width", "epoch", "drift"]),
            get_output_file_path(output_dir, "ntk_drift.csv"),
        )
        files.append("ntk_drift.csv")
        summary_table(
            "NTK drift during training",
            ["width", "epoch", "drift"],
            [[row["width"], row["epoch"], row["drift"]] for row in rows],
        )

    report.files = files
    write_report(report, output_dir)
    return report


def run_experiment(config=None):
    """
    Run the experiment named by ``config["experiment"]``.

    This is the library entry point: pass a flat mapping with every key of the
    packaged ``config.json`` (or an ExperimentConfig) and receive the report. The
    output files land in ``output_dir``.

    Args:
        config (dict or ExperimentConfig): The resolved configuration.

    Returns:
        ExperimentReport: The report that was also written to ``report.json``.

    Raises:
        ConfigError: If the configuration is missing or invalid.
        NumericalError: If the solver or the training loop fails.
    """
    if config is None:
        raise ConfigError("config must be provided to run an experiment.")
    if not isinstance(config, ExperimentConfig):
        config = ExperimentConfig.from_mapping(config)
    logging.info(f"Running experiment '{config.experiment}' into {config.output_dir}")
    runners = {
        "simulate": run_simulate,
        "train_compare": run_train_compare,
        "bias_compare": run_bias_compare,
        "ntk_study": run_ntk_study,
    }
    return runners[config.experiment](config)
