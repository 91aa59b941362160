import os
import json
import logging
from dataclasses import asdict, dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

# Fixed salt and no Date metadata keep SVG output byte-identical across reruns.
matplotlib.rcParams["svg.hashsalt"] = "mscale-spectral-lab"

FLOAT_FORMAT = "%.12e"

FREQUENCY_COLUMNS = [
    "t",
    "xi",
    "eta_real_model",
    "eta_imag_model",
    "eta_real_train",
    "eta_imag_train",
]
PHYSICAL_COLUMNS = [
    "t",
    "x",
    "eta_real_model",
    "eta_imag_model",
    "eta_real_train",
    "eta_imag_train",
]


@dataclass
class ExperimentReport:
    """
    Everything an experiment hands back: the config echo, per-snapshot band energies,
    energy trajectory summaries, training-vs-model discrepancies, other metrics and
    the manifest of files written (paths relative to the output directory).
    """

    config: dict
    band_energies: dict = field(default_factory=dict)
    energy_trajectory: dict = field(default_factory=dict)
    discrepancies: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def get_output_file_path(output_dir, name):
    """
    Join ``name`` onto the output directory, creating any missing parent directories.

    Args:
        output_dir (str): The experiment output directory.
        name (str): Relative file name, possibly with subdirectories.

    Returns:
        str: The absolute-or-relative path to write to.
    """
    path = os.path.join(output_dir, name)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    return path


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def save_as_json(data, file_path):
    """
    Saves a mapping in JSON format with proper indentation.

    Args:
        data (dict): The data to save; numpy scalars and arrays are converted.
        file_path (str): The path where the data will be saved.
    """
    with open(file_path, "w") as f:
        json.dump(data, f, indent=4, default=_json_default)
    logging.info(f"Report written to {file_path}")


def save_table(frame, file_path):
    """Write a DataFrame as CSV with a fixed float format; missing values stay empty."""
    frame.to_csv(file_path, index=False, float_format=FLOAT_FORMAT)
    logging.info(f"Table written to {file_path}")


def frequency_frame(t, model, train=None):
    """
    Frequency snapshot rows (t, xi, eta_real_model, eta_imag_model, eta_real_train, eta_imag_train).

    Args:
        t (float): Snapshot time.
        model (FrequencyProfile): Diffusion-model profile.
        train (FrequencyProfile, optional): Training profile on the same grid; its
            columns are left empty in model-only runs.
    """
    size = len(model.xi_grid)
    empty = np.full(size, np.nan)
    return pd.DataFrame(
        {
            "t": np.full(size, float(t)),
            "xi": model.xi_grid,
            "eta_real_model": model.real_part,
            "eta_imag_model": model.imag_part,
            "eta_real_train": empty if train is None else train.real_part,
            "eta_imag_train": empty if train is None else train.imag_part,
        },
        columns=FREQUENCY_COLUMNS,
    )


def physical_frame(t, x_grid, model, train=None):
    """Physical snapshot rows analogous to ``frequency_frame`` with complex value arrays."""
    size = len(x_grid)
    model = np.asarray(model, dtype=complex)
    train = None if train is None else np.asarray(train, dtype=complex)
    empty = np.full(size, np.nan)
    return pd.DataFrame(
        {
            "t": np.full(size, float(t)),
            "x": np.asarray(x_grid, dtype=float),
            "eta_real_model": model.real,
            "eta_imag_model": model.imag,
            "eta_real_train": empty if train is None else train.real,
            "eta_imag_train": empty if train is None else train.imag,
        },
        columns=PHYSICAL_COLUMNS,
    )


def save_line_plot(file_path, x, series, title="", xlabel="", ylabel="", log_y=False):
    """
    Render line series sharing one x axis to an SVG file.

    Args:
        file_path (str): Destination ``.svg`` path.
        x (array_like): Shared abscissa.
        series (dict): Legend label -> y values; labels ending in ``(train)`` are dashed.
        title (str): Axes title.
        xlabel (str): x-axis label.
        ylabel (str): y-axis label.
        log_y (bool): Use a logarithmic y axis.
    """
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, values in series.items():
        style = "--" if label.endswith("(train)") else "-"
        ax.plot(x, values, style, linewidth=1.2, label=label)
    if log_y:
        ax.set_yscale("log")
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, linewidth=0.3)
    if series:
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(file_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logging.info(f"Plot written to {file_path}")


def write_report(report, output_dir, name="report.json"):
    """
    Save the report, after checking that every manifest entry exists.

    Raises:
        FileNotFoundError: If a listed output file is missing.
    """
    missing = [f for f in report.files if not os.path.exists(os.path.join(output_dir, f))]
    if missing:
        raise FileNotFoundError(f"Report lists files that were not written: {missing}")
    path = get_output_file_path(output_dir, name)
    save_as_json(report.to_dict(), path)
    return path
