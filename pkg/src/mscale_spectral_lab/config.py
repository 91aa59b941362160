import os
import json
import shutil
import logging
import argparse

from dotenv import load_dotenv

from .errors import ConfigError

# Subcommand names map onto experiment identifiers used in config files.
COMMANDS = {
    "simulate": "simulate",
    "train-compare": "train_compare",
    "bias-compare": "bias_compare",
    "ntk-study": "ntk_study",
}
PROFILES = ("ci", "paper")


def get_package_dir():
    """Return the directory path of the current package."""
    return os.path.dirname(__file__)


def get_user_config_dir():
    """
    Get the path to the user's configuration directory.

    ``MSCALE_LAB_HOME`` overrides the default ``~/.mscale_lab/``; it may also be set
    in a ``.env`` file in the working directory.
    """
    load_dotenv()
    return os.path.expanduser(os.getenv("MSCALE_LAB_HOME", "~/.mscale_lab/"))


def parse_arguments(argv=None):
    """
    Parse command-line arguments for running a lab experiment.

    One subcommand selects the experiment (`simulate`, `train-compare`, `bias-compare`
    or `ntk-study`). Every subcommand accepts:
    - `--config`: Path to a flat JSON file whose keys override the profile.
    - `--out`: Output directory for CSV, JSON, SVG and parameter files.
    - `--seed`: Seed for network initialization and random sampling.
    - `--profile`: Preset family, `ci` (reduced) or `paper` (default).
    - `--scales`: Scale count s (s + 1 scales).
    - `--p`: Highest Hermite basis index.
    - `--dt`: Backward-Euler time step.

    Args:
        argv (list of str, optional): Arguments to parse; defaults to ``sys.argv[1:]``.

    Returns:
        argparse.Namespace: Parsed arguments, with `experiment` set from the subcommand.

    Raises:
        ConfigError: If a numeric flag is out of range.
        SystemExit: If argparse rejects the command line.

    Example usage:
        mscale-lab simulate --profile ci --scales 5 --out runs/s5
    """

    try:

        def validate_dt(dt):
            """
            Validate that the time step is positive.

            Raises:
                ConfigError: If dt is not positive.
            """
            if dt is not None and not dt > 0.0:
                raise ConfigError("--dt must be a positive number.")

        def validate_order(p):
            if p is not None and p < 1:
                raise ConfigError("--p must be an integer of at least 1.")

        def validate_scales(scales):
            if scales is not None and scales < 0:
                raise ConfigError("--scales must be a nonnegative integer.")

        # Shared flags for every subcommand
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument(
            "--config",
            type=str,
            default=None,
            help="Flat JSON configuration file applied on top of the selected profile.",
        )
        common.add_argument(
            "--out",
            type=str,
            default=None,
            help="Output directory for reports, tables, plots and parameter dumps.",
        )
        common.add_argument(
            "--seed",
            type=int,
            default=None,
            help="Seed for parameter initialization and random sampling.",
        )
        common.add_argument(
            "--profile",
            type=str,
            choices=PROFILES,
            default="paper",
            help="Preset family: 'ci' for reduced runs, 'paper' for the full presets.",
        )
        common.add_argument(
            "--scales",
            type=int,
            default=None,
            help="Scale count s; the network uses s + 1 scales with factors 2^j.",
        )
        common.add_argument(
            "--p",
            type=int,
            default=None,
            help="Highest Hermite basis index of the spectral solver.",
        )
        common.add_argument(
            "--dt",
            type=float,
            default=None,
            help="Backward-Euler time step. Must be positive.",
        )

        # Create the argument parser
        parser = argparse.ArgumentParser(
            description="Multi-scale network training and error diffusion experiments."
        )
        subparsers = parser.add_subparsers(dest="command", required=True)
        subparsers.add_parser(
            "simulate", parents=[common], help="Evolve the indicator initial error for each scale count."
        )
        subparsers.add_parser(
            "train-compare",
            parents=[common],
            help="Train a network and compare its error with the diffusion model.",
        )
        subparsers.add_parser(
            "bias-compare",
            parents=[common],
            help="Compare error decay for s = 0 and a multi-scale network.",
        )
        subparsers.add_parser(
            "ntk-study", parents=[common], help="Empirical vs limit NTK and kernel drift."
        )

        args = parser.parse_args(argv)
        args.experiment = COMMANDS[args.command]

        validate_dt(args.dt)
        validate_order(args.p)
        validate_scales(args.scales)

        # Return the args post-validation
        return args

    except argparse.ArgumentError as e:
        print(f"Argument parsing error: {e}")
        raise SystemExit(2)


def load_config(args, config_file="config.json"):
    """
    Resolve the experiment configuration from every layer.

    Layers are applied in order, later ones winning: the packaged defaults, the
    user's copy of ``config.json``, the selected profile, the ``--config`` file,
    and finally the command-line flags. Within a layer, keys prefixed with
    ``<experiment>.`` override the generic key for that experiment only; keys
    scoped to other experiments are dropped.

    Args:
        args (argparse.Namespace): Arguments from `parse_arguments`.
        config_file (str): Name of the defaults file. Defaults to "config.json".

    Returns:
        dict: The flat, resolved configuration.

    Raises:
        ConfigError: If a file is missing, unreadable, or not a JSON object.
    """
    experiment = args.experiment

    def load_json_config(path):
        """
        Load a flat configuration mapping from a JSON file.

        Raises:
            ConfigError: If the file does not exist or does not hold a JSON object.
        """
        if not os.path.exists(path):
            raise ConfigError(f"Config file not found: {path}")
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Error parsing JSON configuration {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"Invalid config format in {path}: expected a JSON object.")
        return data

    def resolve_scoped_keys(layer):
        """Flatten `<experiment>.<key>` entries for the active experiment."""
        resolved = {key: value for key, value in layer.items() if "." not in key}
        prefix = f"{experiment}."
        for key, value in layer.items():
            if key.startswith(prefix):
                resolved[key[len(prefix) :]] = value
        return resolved

    def find_profile(name):
        """Profile path in the user directory, falling back to the packaged copy."""
        for root in (get_user_config_dir(), get_package_dir()):
            path = os.path.join(root, "data", "profiles", f"{name}.json")
            if os.path.exists(path):
                return path
        raise ConfigError(f"Profile not found: {name}")

    def override_config_with_cli_args(args, config):
        """Apply command-line flags that were given explicitly."""
        overrides = {
            "output_dir": args.out,
            "seed": args.seed,
            "scales": args.scales,
            "p": args.p,
            "dt": args.dt,
        }
        for key, value in overrides.items():
            if value is not None:
                config[key] = value
        config["experiment"] = experiment
        return config

    layers = [os.path.join(get_package_dir(), config_file)]
    user_defaults = os.path.join(get_user_config_dir(), config_file)
    if os.path.exists(user_defaults):
        layers.append(user_defaults)
    layers.append(find_profile(args.profile))
    if args.config:
        layers.append(args.config)

    config = {}
    for path in layers:
        config.update(resolve_scoped_keys(load_json_config(path)))
    config = override_config_with_cli_args(args, config)

    log_config(config, layers[-1])
    return config


def log_config(config, config_file_path):
    """
    Log the configuration to the console in a readable format.

    Args:
        config (dict): The configuration dictionary to log.
        config_file_path (str): The last configuration file applied.

    Raises:
        ConfigError: If the provided config is not a dictionary.
    """

    def validate_config_is_dict(config):
        """Ensure the configuration is a dictionary."""
        if not isinstance(config, dict):
            raise ConfigError("Invalid config format: expected a dictionary.")

    def prepare_log_formatting(config):
        """Prepare the header and formatting for logging the configuration."""
        max_key_length = max(len(key) for key in config.keys()) + 2
        header = f"{'Configuration Key'.ljust(max_key_length)} | Value"
        separator = "-" * len(header)
        return header, separator, max_key_length

    validate_config_is_dict(config)
    header, separator, max_key_length = prepare_log_formatting(config)
    logging.info(f"Config file path: {config_file_path}")
    logging.info(header)
    logging.info(separator)
    for key, value in config.items():
        logging.info(f"{key.ljust(max_key_length)} | {value}")
    logging.info("")


def initialize_user_config():
    """
    Set up the user-specific configuration directory and copy the packaged files.

    The directory receives ``config.json`` and ``data/profiles`` from the package
    when they are not already present, so local edits survive upgrades.

    Raises:
        SystemExit: If the directory cannot be created or the files cannot be copied.
    """

    def create_directory(directory):
        """
        Create the specified directory if it doesn't exist.

        Raises:
            SystemExit: If the program lacks permission to create the directory.
        """
        try:
            os.makedirs(directory, exist_ok=True)
            logging.debug(f"User configuration directory created: {directory}")
        except PermissionError as e:
            logging.error(f"Permission error: {e}")
            raise SystemExit(
                f"Error: Insufficient permissions to create or modify files in {directory}."
            )

    def copy_directory(src, dest, label):
        """Copy the directory from the source to the destination unless it already exists."""
        try:
            if os.path.exists(dest):
                logging.debug(f"{label} directory already exists at: {dest}. Skipping copy.")
            else:
                shutil.copytree(src, dest)
                logging.debug(f"Copied {label} directory from {src} to {dest}")
        except FileNotFoundError as e:
            logging.error(f"File not found: {e}")
            raise SystemExit(f"Error: {e}")
        except shutil.Error as e:
            logging.error(f"File copy error: {e}")
            raise SystemExit(f"Error: Failed to copy files or directories: {e}")

    def copy_config_file_if_missing(user_config_dir):
        """Copy config.json to the user directory if it doesn't already exist."""
        try:
            config_src_path = os.path.join(get_package_dir(), "config.json")
            config_dest_path = os.path.join(user_config_dir, "config.json")
            if not os.path.exists(config_dest_path):
                shutil.copy(config_src_path, config_dest_path)
                logging.debug(f"Copied config.json from {config_src_path} to {config_dest_path}")
            else:
                logging.debug(f"Config file already exists at: {config_dest_path}. Skipping copy.")
        except FileNotFoundError as e:
            logging.error(f"Config file not found: {e}")
            raise SystemExit(f"Error: {e}")
        except PermissionError as e:
            logging.error(f"Permission error: {e}")
            raise SystemExit(f"Error: Insufficient permissions to copy config file: {e}")

    user_config_dir = get_user_config_dir()
    create_directory(user_config_dir)
    copy_directory(
        os.path.join(get_package_dir(), "data"), os.path.join(user_config_dir, "data"), "Data"
    )
    copy_config_file_if_missing(user_config_dir)
