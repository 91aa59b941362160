import logging

from mscale_spectral_lab.logging_setup import initialize_logging
from mscale_spectral_lab.config import (
    parse_arguments,
    initialize_user_config,
    load_config,
)
from mscale_spectral_lab.errors import ConfigError, NumericalError
from mscale_spectral_lab.harness import run_experiment

EXIT_SUCCESS = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_FAILURE = 3


def main(argv=None):
    """Main entry point for the lab's command-line interface.

    This function parses the subcommand and flags, sets up logging, initializes the
    user configuration directory, resolves the layered configuration, and runs the
    selected experiment.

    Returns:
        int: 0 on success, 2 for configuration errors, 3 for numerical failures.
    """

    initialize_logging()  # Initialize logging for the application

    try:
        args = parse_arguments(argv)

        initialize_user_config()  # Set up user configuration files

        config = load_config(args)  # Resolve defaults, profile, file and flags

        report = run_experiment(config)
    except ConfigError as e:
        logging.error(f"Configuration error: {e}")
        return EXIT_CONFIG_ERROR
    except NumericalError as e:
        logging.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL_FAILURE

    logging.info(f"Finished '{args.experiment}': {len(report.files)} files written.")
    return EXIT_SUCCESS


if __name__ == "__main__":
    raise SystemExit(main())  # Run the main function if the script is executed directly
