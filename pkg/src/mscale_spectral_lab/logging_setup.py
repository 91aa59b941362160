import logging


def initialize_logging(level=logging.INFO):
    """Configure the logging settings for the application."""
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("PIL").setLevel(logging.WARNING)


def _format_cell(value, width):
    if isinstance(value, float):
        text = f"{value:.4e}"
    else:
        text = str(value)
    return f"{text:<{width}}"


def summary_table(title, headers, rows, min_width=10):
    """
    Logs a formatted ASCII table of experiment results.

    The title sits in its own box above the header row, rows are separated with
    dashed lines, and a row count closes the table. Floats are shown in scientific
    notation so band fractions and kernel errors line up.

    Args:
        title (str): Title for the table (e.g., "Band energy fractions, s=3").
        headers (list of str): Column headers.
        rows (list of sequence): Table rows, one value per header.
        min_width (int): Minimum width of every column.
    """
    widths = [
        max(min_width, len(str(header)), *(len(_format_cell(row[i], 0)) for row in rows))
        for i, header in enumerate(headers)
    ]
    border = "+" + "+".join("-" * (width + 2) for width in widths) + "+"

    # Title box, left aligned above the table
    title_box = f"+{'-' * (len(title) + 2)}+"
    logging.info(title_box)
    logging.info(f"| {title} |")
    logging.info(title_box)

    logging.info(border)
    logging.info("| " + " | ".join(f"{header:<{w}}" for header, w in zip(headers, widths)) + " |")
    logging.info(border)

    for index, row in enumerate(rows, start=1):
        logging.info("| " + " | ".join(_format_cell(v, w) for v, w in zip(row, widths)) + " |")
        if index < len(rows):
            logging.info("| " + " | ".join("-" * w for w in widths) + " |")

    logging.info(border)
    total_text = f"Total rows: {len(rows)}"
    logging.info(f"| {total_text:<{len(border) - 4}} |")
    logging.info(border + "\n")
