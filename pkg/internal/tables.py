import json
import logging
import os

logger = logging.getLogger(__name__)

# fixed float rendering so reruns produce identical files
FLOAT_FORMAT = "%.10g"


def header_lines(command, seed, config, notes=None):
    """'#'-prefixed provenance lines: command, seed, extra notes and the resolved config."""
    lines = [f"# command: {command}", f"# seed: {seed}"]
    for key, value in (notes or {}).items():
        lines.append(f"# {key}: {value}")
    lines.append(f"# config: {json.dumps(config, sort_keys=True)}")
    return lines


def write_table(table, path, command, seed, config, notes=None):
    """
    Write a pandas DataFrame as UTF-8 CSV preceded by header comments.

    Args:
        table (pandas.DataFrame): Rows to write.
        path (str): Output file, parent directories are created.
        command (str): Sub-command that produced the table.
        seed (int): Base seed of the run.
        config (dict): Resolved configuration.
        notes (dict, optional): Additional header entries.

    Returns:
        str: The path written.
    """
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for line in header_lines(command, seed, config, notes):
            handle.write(line + "\n")
        table.to_csv(handle, index=False, float_format=FLOAT_FORMAT, na_rep="nan", lineterminator="\n")
    logger.info(f"wrote {len(table)} rows to {path}")
    return path
