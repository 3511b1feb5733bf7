"""Node-adaptive Tikhonov graph signal reconstruction."""

from ._gsr import *  # noqa: F401,F403
from ._gsr import __doc__  # noqa: F401


def read_csv_rows(text):
    """Parses run_experiment output into a list of dicts."""
    lines = [line for line in text.splitlines() if line.strip()]
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        row = dict(zip(header, cells))
        for key in ("x_value", "mean_nmse", "std_nmse"):
            row[key] = float(row[key])
        row["n_trials"] = int(row["n_trials"])
        rows.append(row)
    return rows
