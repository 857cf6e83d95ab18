import os
from datetime import datetime

import numpy as np


def ensure_dir(dir_path):
    os.makedirs(dir_path, exist_ok=True)


def timestamp():
    return datetime.now().isoformat(timespec='seconds')


def as_points(x, dim=None):
    """Return `x` as a float array of shape (n, d); a single point becomes one row."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1) if dim is None or arr.shape[0] == dim else arr.reshape(-1, 1)
    if dim is not None and arr.shape[1] != dim:
        raise ValueError('expected points of dimension {}, got {}'.format(dim, arr.shape[1]))
    return arr


def get_report_table(reports):
    out = ''
    out += "Check                      |   Estimate |    CI low |   CI high | Tolerance        | Pass" + '\n'
    out += "---------------------------+------------+-----------+-----------+------------------+-----" + '\n'
    for report in reports:
        out += "{:27}|{:11.5g} |{:10.4g} |{:10.4g} | {:17}| {}".format(
            report.name[:27],
            report.estimate,
            report.ci_low,
            report.ci_high,
            report.tolerance_str()[:17],
            'yes' if report.passed else 'NO'
        ) + '\n'
    return out


def get_distance_table(times, distances, header='L1'):
    out = ''
    out += "      Time | {:>10}".format(header) + '\n'
    out += "-----------+-----------" + '\n'
    for t, dist in zip(times, distances):
        out += "{:10.4f} |{:10.5f}".format(t, dist) + '\n'
    return out
