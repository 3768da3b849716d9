"""CSV and manifest writers.

CSV files are UTF-8 with ``\\n`` line endings; floats carry 9 significant
digits and empty cells mark quantities without a closed form.
"""

import datetime as _dt
import os

import numpy as np

from . import __version__

CURVE_COLUMNS = ("rho_db", "layer", "p_sim", "std_err", "p_analytic", "p_lower", "p_upper", "trials")
DIST_COLUMNS = (
    "quantity", "layer", "mean", "mean_std_err", "variance", "variance_std_err",
    "theory_mean", "theory_variance", "samples",
)


def fmt(value):
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if not np.isfinite(value):
        return ""
    return format(value, ".9g")


def _cell(array, g, i):
    return None if array is None else array[g, i]


def curve_rows(sweep, user):
    overlay = sweep.overlays.get(user)
    for g, point in enumerate(sweep.points):
        est = point.user1 if user == 1 else point.user2
        for i, e in enumerate(est):
            yield (
                point.rho_db,
                i + 1,
                e.p_hat,
                e.std_err,
                _cell(overlay.analytic, g, i),
                _cell(overlay.lower, g, i),
                _cell(overlay.upper, g, i),
                e.trials,
            )


def render_csv(columns, rows):
    lines = [",".join(columns)]
    lines += [",".join(fmt(v) if not isinstance(v, str) else v for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def curve_csv(sweep, user):
    return render_csv(CURVE_COLUMNS, curve_rows(sweep, user))


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def curve_filename(scheme, user):
    return f"{scheme}_user{user}.csv"


def write_sweep(sweep, out_dir):
    """Write one CSV per defined user; returns ``{user: path}``."""
    os.makedirs(out_dir, exist_ok=True)
    users = [1, 2] if sweep.points[0].user1 is not None else [2]
    paths = {}
    for user in users:
        path = os.path.join(out_dir, curve_filename(sweep.config.scheme, user))
        write_text(path, curve_csv(sweep, user))
        paths[user] = path
    return paths


def manifest_text(config, outputs, timestamp=None):
    """Key-value manifest; loadable back as a configuration file."""
    if timestamp is None:
        timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    lines = [f"# mimonoma run manifest", f"artifact_version = {__version__}", f"timestamp = {timestamp}"]
    lines += [f"{k} = {v}" for k, v in config.to_items()]
    lines += [f"output.{name} = {path}" for name, path in outputs.items()]
    return "\n".join(lines) + "\n"


def dist_rows(x, z, m):
    """Per-layer moment summary rows for the user-2 and user-1 gains."""
    n = x.shape[1]
    for name, data, theory in (("x", x, m - np.arange(n)), ("z", z, np.ones(n))):
        count = data.shape[0]
        mean = data.mean(axis=0)
        centered = data - mean
        var = (centered ** 2).mean(axis=0) * count / (count - 1)
        m4 = (centered ** 4).mean(axis=0)
        for i in range(n):
            yield (
                name, i + 1, mean[i], np.sqrt(var[i] / count), var[i],
                np.sqrt(max(m4[i] - var[i] ** 2, 0.0) / count),
                float(theory[i]), float(theory[i]), count,
            )
