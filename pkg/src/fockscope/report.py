"""Machine-readable reports: delimited results, JSON summaries, figures.

CSV rows carry the identifying tag of each asserted inequality, every
float is written with 12 significant digits, and the row order is the
deterministic emission order of the experiment, so equal seeds produce
byte-identical artifacts.
"""

from __future__ import annotations

import json
import os
import platform

CSV_COLUMNS = ("check_id", "params", "value", "bound", "passed")


def format_value(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int,)):
        return str(x)
    if isinstance(x, float):
        return format(x, ".12g")
    if isinstance(x, complex):
        return "%s%s%sj" % (format(x.real, ".12g"),
                            "+" if x.imag >= 0 else "-",
                            format(abs(x.imag), ".12g"))
    return str(x)


class Row:
    """One asserted inequality: tag, parameters, value, bound, verdict."""

    __slots__ = ("check_id", "params", "value", "bound", "passed")

    def __init__(self, check_id, params, value, bound, passed):
        self.check_id = check_id
        self.params = params
        self.value = value
        self.bound = bound
        self.passed = bool(passed)

    def as_csv(self):
        pstr = ";".join("%s=%s" % (k, format_value(v))
                        for k, v in self.params.items())
        return ",".join([self.check_id, pstr, format_value(self.value),
                         format_value(self.bound),
                         "true" if self.passed else "false"])


def write_csv(rows, path):
    if not rows:
        raise ValueError("refusing to write an empty result set")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(row.as_csv() + "\n")


def read_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    out = []
    for line in lines[1:]:
        out.append(dict(zip(header, line.split(","))))
    return out


def write_json(data, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=format_value)
        fh.write("\n")


def provenance_block(config, grid_digests):
    import numpy
    import scipy
    import matplotlib

    from . import __version__
    return {
        "config_echo": config.echo(),
        "config_text": config.raw_text,
        "grid_digests": grid_digests,
        "versions": {
            "python": platform.python_version(),
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "matplotlib": matplotlib.__version__,
            "fockscope": __version__,
        },
    }


def render_figures(figures, out_dir):
    """Render the experiments' figure specs to PNG files.

    Each spec maps a name to {series: [(label, xs, ys)], xlabel, ylabel,
    logx, logy}; styling is kept spare and deterministic.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []
    for name, spec in figures.items():
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for label, xs, ys in spec["series"]:
            ax.plot(xs, ys, marker="o", markersize=3.5, linewidth=1.2,
                    label=label)
        if spec.get("logx"):
            ax.set_xscale("log")
        if spec.get("logy"):
            ax.set_yscale("log")
        ax.set_xlabel(spec.get("xlabel", ""))
        ax.set_ylabel(spec.get("ylabel", ""))
        ax.set_title(name)
        ax.grid(True, which="both", alpha=0.3)
        if spec["series"]:
            ax.legend(fontsize=8)
        path = os.path.join(out_dir, "%s.png" % name)
        fig.savefig(path, dpi=110, metadata={})
        plt.close(fig)
        paths.append(path)
    return paths


def emit_report(rows, summary, config, grid_digests, out_dir, figures=None):
    """Write results.csv, summary.json and the provenance block.

    Returns the exit status: 0 when every row passed, 2 otherwise.
    """
    os.makedirs(out_dir, exist_ok=True)
    write_csv(rows, os.path.join(out_dir, "results.csv"))
    payload = dict(summary)
    payload["experiment"] = config.experiment
    payload["n_rows"] = len(rows)
    payload["n_failed"] = sum(1 for r in rows if not r.passed)
    write_json(payload, os.path.join(out_dir, "summary.json"))
    write_json(provenance_block(config, grid_digests),
               os.path.join(out_dir, "provenance.json"))
    if figures:
        render_figures(figures, out_dir)
    return 0 if payload["n_failed"] == 0 else 2
