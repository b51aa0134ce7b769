"""Output layer for the CLI: delimited curve data, a JSON run manifest,
and matplotlib renderings of the curves next to the data files.

All numbers are written with 10 significant digits and '.' decimal so
that two runs with the same config and seed produce byte-identical
files.
"""

from __future__ import annotations

import json
import platform
import time
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = [
    "format_number",
    "write_csv",
    "write_manifest",
    "render_curves",
]


def format_number(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.10g}"


def write_csv(path, header, rows) -> None:
    """Write rows of numbers (or strings) as comma-separated text."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            cell if isinstance(cell, str) else format_number(cell) for cell in row))
    path.write_text("\n".join(lines) + "\n")


def write_manifest(path, config_doc: dict, seed: int, wall_time: float,
                   outputs: list[str]) -> None:
    """JSON manifest with enough information to re-run the experiment."""
    import scipy

    from . import __version__

    doc = {
        "config": config_doc,
        "seed": seed,
        "wall_time_seconds": round(wall_time, 3),
        "versions": {
            "ppcpalm": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "outputs": outputs,
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n")


def render_curves(path, x, curves, mc=None, baseline=None,
                  xlabel="theta", ylabel="value", title=None,
                  logx=True) -> None:
    """Render analytic curves with optional MC error bars and a baseline.

    ``curves`` maps label -> y array; ``mc`` maps label ->
    (mean, ci_low, ci_high) arrays plotted as error bars on the same x
    grid; ``baseline`` is a (label, y array) pair drawn dashed.
    """
    x = np.asarray(x, dtype=float)
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for label, y in curves.items():
        ax.plot(x, np.asarray(y, dtype=float), label=label)
    if mc:
        for label, (mean, lo, hi) in mc.items():
            mean = np.asarray(mean, dtype=float)
            yerr = np.vstack([mean - np.asarray(lo, dtype=float),
                              np.asarray(hi, dtype=float) - mean])
            ax.errorbar(x, mean, yerr=yerr, fmt="o", markersize=3,
                        capsize=2, linestyle="none", label=f"{label} (MC)")
    if baseline is not None:
        blabel, by = baseline
        ax.plot(x, np.asarray(by, dtype=float), "k--", label=blabel)
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)
