"""Static SVG line plots. Presentation only: every plotted series is also written as CSV."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed ids and no timestamp so identical data gives byte-identical files
_RC = {"svg.hashsalt": "nvmirror", "svg.fonttype": "none", "path.simplify": False}


def line_plot(path: str | Path, series, xlabel: str, ylabel: str, title: str = "", logy: bool = False) -> None:
    """``series`` is an iterable of ``(label, x, y)``."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for label, x, y in series:
            ax.plot(x, y, lw=1.2, label=label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if logy:
            ax.set_yscale("log")
        if any(lbl for lbl, _, _ in series):
            ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)
