"""CSV tables and SVG plots.

Plots are written with a fixed SVG hash salt and no date metadata so that
the same inputs give byte-identical files.
"""

from __future__ import annotations

import csv
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .selection import CLASSIFICATION, EpochDiffHistogram, RunManifest, early_stop  # noqa: E402

_SVG_META = {"Date": None, "Creator": "wsoleval"}


def write_csv(path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _save_svg(fig, path) -> None:
    with plt.rc_context({"svg.hashsalt": "wsoleval", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def plot_epoch_curves(run: RunManifest, sources: Sequence[str], path, split: str = "val") -> None:
    """Per-epoch localization (one line per source) and classification accuracy,
    with the early-stopping epoch of each marked."""
    series = run.split(split)
    epochs = [r.epoch for r in series]
    fig, ax = plt.subplots(figsize=(6, 4))
    for source in list(sources) + [CLASSIFICATION]:
        try:
            values = [r.score(source) for r in series]
        except ValueError:
            continue
        line, = ax.plot(epochs, values, label=source)
        stop = early_stop(run, source, split)
        ax.plot([stop], [values[epochs.index(stop)]], "o", color=line.get_color())
    ax.set_xlabel("epoch")
    ax.set_ylabel("score")
    ax.set_title(f"{run.run_id} ({split})")
    ax.legend(loc="best", fontsize="small")
    _save_svg(fig, path)


def plot_epoch_diff_histogram(hist: EpochDiffHistogram, path, label: str = "") -> None:
    keys = sorted(hist.counts)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar(keys, [hist.counts[k] for k in keys], width=0.8)
    ax.axvline(hist.mean, linestyle="--", color="k", linewidth=1)
    ax.set_xlabel("early-stopping epoch difference")
    ax.set_ylabel("runs")
    if label:
        ax.set_title(label)
    _save_svg(fig, path)
