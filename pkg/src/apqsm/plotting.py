"""Minimal log-y line plots rendered from CSV files.

Every plot is drawn from CSV text only, so the SVG is reproducible from
the CSV outputs alone. Rendering is pinned (fixed hash salt, no date
metadata) so that identical CSVs give byte-identical SVGs.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_RC = {"svg.hashsalt": "apqsm", "svg.fonttype": "none", "path.simplify": False}


def read_rows(path) -> list:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def _positive(xs, ys):
    pts = [(x, y) for x, y in zip(xs, ys) if y == y and y > 0]
    return [p[0] for p in pts], [p[1] for p in pts]


def line_plot(series, svg_path, xlabel: str, ylabel: str, title: str = "", clip: float | None = None):
    """``series``: iterable of (label, xs, ys, dashed). Non-positive y values are dropped."""
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4.5))
        for label, xs, ys, dashed in series:
            if clip is not None:
                ys = [min(y, clip) for y in ys]
            xs, ys = _positive(xs, ys)
            if xs:
                ax.plot(xs, ys, "--" if dashed else "-o", label=label, markersize=3)
        ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if ax.lines:
            ax.legend(fontsize=7)
        ax.grid(True, which="both", alpha=0.3)
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    Path(svg_path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def ser_plot_from_csv(csv_paths, svg_path, title: str = ""):
    """SER curves (and their bound column when present) against SNR."""
    series = []
    for label, path in csv_paths:
        rows = read_rows(path)
        x = [float(r["snr_db"]) for r in rows]
        series.append((label, x, [float(r["ser"]) for r in rows], False))
        if rows and "bound" in rows[0]:
            series.append((f"{label} bound", x, [float(r["bound"]) for r in rows], True))
    line_plot(series, svg_path, "transmit SNR (dB)", "SER", title, clip=1.0)


def compare_plot_from_csv(csv_path, svg_path, x: str = "snr_db", title: str = ""):
    """Curves from a compare CSV; with a non-SNR x axis there is one curve per SNR."""
    rows = read_rows(csv_path)
    groups: dict = {}
    if x == "snr_db":
        for r in rows:
            groups.setdefault(f"{r['label']} ({r['detector']})", []).append(r)
    else:
        for r in rows:
            groups.setdefault(f"{r['snr_db']} dB", []).append(r)
    series = []
    for label, rs in groups.items():
        rs = sorted(rs, key=lambda r: float(r[x]))
        series.append((label, [float(r[x]) for r in rs], [float(r["ser"]) for r in rs], False))
    xlabel = {"snr_db": "transmit SNR (dB)", "semi_angle_deg": "semi-angle at half power (deg)",
              "d_tx": "LED spacing d_tx (m)"}[x]
    line_plot(series, svg_path, xlabel, "SER", title, clip=1.0)


def trace_plot_from_csv(csv_paths, svg_path, title: str = ""):
    """Objective of the accepted SCP iterates against iteration index."""
    series = []
    for label, path in csv_paths:
        rows = [r for r in read_rows(path) if r["accepted"] == "1"]
        series.append((label, [int(r["l"]) for r in rows], [float(r["f_a"]) for r in rows], False))
    line_plot(series, svg_path, "iteration", "ASER bound", title)


def allocation_plot_from_csv(csv_path, svg_path, title: str = ""):
    rows = read_rows(csv_path)
    groups: dict = {}
    for r in rows:
        groups.setdefault(r["mode"], []).append(r)
    series = [(mode, [float(r["snr_db"]) for r in rs], [float(r["joint_bound"]) for r in rs], False)
              for mode, rs in groups.items()]
    line_plot(series, svg_path, "transmit SNR (dB)", "ASER bound", title, clip=1.0)
