"""Self-contained SVG figures from result tables.

Output is byte-stable for identical input: matplotlib's SVG ids are salted
with a fixed string and the date metadata is dropped.
"""
from __future__ import annotations

import dataclasses
import io
from dataclasses import dataclass
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


@dataclass(frozen=True)
class Series:
    y: str
    label: str | None = None
    yerr: str | None = None
    style: str = "o-"  # matplotlib format string; "--" gives a dashed reference curve


@dataclass(frozen=True)
class PlotSpec:
    x: str
    series: Sequence[Series]
    title: str = ""
    xlabel: str | None = None
    ylabel: str | None = None
    logx: bool = False


def _columns(table) -> list[dict]:
    rows = []
    for row in table:
        if dataclasses.is_dataclass(row):
            row = dataclasses.asdict(row)
        rows.append(dict(row))
    return rows


def emit_svg(table, spec: PlotSpec) -> str:
    """Render ``table`` (rows as mappings or dataclasses) as an SVG document."""
    rows = _columns(table)
    if not rows:
        raise ValueError("cannot plot an empty table")
    xs = [r[spec.x] for r in rows]
    with plt.rc_context({"svg.hashsalt": "nestedswitch", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        try:
            for s in spec.series:
                ys = [r[s.y] for r in rows]
                if s.yerr:
                    ax.errorbar(xs, ys, yerr=[r[s.yerr] for r in rows], fmt=s.style, capsize=3, label=s.label)
                else:
                    ax.plot(xs, ys, s.style, label=s.label)
            if spec.logx:
                ax.set_xscale("log", base=2)
            ax.set_xlabel(spec.xlabel or spec.x)
            if spec.ylabel:
                ax.set_ylabel(spec.ylabel)
            if spec.title:
                ax.set_title(spec.title)
            if any(s.label for s in spec.series):
                ax.legend()
            ax.grid(alpha=0.3)
            fig.tight_layout()
            buf = io.StringIO()
            fig.savefig(buf, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return buf.getvalue()


FAILURE_PLOT = PlotSpec(
    x="x",
    series=[Series("mean_served", "served fraction", "stderr_served")],
    xlabel="failed nodes x",
    ylabel="mean served fraction",
)
HOPS_PLOT = PlotSpec(
    x="x",
    series=[Series("mean_hops", "hops per served pair", "stderr_hops")],
    xlabel="failed nodes x",
    ylabel="Bell pairs per delivered connection",
)
LOAD_PLOT = PlotSpec(x="load", series=[Series("probability", style="s-")], xlabel="edge load", ylabel="probability")
SCALING_PLOT = PlotSpec(
    x="n",
    series=[Series("mean_max_load", "mean", style="o"), Series("worst_max_load", "worst case", style="x")],
    xlabel="n",
    ylabel="required Bell pairs per link",
    logx=True,
)
CAPACITY_PLOT = PlotSpec(
    x="n",
    series=[Series("mean_S", "simulation", "stderr", style="o"), Series("theoretical", "n / log2(n)^2", style="--")],
    xlabel="n",
    ylabel="simultaneous Bell pairs S",
    logx=True,
)
FIDELITY_PLOT = PlotSpec(x="L", series=[Series("F_L", style="o-")], xlabel="hops L", ylabel="end-to-end fidelity")
