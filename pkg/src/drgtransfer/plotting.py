"""Fidelity line charts rendered to SVG with matplotlib.

Output is byte-stable: the SVG hash salt is pinned, the date stamp is
dropped and text is kept as ``<text>`` rather than glyph paths.
"""
from __future__ import annotations

import io
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

from matplotlib.backends.backend_svg import FigureCanvasSVG  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from .dynamics import FidelityTrace  # noqa: E402

WIDTH_PX, HEIGHT_PX = 800, 500
_DPI = 72

STYLE = {
    "svg.hashsalt": "drgtransfer",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "font.size": 12,
    "axes.linewidth": 0.8,
    "lines.linewidth": 1.6,
    "legend.frameon": False,
    "path.simplify": False,
}


def gamma_label(gamma: float) -> str:
    return f"γ={gamma:g}"


def emit_svg(
    traces: Sequence[FidelityTrace],
    labels: Optional[Sequence[str]] = None,
    title: str = "",
) -> str:
    """One line per trace on a fixed 800x500 canvas; returns the SVG text.

    Each line is wrapped in a group with id ``trace-<i>``.  Labels default to
    the trace's decoherence rate, e.g. ``γ=0.1``.
    """
    if not traces:
        raise ValueError("need at least one trace")
    if labels is None:
        labels = [gamma_label(tr.gamma) for tr in traces]
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(WIDTH_PX / _DPI, HEIGHT_PX / _DPI), dpi=_DPI)
        FigureCanvasSVG(fig)
        ax = fig.add_subplot(1, 1, 1)
        for i, (tr, label) in enumerate(zip(traces, labels)):
            (line,) = ax.plot(tr.times, tr.fidelities, label=label)
            line.set_gid(f"trace-{i}")
        ax.set_xlim(float(min(tr.times[0] for tr in traces)), float(max(tr.times[-1] for tr in traces)))
        ax.set_ylim(0.0, 1.05)
        ax.set_xlabel("t")
        ax.set_ylabel("F(t)")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right")
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()
