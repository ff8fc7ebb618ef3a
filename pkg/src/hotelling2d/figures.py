"""Figure rendering: one SVG per solved configuration.

Unit-square frame, firm markers labeled by entry order, equal-price Voronoi
cell boundaries, and a caption line with n, M, and regime. Output bytes are
deterministic for identical records: fixed hashsalt, no date metadata, and
text rendered as paths.
"""

from __future__ import annotations

import io

import matplotlib
import numpy as np

matplotlib.use("Agg", force=False)
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .geometry import voronoi_cells  # noqa: E402

_RC = {
    "svg.hashsalt": "hotelling2d",
    "svg.fonttype": "path",
    "font.family": "DejaVu Sans",
    "figure.figsize": (4.8, 5.0),
    "figure.dpi": 100,
}


def emit_figure(record: dict) -> bytes:
    """Render a result record to an SVG document (bytes).

    The record needs ``locations`` (list of [x1, x2]); ``n``, ``M``, and
    ``regime`` decorate the caption when present. An empty configuration
    draws the bare frame.
    """
    locations = record.get("locations") or []
    n = record.get("n", len(locations))
    M = record.get("M")
    regime = record.get("regime", "")

    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.set_xlim(-0.05, 1.05)
        ax.set_ylim(-0.05, 1.05)
        ax.set_aspect("equal")
        ax.plot([0, 1, 1, 0, 0], [0, 0, 1, 1, 0], color="black", lw=1.2)
        ax.set_xticks([0, 0.25, 0.5, 0.75, 1])
        ax.set_yticks([0, 0.25, 0.5, 0.75, 1])
        ax.tick_params(labelsize=8)

        if locations:
            cells = voronoi_cells(locations)
            for cell in cells:
                verts = cell.vertices
                if len(verts) >= 3:
                    closed = np.vstack([verts, verts[:1]])
                    ax.plot(closed[:, 0], closed[:, 1], color="0.45", lw=0.9)
            xs = [p[0] for p in locations]
            ys = [p[1] for p in locations]
            ax.plot(xs, ys, "o", color="black", ms=6, zorder=3)
            for k, (x, y) in enumerate(zip(xs, ys), start=1):
                ax.annotate(
                    str(k), (x, y), textcoords="offset points", xytext=(5, 5),
                    fontsize=9, zorder=4,
                )

        caption = f"n={n}"
        if M is not None:
            caption += f"  M={M:g}"
        if regime:
            caption += f"  regime={regime}"
        ax.set_title(caption, fontsize=10)

        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def figure_filename(record: dict) -> str:
    n = record.get("n", 0)
    regime = record.get("regime", "none") or "none"
    return f"fig_{n}_{regime}.svg"
