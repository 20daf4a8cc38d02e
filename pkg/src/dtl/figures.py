"""Optional figure rendering for sweep reports.

Figures are side artifacts of the report path: a PNG next to the CSV,
never part of the comparable report bytes.  Rendering goes through the
object-oriented matplotlib API with the Agg canvas and strips the
Software metadata chunk, which keeps the PNG bytes reproducible too.
"""

from __future__ import annotations

from .errors import IoFailure


def render_sweep_figure(report, path: str) -> None:
    """Plot max ratio against depth, one line per dim."""
    try:
        from matplotlib.backends.backend_agg import FigureCanvasAgg
        from matplotlib.figure import Figure
    except ImportError as exc:
        raise IoFailure(f"matplotlib unavailable: {exc}") from exc
    fig = Figure(figsize=(6.0, 4.0), dpi=100)
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(1, 1, 1)
    for dim in report.dims:
        xs = [row["depth"] for row in report.rows if row["dim"] == dim]
        ys = [row["max_ratio"] for row in report.rows if row["dim"] == dim]
        label = "dim %d (slope %.3g)" % (dim, report.slopes[str(dim)])
        ax.plot(xs, ys, marker="o", label=label)
    ax.set_xlabel("depth")
    ax.set_ylabel("max ratio")
    ax.set_title(report.inequality)
    if all(row["max_ratio"] > 0 for row in report.rows):
        ax.set_yscale("log")
    ax.legend(loc="best")
    fig.tight_layout()
    try:
        fig.savefig(path, format="png", metadata={"Software": None})
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
