"""Learning-curve figures written as SVG.

Output is byte-for-byte reproducible: the SVG id salt is fixed, the date
metadata is suppressed and path simplification is off, so every data point
appears as a vertex of its polyline. Each curve's line carries the SVG id
``curve-<label>`` and its band ``band-<label>``.
"""
from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .bench import LearningCurve  # noqa: E402

# Fixed colours per criterion so a method looks the same in every figure.
COLORS = {
    "rnd": "#4d4d4d",
    "rnd-raw": "#b2b2b2",
    "hot": "#d95f02",
    "qbc": "#1b9e77",
    "emc": "#7570b3",
}
STYLE = {
    "svg.hashsalt": "softal",
    "svg.fonttype": "path",
    "path.simplify": False,
    "font.size": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def emit_plot(curves: Mapping[str, LearningCurve] | Iterable[LearningCurve], path,
              title: Optional[str] = None) -> Path:
    """Mean RMSE line with a shaded band of one standard deviation per method."""
    if isinstance(curves, Mapping):
        curves = list(curves.values())
    curves = list(curves)
    if not curves:
        raise ValueError("nothing to plot")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for i, c in enumerate(curves):
            color = COLORS.get(c.label, f"C{i}")
            band = ax.fill_between(c.n_labels, c.mean_rmse - c.std_rmse,
                                   c.mean_rmse + c.std_rmse, color=color, alpha=0.18,
                                   linewidth=0)
            band.set_gid(f"band-{c.label}")
            (line,) = ax.plot(c.n_labels, c.mean_rmse, color=color, linewidth=1.5,
                              label=c.label)
            line.set_gid(f"curve-{c.label}")
        ax.set_xlabel("labels queried")
        ax.set_ylabel("test RMSE")
        if title:
            ax.set_title(title)
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def emit_figures(curves: Mapping[str, LearningCurve], out_dir) -> list[Path]:
    """Raw-vs-encoded comparison under random sampling, and the criteria
    comparison on encoded features. A figure is skipped if it has no curves."""
    out_dir = Path(out_dir)
    written = []
    raw_vs_oae = [curves[k] for k in ("rnd-raw", "rnd") if k in curves]
    if raw_vs_oae:
        written.append(emit_plot(raw_vs_oae, out_dir / "figure2a.svg",
                                 "Random sampling: raw vs encoded features"))
    criteria = [c for k, c in curves.items() if not k.endswith("-raw")]
    if criteria:
        written.append(emit_plot(criteria, out_dir / "figure2b.svg",
                                 "Sampling criteria on encoded features"))
    return written
