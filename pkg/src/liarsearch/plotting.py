"""Figure rendering for experiment reports.

File output only (Agg backend); every report command that writes delimited
output can drop a companion PNG next to it.  Imports of matplotlib stay
inside the functions so library users never pay for them.
"""

from __future__ import annotations

from pathlib import Path

_FIG_DPI = 120


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def save_histogram(values, path: Path, *, title: str, xlabel: str,
                   vlines: dict[str, float] | None = None) -> Path:
    """Histogram of per-trial counts with optional labeled reference lines."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.2))
    if values:
        bins = min(40, max(5, len(set(values))))
        ax.hist(values, bins=bins, color="#4878cf", edgecolor="white")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("trials")
    ax.set_title(title)
    for i, (label, xv) in enumerate(sorted((vlines or {}).items())):
        color = ["#d65f5f", "#6acc65", "#956cb4", "#c4ad66"][i % 4]
        ax.axvline(xv, color=color, linestyle="--", linewidth=1.2, label=f"{label} = {xv:.3g}")
    if vlines:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_FIG_DPI)
    plt.close(fig)
    return path


def save_bounds_figure(report, k: int, path: Path, *, title: str) -> Path:
    """Bar chart of the entropy functionals and cost bounds."""
    plt = _pyplot()
    names = ["H", "h2", "h3", "lower (clamped)", "upper (checkpoint)", "upper (backtrack)"]
    values = [report.entropy, report.h2, report.h3, report.lower_bound,
              report.ub_algo1, report.ub_algo2]
    if report.lower_bound_raw is not None:
        names.insert(3, "lower (raw)")
        values.insert(3, report.lower_bound_raw)
    fig, ax = plt.subplots(figsize=(7.5, 4.2))
    bars = ax.bar(range(len(values)), values, color="#4878cf")
    ax.set_xticks(range(len(values)))
    ax.set_xticklabels(names, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("bits / questions")
    ax.set_title(title)
    ax.bar_label(bars, fmt="%.3g", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_FIG_DPI)
    plt.close(fig)
    return path


def save_worstcase_figure(cases, path: Path, *, title: str) -> Path:
    """Scatter of exhaustive worst-case question counts per (seed, element)."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.2))
    xs = [c.x for c in cases]
    ys = [c.max_questions for c in cases]
    ok = [c.valid and not c.violations for c in cases]
    ax.scatter([x for x, o in zip(xs, ok) if o], [y for y, o in zip(ys, ok) if o],
               s=18, color="#4878cf", label="valid")
    if not all(ok):
        ax.scatter([x for x, o in zip(xs, ok) if not o],
                   [y for y, o in zip(ys, ok) if not o],
                   s=26, color="#d65f5f", marker="x", label="violation")
    ax.set_xlabel("element index")
    ax.set_ylabel("worst-case questions over all lie placements")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_FIG_DPI)
    plt.close(fig)
    return path
