"""Figures for experiment reports.  Uses the non-interactive Agg backend."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .bootstrap import system_config  # noqa: E402

STYLE = {
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.frameon": False,
}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    # fixed metadata keeps the PNG bytes stable between runs
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def f_by_system(result, path: Path) -> Path:
    """Mean overall F per system, with the per-seed spread as error bars."""
    sids = sorted(result.mean)
    means = [100 * result.mean[s]["overall"].F for s in sids]
    sds = []
    for s in sids:
        vals = [100 * c.metrics["overall"].F for c in result.cells if c.system_id == s]
        sds.append(float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 3.4))
        colors = ["#4c72b0" if system_config(s).bootstrap == "none" else "#dd8452" for s in sids]
        ax.bar([str(s) for s in sids], means, yerr=sds, color=colors, capsize=3)
        ax.set_xlabel("system")
        ax.set_ylabel("overall F (%)")
        ax.set_title(f"Pairwise F on test, mean of {len(result.config.seeds)} seeds")
        return _save(fig, path)


def precision_recall(result, path: Path) -> Path:
    """Mean precision against recall for each system and bucket."""
    markers = {"same": "o", "nearby": "s", "overall": "D", "awareness": "^"}
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.6, 4.2))
        for g, mk in markers.items():
            xs = [100 * result.mean[s][g].R for s in sorted(result.mean)]
            ys = [100 * result.mean[s][g].P for s in sorted(result.mean)]
            ax.scatter(xs, ys, marker=mk, label=g, s=24)
            if g == "overall":
                for s, x, y in zip(sorted(result.mean), xs, ys):
                    ax.annotate(str(s), (x, y), textcoords="offset points", xytext=(4, 2), fontsize=7)
        lo = min(ax.get_xlim()[0], ax.get_ylim()[0])
        hi = max(ax.get_xlim()[1], ax.get_ylim()[1])
        ax.plot([lo, hi], [lo, hi], color="grey", lw=0.8, ls="--")
        ax.set_xlabel("recall (%)")
        ax.set_ylabel("precision (%)")
        ax.legend(loc="lower right")
        return _save(fig, path)


def convergence(result, path: Path) -> Path | None:
    """Changed-label fraction per bootstrapping iteration, one line per system and seed."""
    cells = [c for c in result.cells if c.changes]
    if not cells:
        return None
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.2, 3.4))
        cmap = plt.get_cmap("tab10")
        seen = set()
        for c in cells:
            label = None if c.system_id in seen else f"system {c.system_id}"
            seen.add(c.system_id)
            # the first iteration counts every edge as changed; start from the second
            ys = c.changes[1:]
            if ys:
                ax.plot(range(2, len(ys) + 2), ys, color=cmap(c.system_id % 10), alpha=0.6, lw=1, label=label)
        ax.axhline(result.config.criteria.change_threshold, color="grey", ls="--", lw=0.8)
        ax.set_yscale("log")
        ax.set_xlabel("iteration")
        ax.set_ylabel("changed fraction")
        ax.legend(fontsize=7)
        return _save(fig, path)


def write_figures(result, report_path: str | Path) -> list[Path]:
    """Render all figures next to ``report_path``; returns the files written."""
    report_path = Path(report_path)
    stem = report_path.with_suffix("")
    out = [
        f_by_system(result, Path(f"{stem}_f_by_system.png")),
        precision_recall(result, Path(f"{stem}_precision_recall.png")),
    ]
    conv = convergence(result, Path(f"{stem}_convergence.png"))
    if conv is not None:
        out.append(conv)
    return out
