"""Fitness-curve figures: mean best-so-far with a 95% CI ribbon per cell."""

from __future__ import annotations

from collections import OrderedDict
from pathlib import Path
from typing import Dict, List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402

from .harness import SpecError, read_results_csv  # noqa: E402
from .stats import summarize_curves  # noqa: E402

STABLE_RC = {
    "svg.hashsalt": "ggec",
    "svg.fonttype": "none",
    "path.simplify": False,
    "font.family": "DejaVu Sans",
}


def curves_by_panel(rows: List[dict], statistic: str = "best_so_far"):
    """``{problem: {grammar: {(method, initialiser): [per-run curves]}}}``, input order kept."""
    runs: Dict[tuple, Dict[int, float]] = OrderedDict()
    for r in rows:
        if r["statistic"] != statistic:
            continue
        key = (r["problem"], r["grammar"], r["method"], r["initialiser"], r["seed"])
        runs.setdefault(key, {})[r["generation"]] = r["value"]
    out: Dict[str, Dict[str, Dict[tuple, List[List[float]]]]] = OrderedDict()
    for (prob, gram, meth, init, _), gens in runs.items():
        curve = [gens[g] for g in sorted(gens)]
        out.setdefault(prob, OrderedDict()).setdefault(gram, OrderedDict()) \
            .setdefault((meth, init), []).append(curve)
    return out


def plot_results(csv_path, out_dir, statistic: str = "best_so_far") -> List[Path]:
    """One SVG per problem with a panel per grammar; returns the written paths."""
    rows = read_results_csv(csv_path)
    panels = curves_by_panel(rows, statistic)
    if not panels:
        raise SpecError(f"{csv_path}: no rows for statistic {statistic!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    with plt.rc_context(STABLE_RC):
        palette = plt.rcParams["axes.prop_cycle"].by_key()["color"]
        for prob, grams in panels.items():
            fig, axes = plt.subplots(1, len(grams), figsize=(4 * len(grams), 3.4), squeeze=False,
                                     sharey=False)
            # one colour and one legend entry per (method, initialiser) across panels
            handles: Dict[str, object] = OrderedDict()
            for ax, (gram, cells) in zip(axes[0], grams.items()):
                for (meth, init), curves in cells.items():
                    label = f"{meth} / {init}"
                    if label not in handles:
                        handles[label] = None
                    color = palette[list(handles).index(label) % len(palette)]
                    length = min(len(c) for c in curves)
                    summ = summarize_curves([c[:length] for c in curves])
                    x = [s.generation for s in summ]
                    line, = ax.plot(x, [s.mean for s in summ], label=label, color=color, lw=1.2,
                                    marker="o" if len(x) == 1 else None)
                    ax.fill_between(x, [s.ci_low for s in summ], [s.ci_high for s in summ],
                                    color=color, alpha=0.2, lw=0)
                    if handles[label] is None:
                        handles[label] = line
                ax.set_title(gram)
                ax.set_xlabel("generation")
                if ax.get_xlim()[1] < 1:
                    ax.set_xticks([0])
                else:
                    ax.xaxis.set_major_locator(MaxNLocator(integer=True))
            axes[0][0].set_ylabel(statistic.replace("_", " "))
            axes[0][-1].legend(list(handles.values()), list(handles), fontsize="small")
            fig.suptitle(prob)
            fig.tight_layout()
            path = out_dir / f"{prob}.svg"
            fig.savefig(path, format="svg", metadata={"Date": None})
            plt.close(fig)
            written.append(path)
    return written
