"""Optional PNG rendering of figure sweeps (needs matplotlib)."""
from __future__ import annotations

from collections import OrderedDict
from typing import Sequence

from .errors import ConfigError

__all__ = ["plot_sweep"]

_TITLES = {
    "figure3": "Preemptive LCFS M/G/1, Pareto service",
    "figure4": "Preemptive LCFS M/G/1, log-normal service",
    "figure6": "M/G/inf",
}


def _pyplot():
    try:
        import matplotlib
    except ImportError:
        raise ConfigError("plotting needs matplotlib (pip install 'artifact[plot]')") from None
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_sweep(rows: Sequence, path) -> None:
    """Average age against lambda, one curve per service, bound dashed.

    Simulation spot-checks, when present, are drawn as points with their
    confidence bars.
    """
    if not rows:
        raise ConfigError("nothing to plot")
    plt = _pyplot()
    curves: OrderedDict[str, list] = OrderedDict()
    for r in rows:
        curves.setdefault(r.service_spec, []).append(r)
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for name, group in curves.items():
        lam = [r.lambda_ for r in group]
        avg = [r.analytic_average for r in group]
        if name == "bound":
            ax.plot(lam, avg, "k--", lw=1, label="1/lambda")
            continue
        (line,) = ax.plot(lam, avg, lw=1.4, label=name)
        sims = [r for r in group if r.sim_average is not None]
        if sims:
            ax.errorbar([r.lambda_ for r in sims], [r.sim_average for r in sims],
                        yerr=[r.ci_average or 0.0 for r in sims], fmt="o", ms=3,
                        color=line.get_color(), capsize=2)
    ax.set_xlabel("generation rate lambda")
    ax.set_ylabel("average age")
    ax.set_title(_TITLES.get(rows[0].scenario, rows[0].scenario))
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
