"""Report figures (written to files with the Agg backend)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .conditioning import CondReport  # noqa: E402
from .cyclotomic import Case  # noqa: E402

STYLE = {
    "figure.figsize": (7.0, 4.2),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}

_MARKERS = {Case.POW2: "o", Case.POW2_P: "s", Case.POW2_PQ: "^"}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_grid(reports: Sequence[CondReport], path: str | Path) -> Path:
    """Condition numbers of V_N A and R_m against the closed-form V_N A bound, by m."""
    with plt.rc_context(STYLE):
        fig, (ax0, ax1) = plt.subplots(1, 2)
        for case in Case:
            rs = sorted((r for r in reports if r.case is case), key=lambda r: r.m)
            if not rs:
                continue
            m = [r.m for r in rs]
            mk = _MARKERS[case]
            ax0.plot(m, [float(r.conds["VNA"].cond) for r in rs], mk, label=f"Cond(V_N A), {case.value}")
            ax0.plot(m, [float(r.bounds["VNA"].bound) for r in rs], mk, mfc="none", alpha=0.6, label=f"bound, {case.value}")
            ax1.plot(m, [float(r.conds["Rm"].cond) / float(r.conds["VNA"].cond) for r in rs], mk, label=case.value)
        ax0.set(xscale="log", yscale="log", xlabel="m", ylabel="condition number")
        ax0.legend(fontsize=7)
        ax1.axhline(1.0, color="k", lw=0.8)
        ax1.set(xscale="log", xlabel="m", ylabel="Cond(R_m) / Cond(V_N A)")
        ax1.legend(fontsize=7)
        fig.tight_layout()
        return _save(fig, path)


def plot_simulation(
    amplifications: Sequence[float],
    rm_norm: float,
    lower: float,
    rates: Sequence[float] | None,
    path: str | Path,
    true_guess: int | None = None,
) -> Path:
    """Histogram of noise amplification and, if given, per-guess acceptance rates."""
    with plt.rc_context(STYLE):
        ncols = 2 if rates is not None else 1
        fig, axes = plt.subplots(1, ncols, squeeze=False)
        ax = axes[0][0]
        ax.hist(amplifications, bins=40, color="0.45")
        ax.axvline(rm_norm, color="C3", ls="--", label="||R_m||")
        ax.axvline(lower, color="C0", ls=":", label="1/||R_m^-1||")
        ax.set(xlabel="||R_m e|| / ||e||", ylabel="samples")
        ax.legend()
        if rates is not None:
            ax = axes[0][1]
            ax.plot(range(len(rates)), rates, ".", ms=3, color="0.3")
            if true_guess is not None and true_guess < len(rates):
                ax.plot([true_guess], [rates[true_guess]], "o", color="C3", label="s(alpha)")
                ax.legend()
            ax.axhline(0.5, color="k", lw=0.8)
            ax.set(xlabel="guess g", ylabel="acceptance rate", ylim=(0, 1.05))
        fig.tight_layout()
        return _save(fig, path)
