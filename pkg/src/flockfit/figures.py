"""Matplotlib renderings saved next to report files."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

STRATEGY_COLORS = {
    "OPT": "tab:red",
    "HM": "tab:blue",
    "LRA": "tab:green",
    "AR": "tab:orange",
    "INFORMED": "tab:purple",
}


def save_error_distribution(path, per_step_mean, per_step_quantiles):
    """Median and interquartile band of per-step prediction error, one
    line per strategy."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for strategy in sorted(per_step_mean):
        qs = per_step_quantiles[strategy]
        t = np.arange(len(qs[50]))
        color = STRATEGY_COLORS.get(strategy)
        ax.plot(t, qs[50], label=strategy, color=color, lw=1.2)
        ax.fill_between(t, qs[25], qs[75], color=color, alpha=0.15, lw=0)
    ax.set_xlabel("time step")
    ax.set_ylabel("prediction error (deg)")
    ax.set_title("Per-step direction prediction error (median, IQR)")
    ax.legend(frameon=False, ncol=len(per_step_mean))
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_supports(path, mean_w, labels, agent_ids=None):
    """Stacked per-agent strategy weights with the assigned label."""
    mean_w = np.asarray(mean_w)
    n = mean_w.shape[0]
    if agent_ids is None:
        agent_ids = list(range(1, n + 1))
    fig, ax = plt.subplots(figsize=(max(6, 0.45 * n), 4))
    x = np.arange(n)
    bottom = np.zeros(n)
    for k, (name, color) in enumerate(
        [("HM", "tab:blue"), ("LRA", "tab:green"), ("AR", "tab:orange")]
    ):
        ax.bar(x, mean_w[:, k], bottom=bottom, label=name, color=color, width=0.8)
        bottom += mean_w[:, k]
    ax.set_xticks(x)
    ax.set_xticklabels([str(a) for a in agent_ids], fontsize=7)
    ax.set_xlabel("agent")
    ax.set_ylabel("strategy weight")
    ax.set_ylim(0, 1.12)
    for k, lab in enumerate(labels):
        ax.text(k, 1.02, lab, ha="center", fontsize=6, rotation=90)
    ax.set_title("Fitted strategy weights per agent")
    ax.legend(frameon=False, ncol=3, loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_confusion(path, classes, confusion):
    """Confusion-matrix heatmap with counts annotated."""
    confusion = np.asarray(confusion)
    fig, ax = plt.subplots(figsize=(5.5, 5))
    im = ax.imshow(confusion, cmap="Blues")
    ax.set_xticks(range(len(classes)))
    ax.set_yticks(range(len(classes)))
    ax.set_xticklabels(classes, rotation=45, ha="right")
    ax.set_yticklabels(classes)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    vmax = confusion.max() or 1
    for r in range(len(classes)):
        for c in range(len(classes)):
            ax.text(
                c,
                r,
                str(int(confusion[r, c])),
                ha="center",
                va="center",
                color="white" if confusion[r, c] > vmax / 2 else "black",
                fontsize=9,
            )
    fig.colorbar(im, ax=ax, shrink=0.8)
    ax.set_title("Dataset classification")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
