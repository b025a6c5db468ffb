"""Figures written next to the CLI's delimited outputs.

Uses the object-oriented matplotlib API (no pyplot state), so it is safe
to call from worker threads and never needs a display.
"""

from __future__ import annotations

import os
from typing import Sequence

import numpy as np
from matplotlib.figure import Figure

from .corpus import LABELS
from .evaluation import Metrics
from .training import TrainReport

__all__ = ["plot_training", "plot_label_scores", "plot_confusion", "plot_folds"]

_DPI = 120


def _save(fig: Figure, path) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    return os.fspath(path)


def plot_training(report: TrainReport, path) -> str:
    """Objective and gradient norm per accepted optimizer iteration."""
    fig = Figure(figsize=(8, 3.2))
    ax1, ax2 = fig.subplots(1, 2)
    it = np.arange(1, report.iterations + 1)
    ax1.plot(it, report.objective_trace, marker=".", lw=1)
    ax1.axhline(report.initial_objective, color="0.6", ls=":", lw=1, label="initial")
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("regularized log-likelihood")
    ax1.legend(frameon=False, fontsize=8)
    ax2.semilogy(it, np.maximum(report.grad_norm_trace, 1e-300), marker=".", lw=1, color="C1")
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("gradient norm")
    fig.suptitle(f"{report.optimizer}: {report.iterations} iterations, "
                 f"{'converged' if report.converged else 'not converged'}", fontsize=9)
    return _save(fig, path)


def plot_label_scores(metrics: Metrics, path) -> str:
    names = [lab.tag for lab in LABELS] + ["reference"]
    counts = [metrics.labels[lab] for lab in LABELS] + [metrics.references]
    scores = np.array([[c.precision, c.recall, c.f1] for c in counts])
    fig = Figure(figsize=(6.5, 3.2))
    ax = fig.subplots()
    x = np.arange(len(names))
    for k, what in enumerate(("precision", "recall", "F1")):
        ax.bar(x + (k - 1) * 0.27, scores[:, k], width=0.27, label=what)
    ax.set_xticks(x, names)
    ax.set_ylim(0, 1.05)
    ax.set_title(f"line accuracy {metrics.accuracy:.4f} (micro-averaged)", fontsize=9)
    ax.legend(frameon=False, fontsize=8, ncol=3, loc="lower center")
    return _save(fig, path)


def plot_confusion(metrics: Metrics, path) -> str:
    cm = metrics.confusion
    fig = Figure(figsize=(4.2, 3.8))
    ax = fig.subplots()
    shown = np.log1p(cm)
    ax.imshow(shown, cmap="Blues")
    tags = [lab.tag for lab in LABELS]
    ax.set_xticks(range(4), tags)
    ax.set_yticks(range(4), tags)
    ax.set_xlabel("predicted")
    ax.set_ylabel("gold")
    for i in range(4):
        for j in range(4):
            ax.text(j, i, str(cm[i, j]), ha="center", va="center", fontsize=8,
                    color="white" if shown[i, j] > shown.max() / 2 else "black")
    return _save(fig, path)


def plot_folds(folds: Sequence[Metrics], path) -> str:
    acc = [m.accuracy for m in folds]
    f1 = [m.references.f1 for m in folds]
    fig = Figure(figsize=(5.5, 3.2))
    ax = fig.subplots()
    x = np.arange(1, len(folds) + 1)
    ax.plot(x, acc, marker="o", label="line accuracy")
    ax.plot(x, f1, marker="s", label="reference F1")
    ax.set_xticks(x)
    ax.set_xlabel("fold")
    lo = min(acc + f1)
    ax.set_ylim(max(0.0, lo - 0.05), 1.005)
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)
