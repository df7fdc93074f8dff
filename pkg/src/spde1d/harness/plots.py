"""Figure rendering for experiment reports.

All figures go through :func:`save` so the backend stays headless and the
PNG encoder stays deterministic (no timestamps in the output bytes).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save", "norm_traces", "convergence_plot", "rate_plot", "norm_histogram", "ratio_histogram"]


def save(fig, path) -> None:
    fig.savefig(path, dpi=120, metadata={"Software": "spde1d"})
    plt.close(fig)


def norm_traces(times, norms, path, title: str) -> None:
    """Per-sample H-norm traces with the sample mean overlaid."""
    norms = np.asarray(norms)
    fig, ax = plt.subplots(figsize=(7, 4))
    for row in norms:
        ax.plot(times, row, color="tab:blue", alpha=min(1.0, 4.0 / len(norms)), lw=0.8)
    ax.plot(times, norms.mean(axis=0), color="black", lw=1.6, label="mean")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\|X_k\|_H$")
    ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    save(fig, path)


def convergence_plot(xs, errors_by_p, stderr_by_p, path, xlabel: str, title: str) -> None:
    """Strong error vs resolution, log2-log2, one curve per moment order."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for p in sorted(errors_by_p):
        err = np.asarray(errors_by_p[p])
        se = np.asarray(stderr_by_p[p])
        ax.errorbar(xs, err, yerr=3.0 * se, marker="o", capsize=3, label=f"p={p:g}")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log", base=2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(r"$\sup_k\ \mathrm{E}\,\|X^{\mathrm{ref}}_k - X_k\|_H^p$")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    save(fig, path)


def rate_plot(ns, mc, se, oracle, path, title: str) -> None:
    """Monte Carlo spectral truncation error with 3SE band against the closed form."""
    ns = np.asarray(ns, dtype=float)
    mc, se, oracle = map(np.asarray, (mc, se, oracle))
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(ns, oracle, "k-", lw=1.4, label="closed form")
    ax.errorbar(ns, mc, yerr=3.0 * se, fmt="o", color="tab:red", capsize=3, label="Monte Carlo ± 3SE")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log", base=2)
    ax.set_xlabel("modes n")
    ax.set_ylabel(r"$\mathrm{E}\,\|(I-P_n)\,O(t)\|_\varrho^2$")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    save(fig, path)


def norm_histogram(values, path, title: str, marker: float | None = None, marker_label: str = "") -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(np.asarray(values), bins=60, color="tab:blue", alpha=0.8)
    if marker is not None:
        ax.axvline(marker, color="tab:red", lw=1.4, label=marker_label or f"{marker:.4g}")
        ax.legend(loc="best")
    ax.set_xlabel("norm")
    ax.set_ylabel("count")
    ax.set_title(title)
    fig.tight_layout()
    save(fig, path)


def ratio_histogram(ratios, path, title: str, slack: float | None = None) -> None:
    """Histogram of per-path bound ratios lhs/rhs; 1.0 marks the sharp bound."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(np.asarray(ratios), bins=60, color="tab:green", alpha=0.8)
    ax.axvline(1.0, color="black", lw=1.2, label="sharp bound")
    if slack is not None:
        ax.axvline(slack, color="tab:red", lw=1.2, ls="--", label=f"slack {slack:g}")
    ax.set_xlabel("worst ratio lhs / rhs per path")
    ax.set_ylabel("count")
    ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    save(fig, path)
