"""Figure rendering for the CLI report path.

Renders the delimited outputs as PNGs next to the data files.  Kept apart
from the computation modules so library users who never plot never import
matplotlib.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def fig_decay_curve(rows, path: str):
    """Staircase of the decay rate against a.  Rows with errors are skipped;
    plateau boundaries show up as the flat runs they are."""
    good = [r for r in rows if not r.error and not math.isnan(r.lam)]
    if not good:
        raise ValueError("no successful rows to plot")
    av = np.array([float(r.a) for r in good])
    lam = np.array([r.lam for r in good])
    order = np.argsort(av)
    av, lam = av[order], lam[order]

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.step(av, lam, where="post", lw=1.2)
    ax.set_xlabel("a")
    ax.set_ylabel("decay rate")
    ax.set_title("Persistence decay rate")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def fig_cdf(zs, cdf, tails, path: str, title: str = "Quasi-stationary CDF"):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(zs, cdf, lw=1.2)
    finite_tails = np.asarray(tails, dtype=float)
    if np.any(finite_tails > 0):
        ax.fill_between(zs, cdf - finite_tails, cdf + finite_tails,
                        alpha=0.25, label="certified truncation band")
        ax.legend()
    ax.set_xlabel("z")
    ax.set_ylabel("cdf")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def fig_harmonic(xs, vs, path: str):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(xs, vs, lw=1.2)
    ax.set_xlabel("x")
    ax.set_ylabel("V(x)")
    ax.set_title("Harmonic function")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def fig_validation(report: dict, path: str):
    """Bar chart of the rate estimates from the independent routes, with
    the Monte Carlo 95% interval."""
    names, values, errs = [], [], []
    names.append("series root")
    values.append(report["solver"]["lambda"])
    errs.append(0.0)
    matrix = report.get("matrix") or {}
    if "lambda" in matrix:
        names.append("matrix PF")
        values.append(matrix["lambda"])
        errs.append(0.0)
    mc = report.get("montecarlo") or {}
    if "rate" in mc:
        names.append("monte carlo")
        values.append(mc["rate"]["value"])
        errs.append(1.96 * mc["rate"]["stderr"])

    fig, ax = plt.subplots(figsize=(6, 4))
    xpos = np.arange(len(names))
    ax.bar(xpos, values, yerr=errs, capsize=6, width=0.5,
           color=["#4878a8", "#6aa84f", "#b45f06"][: len(names)])
    ax.set_xticks(xpos, names)
    lo = min(v - e for v, e in zip(values, errs))
    hi = max(v + e for v, e in zip(values, errs))
    pad = max(1e-4, 0.2 * (hi - lo))
    ax.set_ylim(lo - pad, hi + pad)
    ax.set_ylabel("decay rate")
    ax.set_title("Cross-validation of the decay rate")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
