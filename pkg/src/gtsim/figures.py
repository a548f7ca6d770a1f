"""Render the standard report figures from aggregated sweep data.

The CSV files remain the data contract; these helpers draw the matching
plots next to them. Uses the non-interactive Agg backend so rendering works
headless.
"""
from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import BoundsRow, CdfTable

FIGSIZE = (6.4, 4.2)


def plot_bounds(rows: Sequence[BoundsRow], path) -> None:
    """Bound curves and empirical test counts as functions of theta."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    thetas = [r.theta for r in rows]
    ax.plot(thetas, [r.t_lower for r in rows], "v--", label="budget lower bound")
    ax.plot(thetas, [r.t_bd for r in rows], "s-", label="expected-test bound")
    ax.plot(thetas, [r.t_nec for r in rows], "^-", label="stopping budget")
    if any(r.empirical_mean is not None for r in rows):
        pts = [(r.theta, r.empirical_mean, r.empirical_q95) for r in rows
               if r.empirical_mean is not None]
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", label="empirical mean")
        ax.plot([p[0] for p in pts], [p[2] for p in pts], ".:", label="empirical q95")
    ax.set_xscale("log")
    ax.set_xlabel(r"truncation threshold $\theta$")
    ax.set_ylabel("tests")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_cdf(tables: Sequence[CdfTable], path, title: str = "") -> None:
    """Cumulative success probability vs. test count, one curve per key value."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    label = {"theta": r"$\theta$", "alpha": r"$\alpha$"}
    for table in tables:
        if table.tests.size == 0:
            continue
        name = label.get(table.key_name, table.key_name)
        ax.step(table.tests, table.cum_success, where="post",
                label=f"{name} = {table.key_value:g}")
    ax.set_xlabel("tests")
    ax.set_ylabel("cumulative success probability")
    ax.set_ylim(0.0, 1.05)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
