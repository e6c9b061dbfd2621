"""Figure rendering for the CLI report paths.

Every report command writes delimited output as its primary artifact;
these helpers render a PNG next to it (opt out with --no-plot). Figures
are informational only and carry no determinism contract.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "plot_simulation",
    "plot_ode_path",
    "plot_sde_stats",
    "plot_sweep",
    "plot_comparison",
]


def plot_simulation(png_path, curves: dict, title: str = ""):
    """curves: label -> (t, mean |m/R|, mean r2)."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for label, (t, xi, r2) in curves.items():
        ax1.plot(t, xi, label=label)
        ax2.plot(t, r2, label=label)
    ax1.set_xlabel("t")
    ax1.set_ylabel("|m/R|")
    ax1.set_ylim(-0.02, 1.02)
    ax1.legend(fontsize=8)
    ax2.set_xlabel("t")
    ax2.set_ylabel(r"$r_\perp^2$")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)


def plot_ode_path(png_path, t, m, r2, title: str = ""):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t, m, label="m")
    ax.plot(t, r2, label=r"$r_\perp^2$")
    ax.set_xlabel("t")
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)


def plot_sde_stats(png_path, t, mean, var, r2, title: str = ""):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t, mean, label=r"mean $\tilde m$")
    ax.plot(t, var, label=r"var $\tilde m$")
    ax.plot(t, r2, label=r"$r_\perp^2$")
    ax.set_xlabel("t")
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)


def plot_sweep(png_path, lams, empirical, theory, lam_crit, title: str = ""):
    fig, ax = plt.subplots(figsize=(6, 4))
    lams = np.asarray(lams)
    ax.plot(lams, empirical, "o-", label="empirical success")
    ax.plot(lams, theory, "s--", label="theory ($\\lambda > \\lambda_c$)")
    ax.axvline(lam_crit, color="k", lw=0.8, ls=":",
               label=f"$\\lambda_c = {lam_crit:.3g}$")
    ax.set_xlabel(r"$\lambda$")
    ax.set_ylabel("recovery indicator")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)


def plot_comparison(png_path, t_sim, xi_sim, r2_sim, t_lim, xi_lim, r2_lim,
                    title: str = ""):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(t_sim, xi_sim, label="simulation")
    ax1.plot(t_lim, xi_lim, "--", label="limit")
    ax1.set_xlabel("t")
    ax1.set_ylabel("|m/R|")
    ax1.legend(fontsize=8)
    ax2.plot(t_sim, r2_sim, label="simulation")
    ax2.plot(t_lim, r2_lim, "--", label="limit")
    ax2.set_xlabel("t")
    ax2.set_ylabel(r"$r_\perp^2$")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
