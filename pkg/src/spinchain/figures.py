"""Matplotlib renderers for the report path of each CLI subcommand.

Figures are written next to the delimited output. All rendering uses the
Agg backend; nothing is shown interactively.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 150


def _save(fig, outdir, name) -> Path:
    path = Path(outdir) / name
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def equilibrium_figures(outdir, finite_curves, lam_inf, lim_curve, ladder, dists):
    """Front and Lagrangian projections of the curve family, plus the
    Hausdorff ladder."""
    written = []
    fig, ax = plt.subplots(figsize=(6, 4.2))
    for n, curve in finite_curves.items():
        ax.plot(curve.q, curve.z, lw=1.0, label=f"N={n}")
    ax.plot(lim_curve.q, lim_curve.z, "k--", lw=1.4, label="limit")
    ax.set_xlabel("q")
    ax.set_ylabel("z")
    ax.set_title("front projection of the equilibrium curves")
    ax.legend(fontsize=8)
    written.append(_save(fig, outdir, "equilibrium_front.png"))

    fig, ax = plt.subplots(figsize=(6, 4.2))
    for n, curve in finite_curves.items():
        ax.plot(curve.q, curve.p, lw=1.0, label=f"N={n}")
    ax.plot(lam_inf.q, lam_inf.p, "k:", lw=1.2, label="mean-field curve")
    ax.set_xlabel("q")
    ax.set_ylabel("p")
    ax.set_title("Lagrangian projection")
    ax.legend(fontsize=8)
    written.append(_save(fig, outdir, "equilibrium_lagrangian.png"))

    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.loglog(ladder, dists, "o-")
    ax.set_xlabel("N")
    ax.set_ylabel("Hausdorff distance to the limit curve")
    written.append(_save(fig, outdir, "equilibrium_hausdorff.png"))
    return written


def fp_figures(outdir, space, result, track):
    written = []
    fig, ax = plt.subplots(figsize=(6, 4.2))
    idx = np.unique(np.linspace(0, len(result.times) - 1, 12).astype(int))
    for i in idx:
        ax.plot(space.points, result.densities[i], lw=0.9,
                label=f"t={result.times[i]:.3g}" if i in (idx[0], idx[-1]) else None)
    ax.set_xlabel("m")
    ax.set_ylabel("density")
    ax.set_title("relaxation of the density")
    ax.legend(fontsize=8)
    written.append(_save(fig, outdir, "fp_density.png"))

    t = [s[0] for s in track]
    p = [s[1].p for s in track]
    z = [s[1].z for s in track]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    ax1.plot(t, p)
    ax1.set_ylabel("p(t)")
    ax2.plot(t, z)
    ax2.set_ylabel("psi(t)")
    ax2.set_xlabel("t")
    written.append(_save(fig, outdir, "fp_thermo.png"))
    return written


def glauber_figures(outdir, space, result, stationary):
    written = []
    fig, ax = plt.subplots(figsize=(6, 4.2))
    idx = np.unique(np.linspace(0, len(result.times) - 1, 10).astype(int))
    for i in idx:
        ax.plot(space.points, result.probabilities[i], lw=0.9)
    ax.plot(space.points, stationary, "k--", lw=1.4, label="stationary")
    ax.set_xlabel("m")
    ax.set_ylabel("probability")
    ax.legend(fontsize=8)
    written.append(_save(fig, outdir, "glauber_master.png"))
    return written


def drift_figures(outdir, m, d_fp, d_g, mu, fits):
    written = []
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    ax1.plot(m, d_fp, label="relaxation drift (metric)")
    ax1.plot(m, d_g, label="Glauber drift")
    ax1.axhline(0.0, color="k", lw=0.5)
    ax1.set_ylabel("drift")
    ax1.legend(fontsize=8)
    ax2.plot(m, mu)
    ax2.set_ylabel("mu(m)")
    ax2.set_xlabel("m")
    written.append(_save(fig, outdir, "drift_fields.png"))

    fig, ax = plt.subplots(figsize=(5, 3.6))
    for name, fit in fits.items():
        ax.loglog(fit["N_values"], fit["errors"], "o-",
                  label=f"{name}: slope {fit['slope']:.2f}")
    ax.set_xlabel("N")
    ax.set_ylabel("max interior error")
    ax.legend(fontsize=8)
    written.append(_save(fig, outdir, "drift_rates.png"))
    return written


def basin_figures(outdir, pair, f_vals, alpha_rows):
    written = []
    fig, ax = plt.subplots(figsize=(6, 4.2))
    ax.plot(pair.lower.x, f_vals, label="F(0, p)")
    ax.plot(pair.lower.x, pair.lower.y, label="convex envelope")
    ax.plot(pair.upper.x, pair.upper.y, label="concave envelope")
    ax.set_xlabel("p")
    ax.set_ylabel("w")
    ax.legend(fontsize=8)
    written.append(_save(fig, outdir, "basin_envelopes.png"))

    if alpha_rows:
        fig, ax = plt.subplots(figsize=(5, 3.6))
        by_p = {}
        for row in alpha_rows:
            by_p.setdefault(row[1], []).append(row)
        for p0, rows in by_p.items():
            ns = [r[0] for r in rows]
            ax.loglog(ns, [r[4] for r in rows], "o-", label=f"lower, p0={p0}")
            ax.loglog(ns, [r[5] for r in rows], "s--", label=f"upper, p0={p0}")
        ax.set_xlabel("N")
        ax.set_ylabel("|alpha - envelope|")
        ax.legend(fontsize=7)
        written.append(_save(fig, outdir, "basin_alpha_convergence.png"))
    return written


def chord_figures(outdir, chord, curve0, curve1):
    written = []
    fig, ax = plt.subplots(figsize=(6, 4.2))
    ax.plot(curve0.q, curve0.z, label="initial system")
    ax.plot(curve1.q, curve1.z, label="terminal system")
    ax.plot([chord.q_star, chord.q_star], [chord.z0, chord.z1], "k-", lw=2,
            label="chord")
    ax.set_xlabel("q")
    ax.set_ylabel("z")
    ax.legend(fontsize=8)
    written.append(_save(fig, outdir, "chord_front.png"))
    return written


def toy_figures(outdir, flows):
    written = []
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 5.4), sharex=True)
    for name, (t, p, z) in flows.items():
        ax1.plot(t, p, label=name)
        ax2.plot(t, z, label=name)
    ax1.set_ylabel("p(t)")
    ax2.set_ylabel("z(t)")
    ax2.set_xlabel("t")
    ax1.legend(fontsize=8)
    written.append(_save(fig, outdir, "toy_flows.png"))
    return written
