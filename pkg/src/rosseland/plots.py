"""Figure rendering for the CLI report path.

Each function takes finished result objects and writes one PNG next to the
delimited output.  Rendering is best-effort decoration of the CSV artifacts,
which remain the primary record.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .assemble import DiscreteField  # noqa: E402
from .fixedpoint import IterationReport  # noqa: E402
from .verify import ExperimentReport  # noqa: E402


def _save(fig, outdir, name) -> str:
    path = os.path.join(outdir, name)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def render_field(field: DiscreteField, outdir, name="solution.png") -> str:
    mesh = field.mesh
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if mesh.dim == 1:
        ax.plot(mesh.vertices[:, 0], field.values, lw=1.5)
        ax.set_xlabel("x")
        ax.set_ylabel("temperature")
    else:
        tpc = ax.tripcolor(mesh.vertices[:, 0], mesh.vertices[:, 1],
                           mesh.cells, field.values, shading="gouraud")
        fig.colorbar(tpc, ax=ax, label="temperature")
        ax.set_aspect("equal")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
    ax.set_title("converged temperature field")
    return _save(fig, outdir, name)


def render_iterations(report: IterationReport, outdir, name="iterations.png") -> str:
    steps = [s.picard_index for s in report.steps]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(steps, [max(s.update_norm, 1e-300) for s in report.steps],
                "o-", label="update norm")
    ax.semilogy(steps, [max(s.nonlinear_residual, 1e-300) for s in report.steps],
                "s--", label="nonlinear residual")
    ax.set_xlabel("Picard step")
    ax.set_title(f"fixed-point iteration ({report.status.value})")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, outdir, name)


def render_convergence(report: ExperimentReport, outdir, name="convergence.png") -> str:
    rows = [r for r in report.tables.get("errors", []) if "h" in r]
    fig, ax = plt.subplots(figsize=(6, 4))
    if rows:
        hs = [r["h"] for r in rows]
        l2 = [r["l2_error"] for r in rows]
        vmax = [r["max_error"] for r in rows]
        ax.loglog(hs, l2, "o-", label="L2 error")
        ax.loglog(hs, vmax, "s--", label="max error")
        ref = [l2[0] * (h / hs[0]) ** 2 for h in hs]
        ax.loglog(hs, ref, "k:", label="order 2")
        ax.set_xlabel("h")
        ax.legend()
    ax.set_title(f"manufactured-solution convergence ({report.verdict})")
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, outdir, name)


def render_sweep(report: ExperimentReport, outdir, name="sweep.png") -> str:
    rows = [r for r in report.tables.get("sweep", []) if "max_norm" in r]
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    if rows:
        eps = [r["eps"] for r in rows]
        axes[0].semilogx(eps, [r["max_norm"] for r in rows], "o-")
        axes[0].set_xlabel("eps")
        axes[0].set_ylabel("max norm of solution")
        axes[1].semilogx(eps, [r["picard_steps"] for r in rows], "s-")
        axes[1].set_xlabel("eps")
        axes[1].set_ylabel("Picard steps")
    fig.suptitle(f"period sweep ({report.verdict})")
    for ax in axes:
        ax.grid(True, which="both", alpha=0.3)
    return _save(fig, outdir, name)


def render_probe(report: ExperimentReport, outdir, name="spread.png") -> str:
    rows = report.tables.get("spread_vs_lambda", [])
    fig, ax = plt.subplots(figsize=(6, 4))
    if rows:
        lams = [r["lambda"] for r in rows]
        spreads = [max(r["spread"], 1e-300) for r in rows]
        ax.semilogy(lams, spreads, "o-")
        ax.set_xlabel("zero-order weight lambda")
        ax.set_ylabel("pairwise spread of fixed points")
    ax.set_title(f"uniqueness probe ({report.verdict})")
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, outdir, name)


def render_gradient(report: ExperimentReport, outdir, name="gradient.png") -> str:
    rows = [r for r in report.tables.get("gradient", []) if "interior_max_grad" in r]
    fig, ax = plt.subplots(figsize=(6, 4))
    if rows:
        eps = [r["eps"] for r in rows]
        ax.semilogx(eps, [r["interior_max_grad"] for r in rows], "o-",
                    label="interior max |grad u|")
        ax.semilogx(eps, [r["global_max_grad"] for r in rows], "s--",
                    label="global max |grad u|")
        ax.set_xlabel("eps")
        ax.legend()
    ax.set_title(f"interior gradient bound ({report.verdict})")
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, outdir, name)


def render_oracle1d(fem: DiscreteField, oracle: DiscreteField, outdir,
                    name="oracle1d.png") -> str:
    fig, axes = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    xf = fem.mesh.vertices[:, 0]
    xo = oracle.mesh.vertices[:, 0]
    axes[0].plot(xo, oracle.values, "-", lw=1.0, label="dense oracle")
    axes[0].plot(xf, fem.values, "o", ms=2.5, label="finite elements")
    axes[0].set_ylabel("temperature")
    axes[0].legend()
    from .assemble import eval_field

    diff = fem.values - eval_field(oracle, fem.mesh.vertices)
    axes[1].plot(xf, diff, "-")
    axes[1].set_xlabel("x")
    axes[1].set_ylabel("difference")
    for ax in axes:
        ax.grid(True, alpha=0.3)
    return _save(fig, outdir, name)
